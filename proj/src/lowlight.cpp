#include "lhsim/lowlight.hpp"

#include <algorithm>
#include <cmath>

namespace lhsim {

namespace {

inline double unit_clamp(double v) {
    return v >= 0.0 ? std::min(v, 1.0) : 0.0;
}

} // namespace

void validate(const LowLightParams& p, bool strict, const ParamRanges& ranges) {
    for (double v : {p.alpha, p.beta, p.gamma}) {
        if (!std::isfinite(v) || v <= 0.0) {
            throw InvalidArgument("low-light parameters alpha, beta, gamma must be finite and > 0");
        }
    }
    if (strict && !(ranges.alpha.contains(p.alpha) && ranges.beta.contains(p.beta) && ranges.gamma.contains(p.gamma))) {
        throw InvalidArgument("low-light parameters outside the sampling ranges (strict mode)");
    }
}

double render_lowlight_sample(double v, const LowLightParams& p) {
    const double base = p.alpha * v;
    if (base <= 0.0) {
        return 0.0;
    }
    return unit_clamp(p.beta * std::pow(base, p.gamma));
}

double invert_lowlight_sample(double v, const LowLightParams& p) {
    if (v <= 0.0) {
        return 0.0;
    }
    return unit_clamp(std::pow(v / p.beta, 1.0 / p.gamma) / p.alpha);
}

Image render_lowlight(const Image& img, const LowLightParams& p, bool strict) {
    validate(p, strict);
    Image out = img;
    for (double& v : out.data()) {
        v = render_lowlight_sample(v, p);
    }
    return out;
}

Image invert_lowlight(const Image& img, const LowLightParams& p) {
    validate(p);
    Image out = img;
    for (double& v : out.data()) {
        v = invert_lowlight_sample(v, p);
    }
    return out;
}

} // namespace lhsim
