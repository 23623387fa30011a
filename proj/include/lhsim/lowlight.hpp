#pragma once

#include "lhsim/image.hpp"
#include "lhsim/params.hpp"

namespace lhsim {

/// Global exposure adjustment: out = beta * (alpha * in)^gamma.
struct LowLightParams {
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 1.0;

    static LowLightParams from(const SimulationParams& p) { return {p.alpha, p.beta, p.gamma}; }
};

/// All three parameters finite and > 0; with `strict`, also inside the sampling ranges.
void validate(const LowLightParams& p, bool strict = false, const ParamRanges& ranges = {});

/**
 * Renders an under-exposed version of `img`: clamp(beta * (alpha * in)^gamma)
 * per sample. Inputs are expected in [0, 1]; an exact zero stays zero for any
 * gamma. Noise is applied separately (see noise.hpp).
 */
Image render_lowlight(const Image& img, const LowLightParams& p, bool strict = false);

/// Closed-form inverse: clamp((in / beta)^(1/gamma) / alpha).
Image invert_lowlight(const Image& img, const LowLightParams& p);

double render_lowlight_sample(double v, const LowLightParams& p);
double invert_lowlight_sample(double v, const LowLightParams& p);

} // namespace lhsim
