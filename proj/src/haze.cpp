#include "lhsim/haze.hpp"

#include "lhsim/detail/summation.hpp"
#include "lhsim/lowlight.hpp"
#include "lhsim/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lhsim {

namespace {

void require_shape(const Image& img, const TransmissionMap& t, const char* what) {
    if (!t.same_shape(img)) {
        throw InvalidArgument(std::string(what) + ": transmission map dimensions differ from image");
    }
}

void require_light(const Rgb& light) {
    for (double a : light) {
        if (!(a >= 0.0 && a <= 1.0)) {
            throw InvalidArgument("atmospheric light channels must lie in [0, 1]");
        }
    }
}

} // namespace

TransmissionMap transmission_from_depth(const DepthMap& depth, double beta_scatter) {
    if (!std::isfinite(beta_scatter) || beta_scatter <= 0.0) {
        throw InvalidArgument("transmission_from_depth: beta_scatter must be finite and > 0");
    }
    std::vector<double> t(depth.size());
    const auto d = depth.data();
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = std::max(std::exp(-beta_scatter * d[i]), std::numeric_limits<double>::min());
    }
    return TransmissionMap(depth.width(), depth.height(), std::move(t));
}

Rgb estimate_atmospheric_light(const Image& img, double fraction, bool scalar) {
    if (img.empty()) {
        throw InvalidArgument("estimate_atmospheric_light: empty image");
    }
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw InvalidArgument("estimate_atmospheric_light: fraction must lie in (0, 1]");
    }
    const std::size_t n = img.pixel_count();
    const auto data = img.data();
    // tolerance keeps e.g. 0.001 * 10000 from rounding up to 11
    const double wanted = std::ceil(fraction * static_cast<double>(n) - 1e-9);
    const std::size_t k = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(wanted, 1.0)), 1, n);

    std::vector<double> brightness(n);
    for (std::size_t p = 0; p < n; ++p) {
        brightness[p] = std::max({data[3 * p], data[3 * p + 1], data[3 * p + 2]});
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto brighter = [&](std::size_t a, std::size_t b) {
        return brightness[a] != brightness[b] ? brightness[a] > brightness[b] : a < b;
    };
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1), order.end(), brighter);
    // sorting the selection fixes the summation order
    std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), brighter);

    Rgb light{};
    for (int c = 0; c < 3; ++c) {
        detail::CompensatedSum sum;
        for (std::size_t i = 0; i < k; ++i) sum.add(data[3 * order[i] + c]);
        light[c] = sum.value() / static_cast<double>(k);
    }
    if (scalar) {
        const double mean = (light[0] + light[1] + light[2]) / 3.0;
        light = {mean, mean, mean};
    }
    return light;
}

Image apply_haze(const Image& img, const TransmissionMap& t, const Rgb& light) {
    require_shape(img, t, "apply_haze");
    require_light(light);
    Image out = img;
    auto data = out.data();
    const auto tm = t.data();
    for (std::size_t p = 0; p < tm.size(); ++p) {
        const double tp = tm[p];
        for (int c = 0; c < 3; ++c) {
            double& v = data[3 * p + c];
            v = v * tp + light[c] * (1.0 - tp);
        }
    }
    return out;
}

Image invert_haze(const Image& img, const TransmissionMap& t, const Rgb& light, double t_floor) {
    require_shape(img, t, "invert_haze");
    require_light(light);
    if (!(t_floor > 0.0 && t_floor <= 1.0)) {
        throw InvalidArgument("invert_haze: t_floor must lie in (0, 1]");
    }
    const auto tm = t.data();
    if (*std::min_element(tm.begin(), tm.end()) < t_floor) {
        throw InvalidArgument("invert_haze: transmission below floor, inversion is numerically unstable");
    }
    Image out = img;
    auto data = out.data();
    for (std::size_t p = 0; p < tm.size(); ++p) {
        const double tp = tm[p];
        for (int c = 0; c < 3; ++c) {
            double& v = data[3 * p + c];
            const double j = (v - light[c] * (1.0 - tp)) / tp;
            v = j >= 0.0 ? std::min(j, 1.0) : 0.0;
        }
    }
    return out;
}

SimulationResult simulate_lowlight_haze(const Image& img, const DepthMap& depth, const SimulationParams& p,
                                        const SimulationOptions& options) {
    if (!depth.same_shape(img)) {
        throw InvalidArgument("simulate_lowlight_haze: depth map dimensions differ from image");
    }
    validate_params(p, options.strict);

    const LowLightParams ll = LowLightParams::from(p);
    const NoiseParams np{p.sigma_s, p.sigma_c};
    const Rng rng(p.seed);

    Image low = render_lowlight(img, ll);
    TransmissionMap t = transmission_from_depth(depth, p.beta_scatter);

    Rgb light_low{};
    Rgb light_normal{};
    if (p.atmospheric_light) {
        light_low = light_normal = *p.atmospheric_light;
    } else {
        light_low = estimate_atmospheric_light(low, options.estimate_fraction, options.scalar_light);
        light_normal = estimate_atmospheric_light(img, options.estimate_fraction, options.scalar_light);
    }

    Image hazy_low = apply_haze(low, t, light_low);
    Image haze_only = apply_haze(img, t, light_normal);

    SimulationResult r{
        add_noise(low, np, rng.substream(kNoiseStreamLowLight)),
        std::move(haze_only),
        add_noise(hazy_low, np, rng.substream(kNoiseStreamLowLightHazy)),
        std::move(low),
        std::move(hazy_low),
        std::move(t),
        light_low,
        light_normal,
    };
    return r;
}

} // namespace lhsim
