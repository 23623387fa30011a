#pragma once

#include "lhsim/image.hpp"
#include "lhsim/params.hpp"

namespace lhsim {

/// Fraction of the brightest pixels averaged when estimating atmospheric light.
inline constexpr double kDefaultEstimateFraction = 0.001;
/// Smallest transmission invert_haze accepts.
inline constexpr double kDefaultTransmissionFloor = 1e-3;

/// t(x) = exp(-beta_scatter * d(x)). Underflow is held at the smallest normal double so t stays > 0.
TransmissionMap transmission_from_depth(const DepthMap& depth, double beta_scatter);

/**
 * @brief Atmospheric light from the brightest pixels.
 *
 * Pixels are ranked by their maximum channel value, descending, with ties
 * going to the lower row-major index. The top ceil(fraction * W * H) pixels
 * (at least one) are averaged per channel. With `scalar`, the three channel
 * means are replaced by their average.
 */
Rgb estimate_atmospheric_light(const Image& img, double fraction = kDefaultEstimateFraction, bool scalar = false);

/// out = in * t + A * (1 - t), per channel.
Image apply_haze(const Image& img, const TransmissionMap& t, const Rgb& light);

/// out = clamp((in - A * (1 - t)) / t). Throws if any t is below `t_floor`.
Image invert_haze(const Image& img, const TransmissionMap& t, const Rgb& light,
                  double t_floor = kDefaultTransmissionFloor);

struct SimulationOptions {
    double estimate_fraction = kDefaultEstimateFraction;
    bool scalar_light = false;
    bool strict = false;
};

/// The three degraded groups of one scene plus what produced them.
struct SimulationResult {
    Image low_light;        // I_L: noisy low-light only
    Image haze_only;        // I^H: well-exposed with haze, noiseless
    Image low_light_hazy;   // I^H_L: low-light then haze then noise
    Image low_light_clean;  // render_lowlight(I) before noise
    Image low_light_hazy_clean;  // I^H_L before noise
    TransmissionMap transmission;
    Rgb light_low{};        // A used for the low-light branch
    Rgb light_normal{};     // A used for the haze-only branch
};

/// Noise substream names, keyed off SimulationParams::seed.
inline constexpr std::string_view kNoiseStreamLowLight = "noise/low_light";
inline constexpr std::string_view kNoiseStreamLowLightHazy = "noise/low_light_hazy";

/**
 * @brief Renders the low-light, haze-only and low-light-hazy versions of `img`.
 *
 * Low light is rendered first and haze composited on top, so the
 * atmospheric light of the low-light branch is estimated from the darkened
 * image. When `p.atmospheric_light` is set, that value is used for both
 * branches instead of estimates. The two noisy outputs draw from separate
 * substreams of Rng(p.seed).
 */
SimulationResult simulate_lowlight_haze(const Image& img, const DepthMap& depth, const SimulationParams& p,
                                        const SimulationOptions& options = {});

} // namespace lhsim
