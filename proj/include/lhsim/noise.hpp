#pragma once

#include "lhsim/image.hpp"
#include "lhsim/rng.hpp"

namespace lhsim {

/**
 * @brief Heteroscedastic Gaussian sensor noise.
 *
 * n(x) ~ Normal(0, sigma_s^2 * y(x) + sigma_c^2), where y is the clean
 * sample. sigma_s scales the shot-noise (signal-dependent) part and sigma_c
 * is the read-noise standard deviation.
 */
struct NoiseParams {
    double sigma_s = 0.0;
    double sigma_c = 0.0;

    bool is_zero() const { return sigma_s == 0.0 && sigma_c == 0.0; }
};

void validate(const NoiseParams& p);

/// Variance of the noise at clean level y.
double noise_variance(const NoiseParams& p, double y);

/**
 * out = clamp(y + n). Sample i of the image uses rng.normal_at(i), so the
 * result depends only on (img, p, rng key), never on evaluation order.
 */
Image add_noise(const Image& img, const NoiseParams& p, const Rng& rng);

/// Unbiased sample variance of (noisy - clean) over all samples.
double estimate_noise_variance(const Image& noisy, const Image& clean);

} // namespace lhsim
