#include "lhsim/noise.hpp"

#include "lhsim/detail/summation.hpp"

#include <algorithm>
#include <cmath>

namespace lhsim {

void validate(const NoiseParams& p) {
    if (!std::isfinite(p.sigma_s) || !std::isfinite(p.sigma_c) || p.sigma_s < 0.0 || p.sigma_c < 0.0) {
        throw InvalidArgument("noise parameters must be finite and >= 0");
    }
}

double noise_variance(const NoiseParams& p, double y) {
    return p.sigma_s * p.sigma_s * std::max(y, 0.0) + p.sigma_c * p.sigma_c;
}

Image add_noise(const Image& img, const NoiseParams& p, const Rng& rng) {
    validate(p);
    Image out = img;
    if (p.is_zero()) {
        return out;
    }
    auto data = out.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double y = data[i];
        const double v = y + std::sqrt(noise_variance(p, y)) * rng.normal_at(i);
        data[i] = v >= 0.0 ? std::min(v, 1.0) : 0.0;
    }
    return out;
}

double estimate_noise_variance(const Image& noisy, const Image& clean) {
    require_same_shape(noisy, clean, "estimate_noise_variance");
    const auto a = noisy.data();
    const auto b = clean.data();
    const std::size_t n = a.size();
    if (n < 2) {
        return 0.0;
    }
    detail::CompensatedSum sum;
    for (std::size_t i = 0; i < n; ++i) sum.add(a[i] - b[i]);
    const double mean = sum.value() / static_cast<double>(n);
    detail::CompensatedSum sq;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = a[i] - b[i] - mean;
        sq.add(r * r);
    }
    return sq.value() / static_cast<double>(n - 1);
}

} // namespace lhsim
