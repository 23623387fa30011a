#pragma once

#include "lhsim/image.hpp"
#include "lhsim/rng.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>

namespace lhsim {

/// Closed interval [lo, hi].
struct Range {
    double lo;
    double hi;
    bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Ranges the simulator draws from when a parameter is not fixed.
struct ParamRanges {
    Range alpha{0.9, 1.0};
    Range beta{0.5, 0.7};
    Range gamma{1.5, 2.5};
    Range beta_scatter{0.1, 0.2};
    // noise magnitudes are not constrained by the low-light model; these are tool defaults
    Range sigma_s{0.03, 0.12};
    Range sigma_c{0.01, 0.03};
};

/**
 * @brief Everything one simulated quadruple depends on.
 *
 * `atmospheric_light` empty means "estimate from the brightest pixels".
 * `seed` is the image's own stream seed; noise substreams derive from it.
 */
struct SimulationParams {
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 1.0;
    double beta_scatter = 0.1;
    std::optional<Rgb> atmospheric_light;
    double sigma_s = 0.0;
    double sigma_c = 0.0;
    std::uint64_t seed = 0;

    bool noiseless() const { return sigma_s == 0.0 && sigma_c == 0.0; }

    friend bool operator==(const SimulationParams&, const SimulationParams&) = default;
};

/// Fields set here pass through sample_params unchanged.
struct ParamOverrides {
    std::optional<double> alpha;
    std::optional<double> beta;
    std::optional<double> gamma;
    std::optional<double> beta_scatter;
    std::optional<Rgb> atmospheric_light;
    std::optional<double> sigma_s;
    std::optional<double> sigma_c;
};

/**
 * Throws InvalidArgument when a value is non-finite, nonpositive where a
 * positive value is required, or negative for noise. With `strict`, alpha,
 * beta, gamma and beta_scatter must also lie inside `ranges`.
 */
void validate_params(const SimulationParams& p, bool strict, const ParamRanges& ranges = {});

/// Draw order is fixed (alpha, beta, gamma, beta_scatter, sigma_s, sigma_c); a draw is consumed even when
/// overridden. `seed` is left at 0 for the caller to fill in.
SimulationParams sample_params(Rng& rng, const ParamOverrides& overrides, bool strict = true,
                               const ParamRanges& ranges = {});

/// Flat object: alpha, beta, gamma, beta_scatter, atmospheric_light ("estimate" or [r,g,b]), sigma_s, sigma_c, seed.
nlohmann::json params_to_json(const SimulationParams& p);
SimulationParams params_from_json(const nlohmann::json& j);

nlohmann::json rgb_to_json(const Rgb& rgb);
Rgb rgb_from_json(const nlohmann::json& j);

} // namespace lhsim
