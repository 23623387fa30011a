#include "lhsim/params.hpp"

#include <cmath>
#include <string>

namespace lhsim {

namespace {

void require_positive(double v, const char* name) {
    if (!std::isfinite(v) || v <= 0.0) {
        throw InvalidArgument(std::string("parameter ") + name + " must be finite and > 0");
    }
}

void require_in(double v, const Range& r, const char* name) {
    if (!r.contains(v)) {
        throw InvalidArgument(std::string("parameter ") + name + "=" + std::to_string(v) + " outside [" +
                              std::to_string(r.lo) + ", " + std::to_string(r.hi) + "] (strict mode)");
    }
}

double draw(Rng& rng, const Range& r, const std::optional<double>& fixed) {
    const double v = rng.uniform(r.lo, r.hi);
    return fixed.value_or(v);
}

} // namespace

void validate_params(const SimulationParams& p, bool strict, const ParamRanges& ranges) {
    require_positive(p.alpha, "alpha");
    require_positive(p.beta, "beta");
    require_positive(p.gamma, "gamma");
    require_positive(p.beta_scatter, "beta_scatter");
    if (!std::isfinite(p.sigma_s) || p.sigma_s < 0.0 || !std::isfinite(p.sigma_c) || p.sigma_c < 0.0) {
        throw InvalidArgument("noise parameters sigma_s, sigma_c must be finite and >= 0");
    }
    if (p.atmospheric_light) {
        for (double a : *p.atmospheric_light) {
            if (!(a >= 0.0 && a <= 1.0)) {
                throw InvalidArgument("atmospheric_light channels must lie in [0, 1]");
            }
        }
    }
    if (strict) {
        require_in(p.alpha, ranges.alpha, "alpha");
        require_in(p.beta, ranges.beta, "beta");
        require_in(p.gamma, ranges.gamma, "gamma");
        require_in(p.beta_scatter, ranges.beta_scatter, "beta_scatter");
    }
}

SimulationParams sample_params(Rng& rng, const ParamOverrides& overrides, bool strict, const ParamRanges& ranges) {
    SimulationParams p;
    p.alpha = draw(rng, ranges.alpha, overrides.alpha);
    p.beta = draw(rng, ranges.beta, overrides.beta);
    p.gamma = draw(rng, ranges.gamma, overrides.gamma);
    p.beta_scatter = draw(rng, ranges.beta_scatter, overrides.beta_scatter);
    p.sigma_s = draw(rng, ranges.sigma_s, overrides.sigma_s);
    p.sigma_c = draw(rng, ranges.sigma_c, overrides.sigma_c);
    p.atmospheric_light = overrides.atmospheric_light;
    validate_params(p, strict, ranges);
    return p;
}

nlohmann::json rgb_to_json(const Rgb& rgb) {
    return nlohmann::json::array({rgb[0], rgb[1], rgb[2]});
}

Rgb rgb_from_json(const nlohmann::json& j) {
    if (j.is_number()) {
        const double v = j.get<double>();
        return {v, v, v};
    }
    if (!j.is_array() || j.size() != 3) {
        throw InvalidArgument("expected a number or a 3-element array for an RGB triple");
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

nlohmann::json params_to_json(const SimulationParams& p) {
    nlohmann::json j;
    j["alpha"] = p.alpha;
    j["beta"] = p.beta;
    j["gamma"] = p.gamma;
    j["beta_scatter"] = p.beta_scatter;
    j["atmospheric_light"] = p.atmospheric_light ? rgb_to_json(*p.atmospheric_light) : nlohmann::json("estimate");
    j["sigma_s"] = p.sigma_s;
    j["sigma_c"] = p.sigma_c;
    j["seed"] = p.seed;
    return j;
}

SimulationParams params_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw InvalidArgument("simulation params: expected a JSON object");
    }
    try {
        SimulationParams p;
        p.alpha = j.at("alpha").get<double>();
        p.beta = j.at("beta").get<double>();
        p.gamma = j.at("gamma").get<double>();
        p.beta_scatter = j.at("beta_scatter").get<double>();
        const auto& a = j.at("atmospheric_light");
        if (a.is_string()) {
            if (a.get<std::string>() != "estimate") {
                throw InvalidArgument("atmospheric_light: expected \"estimate\" or a triple");
            }
        } else {
            p.atmospheric_light = rgb_from_json(a);
        }
        p.sigma_s = j.at("sigma_s").get<double>();
        p.sigma_c = j.at("sigma_c").get<double>();
        p.seed = j.at("seed").get<std::uint64_t>();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("simulation params: ") + e.what());
    }
}

} // namespace lhsim
