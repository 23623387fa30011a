#pragma once

#include "lhsim/dataset.hpp"
#include "lhsim/metrics.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace lhsim::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitIo = 2,
    kExitPartial = 3,
};

/// Resolved settings for one run. A flat JSON config file is applied first, flags after it.
struct Config {
    GenerationConfig generation;
    std::uint64_t seed = 0;
    ExposureConfig exposure;
    LossWeights weights;
    unsigned jobs = 1;
};

/// Applies the keys of a flat JSON object to `cfg`. Unknown keys throw InvalidArgument.
void apply_config_json(Config& cfg, const nlohmann::json& j);
Config load_config_file(const std::filesystem::path& path, Config base = {});
nlohmann::json config_to_json(const Config& cfg);

/// "estimate", a single number, or "r,g,b".
std::optional<Rgb> parse_atmospheric_light(const std::string& text);

/// Entry point shared by the executable and the tests. argv[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace lhsim::cli
