#pragma once

#include "lhsim/haze.hpp"
#include "lhsim/image.hpp"
#include "lhsim/io.hpp"
#include "lhsim/params.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lhsim {

inline constexpr std::string_view kManifestSchema = "lhsim.manifest";
inline constexpr std::string_view kManifestVersion = "1";
inline constexpr std::string_view kManifestFileName = "manifest.json";
inline constexpr double kDefaultSplitRatio = 0.9;

enum class Split { train, test };

std::string_view to_string(Split s);
Split split_from_string(std::string_view s);

/// The four groups of a quadruple, in storage order.
enum class Group { clean = 0, low_light = 1, haze_only = 2, low_light_hazy = 3 };
inline constexpr std::array<Group, 4> kAllGroups = {Group::clean, Group::low_light, Group::haze_only,
                                                    Group::low_light_hazy};

/// Short names used as directory names and JSON keys: I, I_L, I_H, I_HL.
std::string_view group_name(Group g);
Group group_from_name(std::string_view name);

/// Where a quadruple's depth came from; enough to rebuild the exact DepthMap.
struct DepthSource {
    enum class Kind { file, constant, vertical_gradient };
    Kind kind = Kind::vertical_gradient;
    std::string path;   // Kind::file
    double scale = 10.0;  // Kind::file
    double near = 1.0;  // constant value, or gradient near depth
    double far = 10.0;  // gradient far depth

    friend bool operator==(const DepthSource&, const DepthSource&) = default;
};

DepthMap resolve_depth(const DepthSource& source, int width, int height);
nlohmann::json depth_source_to_json(const DepthSource& d);
DepthSource depth_source_from_json(const nlohmann::json& j);

/**
 * @brief One scene: clear image, low-light only, haze only, low-light hazy.
 *
 * `files` and `sidecars` hold paths relative to the manifest directory.
 * Sidecars are optional exact float64 copies (keys: the group names plus
 * "t" for the transmission map).
 */
struct DatasetQuadruple {
    std::string id;
    std::string source_image;
    DepthSource depth;
    int width = 0;
    int height = 0;
    std::array<std::string, 4> files;
    std::array<std::string, 4> hashes;
    std::map<std::string, std::string> sidecars;
    SimulationParams params;
    Rgb light_low{};
    Rgb light_normal{};
    Split split = Split::train;

    const std::string& file(Group g) const { return files[static_cast<int>(g)]; }
    const std::string& hash(Group g) const { return hashes[static_cast<int>(g)]; }
};

struct Manifest {
    std::string version{kManifestVersion};
    std::string rng{kRngAlgorithm};
    std::uint64_t seed = 0;
    double split_ratio = kDefaultSplitRatio;
    std::uint64_t split_seed = 0;
    nlohmann::json config = nlohmann::json::object();
    std::vector<DatasetQuadruple> entries;

    std::size_t count(Split s) const;
    const DatasetQuadruple* find(std::string_view id) const;
};

nlohmann::json manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);
/// Pretty-printed JSON with sorted keys and a trailing newline; byte-identical for equal manifests.
std::string manifest_dump(const Manifest& m);
void write_manifest(const Manifest& m, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

/// Number of training entries for a split of n items: round(ratio * n).
std::size_t train_count(std::size_t n, double ratio);

/**
 * Deterministic split: a Fisher-Yates shuffle seeded by `seed` picks which
 * entries train; the first round(ratio * N) shuffled entries become train and
 * the rest test. Entry order in the manifest is unchanged.
 */
Manifest split_dataset(Manifest m, double ratio, std::uint64_t seed);

struct GenerationConfig {
    ParamOverrides overrides;
    ParamRanges ranges;
    bool strict = true;
    double split_ratio = kDefaultSplitRatio;
    double depth_scale = 10.0;
    VerticalGradientDepth fallback_depth{1.0, 10.0};
    double estimate_fraction = kDefaultEstimateFraction;
    bool scalar_light = false;
    BitDepth bit_depth = BitDepth::k16;
    bool float_sidecars = false;
    bool skip_unreadable = false;
    unsigned jobs = 1;  // not recorded; output does not depend on it
};

/// Every field except `jobs`; stored in the manifest for provenance.
nlohmann::json generation_config_to_json(const GenerationConfig& cfg);

struct InputItem {
    std::filesystem::path image;
    std::optional<std::filesystem::path> depth;
};

/// PNG files of `image_dir`, sorted by path; depth files matched by file stem in `depth_dir`.
std::vector<InputItem> collect_inputs(const std::filesystem::path& image_dir,
                                      const std::optional<std::filesystem::path>& depth_dir = std::nullopt);

/**
 * @brief Simulates every input and writes the four-group dataset under `out_dir`.
 *
 * Inputs are sorted by image path before ids are assigned (id = file stem,
 * de-duplicated with a numeric suffix). Each entry's parameters and noise
 * come from streams derived from (seed, id), so results do not depend on
 * input order beyond id assignment, nor on cfg.jobs. Layout:
 * `manifest.json`, `I/`, `I_L/`, `I_H/`, `I_HL/` and, with sidecars, `float/`.
 *
 * Unreadable inputs throw IoError unless cfg.skip_unreadable, in which case
 * a message is appended to `warnings`.
 */
Manifest generate_dataset(std::vector<InputItem> inputs, const GenerationConfig& cfg, std::uint64_t seed,
                          const std::filesystem::path& out_dir, std::vector<std::string>* warnings = nullptr);

/// Re-runs the simulation for one entry from its recorded source and parameters.
SimulationResult resimulate_entry(const DatasetQuadruple& entry, const Manifest& m);

struct VerifyOptions {
    bool check_hashes = false;
    bool resimulate = false;
};

struct VerifyFailure {
    std::string id;
    std::string kind;  // missing_file, unreadable, dimension_mismatch, duplicate_id, split_count, hash_mismatch, resimulation_mismatch
    std::string detail;
};

struct VerifyReport {
    std::size_t entries_checked = 0;
    std::size_t files_checked = 0;
    std::vector<VerifyFailure> failures;

    bool ok() const { return failures.empty(); }
};

nlohmann::json verify_report_to_json(const VerifyReport& r);

/// Checks file existence, dimensions, id uniqueness and split counts; optionally content hashes and re-simulation.
VerifyReport verify_manifest(const Manifest& m, const std::filesystem::path& root, const VerifyOptions& options = {});

inline constexpr double kMaxRotationDegrees = 10.0;

/// Training-time augmentation: rotation about the image center, then optional horizontal flip.
struct AugmentSpec {
    double rotation_deg = 0.0;
    bool hflip = false;
};

/// rotation uniform in [-10, 10] degrees, flip with probability 1/2.
AugmentSpec sample_augment(Rng& rng);

/**
 * Positive angles rotate content counterclockwise as displayed. Sampling is
 * bilinear; coordinates that fall outside the frame are clamped to the
 * border (edge replication). Strict mode rejects |rotation| > 10 degrees.
 */
Image augment(const Image& img, const AugmentSpec& spec, bool strict = true);

} // namespace lhsim
