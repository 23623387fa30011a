#pragma once

#include "lhsim/dataset.hpp"
#include "lhsim/image.hpp"
#include "lhsim/lowlight.hpp"
#include "lhsim/metrics.hpp"

#include "json.hpp"

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace lhsim {

/// Raised when an external mapping command fails.
class MappingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Exact-image lookup: keys are content hashes of the input image.
class LookupTable {
public:
    void insert(const Image& key, Image value);
    const Image* find(const Image& key) const;
    std::size_t size() const { return table_.size(); }

private:
    std::unordered_map<std::string, Image> table_;
};

/**
 * @brief A deterministic, dimension-preserving image transform.
 *
 * Stands in for a dehazing or enhancement stage. The oracle kinds invert
 * the forward simulation analytically; `lookup` returns stored ground truth
 * for inputs it has seen (optionally falling back to another mapping);
 * `external` runs a command over PNG files.
 */
class Mapping {
public:
    enum class Kind { identity, oracle_dehaze, oracle_enhance, lookup, external };

    static Mapping identity();
    static Mapping oracle_dehaze(TransmissionMap t, Rgb light, double t_floor = kDefaultTransmissionFloor);
    static Mapping oracle_enhance(LowLightParams p);
    static Mapping lookup(LookupTable table, std::optional<Mapping> fallback = std::nullopt);
    /**
     * `command` may contain {input} and {output}; they are replaced by
     * single-quoted PNG paths inside `work_dir`. A nonzero exit status or a
     * missing/mis-sized output raises MappingError.
     */
    static Mapping external(std::string command, std::filesystem::path work_dir);

    Image operator()(const Image& img) const;

    Kind kind() const { return kind_; }
    const std::string& label() const { return label_; }

private:
    Mapping(Kind kind, std::string label, std::function<Image(const Image&)> fn);

    Kind kind_;
    std::string label_;
    std::function<Image(const Image&)> fn_;
};

/// Per-pixel combination of the two path outputs.
struct FusionRule {
    enum class Kind { mean, weighted, pick_first, pick_second };
    Kind kind = Kind::mean;
    double weight = 0.5;  // weight of the first input for Kind::weighted

    static FusionRule mean() { return {Kind::mean, 0.5}; }
    static FusionRule weighted(double w);
    static FusionRule pick_first() { return {Kind::pick_first, 1.0}; }
    static FusionRule pick_second() { return {Kind::pick_second, 0.0}; }

    /// "mean", "weighted:<w>", "pick_first", "pick_second".
    static FusionRule parse(std::string_view text);
    std::string to_string() const;

    Image operator()(const Image& first, const Image& second) const;
};

/// Enhance first, then dehaze: d(e(img)).
Image run_path1(const Image& img, const Mapping& enhance, const Mapping& dehaze, Image* intermediate = nullptr);
/// Dehaze first, then enhance: e(d(img)).
Image run_path2(const Image& img, const Mapping& dehaze, const Mapping& enhance, Image* intermediate = nullptr);

struct TwoPathResult {
    Image i_ed;     // path 1 output
    Image i_de;     // path 2 output
    Image i_final;  // fusion of the two
    double l_pi = 0.0;
};

TwoPathResult run_two_path(const Image& img, const Mapping& dehaze, const Mapping& enhance, const FusionRule& fusion);

/// Ground truth for one scene, as needed to build exact oracle mappings.
struct OracleInputs {
    Image low_light_hazy;       // input to both paths
    Image haze_only;            // what enhancement must produce from the input on path 1
    TransmissionMap transmission;
    Rgb light_low{};
    Rgb light_normal{};
    LowLightParams lowlight;
};

struct OracleMappings {
    Mapping dehaze;
    Mapping enhance;
};

/**
 * Oracle pair under which both paths reproduce the clean image.
 *
 * enhance: lookup {I^H_L -> I^H}, falling back to the closed-form low-light inverse.
 * dehaze:  lookup {I^H -> invert_haze(I^H, t, A_normal)}, falling back to
 *          invert_haze(., t, A_low).
 * Enhancing a hazy image has no pixelwise closed form, hence the lookup on path 1.
 */
OracleMappings make_oracle_mappings(const OracleInputs& in);

struct EvaluateOptions {
    bool all_splits = false;  // default: test entries only
    ExposureConfig exposure;
    unsigned jobs = 1;
};

struct EvaluationRecord {
    std::string id;
    ImageMetrics metrics;
};

struct EvaluationReport {
    std::vector<EvaluationRecord> records;
    std::vector<std::string> missing;
    std::vector<std::string> failed;  // unreadable or mis-sized outputs
    ImageMetrics mean;                 // over records; psnr is +inf if any record is
};

/// Aggregates per-record metrics (arithmetic means).
ImageMetrics mean_metrics(const std::vector<EvaluationRecord>& records);

nlohmann::json evaluation_report_to_json(const EvaluationReport& r);

/// Scores `<outputs_dir>/<id>.png` against each entry's clean image I.
EvaluationReport evaluate_method_outputs(const Manifest& m, const std::filesystem::path& root,
                                         const std::filesystem::path& outputs_dir, const EvaluateOptions& options = {});

} // namespace lhsim
