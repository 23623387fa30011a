#include "lhsim/twopath.hpp"

#include "lhsim/haze.hpp"
#include "lhsim/io.hpp"
#include "lhsim/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sys/wait.h>
#include <unistd.h>

namespace lhsim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char ch : s) {
        if (ch == '\'') {
            out += "'\\''";
        } else {
            out += ch;
        }
    }
    return out + "'";
}

std::string replace_all(std::string text, const std::string& from, const std::string& to) {
    for (std::size_t pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size())) {
        text.replace(pos, from.size(), to);
    }
    return text;
}

Image run_external(const std::string& command, const fs::path& work_dir, const Image& img) {
    static std::atomic<std::uint64_t> counter{0};
    const std::uint64_t n = counter.fetch_add(1);
    const std::string stem = "map_" + std::to_string(::getpid()) + "_" + std::to_string(n);
    const fs::path in = work_dir / (stem + "_in.png");
    const fs::path out = work_dir / (stem + "_out.png");
    save_image(img, in, BitDepth::k16);

    std::string cmd = replace_all(command, "{input}", shell_quote(in.string()));
    cmd = replace_all(cmd, "{output}", shell_quote(out.string()));
    const int status = std::system(cmd.c_str());
    std::error_code ec;
    fs::remove(in, ec);
    if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        fs::remove(out, ec);
        throw MappingError("external mapping failed (status " + std::to_string(status) + "): " + cmd);
    }
    Image result;
    try {
        result = load_image(out);
    } catch (const IoError& e) {
        throw MappingError(std::string("external mapping produced no readable output: ") + e.what());
    }
    fs::remove(out, ec);
    if (!result.same_shape(img)) {
        throw MappingError("external mapping changed image dimensions");
    }
    return result;
}

} // namespace

void LookupTable::insert(const Image& key, Image value) {
    table_.insert_or_assign(content_hash(key), std::move(value));
}

const Image* LookupTable::find(const Image& key) const {
    const auto it = table_.find(content_hash(key));
    return it == table_.end() ? nullptr : &it->second;
}

Mapping::Mapping(Kind kind, std::string label, std::function<Image(const Image&)> fn)
    : kind_(kind), label_(std::move(label)), fn_(std::move(fn)) {}

Mapping Mapping::identity() {
    return Mapping(Kind::identity, "identity", [](const Image& img) { return img; });
}

Mapping Mapping::oracle_dehaze(TransmissionMap t, Rgb light, double t_floor) {
    return Mapping(Kind::oracle_dehaze, "oracle_dehaze",
                   [t = std::move(t), light, t_floor](const Image& img) { return invert_haze(img, t, light, t_floor); });
}

Mapping Mapping::oracle_enhance(LowLightParams p) {
    validate(p);
    return Mapping(Kind::oracle_enhance, "oracle_enhance", [p](const Image& img) { return invert_lowlight(img, p); });
}

Mapping Mapping::lookup(LookupTable table, std::optional<Mapping> fallback) {
    auto shared_table = std::make_shared<const LookupTable>(std::move(table));
    auto shared_fallback = fallback ? std::make_shared<const Mapping>(std::move(*fallback)) : nullptr;
    const std::string label =
        shared_fallback ? "lookup+" + shared_fallback->label() : std::string("lookup");
    return Mapping(Kind::lookup, label, [shared_table, shared_fallback](const Image& img) {
        if (const Image* hit = shared_table->find(img)) {
            return *hit;
        }
        if (shared_fallback) {
            return (*shared_fallback)(img);
        }
        throw MappingError("lookup mapping: input not found in table");
    });
}

Mapping Mapping::external(std::string command, fs::path work_dir) {
    if (command.empty()) {
        throw InvalidArgument("external mapping: empty command");
    }
    return Mapping(Kind::external, "external:" + command,
                   [command, work_dir](const Image& img) { return run_external(command, work_dir, img); });
}

Image Mapping::operator()(const Image& img) const {
    Image out = fn_(img);
    if (!out.same_shape(img)) {
        throw MappingError("mapping " + label_ + " changed image dimensions");
    }
    return out;
}

FusionRule FusionRule::weighted(double w) {
    if (!(w >= 0.0 && w <= 1.0)) {
        throw InvalidArgument("fusion weight must lie in [0, 1]");
    }
    return {Kind::weighted, w};
}

FusionRule FusionRule::parse(std::string_view text) {
    if (text == "mean") return mean();
    if (text == "pick_first") return pick_first();
    if (text == "pick_second") return pick_second();
    if (text.starts_with("weighted:")) {
        const std::string value(text.substr(9));
        char* end = nullptr;
        const double w = std::strtod(value.c_str(), &end);
        if (value.empty() || end != value.c_str() + value.size()) {
            throw InvalidArgument("fusion: cannot parse weight \"" + value + "\"");
        }
        return weighted(w);
    }
    throw InvalidArgument("unknown fusion rule \"" + std::string(text) +
                          "\" (expected mean, weighted:<w>, pick_first, pick_second)");
}

std::string FusionRule::to_string() const {
    switch (kind) {
    case Kind::mean: return "mean";
    case Kind::weighted: return "weighted:" + std::to_string(weight);
    case Kind::pick_first: return "pick_first";
    case Kind::pick_second: return "pick_second";
    }
    return "mean";
}

Image FusionRule::operator()(const Image& first, const Image& second) const {
    require_same_shape(first, second, "fusion");
    switch (kind) {
    case Kind::pick_first: return first;
    case Kind::pick_second: return second;
    case Kind::mean:
    case Kind::weighted: break;
    }
    const double w = kind == Kind::mean ? 0.5 : weight;
    Image out = first;
    auto o = out.data();
    const auto b = second.data();
    for (std::size_t i = 0; i < o.size(); ++i) {
        // clamped: w*a + (1-w)*b can round past max(a, b)
        const double v = w * o[i] + (1.0 - w) * b[i];
        o[i] = std::clamp(v, std::min(o[i], b[i]), std::max(o[i], b[i]));
    }
    return out;
}

Image run_path1(const Image& img, const Mapping& enhance, const Mapping& dehaze, Image* intermediate) {
    Image mid = enhance(img);
    Image out = dehaze(mid);
    if (intermediate != nullptr) *intermediate = std::move(mid);
    return out;
}

Image run_path2(const Image& img, const Mapping& dehaze, const Mapping& enhance, Image* intermediate) {
    Image mid = dehaze(img);
    Image out = enhance(mid);
    if (intermediate != nullptr) *intermediate = std::move(mid);
    return out;
}

TwoPathResult run_two_path(const Image& img, const Mapping& dehaze, const Mapping& enhance, const FusionRule& fusion) {
    TwoPathResult r;
    r.i_ed = run_path1(img, enhance, dehaze);
    r.i_de = run_path2(img, dehaze, enhance);
    r.i_final = fusion(r.i_ed, r.i_de);
    r.l_pi = path_invariance_loss(r.i_ed, r.i_de);
    return r;
}

OracleMappings make_oracle_mappings(const OracleInputs& in) {
    LookupTable enhance_table;
    enhance_table.insert(in.low_light_hazy, in.haze_only);
    LookupTable dehaze_table;
    dehaze_table.insert(in.haze_only, invert_haze(in.haze_only, in.transmission, in.light_normal));
    return {
        Mapping::lookup(std::move(dehaze_table), Mapping::oracle_dehaze(in.transmission, in.light_low)),
        Mapping::lookup(std::move(enhance_table), Mapping::oracle_enhance(in.lowlight)),
    };
}

ImageMetrics mean_metrics(const std::vector<EvaluationRecord>& records) {
    ImageMetrics mean;
    if (records.empty()) {
        mean.psnr_db = std::numeric_limits<double>::quiet_NaN();
        mean.ssim = mean.l1 = mean.l2 = mean.grad_l1 = mean.l_exp = std::numeric_limits<double>::quiet_NaN();
        return mean;
    }
    const double n = static_cast<double>(records.size());
    for (const auto& r : records) {
        mean.psnr_db += r.metrics.psnr_db / n;
        mean.ssim += r.metrics.ssim / n;
        mean.l1 += r.metrics.l1 / n;
        mean.l2 += r.metrics.l2 / n;
        mean.grad_l1 += r.metrics.grad_l1 / n;
        mean.l_exp += r.metrics.l_exp / n;
    }
    return mean;
}

json evaluation_report_to_json(const EvaluationReport& r) {
    json images = json::array();
    for (const auto& rec : r.records) {
        json j = metrics_to_json(rec.metrics);
        j["id"] = rec.id;
        images.push_back(std::move(j));
    }
    json aggregate = r.records.empty() ? json(nullptr) : metrics_to_json(r.mean);
    if (!r.records.empty()) aggregate["count"] = r.records.size();
    return {{"schema", "lhsim.evaluation"},
            {"version", "1"},
            {"images", images},
            {"aggregate", aggregate},
            {"missing", r.missing},
            {"failed", r.failed},
            {"incomplete", !r.missing.empty() || !r.failed.empty()}};
}

EvaluationReport evaluate_method_outputs(const Manifest& m, const fs::path& root, const fs::path& outputs_dir,
                                         const EvaluateOptions& options) {
    std::vector<const DatasetQuadruple*> selected;
    for (const auto& e : m.entries) {
        if (options.all_splits || e.split == Split::test) selected.push_back(&e);
    }
    enum class Status { ok, missing, failed };
    std::vector<Status> status(selected.size(), Status::ok);
    std::vector<ImageMetrics> metrics(selected.size());

    parallel_for(selected.size(), options.jobs, [&](std::size_t i) {
        const auto& e = *selected[i];
        const fs::path output = outputs_dir / (e.id + ".png");
        std::error_code ec;
        if (!fs::is_regular_file(output, ec)) {
            status[i] = Status::missing;
            return;
        }
        try {
            const Image pred = load_image(output);
            const Image ref = load_image(root / e.file(Group::clean));
            metrics[i] = compute_metrics(pred, ref, options.exposure);
        } catch (const std::exception&) {
            status[i] = Status::failed;
        }
    });

    EvaluationReport report;
    for (std::size_t i = 0; i < selected.size(); ++i) {
        switch (status[i]) {
        case Status::ok: report.records.push_back({selected[i]->id, metrics[i]}); break;
        case Status::missing: report.missing.push_back(selected[i]->id); break;
        case Status::failed: report.failed.push_back(selected[i]->id); break;
        }
    }
    report.mean = mean_metrics(report.records);
    return report;
}

} // namespace lhsim
