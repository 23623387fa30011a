#include "lhsim/dataset.hpp"

#include "lhsim/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <unordered_set>

namespace lhsim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 4> kGroupNames = {"I", "I_L", "I_H", "I_HL"};
constexpr std::string_view kTransmissionSidecar = "t";
constexpr std::string_view kFloatDir = "float";

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    const auto it = j.find(key);
    return it == j.end() ? fallback : it->get<T>();
}

SimulationOptions simulation_options(const Manifest& m) {
    SimulationOptions o;
    o.estimate_fraction = get_or(m.config, "estimate_fraction", kDefaultEstimateFraction);
    o.scalar_light = get_or(m.config, "scalar_light", false);
    return o;
}

BitDepth bit_depth_of(const Manifest& m) {
    return get_or(m.config, "bit_depth", 16) == 8 ? BitDepth::k8 : BitDepth::k16;
}

std::string absolute_string(const fs::path& p) {
    return fs::absolute(p).lexically_normal().generic_string();
}

const Image& group_image(const SimulationResult& r, const Image& clean, Group g) {
    switch (g) {
    case Group::clean: return clean;
    case Group::low_light: return r.low_light;
    case Group::haze_only: return r.haze_only;
    case Group::low_light_hazy: return r.low_light_hazy;
    }
    return clean;
}

// Bilinear sample with coordinates clamped to the frame.
double sample_bilinear(const Image& img, double x, double y, int c) {
    const double cx = std::clamp(x, 0.0, static_cast<double>(img.width() - 1));
    const double cy = std::clamp(y, 0.0, static_cast<double>(img.height() - 1));
    const int x0 = static_cast<int>(std::floor(cx));
    const int y0 = static_cast<int>(std::floor(cy));
    const int x1 = std::min(x0 + 1, img.width() - 1);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double fx = cx - x0;
    const double fy = cy - y0;
    const double top = img.at(x0, y0, c) * (1.0 - fx) + img.at(x1, y0, c) * fx;
    const double bottom = img.at(x0, y1, c) * (1.0 - fx) + img.at(x1, y1, c) * fx;
    return top * (1.0 - fy) + bottom * fy;
}

} // namespace

std::string_view to_string(Split s) {
    return s == Split::train ? "train" : "test";
}

Split split_from_string(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "test") return Split::test;
    throw InvalidArgument("unknown split \"" + std::string(s) + "\"");
}

std::string_view group_name(Group g) {
    return kGroupNames[static_cast<int>(g)];
}

Group group_from_name(std::string_view name) {
    for (Group g : kAllGroups) {
        if (group_name(g) == name) return g;
    }
    throw InvalidArgument("unknown image group \"" + std::string(name) + "\" (expected I, I_L, I_H or I_HL)");
}

DepthMap resolve_depth(const DepthSource& source, int width, int height) {
    switch (source.kind) {
    case DepthSource::Kind::file: {
        DepthMap d = load_depth(source.path, source.scale);
        if (d.width() != width || d.height() != height) {
            throw InvalidArgument("depth map " + source.path + " is " + std::to_string(d.width()) + "x" +
                                  std::to_string(d.height()) + ", image is " + std::to_string(width) + "x" +
                                  std::to_string(height));
        }
        return d;
    }
    case DepthSource::Kind::constant:
        return synthesize_depth(width, height, ConstantDepth{source.near});
    case DepthSource::Kind::vertical_gradient:
        return synthesize_depth(width, height, VerticalGradientDepth{source.near, source.far});
    }
    throw InvalidArgument("resolve_depth: unknown depth source");
}

json depth_source_to_json(const DepthSource& d) {
    switch (d.kind) {
    case DepthSource::Kind::file:
        return {{"kind", "file"}, {"path", d.path}, {"scale", d.scale}};
    case DepthSource::Kind::constant:
        return {{"kind", "constant"}, {"value", d.near}};
    case DepthSource::Kind::vertical_gradient:
        return {{"kind", "vertical_gradient"}, {"near", d.near}, {"far", d.far}};
    }
    return {};
}

DepthSource depth_source_from_json(const json& j) {
    DepthSource d;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "file") {
        d.kind = DepthSource::Kind::file;
        d.path = j.at("path").get<std::string>();
        d.scale = j.at("scale").get<double>();
    } else if (kind == "constant") {
        d.kind = DepthSource::Kind::constant;
        d.near = j.at("value").get<double>();
    } else if (kind == "vertical_gradient") {
        d.kind = DepthSource::Kind::vertical_gradient;
        d.near = j.at("near").get<double>();
        d.far = j.at("far").get<double>();
    } else {
        throw InvalidArgument("unknown depth source kind \"" + kind + "\"");
    }
    return d;
}

std::size_t Manifest::count(Split s) const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [s](const DatasetQuadruple& e) { return e.split == s; }));
}

const DatasetQuadruple* Manifest::find(std::string_view id) const {
    const auto it = std::find_if(entries.begin(), entries.end(), [id](const DatasetQuadruple& e) { return e.id == id; });
    return it == entries.end() ? nullptr : &*it;
}

json manifest_to_json(const Manifest& m) {
    json entries = json::array();
    for (const auto& e : m.entries) {
        json files = json::object();
        json hashes = json::object();
        for (Group g : kAllGroups) {
            files[std::string(group_name(g))] = e.file(g);
            hashes[std::string(group_name(g))] = e.hash(g);
        }
        json entry = {
            {"id", e.id},
            {"source_image", e.source_image},
            {"depth", depth_source_to_json(e.depth)},
            {"width", e.width},
            {"height", e.height},
            {"files", files},
            {"sha256", hashes},
            {"params", params_to_json(e.params)},
            {"atmospheric_light_low", rgb_to_json(e.light_low)},
            {"atmospheric_light_normal", rgb_to_json(e.light_normal)},
            {"split", std::string(to_string(e.split))},
        };
        if (!e.sidecars.empty()) {
            entry["float_sidecars"] = e.sidecars;
        }
        entries.push_back(std::move(entry));
    }
    return {
        {"schema", std::string(kManifestSchema)},
        {"version", m.version},
        {"rng", m.rng},
        {"seed", m.seed},
        {"split_ratio", m.split_ratio},
        {"split_seed", m.split_seed},
        {"config", m.config},
        {"counts", {{"total", m.entries.size()}, {"train", m.count(Split::train)}, {"test", m.count(Split::test)}}},
        {"entries", entries},
    };
}

Manifest manifest_from_json(const json& j) {
    try {
        if (j.at("schema").get<std::string>() != kManifestSchema) {
            throw InvalidArgument("manifest: unexpected schema");
        }
        Manifest m;
        m.version = j.at("version").get<std::string>();
        if (m.version != kManifestVersion) {
            throw InvalidArgument("manifest: unsupported version " + m.version);
        }
        m.rng = j.at("rng").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.split_ratio = j.at("split_ratio").get<double>();
        m.split_seed = j.at("split_seed").get<std::uint64_t>();
        m.config = j.value("config", json::object());
        for (const auto& je : j.at("entries")) {
            DatasetQuadruple e;
            e.id = je.at("id").get<std::string>();
            e.source_image = je.at("source_image").get<std::string>();
            e.depth = depth_source_from_json(je.at("depth"));
            e.width = je.at("width").get<int>();
            e.height = je.at("height").get<int>();
            for (Group g : kAllGroups) {
                const std::string key(group_name(g));
                e.files[static_cast<int>(g)] = je.at("files").at(key).get<std::string>();
                e.hashes[static_cast<int>(g)] = je.at("sha256").at(key).get<std::string>();
            }
            if (je.contains("float_sidecars")) {
                e.sidecars = je.at("float_sidecars").get<std::map<std::string, std::string>>();
            }
            e.params = params_from_json(je.at("params"));
            e.light_low = rgb_from_json(je.at("atmospheric_light_low"));
            e.light_normal = rgb_from_json(je.at("atmospheric_light_normal"));
            e.split = split_from_string(je.at("split").get<std::string>());
            m.entries.push_back(std::move(e));
        }
        return m;
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("manifest: ") + e.what());
    }
}

std::string manifest_dump(const Manifest& m) {
    return manifest_to_json(m).dump(2) + "\n";
}

void write_manifest(const Manifest& m, const fs::path& path) {
    const std::string text = manifest_dump(m);
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Manifest read_manifest(const fs::path& path) {
    const auto bytes = read_file_bytes(path);
    json j;
    try {
        j = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw InvalidArgument(path.string() + ": " + e.what());
    }
    return manifest_from_json(j);
}

std::size_t train_count(std::size_t n, double ratio) {
    return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
}

Manifest split_dataset(Manifest m, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw InvalidArgument("split ratio must lie in (0, 1)");
    }
    if (m.entries.empty()) {
        throw InvalidArgument("cannot split an empty manifest");
    }
    const std::size_t n = m.entries.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng = Rng(seed).substream("split");
    for (std::size_t i = n - 1; i > 0; --i) {
        std::swap(order[i], order[rng.below(i + 1)]);
    }
    const std::size_t n_train = train_count(n, ratio);
    for (std::size_t i = 0; i < n; ++i) {
        m.entries[order[i]].split = i < n_train ? Split::train : Split::test;
    }
    m.split_ratio = ratio;
    m.split_seed = seed;
    return m;
}

json generation_config_to_json(const GenerationConfig& cfg) {
    const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    const auto range = [](const Range& r) { return json::array({r.lo, r.hi}); };
    return {
        {"alpha", opt(cfg.overrides.alpha)},
        {"beta", opt(cfg.overrides.beta)},
        {"gamma", opt(cfg.overrides.gamma)},
        {"beta_scatter", opt(cfg.overrides.beta_scatter)},
        {"atmospheric_light",
         cfg.overrides.atmospheric_light ? rgb_to_json(*cfg.overrides.atmospheric_light) : json("estimate")},
        {"sigma_s", opt(cfg.overrides.sigma_s)},
        {"sigma_c", opt(cfg.overrides.sigma_c)},
        {"ranges",
         {{"alpha", range(cfg.ranges.alpha)},
          {"beta", range(cfg.ranges.beta)},
          {"gamma", range(cfg.ranges.gamma)},
          {"beta_scatter", range(cfg.ranges.beta_scatter)},
          {"sigma_s", range(cfg.ranges.sigma_s)},
          {"sigma_c", range(cfg.ranges.sigma_c)}}},
        {"strict", cfg.strict},
        {"split_ratio", cfg.split_ratio},
        {"depth_scale", cfg.depth_scale},
        {"depth_near", cfg.fallback_depth.near},
        {"depth_far", cfg.fallback_depth.far},
        {"estimate_fraction", cfg.estimate_fraction},
        {"scalar_light", cfg.scalar_light},
        {"bit_depth", static_cast<int>(cfg.bit_depth)},
        {"float_sidecars", cfg.float_sidecars},
        {"skip_unreadable", cfg.skip_unreadable},
    };
}

std::vector<InputItem> collect_inputs(const fs::path& image_dir, const std::optional<fs::path>& depth_dir) {
    std::error_code ec;
    if (!fs::is_directory(image_dir, ec)) {
        throw IoError(image_dir.string() + ": input directory does not exist");
    }
    std::vector<fs::path> images;
    for (const auto& entry : fs::directory_iterator(image_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") {
            images.push_back(entry.path());
        }
    }
    std::sort(images.begin(), images.end());

    std::map<std::string, fs::path> depths;
    if (depth_dir) {
        if (!fs::is_directory(*depth_dir, ec)) {
            throw IoError(depth_dir->string() + ": depth directory does not exist");
        }
        for (const auto& entry : fs::directory_iterator(*depth_dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".png") {
                depths[entry.path().stem().string()] = entry.path();
            }
        }
    }
    std::vector<InputItem> items;
    items.reserve(images.size());
    for (const auto& p : images) {
        InputItem item{p, std::nullopt};
        if (const auto it = depths.find(p.stem().string()); it != depths.end()) {
            item.depth = it->second;
        }
        items.push_back(std::move(item));
    }
    return items;
}

Manifest generate_dataset(std::vector<InputItem> inputs, const GenerationConfig& cfg, std::uint64_t seed,
                          const fs::path& out_dir, std::vector<std::string>* warnings) {
    if (inputs.empty()) {
        throw InvalidArgument("generate_dataset: no inputs");
    }
    if (!(cfg.split_ratio > 0.0 && cfg.split_ratio < 1.0)) {
        throw InvalidArgument("generate_dataset: split ratio must lie in (0, 1)");
    }
    std::sort(inputs.begin(), inputs.end(), [](const InputItem& a, const InputItem& b) { return a.image < b.image; });

    std::vector<std::string> ids;
    std::set<std::string> used;
    for (const auto& item : inputs) {
        std::string id = item.image.stem().string();
        for (int suffix = 1; used.contains(id); ++suffix) {
            id = item.image.stem().string() + "_" + std::to_string(suffix);
        }
        used.insert(id);
        ids.push_back(std::move(id));
    }

    std::error_code ec;
    for (Group g : kAllGroups) fs::create_directories(out_dir / group_name(g), ec);
    if (cfg.float_sidecars) fs::create_directories(out_dir / kFloatDir, ec);
    if (!fs::is_directory(out_dir / "I_HL")) {
        throw IoError(out_dir.string() + ": cannot create output directories");
    }

    Manifest m;
    m.seed = seed;
    m.config = generation_config_to_json(cfg);
    const SimulationOptions options = simulation_options(m);

    std::vector<std::optional<DatasetQuadruple>> results(inputs.size());
    std::vector<std::string> skipped(inputs.size());

    parallel_for(inputs.size(), cfg.jobs, [&](std::size_t i) {
        const InputItem& item = inputs[i];
        DatasetQuadruple e;
        e.id = ids[i];
        e.source_image = absolute_string(item.image);
        if (item.depth) {
            e.depth = {DepthSource::Kind::file, absolute_string(*item.depth), cfg.depth_scale, 0.0, 0.0};
        } else {
            e.depth = {DepthSource::Kind::vertical_gradient, "", cfg.depth_scale, cfg.fallback_depth.near,
                       cfg.fallback_depth.far};
        }

        Image clean;
        DepthMap depth;
        try {
            clean = load_image(item.image);
            depth = resolve_depth(e.depth, clean.width(), clean.height());
        } catch (const std::exception& ex) {
            if (!cfg.skip_unreadable) throw;
            skipped[i] = e.id + ": skipped (" + ex.what() + ")";
            return;
        }

        const std::uint64_t image_seed = derive_seed(seed, e.id);
        Rng param_rng = Rng(image_seed).substream("params");
        e.params = sample_params(param_rng, cfg.overrides, cfg.strict, cfg.ranges);
        e.params.seed = image_seed;

        const SimulationResult r = simulate_lowlight_haze(clean, depth, e.params, options);
        e.width = clean.width();
        e.height = clean.height();
        e.light_low = r.light_low;
        e.light_normal = r.light_normal;

        for (Group g : kAllGroups) {
            const std::string rel = std::string(group_name(g)) + "/" + e.id + ".png";
            const auto bytes = encode_png(group_image(r, clean, g), cfg.bit_depth);
            write_file_bytes(out_dir / rel, bytes);
            e.files[static_cast<int>(g)] = rel;
            e.hashes[static_cast<int>(g)] = sha256_hex(bytes);
        }
        if (cfg.float_sidecars) {
            for (Group g : kAllGroups) {
                const std::string rel = std::string(kFloatDir) + "/" + e.id + "_" + std::string(group_name(g)) + ".f64";
                write_float_raster(to_float_raster(group_image(r, clean, g)), out_dir / rel);
                e.sidecars[std::string(group_name(g))] = rel;
            }
            const std::string rel = std::string(kFloatDir) + "/" + e.id + "_t.f64";
            write_float_raster(to_float_raster(r.transmission), out_dir / rel);
            e.sidecars[std::string(kTransmissionSidecar)] = rel;
        }
        results[i] = std::move(e);
    });

    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (results[i]) {
            m.entries.push_back(std::move(*results[i]));
        } else if (warnings != nullptr && !skipped[i].empty()) {
            warnings->push_back(skipped[i]);
        }
    }
    if (m.entries.empty()) {
        throw IoError("generate_dataset: no input could be read");
    }
    m = split_dataset(std::move(m), cfg.split_ratio, mix64(seed ^ 0x5350'4C49'54ull));
    write_manifest(m, out_dir / kManifestFileName);
    return m;
}

SimulationResult resimulate_entry(const DatasetQuadruple& entry, const Manifest& m) {
    const Image clean = load_image(entry.source_image);
    const DepthMap depth = resolve_depth(entry.depth, clean.width(), clean.height());
    return simulate_lowlight_haze(clean, depth, entry.params, simulation_options(m));
}

json verify_report_to_json(const VerifyReport& r) {
    json failures = json::array();
    for (const auto& f : r.failures) {
        failures.push_back({{"id", f.id}, {"kind", f.kind}, {"detail", f.detail}});
    }
    return {{"entries_checked", r.entries_checked},
            {"files_checked", r.files_checked},
            {"failure_count", r.failures.size()},
            {"failures", failures},
            {"ok", r.ok()}};
}

VerifyReport verify_manifest(const Manifest& m, const fs::path& root, const VerifyOptions& options) {
    VerifyReport report;
    std::unordered_set<std::string> seen;
    for (const auto& e : m.entries) {
        ++report.entries_checked;
        if (!seen.insert(e.id).second) {
            report.failures.push_back({e.id, "duplicate_id", "id appears more than once"});
        }
        for (Group g : kAllGroups) {
            const fs::path path = root / e.file(g);
            ++report.files_checked;
            std::error_code ec;
            if (!fs::is_regular_file(path, ec)) {
                report.failures.push_back({e.id, "missing_file", e.file(g)});
                continue;
            }
            if (options.check_hashes) {
                const std::string actual = sha256_file(path);
                if (actual != e.hash(g)) {
                    // a corrupted file would usually also fail to decode; report it once
                    report.failures.push_back({e.id, "hash_mismatch", e.file(g)});
                    continue;
                }
            }
            try {
                const PngRaster r = read_png(path);
                if (r.width != e.width || r.height != e.height) {
                    report.failures.push_back({e.id, "dimension_mismatch",
                                               e.file(g) + " is " + std::to_string(r.width) + "x" +
                                                   std::to_string(r.height)});
                }
            } catch (const std::exception& ex) {
                report.failures.push_back({e.id, "unreadable", e.file(g) + ": " + ex.what()});
            }
        }
        for (const auto& [name, rel] : e.sidecars) {
            ++report.files_checked;
            std::error_code ec;
            if (!fs::is_regular_file(root / rel, ec)) {
                report.failures.push_back({e.id, "missing_file", rel});
            }
        }
        if (options.resimulate) {
            try {
                const SimulationResult r = resimulate_entry(e, m);
                const Image clean = load_image(e.source_image);
                for (Group g : kAllGroups) {
                    const auto bytes = encode_png(group_image(r, clean, g), bit_depth_of(m));
                    if (sha256_hex(bytes) != e.hash(g)) {
                        report.failures.push_back({e.id, "resimulation_mismatch", e.file(g)});
                    }
                }
            } catch (const std::exception& ex) {
                report.failures.push_back({e.id, "resimulation_mismatch", ex.what()});
            }
        }
    }
    if (!m.entries.empty()) {
        const std::size_t expected = train_count(m.entries.size(), m.split_ratio);
        if (m.count(Split::train) != expected) {
            report.failures.push_back({"", "split_count",
                                       "train=" + std::to_string(m.count(Split::train)) + ", expected " +
                                           std::to_string(expected)});
        }
    }
    return report;
}

AugmentSpec sample_augment(Rng& rng) {
    AugmentSpec spec;
    spec.rotation_deg = rng.uniform(-kMaxRotationDegrees, kMaxRotationDegrees);
    spec.hflip = rng.uniform() < 0.5;
    return spec;
}

Image augment(const Image& img, const AugmentSpec& spec, bool strict) {
    if (!std::isfinite(spec.rotation_deg)) {
        throw InvalidArgument("augment: rotation must be finite");
    }
    if (strict && std::abs(spec.rotation_deg) > kMaxRotationDegrees) {
        throw InvalidArgument("augment: rotation outside [-10, 10] degrees (strict mode)");
    }
    Image rotated = img;
    if (spec.rotation_deg != 0.0) {
        const double theta = spec.rotation_deg * std::numbers::pi / 180.0;
        const double cs = std::cos(theta);
        const double sn = std::sin(theta);
        const double cx = (img.width() - 1) / 2.0;
        const double cy = (img.height() - 1) / 2.0;
        for (int y = 0; y < img.height(); ++y) {
            for (int x = 0; x < img.width(); ++x) {
                const double dx = x - cx;
                const double dy = y - cy;
                const double sx = cx + cs * dx - sn * dy;
                const double sy = cy + sn * dx + cs * dy;
                for (int c = 0; c < 3; ++c) rotated.at(x, y, c) = sample_bilinear(img, sx, sy, c);
            }
        }
    }
    if (!spec.hflip) {
        return rotated;
    }
    Image flipped(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            for (int c = 0; c < 3; ++c) flipped.at(x, y, c) = rotated.at(img.width() - 1 - x, y, c);
        }
    }
    return flipped;
}

} // namespace lhsim
