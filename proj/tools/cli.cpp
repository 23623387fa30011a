#include "cli.hpp"

#include "lhsim/haze.hpp"
#include "lhsim/io.hpp"
#include "lhsim/lowlight.hpp"
#include "lhsim/parallel.hpp"
#include "lhsim/twopath.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>

namespace lhsim::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// config plumbing

std::optional<double> optional_number(const json& v) {
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
}

json optional_to_json(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

/// Flags shared by every command that reads a config.
struct CommonFlags {
    std::string config_path;
    unsigned jobs = 0;
    CLI::Option* jobs_opt = nullptr;

    void add(CLI::App& app) {
        app.add_option("--config", config_path, "Flat JSON config file; flags override its values")
            ->check(CLI::ExistingFile);
        jobs_opt = app.add_option("--jobs,-j", jobs, "Worker threads (default: $LHSIM_JOBS or hardware threads)")
                       ->check(CLI::PositiveNumber);
    }

    Config resolve() const {
        Config cfg;
        cfg.jobs = default_jobs();
        if (!config_path.empty()) cfg = load_config_file(config_path, cfg);
        if (jobs_opt->count() > 0) cfg.jobs = jobs;
        cfg.generation.jobs = cfg.jobs;
        return cfg;
    }
};

/// Simulation overrides; only flags actually given are applied.
struct SimulationFlags {
    double alpha = 0, beta = 0, gamma = 0, beta_scatter = 0, sigma_s = 0, sigma_c = 0;
    std::string light;
    std::uint64_t seed = 0;
    double split = kDefaultSplitRatio;
    double depth_scale = 10, depth_near = 1, depth_far = 10, estimate_fraction = kDefaultEstimateFraction;
    int bit_depth = 16;
    bool no_strict = false, float_sidecars = false, skip_unreadable = false, scalar_light = false;
    std::vector<std::pair<CLI::Option*, std::function<void(Config&)>>> setters;

    template <class T>
    void opt(CLI::App& app, const std::string& name, T& target, const std::string& help,
             std::function<void(Config&)> apply) {
        setters.emplace_back(app.add_option(name, target, help), std::move(apply));
    }
    void flag(CLI::App& app, const std::string& name, bool& target, const std::string& help,
              std::function<void(Config&)> apply) {
        setters.emplace_back(app.add_flag(name, target, help), std::move(apply));
    }

    void add(CLI::App& app) {
        opt(app, "--seed", seed, "Dataset seed", [this](Config& c) { c.seed = seed; });
        opt(app, "--alpha", alpha, "Fix alpha instead of sampling [0.9, 1]",
            [this](Config& c) { c.generation.overrides.alpha = alpha; });
        opt(app, "--beta", beta, "Fix beta instead of sampling [0.5, 0.7]",
            [this](Config& c) { c.generation.overrides.beta = beta; });
        opt(app, "--gamma", gamma, "Fix gamma instead of sampling [1.5, 2.5]",
            [this](Config& c) { c.generation.overrides.gamma = gamma; });
        opt(app, "--beta-scatter", beta_scatter, "Fix the scattering coefficient instead of sampling [0.1, 0.2]",
            [this](Config& c) { c.generation.overrides.beta_scatter = beta_scatter; });
        opt(app, "--atmospheric-light", light, "\"estimate\" (default), a value, or r,g,b",
            [this](Config& c) { c.generation.overrides.atmospheric_light = parse_atmospheric_light(light); });
        opt(app, "--sigma-s", sigma_s, "Fix the signal-dependent noise coefficient",
            [this](Config& c) { c.generation.overrides.sigma_s = sigma_s; });
        opt(app, "--sigma-c", sigma_c, "Fix the signal-independent noise std",
            [this](Config& c) { c.generation.overrides.sigma_c = sigma_c; });
        opt(app, "--split", split, "Train fraction (default 0.9)", [this](Config& c) { c.generation.split_ratio = split; });
        opt(app, "--depth-scale", depth_scale, "Depth units per full-scale depth sample (default 10)",
            [this](Config& c) { c.generation.depth_scale = depth_scale; });
        opt(app, "--depth-near", depth_near, "Synthesized depth at the bottom row (default 1)",
            [this](Config& c) { c.generation.fallback_depth.near = depth_near; });
        opt(app, "--depth-far", depth_far, "Synthesized depth at the top row (default 10)",
            [this](Config& c) { c.generation.fallback_depth.far = depth_far; });
        opt(app, "--estimate-fraction", estimate_fraction, "Brightest-pixel fraction for A (default 0.001)",
            [this](Config& c) { c.generation.estimate_fraction = estimate_fraction; });
        opt(app, "--bit-depth", bit_depth, "PNG bit depth, 8 or 16 (default 16)", [this](Config& c) {
            if (bit_depth != 8 && bit_depth != 16) throw InvalidArgument("--bit-depth must be 8 or 16");
            c.generation.bit_depth = bit_depth == 8 ? BitDepth::k8 : BitDepth::k16;
        });
        flag(app, "--no-strict", no_strict, "Allow fixed parameters outside the sampling ranges",
             [](Config& c) { c.generation.strict = false; });
        flag(app, "--float-sidecars", float_sidecars, "Also store exact float64 rasters under float/",
             [](Config& c) { c.generation.float_sidecars = true; });
        flag(app, "--skip-unreadable", skip_unreadable, "Skip unreadable inputs with a warning instead of failing",
             [](Config& c) { c.generation.skip_unreadable = true; });
        flag(app, "--scalar-light", scalar_light, "Use one gray atmospheric light instead of per-channel",
             [](Config& c) { c.generation.scalar_light = true; });
    }

    void apply(Config& cfg) const {
        for (const auto& [option, setter] : setters) {
            if (option->count() > 0) setter(cfg);
        }
    }
};

// ---------------------------------------------------------------------------
// shared helpers

void write_text(const fs::path& path, const std::string& text) {
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir)) {
        throw IoError(dir.string() + ": cannot create directory");
    }
}

fs::path manifest_root(const fs::path& manifest_path) {
    const fs::path parent = manifest_path.parent_path();
    return parent.empty() ? fs::path(".") : parent;
}

Image load_group(const DatasetQuadruple& e, const fs::path& root, Group g, bool* exact = nullptr) {
    const std::string name(group_name(g));
    if (const auto it = e.sidecars.find(name); it != e.sidecars.end()) {
        if (exact != nullptr) *exact = true;
        return image_from_float_raster(read_float_raster(root / it->second));
    }
    if (exact != nullptr) *exact = false;
    return load_image(root / e.file(g));
}

TransmissionMap load_transmission(const DatasetQuadruple& e, const fs::path& root) {
    if (const auto it = e.sidecars.find("t"); it != e.sidecars.end()) {
        return transmission_from_float_raster(read_float_raster(root / it->second));
    }
    return transmission_from_depth(resolve_depth(e.depth, e.width, e.height), e.params.beta_scatter);
}

struct Summary {
    double mean = 0, min = 0, max = 0, median = 0;
};

Summary summarize(std::vector<double> values) {
    Summary s;
    if (values.empty()) {
        s.mean = s.min = s.max = s.median = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    std::sort(values.begin(), values.end());
    s.min = values.front();
    s.max = values.back();
    const std::size_t n = values.size();
    s.median = n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    for (double v : values) s.mean += v / static_cast<double>(n);
    return s;
}

json summary_to_json(const Summary& s) {
    return {{"mean", json_number(s.mean)}, {"min", json_number(s.min)}, {"max", json_number(s.max)},
            {"median", json_number(s.median)}};
}

std::string format_number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

// ---------------------------------------------------------------------------
// commands

int cmd_simulate(const fs::path& in_dir, const std::optional<fs::path>& depth_dir, const fs::path& out_dir,
                 const Config& cfg, std::ostream& out, std::ostream& err) {
    auto inputs = collect_inputs(in_dir, depth_dir);
    if (inputs.empty()) {
        throw IoError(in_dir.string() + ": no PNG images found");
    }
    err << "simulating " << inputs.size() << " scenes with " << cfg.jobs << " worker(s)\n";
    ensure_directory(out_dir);
    std::vector<std::string> warnings;
    const Manifest m = generate_dataset(std::move(inputs), cfg.generation, cfg.seed, out_dir, &warnings);
    for (const auto& w : warnings) err << "warning: " << w << "\n";
    write_text(out_dir / "config.json", config_to_json(cfg).dump(2) + "\n");

    out << "manifest=" << (out_dir / kManifestFileName).string() << "\n";
    out << "entries=" << m.entries.size() << " train=" << m.count(Split::train) << " test=" << m.count(Split::test)
        << "\n";
    return warnings.empty() ? kExitOk : kExitPartial;
}

int cmd_invert(const fs::path& manifest_path, const fs::path& out_dir, std::ostream& out, std::ostream& err,
               unsigned jobs) {
    const Manifest m = read_manifest(manifest_path);
    if (m.entries.empty()) {
        throw InvalidArgument("invert: manifest has no entries");
    }
    const fs::path root = manifest_root(manifest_path);
    ensure_directory(out_dir);

    struct Row {
        bool noisy = false;
        bool exact = false;
        double max_error = 0.0;
        double unclipped_fraction = 0.0;
    };
    std::vector<Row> rows(m.entries.size());
    parallel_for(m.entries.size(), jobs, [&](std::size_t i) {
        const auto& e = m.entries[i];
        Row& row = rows[i];
        row.noisy = !e.params.noiseless();
        bool exact_hazy = false, exact_clean = false;
        const Image hazy = load_group(e, root, Group::low_light_hazy, &exact_hazy);
        const Image clean = load_group(e, root, Group::clean, &exact_clean);
        row.exact = exact_hazy && exact_clean && e.sidecars.contains("t");
        const TransmissionMap t = load_transmission(e, root);
        const LowLightParams ll = LowLightParams::from(e.params);
        const Image recon = invert_lowlight(invert_haze(hazy, t, e.light_low), ll);
        save_image(recon, out_dir / (e.id + ".png"), BitDepth::k16);

        // errors only where no forward stage saturated
        std::size_t unclipped = 0;
        for (int y = 0; y < clean.height(); ++y) {
            for (int x = 0; x < clean.width(); ++x) {
                bool saturated = false;
                for (int c = 0; c < 3; ++c) {
                    const double v = ll.beta * std::pow(ll.alpha * clean.at(x, y, c), ll.gamma);
                    saturated = saturated || v >= 1.0 || clean.at(x, y, c) >= 1.0;
                }
                if (saturated) continue;
                ++unclipped;
                for (int c = 0; c < 3; ++c) {
                    row.max_error = std::max(row.max_error, std::abs(recon.at(x, y, c) - clean.at(x, y, c)));
                }
            }
        }
        row.unclipped_fraction = static_cast<double>(unclipped) / static_cast<double>(clean.pixel_count());
    });

    json entries = json::array();
    double max_error = 0.0;
    std::size_t noiseless = 0;
    bool all_exact = true;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& e = m.entries[i];
        const Row& row = rows[i];
        if (row.noisy) {
            err << "warning: " << e.id << " has noise (sigma_s=" << e.params.sigma_s << ", sigma_c=" << e.params.sigma_c
                << "); analytic inversion is not exact for this entry\n";
        } else {
            ++noiseless;
            max_error = std::max(max_error, row.max_error);
            all_exact = all_exact && row.exact;
        }
        entries.push_back({{"id", e.id},
                           {"noisy", row.noisy},
                           {"source", row.exact ? "float64" : "png"},
                           {"max_abs_error", row.max_error},
                           {"unclipped_fraction", row.unclipped_fraction},
                           {"reconstruction", e.id + ".png"}});
    }
    if (noiseless > 0 && !all_exact) {
        err << "note: some entries were inverted from quantized PNGs; errors are bounded by quantization, not the "
               "model (generate with --float-sidecars for exact inversion)\n";
    }
    const json report = {{"schema", "lhsim.invert"},
                         {"version", "1"},
                         {"entries", entries},
                         {"noiseless_entries", noiseless},
                         {"noisy_entries", rows.size() - noiseless},
                         {"max_abs_error", noiseless > 0 ? json(max_error) : json(nullptr)},
                         {"exact_sources", all_exact}};
    write_text(out_dir / "invert_report.json", report.dump(2) + "\n");
    out << "entries=" << rows.size() << " noiseless=" << noiseless
        << " max_abs_error=" << (noiseless > 0 ? format_number(max_error) : "n/a") << "\n";
    return kExitOk;
}

EvaluationReport evaluate_dirs(const fs::path& pred_dir, const fs::path& ref_dir, const ExposureConfig& exposure,
                               unsigned jobs) {
    std::vector<fs::path> refs;
    std::error_code ec;
    if (!fs::is_directory(ref_dir, ec)) throw IoError(ref_dir.string() + ": reference directory does not exist");
    if (!fs::is_directory(pred_dir, ec)) throw IoError(pred_dir.string() + ": prediction directory does not exist");
    for (const auto& entry : fs::directory_iterator(ref_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") refs.push_back(entry.path());
    }
    std::sort(refs.begin(), refs.end());
    enum class Status { ok, missing, failed };
    std::vector<Status> status(refs.size(), Status::ok);
    std::vector<ImageMetrics> metrics(refs.size());
    parallel_for(refs.size(), jobs, [&](std::size_t i) {
        const fs::path pred = pred_dir / refs[i].filename();
        std::error_code local;
        if (!fs::is_regular_file(pred, local)) {
            status[i] = Status::missing;
            return;
        }
        try {
            metrics[i] = compute_metrics(load_image(pred), load_image(refs[i]), exposure);
        } catch (const std::exception&) {
            status[i] = Status::failed;
        }
    });
    EvaluationReport report;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        const std::string id = refs[i].stem().string();
        switch (status[i]) {
        case Status::ok: report.records.push_back({id, metrics[i]}); break;
        case Status::missing: report.missing.push_back(id); break;
        case Status::failed: report.failed.push_back(id); break;
        }
    }
    report.mean = mean_metrics(report.records);
    return report;
}

struct MappingSpec {
    enum class Kind { identity, oracle, external } kind = Kind::oracle;
    std::string command;
};

MappingSpec parse_mapping_spec(const std::string& text) {
    if (text == "identity") return {MappingSpec::Kind::identity, ""};
    if (text == "oracle") return {MappingSpec::Kind::oracle, ""};
    if (text.starts_with("external:")) {
        MappingSpec spec{MappingSpec::Kind::external, text.substr(9)};
        if (spec.command.empty()) throw InvalidArgument("external mapping needs a command after \"external:\"");
        return spec;
    }
    throw InvalidArgument("unknown mapping \"" + text + "\" (expected oracle, identity or external:<command>)");
}

int cmd_twopath(const fs::path& manifest_path, const fs::path& out_dir, const MappingSpec& dehaze_spec,
                const MappingSpec& enhance_spec, const FusionRule& fusion, bool all_splits, unsigned jobs,
                std::ostream& out, std::ostream& err) {
    const Manifest m = read_manifest(manifest_path);
    const fs::path root = manifest_root(manifest_path);
    ensure_directory(out_dir);
    const fs::path work_dir = out_dir / "work";
    if (dehaze_spec.kind == MappingSpec::Kind::external || enhance_spec.kind == MappingSpec::Kind::external) {
        ensure_directory(work_dir);
    }

    std::vector<const DatasetQuadruple*> selected;
    for (const auto& e : m.entries) {
        if (all_splits || e.split == Split::test) selected.push_back(&e);
    }
    if (selected.empty()) {
        throw InvalidArgument("twopath: no entries selected (use --all-splits to include training entries)");
    }

    struct Row {
        bool failed = false;
        std::string error;
        double l_pi = 0.0;
        double psnr_db = 0.0;
        double ssim = 0.0;
    };
    std::vector<Row> rows(selected.size());
    std::mutex err_mutex;
    parallel_for(selected.size(), jobs, [&](std::size_t i) {
        const auto& e = *selected[i];
        Row& row = rows[i];
        try {
            const Image input = load_group(e, root, Group::low_light_hazy);
            const Image clean = load_group(e, root, Group::clean);
            std::optional<OracleMappings> oracle;
            if (dehaze_spec.kind == MappingSpec::Kind::oracle || enhance_spec.kind == MappingSpec::Kind::oracle) {
                oracle = make_oracle_mappings({input, load_group(e, root, Group::haze_only), load_transmission(e, root),
                                               e.light_low, e.light_normal, LowLightParams::from(e.params)});
            }
            const auto build = [&](const MappingSpec& spec, bool is_dehaze) {
                switch (spec.kind) {
                case MappingSpec::Kind::identity: return Mapping::identity();
                case MappingSpec::Kind::external: return Mapping::external(spec.command, work_dir);
                case MappingSpec::Kind::oracle: break;
                }
                return is_dehaze ? oracle->dehaze : oracle->enhance;
            };
            const Mapping dehaze = build(dehaze_spec, true);
            const Mapping enhance = build(enhance_spec, false);
            const TwoPathResult r = run_two_path(input, dehaze, enhance, fusion);
            save_image(r.i_ed, out_dir / (e.id + "_ed.png"));
            save_image(r.i_de, out_dir / (e.id + "_de.png"));
            save_image(r.i_final, out_dir / (e.id + "_final.png"));
            row.l_pi = r.l_pi;
            row.psnr_db = psnr(r.i_final, clean);
            row.ssim = ssim(r.i_final, clean);
        } catch (const std::exception& ex) {
            row.failed = true;
            row.error = ex.what();
            std::lock_guard lock(err_mutex);
            err << "error: " << e.id << ": " << ex.what() << "\n";
        }
    });

    json entries = json::array();
    std::vector<double> l_pi, psnrs, ssims;
    std::size_t failed = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Row& row = rows[i];
        json j = {{"id", selected[i]->id}, {"failed", row.failed}};
        if (row.failed) {
            ++failed;
            j["error"] = row.error;
        } else {
            j["l_pi"] = row.l_pi;
            j["psnr_db"] = json_number(row.psnr_db);
            j["ssim"] = row.ssim;
            j["files"] = {{"i_ed", selected[i]->id + "_ed.png"},
                          {"i_de", selected[i]->id + "_de.png"},
                          {"i_final", selected[i]->id + "_final.png"}};
            l_pi.push_back(row.l_pi);
            psnrs.push_back(row.psnr_db);
            ssims.push_back(row.ssim);
        }
        entries.push_back(std::move(j));
    }
    const Summary l_pi_summary = summarize(l_pi);
    const json report = {{"schema", "lhsim.twopath"},
                         {"version", "1"},
                         {"fusion", fusion.to_string()},
                         {"entries", entries},
                         {"l_pi", summary_to_json(l_pi_summary)},
                         {"psnr_db", summary_to_json(summarize(psnrs))},
                         {"ssim", summary_to_json(summarize(ssims))},
                         {"failed", failed}};
    write_text(out_dir / "twopath_report.json", report.dump(2) + "\n");
    out << "entries=" << rows.size() << " failed=" << failed << " mean_l_pi=" << format_number(l_pi_summary.mean)
        << " mean_psnr_db=" << format_number(summarize(psnrs).mean) << "\n";
    return failed == 0 ? kExitOk : kExitPartial;
}

int cmd_augment_image(const fs::path& in, const fs::path& out_path, const AugmentSpec& spec, bool strict,
                      std::ostream& out) {
    save_image(augment(load_image(in), spec, strict), out_path);
    out << json({{"rotation_deg", spec.rotation_deg}, {"hflip", spec.hflip}}).dump() << "\n";
    return kExitOk;
}

int cmd_augment_entry(const fs::path& manifest_path, const std::string& id, const fs::path& out_dir,
                      const AugmentSpec& spec, bool strict, std::ostream& out) {
    const Manifest m = read_manifest(manifest_path);
    const DatasetQuadruple* e = m.find(id);
    if (e == nullptr) {
        throw InvalidArgument("augment: no entry with id \"" + id + "\"");
    }
    const fs::path root = manifest_root(manifest_path);
    for (Group g : kAllGroups) {
        ensure_directory(out_dir / group_name(g));
        save_image(augment(load_image(root / e->file(g)), spec, strict), out_dir / group_name(g) / (id + ".png"));
    }
    out << json({{"id", id}, {"rotation_deg", spec.rotation_deg}, {"hflip", spec.hflip}}).dump() << "\n";
    return kExitOk;
}

} // namespace

// ---------------------------------------------------------------------------

std::optional<Rgb> parse_atmospheric_light(const std::string& text) {
    if (text == "estimate") return std::nullopt;
    std::vector<double> values;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        char* end = nullptr;
        const double v = std::strtod(part.c_str(), &end);
        if (part.empty() || end != part.c_str() + part.size()) {
            throw InvalidArgument("cannot parse atmospheric light \"" + text + "\"");
        }
        values.push_back(v);
    }
    if (values.size() == 1) return Rgb{values[0], values[0], values[0]};
    if (values.size() == 3) return Rgb{values[0], values[1], values[2]};
    throw InvalidArgument("atmospheric light needs \"estimate\", one value or three values");
}

void apply_config_json(Config& cfg, const json& j) {
    if (!j.is_object()) {
        throw InvalidArgument("config: expected a flat JSON object");
    }
    auto& g = cfg.generation;
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "alpha") g.overrides.alpha = optional_number(v);
            else if (key == "beta") g.overrides.beta = optional_number(v);
            else if (key == "gamma") g.overrides.gamma = optional_number(v);
            else if (key == "beta_scatter") g.overrides.beta_scatter = optional_number(v);
            else if (key == "sigma_s") g.overrides.sigma_s = optional_number(v);
            else if (key == "sigma_c") g.overrides.sigma_c = optional_number(v);
            else if (key == "atmospheric_light") {
                if (v.is_string()) g.overrides.atmospheric_light = parse_atmospheric_light(v.get<std::string>());
                else if (v.is_null()) g.overrides.atmospheric_light.reset();
                else g.overrides.atmospheric_light = rgb_from_json(v);
            }
            else if (key == "seed") cfg.seed = v.get<std::uint64_t>();
            else if (key == "strict") g.strict = v.get<bool>();
            else if (key == "split_ratio") g.split_ratio = v.get<double>();
            else if (key == "depth_scale") g.depth_scale = v.get<double>();
            else if (key == "depth_near") g.fallback_depth.near = v.get<double>();
            else if (key == "depth_far") g.fallback_depth.far = v.get<double>();
            else if (key == "estimate_fraction") g.estimate_fraction = v.get<double>();
            else if (key == "scalar_light") g.scalar_light = v.get<bool>();
            else if (key == "bit_depth") {
                const int bits = v.get<int>();
                if (bits != 8 && bits != 16) throw InvalidArgument("config: bit_depth must be 8 or 16");
                g.bit_depth = bits == 8 ? BitDepth::k8 : BitDepth::k16;
            }
            else if (key == "float_sidecars") g.float_sidecars = v.get<bool>();
            else if (key == "skip_unreadable") g.skip_unreadable = v.get<bool>();
            else if (key == "jobs") {
                const int jobs = v.get<int>();
                if (jobs < 1) throw InvalidArgument("config: jobs must be >= 1");
                cfg.jobs = static_cast<unsigned>(jobs);
            }
            else if (key == "delta") cfg.exposure.delta = v.get<double>();
            else if (key == "patch") cfg.exposure.patch = v.get<int>();
            else if (key == "lambda_11") cfg.weights.lambda_11 = v.get<double>();
            else if (key == "lambda_12") cfg.weights.lambda_12 = v.get<double>();
            else if (key == "lambda_21") cfg.weights.lambda_21 = v.get<double>();
            else if (key == "lambda_22") cfg.weights.lambda_22 = v.get<double>();
            else if (key == "lambda_3") cfg.weights.lambda_3 = v.get<double>();
            else throw InvalidArgument("config: unknown key \"" + key + "\"");
        }
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("config: ") + e.what());
    }
    validate(cfg.exposure);
    validate(cfg.weights);
}

Config load_config_file(const fs::path& path, Config base) {
    const auto bytes = read_file_bytes(path);
    json j;
    try {
        j = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw InvalidArgument(path.string() + ": " + e.what());
    }
    apply_config_json(base, j);
    return base;
}

json config_to_json(const Config& cfg) {
    const auto& g = cfg.generation;
    return {
        {"alpha", optional_to_json(g.overrides.alpha)},
        {"beta", optional_to_json(g.overrides.beta)},
        {"gamma", optional_to_json(g.overrides.gamma)},
        {"beta_scatter", optional_to_json(g.overrides.beta_scatter)},
        {"atmospheric_light", g.overrides.atmospheric_light ? rgb_to_json(*g.overrides.atmospheric_light) : json("estimate")},
        {"sigma_s", optional_to_json(g.overrides.sigma_s)},
        {"sigma_c", optional_to_json(g.overrides.sigma_c)},
        {"seed", cfg.seed},
        {"strict", g.strict},
        {"split_ratio", g.split_ratio},
        {"depth_scale", g.depth_scale},
        {"depth_near", g.fallback_depth.near},
        {"depth_far", g.fallback_depth.far},
        {"estimate_fraction", g.estimate_fraction},
        {"scalar_light", g.scalar_light},
        {"bit_depth", static_cast<int>(g.bit_depth)},
        {"float_sidecars", g.float_sidecars},
        {"skip_unreadable", g.skip_unreadable},
        {"jobs", cfg.jobs},
        {"delta", cfg.exposure.delta},
        {"patch", cfg.exposure.patch},
        {"lambda_11", cfg.weights.lambda_11},
        {"lambda_12", cfg.weights.lambda_12},
        {"lambda_21", cfg.weights.lambda_21},
        {"lambda_22", cfg.weights.lambda_22},
        {"lambda_3", cfg.weights.lambda_3},
    };
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Low-light haze simulation, dataset tooling and evaluation"};
    app.name(args.empty() ? "lhsim" : args[0]);
    app.require_subcommand(1);

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Generate a four-group dataset from a directory of PNG images");
    std::string sim_in, sim_depth, sim_out;
    CommonFlags sim_common;
    SimulationFlags sim_flags;
    simulate->add_option("--in", sim_in, "Directory of clear PNG images")->required();
    simulate->add_option("--depth-dir", sim_depth, "Directory of depth PNGs matched by file stem");
    simulate->add_option("--out", sim_out, "Output dataset directory")->required();
    sim_common.add(*simulate);
    sim_flags.add(*simulate);

    // invert
    auto* invert = app.add_subcommand("invert", "Analytically invert a noiseless dataset and report the error");
    std::string inv_manifest, inv_out;
    CommonFlags inv_common;
    invert->add_option("--manifest", inv_manifest, "Dataset manifest")->required();
    invert->add_option("--out", inv_out, "Directory for reconstructions and invert_report.json")->required();
    inv_common.add(*invert);

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "PSNR/SSIM/loss report for method outputs");
    std::string ev_manifest, ev_outputs, ev_group, ev_pred, ev_ref, ev_report;
    bool ev_all = false, ev_allow_missing = false;
    double ev_delta = 0.6;
    int ev_patch = 16;
    CommonFlags ev_common;
    auto* ev_delta_opt = evaluate->add_option("--delta", ev_delta, "Well-exposed level for l_exp (default 0.6)");
    auto* ev_patch_opt = evaluate->add_option("--patch", ev_patch, "Patch size for l_exp (default 16)");
    evaluate->add_option("--manifest", ev_manifest, "Dataset manifest (pairs outputs with I by id)");
    evaluate->add_option("--outputs", ev_outputs, "Directory with one <id>.png per entry");
    evaluate->add_option("--outputs-group", ev_group, "Evaluate a stored group (I, I_L, I_H, I_HL) against I");
    evaluate->add_option("--pred-dir", ev_pred, "Prediction directory (pairs with --ref-dir by file name)");
    evaluate->add_option("--ref-dir", ev_ref, "Reference directory");
    evaluate->add_option("--report", ev_report, "Write the JSON report here instead of standard output");
    evaluate->add_flag("--all-splits", ev_all, "Include training entries");
    evaluate->add_flag("--allow-missing", ev_allow_missing, "Exit 0 even if outputs are missing");
    ev_common.add(*evaluate);

    // twopath
    auto* twopath = app.add_subcommand("twopath", "Run both processing orders and fuse them");
    std::string tp_manifest, tp_out, tp_dehaze = "oracle", tp_enhance = "oracle", tp_fusion = "mean";
    bool tp_all = false;
    CommonFlags tp_common;
    twopath->add_option("--manifest", tp_manifest, "Dataset manifest")->required();
    twopath->add_option("--out", tp_out, "Output directory")->required();
    twopath->add_option("--dehaze", tp_dehaze, "oracle | identity | external:<command with {input} {output}>");
    twopath->add_option("--enhance", tp_enhance, "oracle | identity | external:<command with {input} {output}>");
    twopath->add_option("--fusion", tp_fusion, "mean | weighted:<w> | pick_first | pick_second");
    twopath->add_flag("--all-splits", tp_all, "Include training entries");
    tp_common.add(*twopath);

    // split
    auto* split = app.add_subcommand("split", "Re-assign train/test splits");
    std::string sp_manifest, sp_out;
    double sp_ratio = kDefaultSplitRatio;
    std::uint64_t sp_seed = 0;
    split->add_option("--manifest", sp_manifest, "Dataset manifest")->required();
    split->add_option("--ratio", sp_ratio, "Train fraction (default 0.9)");
    auto* sp_seed_opt = split->add_option("--seed", sp_seed, "Shuffle seed (default: the manifest's split seed)");
    split->add_option("--out", sp_out, "Write the new manifest here (default: overwrite)");

    // verify
    auto* verify = app.add_subcommand("verify", "Check a dataset against its manifest");
    std::string vf_manifest;
    bool vf_hashes = false, vf_resim = false;
    verify->add_option("--manifest", vf_manifest, "Dataset manifest")->required();
    verify->add_flag("--hashes", vf_hashes, "Recompute SHA-256 of every image");
    verify->add_flag("--resimulate", vf_resim, "Re-run the simulation from the recorded sources and parameters");

    // augment
    auto* aug = app.add_subcommand("augment", "Apply the training-time rotation/flip augmentation");
    std::string au_in, au_out, au_manifest, au_id, au_out_dir;
    double au_rotate = 0.0;
    bool au_hflip = false, au_no_strict = false;
    std::uint64_t au_seed = 0;
    aug->add_option("--in", au_in, "Input PNG");
    aug->add_option("--out", au_out, "Output PNG");
    aug->add_option("--manifest", au_manifest, "Dataset manifest (augment a whole quadruple)");
    aug->add_option("--id", au_id, "Entry id when using --manifest");
    aug->add_option("--out-dir", au_out_dir, "Output directory when using --manifest");
    auto* au_rotate_opt = aug->add_option("--rotate", au_rotate, "Rotation in degrees, [-10, 10]");
    aug->add_flag("--hflip", au_hflip, "Mirror columns");
    auto* au_seed_opt = aug->add_option("--seed", au_seed, "Draw a random rotation and flip from this seed");
    aug->add_flag("--no-strict", au_no_strict, "Allow rotations beyond 10 degrees");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    if (argv.empty()) argv.push_back("lhsim");
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (simulate->parsed()) {
            Config cfg = sim_common.resolve();
            sim_flags.apply(cfg);
            std::optional<fs::path> depth_dir;
            if (!sim_depth.empty()) depth_dir = fs::path(sim_depth);
            return cmd_simulate(sim_in, depth_dir, sim_out, cfg, out, err);
        }
        if (invert->parsed()) {
            const Config cfg = inv_common.resolve();
            return cmd_invert(inv_manifest, inv_out, out, err, cfg.jobs);
        }
        if (evaluate->parsed()) {
            Config cfg = ev_common.resolve();
            if (ev_delta_opt->count() > 0) cfg.exposure.delta = ev_delta;
            if (ev_patch_opt->count() > 0) cfg.exposure.patch = ev_patch;
            validate(cfg.exposure);
            EvaluationReport report;
            if (!ev_pred.empty() || !ev_ref.empty()) {
                if (ev_pred.empty() || ev_ref.empty()) throw InvalidArgument("evaluate: --pred-dir needs --ref-dir");
                report = evaluate_dirs(ev_pred, ev_ref, cfg.exposure, cfg.jobs);
            } else {
                if (ev_manifest.empty()) throw InvalidArgument("evaluate: give --manifest or --pred-dir/--ref-dir");
                if (ev_outputs.empty() == ev_group.empty()) {
                    throw InvalidArgument("evaluate: give exactly one of --outputs or --outputs-group");
                }
                const Manifest m = read_manifest(ev_manifest);
                const fs::path root = manifest_root(ev_manifest);
                const fs::path outputs = ev_group.empty() ? fs::path(ev_outputs)
                                                          : root / group_name(group_from_name(ev_group));
                report = evaluate_method_outputs(m, root, outputs, {ev_all, cfg.exposure, cfg.jobs});
            }
            const std::string text = evaluation_report_to_json(report).dump(2) + "\n";
            if (ev_report.empty()) {
                out << text;
            } else {
                write_text(ev_report, text);
                out << "images=" << report.records.size() << " missing=" << report.missing.size()
                    << " failed=" << report.failed.size() << " mean_psnr_db=" << format_number(report.mean.psnr_db)
                    << " mean_ssim=" << format_number(report.mean.ssim) << "\n";
            }
            for (const auto& id : report.missing) err << "warning: no output for " << id << "\n";
            for (const auto& id : report.failed) err << "warning: output for " << id << " is unreadable or mis-sized\n";
            const bool incomplete = !report.missing.empty() || !report.failed.empty();
            return incomplete && !ev_allow_missing ? kExitPartial : kExitOk;
        }
        if (twopath->parsed()) {
            const Config cfg = tp_common.resolve();
            return cmd_twopath(tp_manifest, tp_out, parse_mapping_spec(tp_dehaze), parse_mapping_spec(tp_enhance),
                               FusionRule::parse(tp_fusion), tp_all, cfg.jobs, out, err);
        }
        if (split->parsed()) {
            Manifest m = read_manifest(sp_manifest);
            const std::uint64_t seed = sp_seed_opt->count() > 0 ? sp_seed : m.split_seed;
            m = split_dataset(std::move(m), sp_ratio, seed);
            write_manifest(m, sp_out.empty() ? fs::path(sp_manifest) : fs::path(sp_out));
            out << "train=" << m.count(Split::train) << " test=" << m.count(Split::test) << "\n";
            return kExitOk;
        }
        if (verify->parsed()) {
            const Manifest m = read_manifest(vf_manifest);
            const VerifyReport r = verify_manifest(m, manifest_root(vf_manifest), {vf_hashes, vf_resim});
            out << verify_report_to_json(r).dump(2) << "\n";
            return r.ok() ? kExitOk : kExitPartial;
        }
        if (aug->parsed()) {
            AugmentSpec spec{au_rotate, au_hflip};
            if (au_seed_opt->count() > 0) {
                if (au_rotate_opt->count() > 0 || au_hflip) {
                    throw InvalidArgument("augment: --seed draws the spec; do not combine with --rotate/--hflip");
                }
                Rng rng = Rng(au_seed).substream("augment");
                spec = sample_augment(rng);
            }
            if (!au_manifest.empty()) {
                if (au_id.empty() || au_out_dir.empty()) {
                    throw InvalidArgument("augment: --manifest needs --id and --out-dir");
                }
                return cmd_augment_entry(au_manifest, au_id, au_out_dir, spec, !au_no_strict, out);
            }
            if (au_in.empty() || au_out.empty()) {
                throw InvalidArgument("augment: give --in and --out, or --manifest, --id and --out-dir");
            }
            return cmd_augment_image(au_in, au_out, spec, !au_no_strict, out);
        }
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}

} // namespace lhsim::cli
