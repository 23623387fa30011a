#include "lhsim/dataset.hpp"
#include "lhsim/error.hpp"
#include "lhsim/haze.hpp"
#include "lhsim/io.hpp"
#include "lhsim/lowlight.hpp"
#include "lhsim/metrics.hpp"
#include "lhsim/noise.hpp"
#include "lhsim/params.hpp"
#include "lhsim/rng.hpp"
#include "lhsim/twopath.hpp"

#ifdef LHSIM_WITH_CLI
#include "cli.hpp"
#endif

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>
#include <sstream>

namespace py = pybind11;
using namespace lhsim;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

/// (H, W, 3) float64 array -> Image (copies).
Image to_image(const Array& a) {
    if (a.ndim() != 3 || a.shape(2) != 3) {
        throw InvalidArgument("expected an array of shape (H, W, 3)");
    }
    const auto h = static_cast<int>(a.shape(0));
    const auto w = static_cast<int>(a.shape(1));
    std::vector<double> data(a.data(), a.data() + a.size());
    return Image(w, h, std::move(data));
}

Array from_image(const Image& img) {
    Array out({static_cast<py::ssize_t>(img.height()), static_cast<py::ssize_t>(img.width()), py::ssize_t{3}});
    std::memcpy(out.mutable_data(), img.data().data(), img.size() * sizeof(double));
    return out;
}

template <class Raster>
Raster to_raster(const Array& a) {
    if (a.ndim() != 2) {
        throw InvalidArgument("expected an array of shape (H, W)");
    }
    std::vector<double> data(a.data(), a.data() + a.size());
    return Raster(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), std::move(data));
}

template <class Raster>
Array from_raster(const Raster& r) {
    Array out({static_cast<py::ssize_t>(r.height()), static_cast<py::ssize_t>(r.width())});
    std::memcpy(out.mutable_data(), r.data().data(), r.size() * sizeof(double));
    return out;
}

py::object json_to_py(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json py_to_json(const py::object& o) {
    return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

LowLightParams lowlight_params(double alpha, double beta, double gamma) {
    return {alpha, beta, gamma};
}

} // namespace

PYBIND11_MODULE(_lhsim, m) {
    m.doc() = "Low-light haze simulation: rendering, haze, noise, metrics, and dataset tooling";

    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<MappingError>(m, "MappingError", PyExc_RuntimeError);

    // image I/O
    m.def("load_image", [](const std::filesystem::path& p) { return from_image(load_image(p)); }, py::arg("path"),
          "Read a PNG as a (H, W, 3) float64 array in [0, 1].");
    m.def(
        "save_image",
        [](const Array& img, const std::filesystem::path& p, int bits) {
            if (bits != 8 && bits != 16) throw InvalidArgument("bits must be 8 or 16");
            save_image(to_image(img), p, bits == 8 ? BitDepth::k8 : BitDepth::k16);
        },
        py::arg("image"), py::arg("path"), py::arg("bits") = 16, "Write an RGB PNG (values are clamped to [0, 1]).");
    m.def("load_depth", [](const std::filesystem::path& p, double scale) { return from_raster(load_depth(p, scale)); },
          py::arg("path"), py::arg("scale") = 10.0);

    // forward models
    m.def(
        "render_lowlight",
        [](const Array& img, double alpha, double beta, double gamma, bool strict) {
            return from_image(render_lowlight(to_image(img), lowlight_params(alpha, beta, gamma), strict));
        },
        py::arg("image"), py::arg("alpha"), py::arg("beta"), py::arg("gamma"), py::arg("strict") = false);
    m.def(
        "invert_lowlight",
        [](const Array& img, double alpha, double beta, double gamma) {
            return from_image(invert_lowlight(to_image(img), lowlight_params(alpha, beta, gamma)));
        },
        py::arg("image"), py::arg("alpha"), py::arg("beta"), py::arg("gamma"));
    m.def(
        "transmission_from_depth",
        [](const Array& depth, double beta_scatter) {
            return from_raster(transmission_from_depth(to_raster<DepthMap>(depth), beta_scatter));
        },
        py::arg("depth"), py::arg("beta_scatter"));
    m.def(
        "estimate_atmospheric_light",
        [](const Array& img, double fraction, bool scalar) {
            return estimate_atmospheric_light(to_image(img), fraction, scalar);
        },
        py::arg("image"), py::arg("fraction") = kDefaultEstimateFraction, py::arg("scalar") = false);
    m.def(
        "apply_haze",
        [](const Array& img, const Array& t, const Rgb& light) {
            return from_image(apply_haze(to_image(img), to_raster<TransmissionMap>(t), light));
        },
        py::arg("image"), py::arg("transmission"), py::arg("light"));
    m.def(
        "invert_haze",
        [](const Array& img, const Array& t, const Rgb& light, double t_floor) {
            return from_image(invert_haze(to_image(img), to_raster<TransmissionMap>(t), light, t_floor));
        },
        py::arg("image"), py::arg("transmission"), py::arg("light"), py::arg("t_floor") = kDefaultTransmissionFloor);
    m.def(
        "add_noise",
        [](const Array& img, double sigma_s, double sigma_c, std::uint64_t seed) {
            return from_image(add_noise(to_image(img), {sigma_s, sigma_c}, Rng(seed)));
        },
        py::arg("image"), py::arg("sigma_s"), py::arg("sigma_c"), py::arg("seed"));
    m.def(
        "sample_params",
        [](std::uint64_t seed, const py::dict& overrides, bool strict) {
            ParamOverrides o;
            const auto get = [&](const char* key) -> std::optional<double> {
                if (!overrides.contains(key)) return std::nullopt;
                return overrides[key].cast<double>();
            };
            o.alpha = get("alpha");
            o.beta = get("beta");
            o.gamma = get("gamma");
            o.beta_scatter = get("beta_scatter");
            o.sigma_s = get("sigma_s");
            o.sigma_c = get("sigma_c");
            Rng rng = Rng(seed).substream("params");
            SimulationParams p = sample_params(rng, o, strict);
            p.seed = seed;
            return json_to_py(params_to_json(p));
        },
        py::arg("seed"), py::arg("overrides") = py::dict(), py::arg("strict") = true,
        "Draw one parameter set (a dict) from the sampling ranges.");
    m.def(
        "simulate",
        [](const Array& img, const Array& depth, const py::dict& params, double estimate_fraction, bool scalar_light,
           bool strict) {
            const SimulationParams p = params_from_json(py_to_json(params));
            const SimulationResult r = simulate_lowlight_haze(to_image(img), to_raster<DepthMap>(depth), p,
                                                              {estimate_fraction, scalar_light, strict});
            py::dict out;
            out["I_L"] = from_image(r.low_light);
            out["I_H"] = from_image(r.haze_only);
            out["I_HL"] = from_image(r.low_light_hazy);
            out["I_L_clean"] = from_image(r.low_light_clean);
            out["I_HL_clean"] = from_image(r.low_light_hazy_clean);
            out["t"] = from_raster(r.transmission);
            out["light_low"] = r.light_low;
            out["light_normal"] = r.light_normal;
            return out;
        },
        py::arg("image"), py::arg("depth"), py::arg("params"), py::arg("estimate_fraction") = kDefaultEstimateFraction,
        py::arg("scalar_light") = false, py::arg("strict") = false,
        "Produce the low-light, haze-only and low-light-hazy versions of one scene.");

    // metrics and losses
    m.def("l1", [](const Array& a, const Array& b) { return l1(to_image(a), to_image(b)); });
    m.def("l2", [](const Array& a, const Array& b) { return l2(to_image(a), to_image(b)); });
    m.def("gradient_loss", [](const Array& a, const Array& b) { return gradient_loss(to_image(a), to_image(b)); });
    m.def(
        "exposure_loss",
        [](const Array& a, double delta, int patch) { return exposure_loss(to_image(a), {delta, patch}); },
        py::arg("image"), py::arg("delta") = 0.6, py::arg("patch") = 16);
    m.def("path_invariance_loss",
          [](const Array& a, const Array& b) { return path_invariance_loss(to_image(a), to_image(b)); });
    m.def(
        "total_loss",
        [](double e11, double d12, double d21, double e22, double pi) { return total_loss({e11, d12, d21, e22, pi}); },
        py::arg("enhance_11"), py::arg("dehaze_12"), py::arg("dehaze_21"), py::arg("enhance_22"),
        py::arg("path_invariance"), "Weighted sum with the default weights.");
    m.def("psnr", [](const Array& a, const Array& b) { return psnr(to_image(a), to_image(b)); },
          "Peak signal-to-noise ratio in dB (inf for identical images).");
    m.def("ssim", [](const Array& a, const Array& b) { return ssim(to_image(a), to_image(b)); },
          "Gaussian-window SSIM averaged over channels.");
    m.def(
        "compute_metrics",
        [](const Array& pred, const Array& ref) { return json_to_py(metrics_to_json(compute_metrics(to_image(pred), to_image(ref)))); },
        py::arg("pred"), py::arg("ref"));

    // two-path oracle
    m.def(
        "oracle_two_path",
        [](const Array& hazy_low, const Array& haze_only, const Array& t, const Rgb& light_low, const Rgb& light_normal,
           double alpha, double beta, double gamma, const std::string& fusion) {
            const OracleMappings o = make_oracle_mappings({to_image(hazy_low), to_image(haze_only),
                                                           to_raster<TransmissionMap>(t), light_low, light_normal,
                                                           lowlight_params(alpha, beta, gamma)});
            const TwoPathResult r = run_two_path(to_image(hazy_low), o.dehaze, o.enhance, FusionRule::parse(fusion));
            py::dict out;
            out["i_ed"] = from_image(r.i_ed);
            out["i_de"] = from_image(r.i_de);
            out["i_final"] = from_image(r.i_final);
            out["l_pi"] = r.l_pi;
            return out;
        },
        py::arg("low_light_hazy"), py::arg("haze_only"), py::arg("transmission"), py::arg("light_low"),
        py::arg("light_normal"), py::arg("alpha"), py::arg("beta"), py::arg("gamma"), py::arg("fusion") = "mean");

    // dataset tooling
    m.def(
        "generate_dataset",
        [](const std::filesystem::path& image_dir, const std::filesystem::path& out_dir, std::uint64_t seed,
           std::optional<std::filesystem::path> depth_dir, double split_ratio, bool noiseless, bool float_sidecars,
           unsigned jobs) {
            GenerationConfig cfg;
            cfg.split_ratio = split_ratio;
            cfg.float_sidecars = float_sidecars;
            cfg.jobs = jobs;
            if (noiseless) {
                cfg.overrides.sigma_s = 0.0;
                cfg.overrides.sigma_c = 0.0;
                cfg.strict = false;
            }
            Manifest manifest;
            {
                py::gil_scoped_release release;
                manifest = generate_dataset(collect_inputs(image_dir, depth_dir), cfg, seed, out_dir);
            }
            return json_to_py(manifest_to_json(manifest));
        },
        py::arg("image_dir"), py::arg("out_dir"), py::arg("seed") = 0, py::arg("depth_dir") = py::none(),
        py::arg("split_ratio") = kDefaultSplitRatio, py::arg("noiseless") = false, py::arg("float_sidecars") = false,
        py::arg("jobs") = 1, "Simulate a directory of PNGs into a four-group dataset; returns the manifest.");
    m.def(
        "verify_manifest",
        [](const std::filesystem::path& manifest_path, bool check_hashes, bool resimulate) {
            const Manifest manifest = read_manifest(manifest_path);
            const auto root = manifest_path.has_parent_path() ? manifest_path.parent_path() : std::filesystem::path(".");
            return json_to_py(verify_report_to_json(verify_manifest(manifest, root, {check_hashes, resimulate})));
        },
        py::arg("manifest"), py::arg("check_hashes") = false, py::arg("resimulate") = false);
    m.def("train_count", &train_count, py::arg("n"), py::arg("ratio"));

#ifdef LHSIM_WITH_CLI
    m.def(
        "run_cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "lhsim");
            std::ostringstream out, err;
            const int code = cli::run(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run a command-line invocation in-process; returns (exit_code, stdout, stderr).");
#endif
}
