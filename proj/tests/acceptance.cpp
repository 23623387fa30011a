// Acceptance suite: prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.

#include "fixtures.hpp"
#include "ssim_reference.hpp"

#include "lhsim/dataset.hpp"
#include "lhsim/haze.hpp"
#include "lhsim/lowlight.hpp"
#include "lhsim/metrics.hpp"
#include "lhsim/noise.hpp"
#include "lhsim/parallel.hpp"
#include "lhsim/params.hpp"
#include "lhsim/twopath.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace lhsim;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

SimulationParams noiseless_params(Rng& rng) {
    ParamOverrides o;
    o.sigma_s = 0.0;
    o.sigma_c = 0.0;
    return sample_params(rng, o, false);
}

/// True if no stage saturates for this sample (the unclipped region).
bool unclipped(double v, const SimulationParams& p) {
    return v < 1.0 && p.beta * std::pow(p.alpha * v, p.gamma) < 1.0;
}

Outcome criterion_1() {
    const auto start = Clock::now();
    Rng rng = Rng(2024).substream("acceptance/params");
    int inside = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const SimulationParams p = sample_params(rng, {});
        inside += p.alpha >= 0.9 && p.alpha <= 1.0 && p.beta >= 0.5 && p.beta <= 0.7 && p.gamma >= 1.5 &&
                  p.gamma <= 2.5 && p.beta_scatter >= 0.1 && p.beta_scatter <= 0.2;
    }
    const double t = seconds_since(start);
    std::ostringstream d;
    d << inside << "/" << n << " in range, " << t << " s";
    return {inside == n && t < 1.0, d.str()};
}

Outcome criterion_2() {
    const auto start = Clock::now();
    Rng rng = Rng(7).substream("acceptance/roundtrip");
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        const Image img = test::smooth_scene(256, 256, k, 0.02, 0.98);
        const SimulationParams p = noiseless_params(rng);
        const SimulationResult r = simulate_lowlight_haze(img, synthesize_depth(256, 256, VerticalGradientDepth{}), p);
        const Image back = invert_lowlight(invert_haze(r.low_light_hazy, r.transmission, r.light_low),
                                           LowLightParams::from(p));
        for (std::size_t i = 0; i < img.data().size(); ++i) {
            if (unclipped(img.data()[i], p)) worst = std::max(worst, std::abs(back.data()[i] - img.data()[i]));
        }
    }
    const double t = seconds_since(start);
    std::ostringstream d;
    d << "max abs error " << worst << " over 20 images, " << t << " s";
    return {worst <= 1e-5 && t < 10.0, d.str()};
}

Outcome criterion_3() {
    const Image a = test::smooth_scene(64, 48, 0, 0.1, 0.8);
    Image b = a;
    for (double& v : b.data()) v += 0.1;
    const double p = psnr(b, a);
    const Image x = test::hashed_image(64, 48, 3);
    const double self = ssim(x, x);
    const double asym = std::abs(ssim(a, x) - ssim(x, a));
    double worst_frozen = 0.0, worst_direct = 0.0;
    for (const auto& f : test::ssim_fixtures()) {
        const double v = ssim(f.a, f.b);
        worst_frozen = std::max(worst_frozen, std::abs(v - f.expected));
        worst_direct = std::max(worst_direct, std::abs(v - test::reference_ssim(f.a, f.b)));
    }
    std::ostringstream d;
    d << "psnr " << p << " dB, |ssim(x,x)-1| " << std::abs(self - 1.0) << ", asymmetry " << asym
      << ", fixtures vs scikit-image " << worst_frozen << ", vs direct reference " << worst_direct;
    const bool pass = std::abs(p - 20.0) <= 0.01 && std::abs(self - 1.0) <= 1e-9 && asym <= 1e-12 &&
                      worst_frozen <= 1e-4 && worst_direct <= 1e-4;
    return {pass, d.str()};
}

Outcome criterion_4() {
    const ExposureConfig cfg{0.6, 16};
    double worst = 0.0;
    for (double c : {0.2, 0.6, 0.9}) worst = std::max(worst, std::abs(exposure_loss(Image(64, 48, c), cfg) - std::abs(c - 0.6)));
    Image two(32, 16, 0.2);
    for (int y = 0; y < 16; ++y)
        for (int x = 16; x < 32; ++x)
            for (int c = 0; c < 3; ++c) two.at(x, y, c) = 0.8;
    const double hand = std::abs(exposure_loss(two, cfg) - 0.3);
    std::ostringstream d;
    d << "constant-image error " << worst << ", two-patch error " << hand;
    return {worst <= 1e-12 && hand <= 1e-12, d.str()};
}

Outcome criterion_5() {
    const LossWeights w;
    const double unit = total_loss({1, 1, 1, 1, 1}, w);
    const double weights[5] = {w.lambda_11, w.lambda_12, w.lambda_21, w.lambda_22, w.lambda_3};
    double worst = 0.0;
    for (int term = 0; term < 5; ++term) {
        for (double k : {0.0, 0.5, 3.0, 10.0}) {
            double t[5] = {1, 1, 1, 1, 1};
            t[term] = k;
            const double got = total_loss({t[0], t[1], t[2], t[3], t[4]}, w);
            worst = std::max(worst, std::abs(got - (unit - weights[term] + k * weights[term])));
        }
    }
    std::ostringstream d;
    d << "unit terms " << unit << ", worst scaling deviation " << worst;
    return {std::abs(unit - 9.4) <= 1e-12 && worst <= 1e-12, d.str()};
}

Outcome criterion_6() {
    const auto start = Clock::now();
    const NoiseParams p{0.12, 0.02};
    bool pass = true;
    std::ostringstream d;
    int k = 0;
    for (double y : {0.25, 0.5, 0.75}) {
        const Image clean(256, 256, y);
        const Image noisy = add_noise(clean, p, Rng(100 + k++));
        const double expected = noise_variance(p, y);
        const double measured = estimate_noise_variance(noisy, clean);
        double mean = 0.0;
        for (std::size_t i = 0; i < clean.data().size(); ++i) mean += noisy.data()[i] - clean.data()[i];
        const double n = static_cast<double>(clean.data().size());
        mean /= n;
        const double rel = std::abs(measured - expected) / expected;
        const double mean_bound = 3.0 * std::sqrt(expected) / std::sqrt(n);
        pass = pass && rel <= 0.05 && std::abs(mean) <= mean_bound;
        d << "y=" << y << ": var rel err " << rel << ", |mean| " << std::abs(mean) << " (bound " << mean_bound << "); ";
    }
    const double t = seconds_since(start);
    d << t << " s";
    return {pass && t < 5.0, d.str()};
}

Outcome criterion_7() {
    Rng rng = Rng(31).substream("acceptance/twopath");
    double l_pi_sum = 0.0;
    double worst_psnr = INFINITY;
    for (int k = 0; k < 20; ++k) {
        // values below 1 stay unclipped at every stage (beta < 1 keeps the render below 1)
        const Image img = test::smooth_scene(96, 64, k, 0.03, 0.95);
        const SimulationParams p = noiseless_params(rng);
        const SimulationResult r = simulate_lowlight_haze(img, synthesize_depth(96, 64, VerticalGradientDepth{}), p);
        const OracleMappings o = make_oracle_mappings(
            {r.low_light_hazy, r.haze_only, r.transmission, r.light_low, r.light_normal, LowLightParams::from(p)});
        const TwoPathResult tp = run_two_path(r.low_light_hazy, o.dehaze, o.enhance, FusionRule::mean());
        l_pi_sum += tp.l_pi;
        worst_psnr = std::min(worst_psnr, psnr(tp.i_final, img));
    }
    const double mean_l_pi = l_pi_sum / 20.0;
    std::ostringstream d;
    d << "mean L_pi " << mean_l_pi << ", min fused PSNR " << worst_psnr << " dB";
    return {mean_l_pi <= 1e-5 && worst_psnr >= 80.0, d.str()};
}

Outcome criterion_8() {
    std::ostringstream d;
    bool pass = true;

    Manifest big;
    big.entries.resize(8970);
    for (std::size_t i = 0; i < big.entries.size(); ++i) big.entries[i].id = "e" + std::to_string(i);
    big = split_dataset(std::move(big), 0.9, 1);
    pass = pass && big.count(Split::train) == 8073 && big.count(Split::test) == 897;
    d << "split " << big.count(Split::train) << "/" << big.count(Split::test);

    test::TempDir dir("accept");
    test::write_scenes(dir / "imgs", 6, 48, 32);
    const Manifest a = generate_dataset(collect_inputs(dir / "imgs"), GenerationConfig{}, 77, dir / "a");
    const Manifest b = generate_dataset(collect_inputs(dir / "imgs"), GenerationConfig{}, 77, dir / "b");
    const bool identical = manifest_dump(a) == manifest_dump(b) &&
                           sha256_file(dir / "a" / "manifest.json") == sha256_file(dir / "b" / "manifest.json");
    pass = pass && identical;
    d << ", regeneration " << (identical ? "hash-identical" : "DIFFERS");

    const VerifyReport fresh = verify_manifest(a, dir / "a", {true, true});
    pass = pass && fresh.ok();
    d << ", fresh verify failures " << fresh.failures.size();

    fs::remove(dir / "a" / a.entries[1].file(Group::haze_only));
    const fs::path tampered = dir / "a" / a.entries[4].file(Group::low_light_hazy);
    auto bytes = read_file_bytes(tampered);
    bytes[bytes.size() / 2] ^= 0xFF;
    write_file_bytes(tampered, bytes);
    const VerifyReport injected = verify_manifest(a, dir / "a", {true, false});
    const bool exact = injected.failures.size() == 2 && injected.failures[0].kind == "missing_file" &&
                       injected.failures[0].id == a.entries[1].id && injected.failures[1].kind == "hash_mismatch" &&
                       injected.failures[1].id == a.entries[4].id;
    pass = pass && exact;
    d << ", injected 2 -> reported " << injected.failures.size() << (exact ? " (matching)" : " (MISMATCH)");
    return {pass, d.str()};
}

Outcome criterion_9() {
    Rng rng = Rng(9).substream("acceptance/haze");
    std::size_t violations = 0;
    for (int i = 0; i < 100000; ++i) {
        const double d = rng.uniform(0.0, 50.0);
        const double beta = rng.uniform(0.1, 0.2);
        const double dd = d + rng.uniform(1e-3, 5.0);
        const double db = beta + rng.uniform(1e-3, 0.05);
        const TransmissionMap t = transmission_from_depth(DepthMap(3, 1, std::vector<double>{d, dd, d}), beta);
        const TransmissionMap tb = transmission_from_depth(DepthMap(1, 1, std::vector<double>{d}), db);
        const bool ok = t.at(0, 0) > 0.0 && t.at(0, 0) <= 1.0 && t.at(1, 0) < t.at(0, 0) &&
                        (d == 0.0 || tb.at(0, 0) < t.at(0, 0)) &&
                        std::abs(t.at(0, 0) - std::exp(-beta * d)) <= 1e-15;
        violations += !ok;
    }

    std::size_t range_violations = 0;
    Rng prng = Rng(10).substream("acceptance/haze-images");
    for (unsigned k = 0; k < 10; ++k) {
        const Image img = test::hashed_image(64, 48, k);
        SimulationParams p = sample_params(prng, {});
        p.seed = k;
        const SimulationResult r = simulate_lowlight_haze(img, synthesize_depth(64, 48, VerticalGradientDepth{}), p);
        for (int y = 0; y < 48; ++y)
            for (int x = 0; x < 64; ++x)
                for (int c = 0; c < 3; ++c) {
                    const double lo = std::min(r.low_light_clean.at(x, y, c), r.light_low[c]);
                    const double hi = std::max(r.low_light_clean.at(x, y, c), r.light_low[c]);
                    const double v = r.low_light_hazy_clean.at(x, y, c);
                    range_violations += v < lo || v > hi;
                }
    }
    std::ostringstream d;
    d << violations << " transmission violations in 1e5 pairs, " << range_violations
      << " hazy-range violations on 10 images";
    return {violations == 0 && range_violations == 0, d.str()};
}

Outcome criterion_10() {
    SimulationParams p;
    p.alpha = 0.95;
    p.beta = 0.6;
    p.gamma = 2.0;
    p.beta_scatter = 0.15;
    p.sigma_s = 0.08;
    p.sigma_c = 0.02;
    p.seed = 1;
    const Image img = test::smooth_scene(620, 460, 0);
    const DepthMap depth = synthesize_depth(620, 460, VerticalGradientDepth{});
    std::vector<double> times;
    for (int i = 0; i < 5; ++i) {
        const auto start = Clock::now();
        const SimulationResult r = simulate_lowlight_haze(img, depth, p);
        times.push_back(seconds_since(start));
        if (r.low_light_hazy.empty()) return {false, "empty result"};
    }
    std::sort(times.begin(), times.end());
    const double single_ms = times[times.size() / 2] * 1000.0;

    std::vector<Image> batch;
    for (int k = 0; k < 100; ++k) batch.push_back(test::smooth_scene(200, 150, k));
    const DepthMap small_depth = synthesize_depth(200, 150, VerticalGradientDepth{});
    const auto run_batch = [&](unsigned jobs) {
        const auto start = Clock::now();
        parallel_for(batch.size(), jobs, [&](std::size_t i) {
            SimulationParams q = p;
            q.seed = i;
            (void)simulate_lowlight_haze(batch[i], small_depth, q);
        });
        return seconds_since(start);
    };
    const double t1 = run_batch(1);
    const double t4 = run_batch(4);
    const double speedup = t1 / t4;

    std::ostringstream d;
    d << "620x460 quadruple " << single_ms << " ms (median of 5); 100-image batch " << t1 << " s with 1 worker, " << t4
      << " s with 4 workers, speedup " << speedup << "x on " << std::thread::hardware_concurrency()
      << " hardware thread(s)";
    return {single_ms < 250.0 && speedup >= 3.0, d.str()};
}

} // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"simulation parameter ranges", criterion_1},
        {"noiseless round trip", criterion_2},
        {"metric oracles", criterion_3},
        {"exposure loss", criterion_4},
        {"total loss linearity", criterion_5},
        {"noise statistics", criterion_6},
        {"order invariance", criterion_7},
        {"dataset bookkeeping", criterion_8},
        {"haze model properties", criterion_9},
        {"throughput", criterion_10},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("criterion %2zu %s: %s - %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                    o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
