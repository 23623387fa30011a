#include "lhsim/metrics.hpp"

#include "lhsim/detail/summation.hpp"

#include <cmath>
#include <limits>

namespace lhsim {

namespace {

template <class F>
double mean_over_samples(const Image& a, const Image& b, F&& term) {
    const auto x = a.data();
    const auto y = b.data();
    detail::CompensatedSum sum;
    for (std::size_t i = 0; i < x.size(); ++i) sum.add(term(x[i] - y[i]));
    return sum.value() / static_cast<double>(x.size());
}

// Horizontal + vertical valid-window filtering of one plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int w, int h,
                                 const std::array<double, kSsimWindow>& taps) {
    const int ow = w - kSsimWindow + 1;
    const int oh = h - kSsimWindow + 1;
    std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
    for (int y = 0; y < h; ++y) {
        const double* row = plane.data() + static_cast<std::size_t>(y) * w;
        double* out = tmp.data() + static_cast<std::size_t>(y) * ow;
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int k = 0; k < kSsimWindow; ++k) s += taps[k] * row[x + k];
            out[x] = s;
        }
    }
    std::vector<double> result(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y) {
        double* out = result.data() + static_cast<std::size_t>(y) * ow;
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int k = 0; k < kSsimWindow; ++k) s += taps[k] * tmp[static_cast<std::size_t>(y + k) * ow + x];
            out[x] = s;
        }
    }
    return result;
}

} // namespace

void validate(const LossWeights& w) {
    for (double v : {w.lambda_11, w.lambda_12, w.lambda_21, w.lambda_22, w.lambda_3}) {
        if (!std::isfinite(v) || v < 0.0) {
            throw InvalidArgument("loss weights must be finite and >= 0");
        }
    }
}

void validate(const ExposureConfig& cfg) {
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) {
        throw InvalidArgument("exposure delta must lie in (0, 1)");
    }
    if (cfg.patch < 1) {
        throw InvalidArgument("exposure patch size must be >= 1");
    }
}

double l1(const Image& pred, const Image& ref) {
    require_same_shape(pred, ref, "l1");
    return mean_over_samples(pred, ref, [](double d) { return std::abs(d); });
}

double l2(const Image& pred, const Image& ref) {
    require_same_shape(pred, ref, "l2");
    return mean_over_samples(pred, ref, [](double d) { return d * d; });
}

double gradient_loss(const Image& pred, const Image& ref) {
    require_same_shape(pred, ref, "gradient_loss");
    const int w = pred.width();
    const int h = pred.height();
    if (w < 2 && h < 2) {
        throw InvalidArgument("gradient_loss: image too small (needs at least 2 pixels along one axis)");
    }
    double total = 0.0;
    if (w >= 2) {
        detail::CompensatedSum sum;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x + 1 < w; ++x) {
                for (int c = 0; c < 3; ++c) {
                    const double gp = pred.at(x + 1, y, c) - pred.at(x, y, c);
                    const double gr = ref.at(x + 1, y, c) - ref.at(x, y, c);
                    sum.add(std::abs(gp - gr));
                }
            }
        }
        total += sum.value() / (static_cast<double>(w - 1) * h * 3);
    }
    if (h >= 2) {
        detail::CompensatedSum sum;
        for (int y = 0; y + 1 < h; ++y) {
            for (int x = 0; x < w; ++x) {
                for (int c = 0; c < 3; ++c) {
                    const double gp = pred.at(x, y + 1, c) - pred.at(x, y, c);
                    const double gr = ref.at(x, y + 1, c) - ref.at(x, y, c);
                    sum.add(std::abs(gp - gr));
                }
            }
        }
        total += sum.value() / (static_cast<double>(w) * (h - 1) * 3);
    }
    return total;
}

double exposure_loss(const Image& pred, const ExposureConfig& cfg) {
    validate(cfg);
    const int px = pred.width() / cfg.patch;
    const int py = pred.height() / cfg.patch;
    if (px < 1 || py < 1) {
        throw InvalidArgument("exposure_loss: image smaller than one patch");
    }
    const double per_patch = static_cast<double>(cfg.patch) * cfg.patch * 3;
    detail::CompensatedSum deviations;
    for (int by = 0; by < py; ++by) {
        for (int bx = 0; bx < px; ++bx) {
            detail::CompensatedSum sum;
            for (int y = by * cfg.patch; y < (by + 1) * cfg.patch; ++y) {
                for (int x = bx * cfg.patch; x < (bx + 1) * cfg.patch; ++x) {
                    for (int c = 0; c < 3; ++c) sum.add(pred.at(x, y, c));
                }
            }
            deviations.add(std::abs(sum.value() / per_patch - cfg.delta));
        }
    }
    return deviations.value() / (static_cast<double>(px) * py);
}

double dehaze_loss(const Image& pred, const Image& ref) {
    return l1(pred, ref) + l2(pred, ref) + gradient_loss(pred, ref);
}

double enhance_loss(const Image& pred, const Image& ref, const ExposureConfig& cfg) {
    return l1(pred, ref) + l2(pred, ref) + exposure_loss(pred, cfg);
}

double path_invariance_loss(const Image& enhance_then_dehaze, const Image& dehaze_then_enhance) {
    require_same_shape(enhance_then_dehaze, dehaze_then_enhance, "path_invariance_loss");
    return mean_over_samples(enhance_then_dehaze, dehaze_then_enhance, [](double d) { return std::abs(d); });
}

double total_loss(const LossTerms& t, const LossWeights& w) {
    validate(w);
    return w.lambda_11 * t.enhance_11 + w.lambda_12 * t.dehaze_12 + w.lambda_21 * t.dehaze_21 +
           w.lambda_22 * t.enhance_22 + w.lambda_3 * t.path_invariance;
}

double psnr(const Image& pred, const Image& ref) {
    const double mse = l2(pred, ref);
    if (mse == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return -10.0 * std::log10(mse);
}

std::array<double, kSsimWindow> ssim_gaussian_taps() {
    std::array<double, kSsimWindow> taps{};
    const int half = kSsimWindow / 2;
    double sum = 0.0;
    for (int k = 0; k < kSsimWindow; ++k) {
        const double d = k - half;
        taps[k] = std::exp(-(d * d) / (2.0 * kSsimSigma * kSsimSigma));
        sum += taps[k];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

double ssim(const Image& pred, const Image& ref) {
    require_same_shape(pred, ref, "ssim");
    const int w = pred.width();
    const int h = pred.height();
    if (w < kSsimWindow || h < kSsimWindow) {
        throw InvalidArgument("ssim: image smaller than the 11x11 window");
    }
    const auto taps = ssim_gaussian_taps();
    const double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
    const double c2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);
    const std::size_t n = pred.pixel_count();

    double channel_total = 0.0;
    for (int c = 0; c < 3; ++c) {
        std::vector<double> a(n), b(n), aa(n), bb(n), ab(n);
        const auto pd = pred.data();
        const auto rd = ref.data();
        for (std::size_t p = 0; p < n; ++p) {
            a[p] = pd[3 * p + c];
            b[p] = rd[3 * p + c];
            aa[p] = a[p] * a[p];
            bb[p] = b[p] * b[p];
            ab[p] = a[p] * b[p];
        }
        const auto mu_a = filter_valid(a, w, h, taps);
        const auto mu_b = filter_valid(b, w, h, taps);
        const auto e_aa = filter_valid(aa, w, h, taps);
        const auto e_bb = filter_valid(bb, w, h, taps);
        const auto e_ab = filter_valid(ab, w, h, taps);

        detail::CompensatedSum sum;
        for (std::size_t i = 0; i < mu_a.size(); ++i) {
            const double ma = mu_a[i];
            const double mb = mu_b[i];
            const double va = e_aa[i] - ma * ma;
            const double vb = e_bb[i] - mb * mb;
            const double cov = e_ab[i] - ma * mb;
            sum.add(((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2)));
        }
        channel_total += sum.value() / static_cast<double>(mu_a.size());
    }
    return channel_total / 3.0;
}

ImageMetrics compute_metrics(const Image& pred, const Image& ref, const ExposureConfig& cfg) {
    ImageMetrics m;
    m.psnr_db = psnr(pred, ref);
    m.ssim = ssim(pred, ref);
    m.l1 = l1(pred, ref);
    m.l2 = l2(pred, ref);
    m.grad_l1 = gradient_loss(pred, ref);
    m.l_exp = exposure_loss(pred, cfg);
    return m;
}

nlohmann::json json_number(double v) {
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    return v;
}

double number_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw InvalidArgument("expected a number or \"inf\", got \"" + s + "\"");
    }
    return j.get<double>();
}

nlohmann::json metrics_to_json(const ImageMetrics& m) {
    return {{"psnr_db", json_number(m.psnr_db)}, {"ssim", m.ssim},     {"l1", m.l1},
            {"l2", m.l2},                        {"grad_l1", m.grad_l1}, {"l_exp", m.l_exp}};
}

} // namespace lhsim
