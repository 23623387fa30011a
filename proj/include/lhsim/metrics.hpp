#pragma once

#include "lhsim/image.hpp"

#include "json.hpp"

namespace lhsim {

// All norms are means over samples, so values do not grow with resolution.
// Argument order is (prediction, reference) throughout.

/// Weights of the five-term training objective.
struct LossWeights {
    double lambda_11 = 0.2;
    double lambda_12 = 2.0;
    double lambda_21 = 0.2;
    double lambda_22 = 2.0;
    double lambda_3 = 5.0;
};

void validate(const LossWeights& w);

/// Target exposure level and (square, non-overlapping) patch size for exposure_loss.
struct ExposureConfig {
    double delta = 0.6;
    int patch = 16;
};

void validate(const ExposureConfig& cfg);

/// Enhancement/dehazing terms of the two paths plus the path-invariance term.
struct LossTerms {
    double enhance_11 = 0.0;
    double dehaze_12 = 0.0;
    double dehaze_21 = 0.0;
    double enhance_22 = 0.0;
    double path_invariance = 0.0;
};

double l1(const Image& pred, const Image& ref);
double l2(const Image& pred, const Image& ref);

/**
 * Mean absolute difference of forward-difference gradients, horizontal plus
 * vertical. Each term averages over the positions where a forward difference
 * exists (W-1 columns, H-1 rows); with edge replication the missing border
 * differences are zero and carry no information. An axis of length 1
 * contributes nothing; a 1x1 image is rejected.
 */
double gradient_loss(const Image& pred, const Image& ref);

/// (1/M) * sum |y_k - delta| over full patches; y_k averages all channels. Partial patches are dropped.
double exposure_loss(const Image& pred, const ExposureConfig& cfg = {});

/// l1 + l2 + gradient_loss.
double dehaze_loss(const Image& pred, const Image& ref);

/// l1 + l2 + exposure_loss(pred).
double enhance_loss(const Image& pred, const Image& ref, const ExposureConfig& cfg = {});

/// Mean absolute difference of the two path outputs.
double path_invariance_loss(const Image& enhance_then_dehaze, const Image& dehaze_then_enhance);

double total_loss(const LossTerms& terms, const LossWeights& w = {});

/// 10 * log10(1 / MSE) with peak 1.0; +infinity for identical images.
double psnr(const Image& pred, const Image& ref);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

/**
 * Single-scale SSIM: 11x11 Gaussian window (sigma 1.5, normalized),
 * C1 = (0.01)^2, C2 = (0.03)^2 for dynamic range 1. The SSIM map is
 * evaluated only where the window fits entirely (no padding), averaged per
 * channel, and the three channel means are averaged.
 */
double ssim(const Image& pred, const Image& ref);

/// The normalized 1-D Gaussian taps used by ssim.
std::array<double, kSsimWindow> ssim_gaussian_taps();

/// Per-pair metric record.
struct ImageMetrics {
    double psnr_db = 0.0;
    double ssim = 0.0;
    double l1 = 0.0;
    double l2 = 0.0;
    double grad_l1 = 0.0;
    double l_exp = 0.0;
};

ImageMetrics compute_metrics(const Image& pred, const Image& ref, const ExposureConfig& cfg = {});

/// Finite numbers pass through; infinities become the strings "inf" / "-inf".
nlohmann::json json_number(double v);
/// Inverse of json_number.
double number_from_json(const nlohmann::json& j);

nlohmann::json metrics_to_json(const ImageMetrics& m);

} // namespace lhsim
