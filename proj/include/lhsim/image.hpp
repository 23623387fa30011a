#pragma once

#include "lhsim/error.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace lhsim {

/// Per-channel RGB triple, used for atmospheric light.
using Rgb = std::array<double, 3>;

/**
 * @brief Floating-point RGB raster, row-major and interleaved.
 *
 * Sample (x, y, c) lives at data[(y * width + x) * 3 + c]. Values are
 * linear intensities with nominal range [0, 1]; operations that can leave
 * that range call clamp() before returning.
 */
class Image {
public:
    static constexpr int kChannels = 3;

    Image() = default;
    Image(int width, int height, double fill = 0.0);
    Image(int width, int height, std::vector<double> data);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return kChannels; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& at(int x, int y, int c) { return data_[index(x, y, c)]; }
    double at(int x, int y, int c) const { return data_[index(x, y, c)]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    bool same_shape(const Image& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * kChannels + c;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

/// Clamps every sample into [0, 1] in place. NaN maps to 0.
void clamp_in_place(Image& img);
Image clamp(Image img);

/// Throws InvalidArgument unless both images have identical dimensions.
void require_same_shape(const Image& a, const Image& b, const char* what);

/// Single-channel raster. The tag keeps depth and transmission apart at compile time.
template <class Tag>
class ScalarRaster {
public:
    ScalarRaster() = default;
    ScalarRaster(int width, int height, double fill) : ScalarRaster(width, height, std::vector<double>(checked_count(width, height), fill)) {}
    ScalarRaster(int width, int height, std::vector<double> data)
        : width_(width), height_(height), data_(std::move(data)) {
        if (data_.size() != checked_count(width, height)) {
            throw InvalidArgument("scalar raster: data length does not match dimensions");
        }
        Tag::validate(data_);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    double at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
    std::span<const double> data() const { return data_; }

    template <class Other>
    bool same_shape(const Other& other) const {
        return width_ == other.width() && height_ == other.height();
    }

    friend bool operator==(const ScalarRaster&, const ScalarRaster&) = default;

private:
    static std::size_t checked_count(int width, int height) {
        if (width < 1 || height < 1) {
            throw InvalidArgument("scalar raster: width and height must be >= 1");
        }
        return static_cast<std::size_t>(width) * height;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<double> data_;
};

struct DepthTag {
    // finite and >= 0
    static void validate(std::span<const double> data);
};

struct TransmissionTag {
    // every sample in (0, 1]
    static void validate(std::span<const double> data);
};

using DepthMap = ScalarRaster<DepthTag>;
using TransmissionMap = ScalarRaster<TransmissionTag>;

struct ConstantDepth {
    double value = 1.0;
};

/// Row 0 (image top) gets `far`, the last row gets `near`.
struct VerticalGradientDepth {
    double near = 1.0;
    double far = 10.0;
};

DepthMap synthesize_depth(int width, int height, const ConstantDepth& mode);
DepthMap synthesize_depth(int width, int height, const VerticalGradientDepth& mode);

} // namespace lhsim
