#include "lhsim/image.hpp"

#include <algorithm>
#include <cmath>

namespace lhsim {

namespace {

std::size_t sample_count(int width, int height) {
    if (width < 1 || height < 1) {
        throw InvalidArgument("image: width and height must be >= 1");
    }
    return static_cast<std::size_t>(width) * height * Image::kChannels;
}

} // namespace

Image::Image(int width, int height, double fill)
    : width_(width), height_(height), data_(sample_count(width, height), fill) {}

Image::Image(int width, int height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != sample_count(width, height)) {
        throw InvalidArgument("image: data length must equal width * height * 3");
    }
}

void clamp_in_place(Image& img) {
    for (double& v : img.data()) {
        // written so that NaN falls through to 0
        v = v >= 0.0 ? std::min(v, 1.0) : 0.0;
    }
}

Image clamp(Image img) {
    clamp_in_place(img);
    return img;
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b)) {
        throw InvalidArgument(std::string(what) + ": image dimensions differ (" +
                              std::to_string(a.width()) + "x" + std::to_string(a.height()) + " vs " +
                              std::to_string(b.width()) + "x" + std::to_string(b.height()) + ")");
    }
}

void DepthTag::validate(std::span<const double> data) {
    for (double d : data) {
        if (!std::isfinite(d) || d < 0.0) {
            throw InvalidArgument("depth map: samples must be finite and >= 0");
        }
    }
}

void TransmissionTag::validate(std::span<const double> data) {
    for (double t : data) {
        if (!(t > 0.0 && t <= 1.0)) {
            throw InvalidArgument("transmission map: samples must lie in (0, 1]");
        }
    }
}

DepthMap synthesize_depth(int width, int height, const ConstantDepth& mode) {
    if (!std::isfinite(mode.value) || mode.value < 0.0) {
        throw InvalidArgument("synthesize_depth: constant depth must be finite and >= 0");
    }
    return DepthMap(width, height, mode.value);
}

DepthMap synthesize_depth(int width, int height, const VerticalGradientDepth& mode) {
    if (!std::isfinite(mode.near) || !std::isfinite(mode.far) || mode.near < 0.0 || mode.far < mode.near) {
        throw InvalidArgument("synthesize_depth: gradient requires 0 <= near <= far");
    }
    if (width < 1 || height < 1) {
        throw InvalidArgument("synthesize_depth: width and height must be >= 1");
    }
    std::vector<double> data(static_cast<std::size_t>(width) * height);
    const double span = mode.far - mode.near;
    for (int y = 0; y < height; ++y) {
        const double frac = height > 1 ? 1.0 - static_cast<double>(y) / (height - 1) : 1.0;
        const double d = mode.near + span * frac;
        std::fill_n(data.begin() + static_cast<std::ptrdiff_t>(y) * width, width, d);
    }
    return DepthMap(width, height, std::move(data));
}

} // namespace lhsim
