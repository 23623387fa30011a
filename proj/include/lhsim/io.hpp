#pragma once

#include "lhsim/image.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace lhsim {

enum class BitDepth { k8 = 8, k16 = 16 };

/// Decoded PNG samples before normalization. Always 1 or 3 channels.
struct PngRaster {
    int width = 0;
    int height = 0;
    int channels = 0;
    int bit_depth = 0;
    std::vector<std::uint16_t> samples;
};

PngRaster decode_png(std::span<const std::uint8_t> bytes);
PngRaster read_png(const std::filesystem::path& path);

/// PNG bytes for `img` quantized as round(clamp(v) * (2^depth - 1)). Encoding is deterministic.
std::vector<std::uint8_t> encode_png(const Image& img, BitDepth depth);

/**
 * Loads an 8- or 16-bit PNG (gray, gray+alpha, RGB or RGBA; alpha dropped).
 * Samples become v / 255 or v / 65535, grayscale is replicated to three channels.
 * Palette images are expanded to RGB first.
 */
Image load_image(const std::filesystem::path& path);

void save_image(const Image& img, const std::filesystem::path& path, BitDepth depth = BitDepth::k16);

/// depth = sample_fraction * scale. Multi-channel files use the first channel.
DepthMap load_depth(const std::filesystem::path& path, double scale);

/// Exact float64 raster sidecar ("LHSF" little-endian). Holds 1 or 3 channels.
struct FloatRaster {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<double> data;
};

void write_float_raster(const FloatRaster& raster, const std::filesystem::path& path);
FloatRaster read_float_raster(const std::filesystem::path& path);

FloatRaster to_float_raster(const Image& img);
FloatRaster to_float_raster(const TransmissionMap& t);
Image image_from_float_raster(const FloatRaster& raster);
TransmissionMap transmission_from_float_raster(const FloatRaster& raster);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_file(const std::filesystem::path& path);
/// SHA-256 over the dimensions and raw sample bytes; identifies an in-memory image exactly.
std::string content_hash(const Image& img);

} // namespace lhsim
