#include "lhsim/io.hpp"

#include <png.h>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>

namespace lhsim {

namespace fs = std::filesystem;

namespace {

struct ReadCursor {
    std::span<const std::uint8_t> bytes;
    std::size_t offset = 0;
};

void png_read_from_span(png_structp png, png_bytep out, png_size_t length) {
    auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
    if (cursor->offset + length > cursor->bytes.size()) {
        png_error(png, "unexpected end of PNG data");
    }
    std::memcpy(out, cursor->bytes.data() + cursor->offset, length);
    cursor->offset += length;
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

[[noreturn]] void png_error_to_exception(png_structp, png_const_charp message) {
    throw IoError(std::string("png: ") + message);
}

void png_warning_silent(png_structp, png_const_charp) {}

// libpng reports errors through a callback; throwing from it unwinds past the
// C frames, which is fine since libpng holds no C++ resources.
struct PngReadHandle {
    png_structp png = nullptr;
    png_infop info = nullptr;
    PngReadHandle() {
        png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_to_exception, png_warning_silent);
        if (png == nullptr) throw IoError("png: cannot allocate read struct");
        info = png_create_info_struct(png);
        if (info == nullptr) {
            png_destroy_read_struct(&png, nullptr, nullptr);
            throw IoError("png: cannot allocate info struct");
        }
    }
    ~PngReadHandle() { png_destroy_read_struct(&png, &info, nullptr); }
    PngReadHandle(const PngReadHandle&) = delete;
    PngReadHandle& operator=(const PngReadHandle&) = delete;
};

struct PngWriteHandle {
    png_structp png = nullptr;
    png_infop info = nullptr;
    PngWriteHandle() {
        png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_to_exception, png_warning_silent);
        if (png == nullptr) throw IoError("png: cannot allocate write struct");
        info = png_create_info_struct(png);
        if (info == nullptr) {
            png_destroy_write_struct(&png, nullptr);
            throw IoError("png: cannot allocate info struct");
        }
    }
    ~PngWriteHandle() { png_destroy_write_struct(&png, &info); }
    PngWriteHandle(const PngWriteHandle&) = delete;
    PngWriteHandle& operator=(const PngWriteHandle&) = delete;
};

constexpr char kFloatMagic[4] = {'L', 'H', 'S', 'F'};
constexpr std::uint32_t kFloatVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[offset + i]) << (8 * i);
    return v;
}

} // namespace

PngRaster decode_png(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
        throw IoError("png: not a PNG file");
    }
    PngReadHandle h;
    ReadCursor cursor{bytes, 0};
    png_set_read_fn(h.png, &cursor, png_read_from_span);
    png_read_info(h.png, h.info);

    png_uint_32 width = 0, height = 0;
    int bit_depth = 0, color_type = 0;
    png_get_IHDR(h.png, h.info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);
    if (width == 0 || height == 0) {
        throw IoError("png: zero-dimension image");
    }

    if (color_type == PNG_COLOR_TYPE_PALETTE) {
        png_set_palette_to_rgb(h.png);
        bit_depth = 8;
    }
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
        png_set_expand_gray_1_2_4_to_8(h.png);
        bit_depth = 8;
    }
    if (png_get_valid(h.png, h.info, PNG_INFO_tRNS)) {
        png_set_tRNS_to_alpha(h.png);
    }
    png_set_strip_alpha(h.png);
    png_read_update_info(h.png, h.info);

    const int channels = png_get_channels(h.png, h.info);
    if (channels != 1 && channels != 3) {
        throw IoError("png: unsupported channel layout");
    }
    if (bit_depth != 8 && bit_depth != 16) {
        throw IoError("png: unsupported bit depth " + std::to_string(bit_depth));
    }

    const std::size_t rowbytes = png_get_rowbytes(h.png, h.info);
    std::vector<std::uint8_t> buffer(rowbytes * height);
    std::vector<png_bytep> rows(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = buffer.data() + y * rowbytes;
    png_read_image(h.png, rows.data());
    png_read_end(h.png, nullptr);

    PngRaster raster;
    raster.width = static_cast<int>(width);
    raster.height = static_cast<int>(height);
    raster.channels = channels;
    raster.bit_depth = bit_depth;
    const std::size_t count = static_cast<std::size_t>(width) * height * channels;
    raster.samples.resize(count);
    if (bit_depth == 8) {
        std::copy(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(count), raster.samples.begin());
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            raster.samples[i] = static_cast<std::uint16_t>((buffer[2 * i] << 8) | buffer[2 * i + 1]);
        }
    }
    return raster;
}

PngRaster read_png(const fs::path& path) {
    const auto bytes = read_file_bytes(path);
    try {
        return decode_png(bytes);
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_png(const Image& img, BitDepth depth) {
    if (img.empty()) {
        throw InvalidArgument("encode_png: empty image");
    }
    const int bits = static_cast<int>(depth);
    const double full_scale = bits == 16 ? 65535.0 : 255.0;
    const int bytes_per_sample = bits / 8;
    const std::size_t rowbytes = static_cast<std::size_t>(img.width()) * Image::kChannels * bytes_per_sample;

    std::vector<std::uint8_t> pixels(rowbytes * img.height());
    const auto src = img.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double v = src[i] >= 0.0 ? std::min(src[i], 1.0) : 0.0;
        const auto q = static_cast<std::uint32_t>(std::lround(v * full_scale));
        if (bits == 16) {
            pixels[2 * i] = static_cast<std::uint8_t>(q >> 8); // PNG is big-endian
            pixels[2 * i + 1] = static_cast<std::uint8_t>(q & 0xFF);
        } else {
            pixels[i] = static_cast<std::uint8_t>(q);
        }
    }

    std::vector<std::uint8_t> out;
    PngWriteHandle h;
    png_set_write_fn(h.png, &out, png_write_to_vector, png_flush_noop);
    png_set_IHDR(h.png, h.info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), bits,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(h.png, 6);
    png_write_info(h.png, h.info);
    for (int y = 0; y < img.height(); ++y) {
        png_write_row(h.png, pixels.data() + static_cast<std::size_t>(y) * rowbytes);
    }
    png_write_end(h.png, nullptr);
    return out;
}

Image load_image(const fs::path& path) {
    const PngRaster raster = read_png(path);
    const double full_scale = raster.bit_depth == 16 ? 65535.0 : 255.0;
    Image img(raster.width, raster.height);
    auto dst = img.data();
    const std::size_t pixels = img.pixel_count();
    for (std::size_t p = 0; p < pixels; ++p) {
        for (int c = 0; c < Image::kChannels; ++c) {
            const std::size_t src = raster.channels == 1 ? p : p * 3 + c;
            dst[p * 3 + c] = raster.samples[src] / full_scale;
        }
    }
    return img;
}

void save_image(const Image& img, const fs::path& path, BitDepth depth) {
    write_file_bytes(path, encode_png(img, depth));
}

DepthMap load_depth(const fs::path& path, double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw InvalidArgument("load_depth: scale must be finite and > 0");
    }
    const PngRaster raster = read_png(path);
    const double full_scale = raster.bit_depth == 16 ? 65535.0 : 255.0;
    std::vector<double> data(static_cast<std::size_t>(raster.width) * raster.height);
    for (std::size_t p = 0; p < data.size(); ++p) {
        data[p] = raster.samples[p * raster.channels] / full_scale * scale;
    }
    return DepthMap(raster.width, raster.height, std::move(data));
}

void write_float_raster(const FloatRaster& raster, const fs::path& path) {
    if (raster.data.size() != static_cast<std::size_t>(raster.width) * raster.height * raster.channels) {
        throw InvalidArgument("write_float_raster: inconsistent raster");
    }
    std::vector<std::uint8_t> out(kFloatMagic, kFloatMagic + 4);
    put_u32(out, kFloatVersion);
    put_u32(out, static_cast<std::uint32_t>(raster.width));
    put_u32(out, static_cast<std::uint32_t>(raster.height));
    put_u32(out, static_cast<std::uint32_t>(raster.channels));
    out.reserve(out.size() + raster.data.size() * 8);
    for (double v : raster.data) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
    write_file_bytes(path, out);
}

FloatRaster read_float_raster(const fs::path& path) {
    const auto bytes = read_file_bytes(path);
    constexpr std::size_t header = 20;
    if (bytes.size() < header || !std::equal(kFloatMagic, kFloatMagic + 4, bytes.begin())) {
        throw IoError(path.string() + ": not a float raster");
    }
    if (get_u32(bytes, 4) != kFloatVersion) {
        throw IoError(path.string() + ": unsupported float raster version");
    }
    FloatRaster r;
    r.width = static_cast<int>(get_u32(bytes, 8));
    r.height = static_cast<int>(get_u32(bytes, 12));
    r.channels = static_cast<int>(get_u32(bytes, 16));
    const std::size_t count = static_cast<std::size_t>(r.width) * r.height * r.channels;
    if (r.width < 1 || r.height < 1 || (r.channels != 1 && r.channels != 3) || bytes.size() != header + count * 8) {
        throw IoError(path.string() + ": corrupt float raster");
    }
    r.data.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[header + i * 8 + b]) << (8 * b);
        std::memcpy(&r.data[i], &bits, 8);
    }
    return r;
}

FloatRaster to_float_raster(const Image& img) {
    return {img.width(), img.height(), Image::kChannels, {img.data().begin(), img.data().end()}};
}

FloatRaster to_float_raster(const TransmissionMap& t) {
    return {t.width(), t.height(), 1, {t.data().begin(), t.data().end()}};
}

Image image_from_float_raster(const FloatRaster& raster) {
    if (raster.channels != 3) {
        throw IoError("float raster: expected 3 channels for an image");
    }
    return Image(raster.width, raster.height, raster.data);
}

TransmissionMap transmission_from_float_raster(const FloatRaster& raster) {
    if (raster.channels != 1) {
        throw IoError("float raster: expected 1 channel for a transmission map");
    }
    return TransmissionMap(raster.width, raster.height, raster.data);
}

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError(path.string() + ": cannot open for reading");
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) {
        throw IoError(path.string() + ": read failed");
    }
    return bytes;
}

void write_file_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError(path.string() + ": cannot open for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError(path.string() + ": write failed");
    }
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw IoError("sha256: digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string hex;
    hex.reserve(length * 2);
    for (unsigned int i = 0; i < length; ++i) {
        hex.push_back(kHex[digest[i] >> 4]);
        hex.push_back(kHex[digest[i] & 0xF]);
    }
    return hex;
}

std::string sha256_file(const fs::path& path) {
    return sha256_hex(read_file_bytes(path));
}

std::string content_hash(const Image& img) {
    std::vector<std::uint8_t> bytes(8 + img.size() * sizeof(double));
    const auto w = static_cast<std::uint32_t>(img.width());
    const auto h = static_cast<std::uint32_t>(img.height());
    std::memcpy(bytes.data(), &w, 4);
    std::memcpy(bytes.data() + 4, &h, 4);
    std::memcpy(bytes.data() + 8, img.data().data(), img.size() * sizeof(double));
    return sha256_hex(bytes);
}

} // namespace lhsim
