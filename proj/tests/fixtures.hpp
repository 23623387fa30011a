#pragma once

#include "lhsim/image.hpp"
#include "lhsim/io.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <string>
#include <unistd.h>

namespace lhsim::test {

/// Scratch directory removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "t") {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("lhsim_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

/// Smooth, textured scene with values in [lo, hi]; `k` varies the pattern.
inline Image smooth_scene(int w, int h, int k = 0, double lo = 0.05, double hi = 0.9) {
    Image img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < 3; ++c) {
                const double s = 0.5 + 0.25 * std::sin(0.07 * x + 0.5 * k + c) + 0.25 * std::cos(0.05 * y - 0.3 * k + 2 * c);
                img.at(x, y, c) = lo + (hi - lo) * s;
            }
        }
    }
    return img;
}

/// Deterministic pseudo-random image (integer hash), values in [0, 1].
inline Image hashed_image(int w, int h, unsigned k = 0) {
    Image img(w, h);
    auto d = img.data();
    for (std::size_t i = 0; i < d.size(); ++i) {
        std::uint32_t v = static_cast<std::uint32_t>(i) * 2654435761u + k * 40503u + 12345u;
        v ^= v >> 15;
        v *= 2246822519u;
        v ^= v >> 13;
        d[i] = static_cast<double>(v % 10007u) / 10006.0;
    }
    return img;
}

/// Writes `count` 8-bit scene PNGs named scene_<i>.png.
inline void write_scenes(const std::filesystem::path& dir, int count, int w = 40, int h = 30) {
    std::filesystem::create_directories(dir);
    for (int i = 0; i < count; ++i) {
        const std::string name = "scene_" + std::string(i < 10 ? "0" : "") + std::to_string(i) + ".png";
        save_image(smooth_scene(w, h, i), dir / name, BitDepth::k8);
    }
}

inline double max_abs_diff(const Image& a, const Image& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

} // namespace lhsim::test
