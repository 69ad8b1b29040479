#pragma once

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "ngt/image.hpp"
#include "ngt/rng.hpp"

namespace ngt::test {

// Unique scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("ngt_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline Image random_image(int h, int w, std::uint64_t seed) {
    Image img(h, w);
    Rng rng(seed);
    for (std::size_t i = 0; i < img.size(); ++i)
        img.data()[i] = static_cast<float>(rng.uniform_double());
    return img;
}

// Piecewise-smooth synthetic "phantom": soft ellipses and a gradient ramp
// over a dark background; loosely the structure of a medical slice.
inline Image phantom_image(int h, int w, std::uint64_t seed) {
    Rng rng(seed);
    Image img(h, w);
    const double bg = 0.05 + 0.1 * rng.uniform_double();
    const double gx = (rng.uniform_double() - 0.5) * 0.3;
    const double gy = (rng.uniform_double() - 0.5) * 0.3;
    struct Blob {
        double cy, cx, ry, rx, angle, value;
    };
    std::vector<Blob> blobs;
    const int count = 3 + static_cast<int>(rng.uniform_int(5));
    for (int i = 0; i < count; ++i) {
        blobs.push_back({rng.uniform_real(0.15, 0.85) * h, rng.uniform_real(0.15, 0.85) * w,
                         rng.uniform_real(0.08, 0.3) * h, rng.uniform_real(0.08, 0.3) * w,
                         rng.uniform_real(0.0, 3.14159), rng.uniform_real(-0.4, 0.6)});
    }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double v = bg + gx * x / w + gy * y / h;
            for (const Blob& b : blobs) {
                const double dy = y - b.cy, dx = x - b.cx;
                const double c = std::cos(b.angle), s = std::sin(b.angle);
                const double u = (c * dx + s * dy) / b.rx;
                const double t = (-s * dx + c * dy) / b.ry;
                const double d = u * u + t * t;
                if (d < 1.0) v += b.value * (1.0 - d) * (1.0 - d);
            }
            const float pixel = static_cast<float>(std::clamp(v, 0.0, 1.0));
            for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = pixel;
        }
    return img;
}

inline void write_phantom_corpus(const std::filesystem::path& dir, int count, int size,
                                 std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    for (int i = 0; i < count; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "img%03d.png", i);
        save_png(phantom_image(size, size, seed + i), dir / name);
    }
}

}  // namespace ngt::test
