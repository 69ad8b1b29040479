#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ngt/rng.hpp"

namespace ngt {

// H x W x 3 raster, interleaved RGB, samples in [0, 1].
// Grayscale sources are replicated to three channels on load, so every
// consumer sees the same shape.
class Image {
public:
    Image() = default;
    Image(int height, int width, float fill = 0.0f)
        : height_(height), width_(width),
          data_(static_cast<std::size_t>(height) * width * 3, fill) {}

    int height() const { return height_; }
    int width() const { return width_; }
    static constexpr int channels() { return 3; }
    std::size_t size() const { return data_.size(); }

    float& at(int y, int x, int c) { return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c]; }
    float at(int y, int x, int c) const { return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c]; }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }

    bool same_shape(const Image& other) const {
        return height_ == other.height_ && width_ == other.width_;
    }

    void clamp01();

    bool operator==(const Image& other) const = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<float> data_;
};

// Same layout as Image but unbounded samples; carries residual noise.
class NoiseField {
public:
    NoiseField() = default;
    NoiseField(int height, int width, float fill = 0.0f)
        : height_(height), width_(width),
          data_(static_cast<std::size_t>(height) * width * 3, fill) {}

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return data_.size(); }

    float& at(int y, int x, int c) { return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c]; }
    float at(int y, int x, int c) const { return data_[(static_cast<std::size_t>(y) * width_ + x) * 3 + c]; }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }

    bool operator==(const NoiseField& other) const = default;

private:
    int height_ = 0;
    int width_ = 0;
    std::vector<float> data_;
};

// Per-pixel (L*, a*, b*), planar-free interleaved triples; L* in [0, 100].
struct LabImage {
    int height = 0;
    int width = 0;
    std::vector<float> data;  // (y * width + x) * 3 + {L, a, b}

    float l(int y, int x) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + 0]; }
    float a(int y, int x) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + 1]; }
    float b(int y, int x) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + 2]; }
};

// 8-bit RGB or grayscale PNG -> [0,1] samples (value / 255); grayscale is
// replicated across the three channels. Anything else (16-bit, palette,
// alpha) is rejected with a descriptive error.
Image load_png(const std::filesystem::path& path);

// Clamp to [0,1], quantize with round-half-up (byte = floor(255 x + 0.5)),
// write as 8-bit RGB. load_png(save_png(img)) differs by at most 1/510 per
// sample, and is exact when samples are multiples of 1/255.
void save_png(const Image& img, const std::filesystem::path& path);

std::uint8_t quantize8(float x);

// sRGB (D65) -> CIELAB. Standard pipeline: inverse sRGB gamma, RGB->XYZ,
// XYZ->Lab with the 6/29 piecewise cube root.
LabImage to_lab(const Image& img);

Image from_lab(const LabImage& lab);

// `count` axis-aligned size x size crops at uniformly drawn offsets,
// deterministic for a fixed seed.
std::vector<Image> extract_patches(const Image& img, int size, int count, std::uint64_t seed);

Image crop(const Image& img, int y0, int x0, int size);

std::vector<std::filesystem::path> list_pngs(const std::filesystem::path& dir);

}  // namespace ngt
