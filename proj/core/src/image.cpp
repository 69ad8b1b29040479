#include "ngt/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace ngt {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
    throw std::runtime_error(path.string() + ": " + what);
}

}  // namespace

void Image::clamp01() {
    for (auto& v : data_) v = std::clamp(v, 0.0f, 1.0f);
}

std::uint8_t quantize8(float x) {
    const float clamped = std::clamp(x, 0.0f, 1.0f);
    // round-half-up, so 0.5 -> 128 on every platform
    return static_cast<std::uint8_t>(std::floor(255.0f * clamped + 0.5f));
}

Image load_png(const std::filesystem::path& path) {
    FilePtr file(std::fopen(path.string().c_str(), "rb"));
    if (!file) fail(path, "cannot open for reading");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) fail(path, "libpng allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        fail(path, "libpng allocation failed");
    }
    std::vector<png_bytep> rows;
    std::vector<png_byte> pixels;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(path, "not a readable PNG");
    }

    png_init_io(png, file.get());
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);

    if (bit_depth != 8) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(path, "unsupported bit depth " + std::to_string(bit_depth) + " (only 8-bit PNG is supported)");
    }
    if (color_type != PNG_COLOR_TYPE_RGB && color_type != PNG_COLOR_TYPE_GRAY) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(path, "unsupported color type " + std::to_string(color_type) +
                       " (only 8-bit RGB and grayscale are supported)");
    }

    const int src_channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
    pixels.resize(static_cast<std::size_t>(height) * width * src_channels);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y)
        rows[y] = pixels.data() + static_cast<std::size_t>(y) * width * src_channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Image img(static_cast<int>(height), static_cast<int>(width));
    float* out = img.data();
    const std::size_t n = static_cast<std::size_t>(height) * width;
    if (src_channels == 3) {
        for (std::size_t i = 0; i < n * 3; ++i) out[i] = pixels[i] / 255.0f;
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const float v = pixels[i] / 255.0f;
            out[i * 3 + 0] = v;
            out[i * 3 + 1] = v;
            out[i * 3 + 2] = v;
        }
    }
    return img;
}

void save_png(const Image& img, const std::filesystem::path& path) {
    if (img.height() < 1 || img.width() < 1) throw std::runtime_error("save_png: empty image");

    FilePtr file(std::fopen(path.string().c_str(), "wb"));
    if (!file) fail(path, "cannot open for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) fail(path, "libpng allocation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        fail(path, "libpng allocation failed");
    }

    std::vector<png_byte> bytes(static_cast<std::size_t>(img.height()) * img.width() * 3);
    const float* src = img.data();
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = quantize8(src[i]);
    std::vector<png_bytep> rows(img.height());
    for (int y = 0; y < img.height(); ++y)
        rows[y] = bytes.data() + static_cast<std::size_t>(y) * img.width() * 3;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(path, "PNG write failed");
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, img.width(), img.height(), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Image crop(const Image& img, int y0, int x0, int size) {
    Image out(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y0 + y, x0 + x, c);
    return out;
}

std::vector<Image> extract_patches(const Image& img, int size, int count, std::uint64_t seed) {
    if (size < 1 || size > std::min(img.height(), img.width()))
        throw std::runtime_error("extract_patches: patch size " + std::to_string(size) +
                                 " exceeds image " + std::to_string(img.height()) + "x" +
                                 std::to_string(img.width()));
    Rng rng(seed);
    std::vector<Image> patches;
    patches.reserve(count);
    for (int i = 0; i < count; ++i) {
        const int y0 = static_cast<int>(rng.uniform_int(img.height() - size + 1));
        const int x0 = static_cast<int>(rng.uniform_int(img.width() - size + 1));
        patches.push_back(crop(img, y0, x0, size));
    }
    return patches;
}

std::vector<std::filesystem::path> list_pngs(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> out;
    if (!std::filesystem::is_directory(dir))
        throw std::runtime_error(dir.string() + ": not a directory");
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".png") out.push_back(entry.path());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace ngt
