#include <cmath>

#include "ngt/image.hpp"

// sRGB <-> CIELAB over the D65 white point. Matrices are the IEC 61966-2-1
// primaries; the Lab transfer uses the CIE 6/29 piecewise cube root.

namespace ngt {

namespace {

constexpr double kXn = 0.95047;
constexpr double kYn = 1.00000;
constexpr double kZn = 1.08883;

double srgb_to_linear(double v) {
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double v) {
    return v <= 0.0031308 ? v * 12.92 : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

double lab_f(double t) {
    constexpr double delta = 6.0 / 29.0;
    return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

double lab_f_inv(double t) {
    constexpr double delta = 6.0 / 29.0;
    return t > delta ? t * t * t : 3.0 * delta * delta * (t - 4.0 / 29.0);
}

}  // namespace

LabImage to_lab(const Image& img) {
    LabImage lab;
    lab.height = img.height();
    lab.width = img.width();
    lab.data.resize(img.size());
    const float* src = img.data();
    for (std::size_t i = 0; i < img.size(); i += 3) {
        const double r = srgb_to_linear(src[i + 0]);
        const double g = srgb_to_linear(src[i + 1]);
        const double b = srgb_to_linear(src[i + 2]);
        const double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
        const double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
        const double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
        const double fx = lab_f(x / kXn);
        const double fy = lab_f(y / kYn);
        const double fz = lab_f(z / kZn);
        lab.data[i + 0] = static_cast<float>(116.0 * fy - 16.0);
        lab.data[i + 1] = static_cast<float>(500.0 * (fx - fy));
        lab.data[i + 2] = static_cast<float>(200.0 * (fy - fz));
    }
    return lab;
}

Image from_lab(const LabImage& lab) {
    Image img(lab.height, lab.width);
    float* dst = img.data();
    for (std::size_t i = 0; i < lab.data.size(); i += 3) {
        const double fy = (lab.data[i + 0] + 16.0) / 116.0;
        const double fx = fy + lab.data[i + 1] / 500.0;
        const double fz = fy - lab.data[i + 2] / 200.0;
        const double x = kXn * lab_f_inv(fx);
        const double y = kYn * lab_f_inv(fy);
        const double z = kZn * lab_f_inv(fz);
        const double r = 3.2404542 * x - 1.5371385 * y - 0.4985314 * z;
        const double g = -0.9692660 * x + 1.8760108 * y + 0.0415560 * z;
        const double b = 0.0556434 * x - 0.2040259 * y + 1.0572252 * z;
        dst[i + 0] = static_cast<float>(linear_to_srgb(r));
        dst[i + 1] = static_cast<float>(linear_to_srgb(g));
        dst[i + 2] = static_cast<float>(linear_to_srgb(b));
    }
    img.clamp01();
    return img;
}

}  // namespace ngt
