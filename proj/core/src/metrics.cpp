#include "ngt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ngt {

namespace {

void check_shapes(const Image& ref, const Image& test, const char* who) {
    if (!ref.same_shape(test)) throw std::runtime_error(std::string(who) + ": shape mismatch");
}

// Truncated normalized Gaussian taps, kernel size = 2*radius + 1.
std::vector<double> gaussian_taps(int radius, double sigma) {
    std::vector<double> taps(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (i * i) / (sigma * sigma));
        taps[i + radius] = v;
        sum += v;
    }
    for (auto& t : taps) t /= sum;
    return taps;
}

struct Plane {
    int h = 0, w = 0;
    std::vector<double> v;
    Plane() = default;
    Plane(int h_, int w_) : h(h_), w(w_), v(static_cast<std::size_t>(h_) * w_) {}
    double& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
    double at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

// Separable filtering, valid region only: output is (h-k+1) x (w-k+1).
Plane filter_valid(const Plane& src, const std::vector<double>& taps) {
    const int k = static_cast<int>(taps.size());
    Plane rows(src.h, src.w - k + 1);
    for (int y = 0; y < src.h; ++y)
        for (int x = 0; x < rows.w; ++x) {
            double sum = 0.0;
            for (int i = 0; i < k; ++i) sum += taps[i] * src.at(y, x + i);
            rows.at(y, x) = sum;
        }
    Plane out(src.h - k + 1, rows.w);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x) {
            double sum = 0.0;
            for (int i = 0; i < k; ++i) sum += taps[i] * rows.at(y + i, x);
            out.at(y, x) = sum;
        }
    return out;
}

int reflect(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -1 - i;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

// Separable filtering with reflected boundary; same-size output.
Plane filter_reflect(const Plane& src, const std::vector<double>& taps) {
    const int radius = static_cast<int>(taps.size()) / 2;
    Plane rows(src.h, src.w);
    for (int y = 0; y < src.h; ++y)
        for (int x = 0; x < src.w; ++x) {
            double sum = 0.0;
            for (int i = -radius; i <= radius; ++i)
                sum += taps[i + radius] * src.at(y, reflect(x + i, src.w));
            rows.at(y, x) = sum;
        }
    Plane out(src.h, src.w);
    for (int y = 0; y < src.h; ++y)
        for (int x = 0; x < src.w; ++x) {
            double sum = 0.0;
            for (int i = -radius; i <= radius; ++i)
                sum += taps[i + radius] * rows.at(reflect(y + i, src.h), x);
            out.at(y, x) = sum;
        }
    return out;
}

Plane subsample2(const Plane& src) {
    Plane out((src.h + 1) / 2, (src.w + 1) / 2);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x) out.at(y, x) = src.at(2 * y, 2 * x);
    return out;
}

Plane channel_plane(const Image& img, int c) {
    Plane p(img.height(), img.width());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) p.at(y, x) = 255.0 * img.at(y, x, c);
    return p;
}

Plane luma_plane(const Image& img) {
    Plane p(img.height(), img.width());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            p.at(y, x) = 255.0 * (0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) +
                                  0.114 * img.at(y, x, 2));
    return p;
}

Plane mul(const Plane& a, const Plane& b) {
    Plane out(a.h, a.w);
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
    return out;
}

}  // namespace

double mse(const Image& ref, const Image& test) {
    check_shapes(ref, test, "mse");
    const float* a = ref.data();
    const float* b = test.data();
    double sum = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const double d = 255.0 * static_cast<double>(a[i]) - 255.0 * static_cast<double>(b[i]);
        sum += d * d;
    }
    return sum / static_cast<double>(ref.size());
}

double psnr(const Image& ref, const Image& test) {
    const double err = mse(ref, test);
    if (err <= 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(255.0 * 255.0 / err);
}

double ssim(const Image& ref, const Image& test) {
    check_shapes(ref, test, "ssim");
    constexpr int kWindow = 11;
    if (std::min(ref.height(), ref.width()) < kWindow)
        throw std::runtime_error("ssim: image smaller than the 11x11 window");
    const auto taps = gaussian_taps(kWindow / 2, 1.5);
    constexpr double c1 = (0.01 * 255.0) * (0.01 * 255.0);
    constexpr double c2 = (0.03 * 255.0) * (0.03 * 255.0);

    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        const Plane x = channel_plane(ref, c);
        const Plane y = channel_plane(test, c);
        const Plane mu1 = filter_valid(x, taps);
        const Plane mu2 = filter_valid(y, taps);
        const Plane xx = filter_valid(mul(x, x), taps);
        const Plane yy = filter_valid(mul(y, y), taps);
        const Plane xy = filter_valid(mul(x, y), taps);
        double sum = 0.0;
        for (std::size_t i = 0; i < mu1.v.size(); ++i) {
            const double m1 = mu1.v[i], m2 = mu2.v[i];
            const double s1 = xx.v[i] - m1 * m1;
            const double s2 = yy.v[i] - m2 * m2;
            const double s12 = xy.v[i] - m1 * m2;
            sum += ((2.0 * m1 * m2 + c1) * (2.0 * s12 + c2)) /
                   ((m1 * m1 + m2 * m2 + c1) * (s1 + s2 + c2));
        }
        total += sum / static_cast<double>(mu1.v.size());
    }
    return total / 3.0;
}

double delta_e(const Image& ref, const Image& test) {
    check_shapes(ref, test, "delta_e");
    const LabImage a = to_lab(ref);
    const LabImage b = to_lab(test);
    double sum = 0.0;
    const std::size_t pixels = a.data.size() / 3;
    for (std::size_t i = 0; i < a.data.size(); i += 3) {
        const double dl = static_cast<double>(a.data[i]) - b.data[i];
        const double da = static_cast<double>(a.data[i + 1]) - b.data[i + 1];
        const double db = static_cast<double>(a.data[i + 2]) - b.data[i + 2];
        sum += std::sqrt(dl * dl + da * da + db * db);
    }
    return sum / static_cast<double>(pixels);
}

double vifp(const Image& ref, const Image& test) {
    check_shapes(ref, test, "vifp");
    if (std::min(ref.height(), ref.width()) < 32)
        throw std::runtime_error("vifp: image smaller than 32x32 (four scales needed)");
    constexpr double sigma_nsq = 2.0;
    constexpr double eps = 1e-10;

    Plane r = luma_plane(ref);
    Plane d = luma_plane(test);
    double num = 0.0, den = 0.0;
    for (int scale = 1; scale <= 4; ++scale) {
        const int size = (1 << (5 - scale)) + 1;  // 17, 9, 5, 3
        const auto taps = gaussian_taps(size / 2, size / 5.0);
        if (scale > 1) {
            r = subsample2(filter_reflect(r, taps));
            d = subsample2(filter_reflect(d, taps));
        }
        const Plane mu1 = filter_reflect(r, taps);
        const Plane mu2 = filter_reflect(d, taps);
        const Plane rr = filter_reflect(mul(r, r), taps);
        const Plane dd = filter_reflect(mul(d, d), taps);
        const Plane rd = filter_reflect(mul(r, d), taps);
        for (std::size_t i = 0; i < mu1.v.size(); ++i) {
            const double m1 = mu1.v[i], m2 = mu2.v[i];
            double s1 = std::max(0.0, rr.v[i] - m1 * m1);
            double s2 = std::max(0.0, dd.v[i] - m2 * m2);
            const double s12 = rd.v[i] - m1 * m2;

            double g = s12 / (s1 + eps);
            double sv = s2 - g * s12;
            if (s1 < eps) {
                g = 0.0;
                sv = s2;
                s1 = 0.0;
            }
            if (s2 < eps) {
                g = 0.0;
                sv = 0.0;
            }
            if (g < 0.0) {
                sv = s2;
                g = 0.0;
            }
            sv = std::max(sv, eps);
            num += std::log10(1.0 + g * g * s1 / (sv + sigma_nsq));
            den += std::log10(1.0 + s1 / sigma_nsq);
        }
    }
    return den > 0.0 ? num / den : 1.0;
}

MetricRow evaluate_pair(const Image& ref, const Image& test, const std::string& id) {
    MetricRow row;
    row.image = id;
    row.mse = mse(ref, test);
    row.psnr = psnr(ref, test);
    row.ssim = ssim(ref, test);
    row.delta_e = delta_e(ref, test);
    row.vifp = vifp(ref, test);
    return row;
}

}  // namespace ngt
