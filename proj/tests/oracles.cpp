#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace ngt::test {

double naive_mse(const Image& ref, const Image& test) {
    double sum = 0.0;
    long count = 0;
    for (int y = 0; y < ref.height(); ++y)
        for (int x = 0; x < ref.width(); ++x)
            for (int c = 0; c < 3; ++c) {
                const double d = 255.0 * ref.at(y, x, c) - 255.0 * test.at(y, x, c);
                sum += d * d;
                ++count;
            }
    return sum / count;
}

namespace {

std::vector<double> gauss_kernel_2d(int size, double sigma) {
    std::vector<double> k(static_cast<std::size_t>(size) * size);
    const int r = size / 2;
    double sum = 0.0;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const double dy = y - r, dx = x - r;
            k[static_cast<std::size_t>(y) * size + x] = std::exp(-(dy * dy + dx * dx) / (2 * sigma * sigma));
            sum += k[static_cast<std::size_t>(y) * size + x];
        }
    for (auto& v : k) v /= sum;
    return k;
}

int mirror(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -1 - i;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

struct Grid {
    int h = 0, w = 0;
    std::vector<double> v;
    double at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

Grid filter_same(const Grid& src, const std::vector<double>& kern, int size) {
    Grid out{src.h, src.w, std::vector<double>(src.v.size())};
    const int r = size / 2;
    for (int y = 0; y < src.h; ++y)
        for (int x = 0; x < src.w; ++x) {
            double sum = 0.0;
            for (int ky = 0; ky < size; ++ky)
                for (int kx = 0; kx < size; ++kx)
                    sum += kern[static_cast<std::size_t>(ky) * size + kx] *
                           src.at(mirror(y + ky - r, src.h), mirror(x + kx - r, src.w));
            out.v[static_cast<std::size_t>(y) * out.w + x] = sum;
        }
    return out;
}

Grid decimate(const Grid& src) {
    Grid out{(src.h + 1) / 2, (src.w + 1) / 2, {}};
    out.v.resize(static_cast<std::size_t>(out.h) * out.w);
    for (int y = 0; y < out.h; ++y)
        for (int x = 0; x < out.w; ++x)
            out.v[static_cast<std::size_t>(y) * out.w + x] = src.at(2 * y, 2 * x);
    return out;
}

Grid luma(const Image& img) {
    Grid g{img.height(), img.width(), {}};
    g.v.resize(static_cast<std::size_t>(g.h) * g.w);
    for (int y = 0; y < g.h; ++y)
        for (int x = 0; x < g.w; ++x)
            g.v[static_cast<std::size_t>(y) * g.w + x] =
                255.0 * (0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2));
    return g;
}

}  // namespace

double naive_ssim(const Image& ref, const Image& test) {
    constexpr int kSize = 11;
    constexpr double kSigma = 1.5;
    const auto kern = gauss_kernel_2d(kSize, kSigma);
    const double c1 = (0.01 * 255) * (0.01 * 255);
    const double c2 = (0.03 * 255) * (0.03 * 255);
    double channel_sum = 0.0;
    for (int c = 0; c < 3; ++c) {
        double sum = 0.0;
        long count = 0;
        for (int y0 = 0; y0 + kSize <= ref.height(); ++y0)
            for (int x0 = 0; x0 + kSize <= ref.width(); ++x0) {
                double m1 = 0, m2 = 0, s1 = 0, s2 = 0, s12 = 0;
                for (int ky = 0; ky < kSize; ++ky)
                    for (int kx = 0; kx < kSize; ++kx) {
                        const double wgt = kern[static_cast<std::size_t>(ky) * kSize + kx];
                        const double a = 255.0 * ref.at(y0 + ky, x0 + kx, c);
                        const double b = 255.0 * test.at(y0 + ky, x0 + kx, c);
                        m1 += wgt * a;
                        m2 += wgt * b;
                        s1 += wgt * a * a;
                        s2 += wgt * b * b;
                        s12 += wgt * a * b;
                    }
                s1 -= m1 * m1;
                s2 -= m2 * m2;
                s12 -= m1 * m2;
                sum += ((2 * m1 * m2 + c1) * (2 * s12 + c2)) /
                       ((m1 * m1 + m2 * m2 + c1) * (s1 + s2 + c2));
                ++count;
            }
        channel_sum += sum / count;
    }
    return channel_sum / 3.0;
}

double naive_vifp(const Image& ref, const Image& test) {
    Grid r = luma(ref);
    Grid d = luma(test);
    double num = 0.0, den = 0.0;
    for (int scale = 1; scale <= 4; ++scale) {
        const int size = (1 << (5 - scale)) + 1;
        const auto kern = gauss_kernel_2d(size, size / 5.0);
        if (scale > 1) {
            r = decimate(filter_same(r, kern, size));
            d = decimate(filter_same(d, kern, size));
        }
        Grid rr = r, dd = d, rd = r;
        for (std::size_t i = 0; i < rr.v.size(); ++i) {
            rr.v[i] = r.v[i] * r.v[i];
            dd.v[i] = d.v[i] * d.v[i];
            rd.v[i] = r.v[i] * d.v[i];
        }
        const Grid mu1 = filter_same(r, kern, size);
        const Grid mu2 = filter_same(d, kern, size);
        const Grid m_rr = filter_same(rr, kern, size);
        const Grid m_dd = filter_same(dd, kern, size);
        const Grid m_rd = filter_same(rd, kern, size);
        for (std::size_t i = 0; i < mu1.v.size(); ++i) {
            double s1 = std::max(0.0, m_rr.v[i] - mu1.v[i] * mu1.v[i]);
            double s2 = std::max(0.0, m_dd.v[i] - mu2.v[i] * mu2.v[i]);
            const double s12 = m_rd.v[i] - mu1.v[i] * mu2.v[i];
            double g = s12 / (s1 + 1e-10);
            double sv = s2 - g * s12;
            if (s1 < 1e-10) {
                g = 0;
                sv = s2;
                s1 = 0;
            }
            if (s2 < 1e-10) {
                g = 0;
                sv = 0;
            }
            if (g < 0) {
                sv = s2;
                g = 0;
            }
            if (sv <= 1e-10) sv = 1e-10;
            num += std::log10(1.0 + g * g * s1 / (sv + 2.0));
            den += std::log10(1.0 + s1 / 2.0);
        }
    }
    return den > 0 ? num / den : 1.0;
}

void reference_lab(double r, double g, double b, double& L, double& a, double& bb) {
    auto lin = [](double v) { return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4); };
    const double rl = lin(r), gl = lin(g), bl = lin(b);
    const double x = (0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl) / 0.95047;
    const double y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
    const double z = (0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl) / 1.08883;
    auto f = [](double t) {
        return t > 0.008856451679035631 ? std::cbrt(t) : 7.787037037037035 * t + 16.0 / 116.0;
    };
    L = 116.0 * f(y) - 16.0;
    a = 500.0 * (f(x) - f(y));
    bb = 200.0 * (f(y) - f(z));
}

}  // namespace ngt::test
