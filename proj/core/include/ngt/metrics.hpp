#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ngt/image.hpp"

namespace ngt {

// All metrics operate on the 8-bit scale (samples times 255) and are
// computed in double precision.

// Mean over all samples of (255 ref - 255 test)^2.
double mse(const Image& ref, const Image& test);

// 10 log10(255^2 / mse); +infinity when mse is zero.
double psnr(const Image& ref, const Image& test);

// Mean local SSIM, 11x11 Gaussian window sigma 1.5, c1 = (0.01*255)^2,
// c2 = (0.03*255)^2, per channel then averaged. Requires min(H, W) >= 11.
double ssim(const Image& ref, const Image& test);

// Mean CIE76 distance in CIELAB.
double delta_e(const Image& ref, const Image& test);

// Pixel-domain visual information fidelity on BT.601 luma: four scales of
// 2x Gaussian downsampling, local statistics through Gaussian windows of
// size 2^(5-scale)+1 (sigma = size/5, reflect boundary), noise variance 2.
// Reference-directional: ref first. Requires min(H, W) >= 32.
double vifp(const Image& ref, const Image& test);

struct MetricRow {
    std::string image;
    std::string pattern = "-";
    double sigma = 0.0;
    double psnr = 0.0;
    double ssim = 0.0;
    double delta_e = 0.0;
    double vifp = 0.0;
    double mse = 0.0;
};

struct MetricReport {
    std::vector<MetricRow> rows;

    MetricRow aggregate() const;  // arithmetic means, image field "mean"
    void write_csv(const std::filesystem::path& path) const;
    static MetricReport read_csv(const std::filesystem::path& path);
};

MetricRow evaluate_pair(const Image& ref, const Image& test, const std::string& id);

// Explicit ref->test filename pairing for evaluate_dirs.
struct PairList {
    std::vector<std::pair<std::string, std::string>> pairs;
};

// Pairs by identical filename (or the given pair list), evaluates all five
// metrics per pair, and attaches pattern/sigma from a simulator manifest in
// test_dir when one exists. Unmatched files are an error, never skipped.
MetricReport evaluate_dirs(const std::filesystem::path& ref_dir,
                           const std::filesystem::path& test_dir,
                           const std::optional<PairList>& pairing = std::nullopt);

}  // namespace ngt
