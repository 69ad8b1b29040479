#pragma once

#include <cstdint>
#include <string>

#include "ngt/image.hpp"
#include "ngt/rng.hpp"

namespace ngt {

enum class NoisePattern { kGaussian, kSpeckle, kAuto };

std::string to_string(NoisePattern pattern);
NoisePattern pattern_from_string(const std::string& name);

constexpr double kSigmaMax = 75.0;

// Sigma is expressed in 8-bit units (0..75) and mapped onto the [0,1] pixel
// domain as sigma/255. sigma_auto chooses uniformly from [0, 75] per draw.
struct NoiseSpec {
    NoisePattern pattern = NoisePattern::kGaussian;
    double sigma8 = 25.0;
    bool sigma_auto = false;
    double mean = 0.0;
    std::uint64_t seed = 0;
};

struct SimulationResult {
    Image noisy;
    NoiseField residual;  // noisy - clean, exact after clamping
    NoisePattern pattern = NoisePattern::kGaussian;
    double sigma8 = 0.0;
};

// i.i.d. N(mean, (sigma8/255)^2) samples drawn from `rng`.
NoiseField sample_noise(int height, int width, const NoiseSpec& spec, Rng& rng);
NoiseField sample_noise(int height, int width, const NoiseSpec& spec);

// I_N = clamp(I_C + n, 0, 1)
Image apply_gaussian(const Image& clean, const NoiseField& noise);

// I_N = clamp(I_C + I_C * n, 0, 1), elementwise
Image apply_speckle(const Image& clean, const NoiseField& noise);

// Draw sigma (if auto), the noise field, then the pattern (if auto: an
// integer k in {0..9}, Gaussian when k is even), in that order. The stored
// residual is noisy - clean so the decomposition holds exactly after the
// clamp.
SimulationResult simulate(const Image& clean, const NoiseSpec& spec, Rng& rng);
SimulationResult simulate(const Image& clean, const NoiseSpec& spec);

}  // namespace ngt
