#include "ngt/noise.hpp"

#include <algorithm>
#include <stdexcept>

namespace ngt {

std::string to_string(NoisePattern pattern) {
    switch (pattern) {
        case NoisePattern::kGaussian: return "gaussian";
        case NoisePattern::kSpeckle: return "speckle";
        case NoisePattern::kAuto: return "auto";
    }
    return "?";
}

NoisePattern pattern_from_string(const std::string& name) {
    if (name == "gaussian") return NoisePattern::kGaussian;
    if (name == "speckle") return NoisePattern::kSpeckle;
    if (name == "auto") return NoisePattern::kAuto;
    throw std::runtime_error("unknown noise pattern '" + name + "' (expected gaussian|speckle|auto)");
}

NoiseField sample_noise(int height, int width, const NoiseSpec& spec, Rng& rng) {
    if (spec.sigma_auto) throw std::runtime_error("sample_noise: sigma must be explicit");
    if (spec.sigma8 < 0.0 || spec.sigma8 > kSigmaMax)
        throw std::runtime_error("sample_noise: sigma8 " + std::to_string(spec.sigma8) +
                                 " outside [0, 75]");
    NoiseField field(height, width);
    const double stddev = spec.sigma8 / 255.0;
    float* out = field.data();
    for (std::size_t i = 0; i < field.size(); ++i)
        out[i] = static_cast<float>(rng.normal(spec.mean, stddev));
    return field;
}

NoiseField sample_noise(int height, int width, const NoiseSpec& spec) {
    Rng rng(spec.seed);
    return sample_noise(height, width, spec, rng);
}

namespace {

void check_shapes(const Image& clean, const NoiseField& noise) {
    if (clean.height() != noise.height() || clean.width() != noise.width())
        throw std::runtime_error("noise field shape does not match image");
}

}  // namespace

Image apply_gaussian(const Image& clean, const NoiseField& noise) {
    check_shapes(clean, noise);
    Image out = clean;
    float* dst = out.data();
    const float* n = noise.data();
    for (std::size_t i = 0; i < out.size(); ++i)
        dst[i] = std::clamp(dst[i] + n[i], 0.0f, 1.0f);
    return out;
}

Image apply_speckle(const Image& clean, const NoiseField& noise) {
    check_shapes(clean, noise);
    Image out = clean;
    float* dst = out.data();
    const float* n = noise.data();
    for (std::size_t i = 0; i < out.size(); ++i)
        dst[i] = std::clamp(dst[i] + dst[i] * n[i], 0.0f, 1.0f);
    return out;
}

SimulationResult simulate(const Image& clean, const NoiseSpec& spec, Rng& rng) {
    NoiseSpec effective = spec;
    effective.sigma_auto = false;
    if (spec.sigma_auto) effective.sigma8 = rng.uniform_real(0.0, kSigmaMax);

    NoiseField field = sample_noise(clean.height(), clean.width(), effective, rng);

    NoisePattern pattern = spec.pattern;
    if (pattern == NoisePattern::kAuto)
        pattern = rng.uniform_int(10) % 2 == 0 ? NoisePattern::kGaussian : NoisePattern::kSpeckle;

    SimulationResult result;
    result.pattern = pattern;
    result.sigma8 = effective.sigma8;
    result.noisy = pattern == NoisePattern::kGaussian ? apply_gaussian(clean, field)
                                                      : apply_speckle(clean, field);
    result.residual = NoiseField(clean.height(), clean.width());
    float* res = result.residual.data();
    const float* noisy = result.noisy.data();
    const float* ref = clean.data();
    for (std::size_t i = 0; i < result.residual.size(); ++i) res[i] = noisy[i] - ref[i];
    return result;
}

SimulationResult simulate(const Image& clean, const NoiseSpec& spec) {
    Rng rng(spec.seed);
    return simulate(clean, spec, rng);
}

}  // namespace ngt
