#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <utility>
#include <vector>

#include "ngt/adam.hpp"
#include "ngt/metrics.hpp"
#include "ngt/model.hpp"
#include "ngt/noise.hpp"

namespace ngt {

struct TrainConfig {
    std::int64_t steps = 5000;
    int batch = 8;   // paper-scale value is 24
    int patch = 64;
    AdamConfig adam;  // lr 5e-4, beta1 0.9, beta2 0.99
    std::uint64_t seed = 1;
    std::int64_t validate_every = 1000;
    NoisePattern pattern = NoisePattern::kAuto;
    bool sigma_auto = true;   // draw sigma from [0, 75] per image
    double sigma8 = 25.0;     // used when sigma_auto is false
    std::vector<double> val_sigmas = {10.0, 25.0, 50.0, 75.0};
    ModelConfig model;
    int threads = 1;
};

struct TrainState {
    Model<float> model;
    Adam<float> adam_nen, adam_rn;
    std::int64_t step = 0;
    double best_val_psnr = 0.0;
    std::int64_t best_step = -1;
    Rng rng{0};
};

TrainState init_train_state(const TrainConfig& config);

// One optimization step: simulate noise per clean image, update NEN on the
// residual-MSE objective, recompute the estimate, then update RN on the L1
// reconstruction objective. Returns (loss_E, loss_R). The two updates are
// detached: RN gradients never reach NEN and vice versa.
std::pair<double, double> train_step(TrainState& state, const std::vector<Image>& clean_batch,
                                     const TrainConfig& config);

// Full loop over seeded random patches from train_dir; validates and
// checkpoints every validate_every steps (and at the end); a separate .best
// checkpoint tracks the highest validation PSNR. `log` (optional) receives
// one line per step: step, loss_E, loss_R, wall-ms.
TrainState train(const TrainConfig& config, const std::filesystem::path& train_dir,
                 const std::filesystem::path& val_dir, const std::filesystem::path& out_ckpt,
                 std::ostream* log = nullptr, const std::filesystem::path& resume_from = {});

// Fixed-seed noisy evaluation of the model over the given images: for every
// sigma and both patterns, simulate, denoise, and score all five metrics.
MetricReport validate(const Model<float>& model, const std::vector<Image>& images,
                      const std::vector<std::string>& names, const std::vector<double>& sigmas,
                      std::uint64_t seed);

// Same protocol but scoring the noisy input itself; the do-nothing baseline.
MetricReport validate_baseline(const std::vector<Image>& images,
                               const std::vector<std::string>& names,
                               const std::vector<double>& sigmas, std::uint64_t seed);

// Full training state (params + optimizer moments + PRNG + counters);
// resuming from it reproduces an uninterrupted run bitwise.
void save_train_state(TrainState& state, const std::filesystem::path& path);
void load_train_state(TrainState& state, const std::filesystem::path& path);

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace ngt
