#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "ngt/conv.hpp"
#include "ngt/ops.hpp"
#include "ngt/tensor.hpp"

namespace ngt {

// Dense block geometry: conv i of d-1 maps base + (i-1) * growth -> growth
// channels (LeakyReLU); the d-th conv fuses back to base channels.
struct RdbConfig {
    int conv_layers = 5;
    int growth = 8;
    int base_channels = 32;
    int kernel = 3;
};

struct ModelConfig {
    RdbConfig rdb;
    int rdb_per_rrdb = 3;
    int rrdb_count = 3;
    double residual_scale = 0.2;
    double lrelu_slope = 0.2;
    int attention_kernel = 7;
};

template <typename T>
struct ParamRef {
    std::string id;
    std::string role;  // "weight" or "bias"
    std::vector<T>* values;
    std::vector<T>* grads;
    std::vector<int> shape;
};

// ---- blocks ----------------------------------------------------------------

template <typename T>
struct Rdb {
    std::vector<Conv2d<T>> convs;  // conv_layers entries
};

template <typename T>
struct Rrdb {
    std::vector<Rdb<T>> rdbs;
};

// rrdb chain with 1x1 gates between consecutive blocks, then a linear tail.
template <typename T>
struct Trunk {
    std::vector<Rrdb<T>> rrdbs;
    std::vector<Conv2d<T>> gates;
    Conv2d<T> tail;
};

template <typename T>
struct Nen {
    Conv2d<T> head;
    Trunk<T> trunk;
};

template <typename T>
struct Nob {
    Conv2d<T> noise_conv;  // 3 -> 32, k3
    Conv2d<T> image_conv;  // 3 -> 32, k3
    Conv2d<T> att_conv;    // 2 -> 1, k7
};

template <typename T>
struct Rn {
    Nob<T> nob;
    Trunk<T> trunk;
};

template <typename T>
struct Model {
    ModelConfig cfg;
    Nen<T> nen;
    Rn<T> rn;
};

template <typename T>
Model<T> make_model(const ModelConfig& cfg = {});

// Kaiming-style fan-in init from a seeded stream; biases zero.
template <typename T>
void initialize(Model<T>& model, std::uint64_t seed);

// ---- caches for backward ----------------------------------------------------

template <typename T>
struct RdbCache {
    std::vector<Tensor<T>> cats;  // cats[i] is the input of conv i; cats[0] is the block input
    std::vector<Tensor<T>> acts;  // post-LeakyReLU output of convs 0..d-2
};

template <typename T>
struct RrdbCache {
    std::vector<RdbCache<T>> rdbs;
};

template <typename T>
struct TrunkCache {
    std::vector<RrdbCache<T>> rrdbs;
    std::vector<Tensor<T>> gate_inputs;  // rrdb outputs feeding each gate
    std::vector<Tensor<T>> gate_acts;    // post-LeakyReLU gate outputs
    Tensor<T> tail_input;
};

template <typename T>
struct NenCache {
    Tensor<T> input;
    Tensor<T> head_act;
    TrunkCache<T> trunk;
};

template <typename T>
struct NobCache {
    Tensor<T> noisy, est;
    Tensor<T> noise_feat, image_feat;  // N_T, I_T
    Tensor<T> pooled;                  // 2-channel mean/max map
    Tensor<T> attention;               // A_C, in (0,1)
};

template <typename T>
struct RnCache {
    NobCache<T> nob;
    TrunkCache<T> trunk;
    Tensor<T> pre_clamp;
};

// ---- forward / backward -----------------------------------------------------

template <typename T>
Tensor<T> rdb_forward(const Rdb<T>& block, const Tensor<T>& x, double slope,
                      RdbCache<T>* cache = nullptr);
template <typename T>
Tensor<T> rdb_backward(Rdb<T>& block, const RdbCache<T>& cache, const Tensor<T>& grad_out,
                       double slope);

template <typename T>
Tensor<T> rrdb_forward(const Rrdb<T>& block, const Tensor<T>& x, double slope, double beta,
                       RrdbCache<T>* cache = nullptr);
template <typename T>
Tensor<T> rrdb_backward(Rrdb<T>& block, const RrdbCache<T>& cache, const Tensor<T>& grad_out,
                        double slope, double beta);

template <typename T>
Tensor<T> trunk_forward(const Trunk<T>& trunk, const Tensor<T>& x, const ModelConfig& cfg,
                        TrunkCache<T>* cache = nullptr);
template <typename T>
Tensor<T> trunk_backward(Trunk<T>& trunk, const TrunkCache<T>& cache, const Tensor<T>& grad_out,
                         const ModelConfig& cfg);

// I_N -> N_E (unclamped; residual noise is signed).
template <typename T>
Tensor<T> nen_forward(const Nen<T>& nen, const Tensor<T>& noisy, const ModelConfig& cfg,
                      NenCache<T>* cache = nullptr);
template <typename T>
Tensor<T> nen_backward(Nen<T>& nen, const NenCache<T>& cache, const Tensor<T>& grad_out,
                       const ModelConfig& cfg);

template <typename T>
Tensor<T> nob_forward(const Nob<T>& nob, const Tensor<T>& noisy, const Tensor<T>& est,
                      NobCache<T>* cache = nullptr);
// Returns gradients w.r.t. (noisy, est).
template <typename T>
std::pair<Tensor<T>, Tensor<T>> nob_backward(Nob<T>& nob, const NobCache<T>& cache,
                                             const Tensor<T>& grad_out);

// {I_N, N_E} -> I_C in [0, 1].
template <typename T>
Tensor<T> rn_forward(const Rn<T>& rn, const Tensor<T>& noisy, const Tensor<T>& est,
                     const ModelConfig& cfg, RnCache<T>* cache = nullptr);
template <typename T>
std::pair<Tensor<T>, Tensor<T>> rn_backward(Rn<T>& rn, const RnCache<T>& cache,
                                            const Tensor<T>& grad_out, const ModelConfig& cfg);

struct DenoiseResult {
    Image clean;
    NoiseField estimated_noise;
};

DenoiseResult pipeline_denoise(const Model<float>& model, const Image& noisy);

// ---- parameter registry -----------------------------------------------------

template <typename T>
std::vector<ParamRef<T>> collect_params(Nen<T>& nen, const std::string& prefix = "nen");
template <typename T>
std::vector<ParamRef<T>> collect_params(Rn<T>& rn, const std::string& prefix = "rn");
template <typename T>
std::vector<ParamRef<T>> collect_params(Model<T>& model);

struct ParamCounts {
    std::size_t nen = 0;
    std::size_t rn = 0;
    std::size_t total = 0;
};

ParamCounts count_params(const ModelConfig& cfg = {});

}  // namespace ngt
