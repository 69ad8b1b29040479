#include "ngt/model.hpp"

#include <cmath>
#include <stdexcept>

#include "ngt/rng.hpp"

namespace ngt {

namespace {

template <typename T>
void add_into(Tensor<T>& dst, const Tensor<T>& src) {
    if (!dst.same_shape(src)) throw std::runtime_error("add_into: shape mismatch");
    for (std::size_t i = 0; i < dst.numel(); ++i) dst.values[i] += src.values[i];
}

// dst += src channels [c_begin, c_begin + dst.c)
template <typename T>
void add_channel_slice(Tensor<T>& dst, const Tensor<T>& src, int c_begin) {
    for (int n = 0; n < dst.n; ++n)
        for (int c = 0; c < dst.c; ++c) {
            T* d = dst.plane(n, c);
            const T* s = src.plane(n, c_begin + c);
            for (std::size_t i = 0; i < dst.plane_size(); ++i) d[i] += s[i];
        }
}

template <typename T>
Tensor<T> scaled(const Tensor<T>& x, T factor) {
    Tensor<T> out = x;
    for (auto& v : out.values) v *= factor;
    return out;
}

// Per-pixel sum over channels of a * b -> (N,1,H,W).
template <typename T>
Tensor<T> reduce_mul_channels(const Tensor<T>& a, const Tensor<T>& b) {
    if (!a.same_shape(b)) throw std::runtime_error("reduce_mul_channels: shape mismatch");
    Tensor<T> out(a.n, 1, a.h, a.w);
    for (int n = 0; n < a.n; ++n) {
        T* dst = out.plane(n, 0);
        for (int c = 0; c < a.c; ++c) {
            const T* pa = a.plane(n, c);
            const T* pb = b.plane(n, c);
            for (std::size_t i = 0; i < a.plane_size(); ++i) dst[i] += pa[i] * pb[i];
        }
    }
    return out;
}

}  // namespace

// ---- construction ------------------------------------------------------------

template <typename T>
static Rdb<T> make_rdb(const RdbConfig& cfg) {
    Rdb<T> block;
    const int d = cfg.conv_layers;
    block.convs.reserve(d);
    for (int i = 0; i < d - 1; ++i)
        block.convs.emplace_back(cfg.base_channels + i * cfg.growth, cfg.growth, cfg.kernel);
    block.convs.emplace_back(cfg.base_channels + (d - 1) * cfg.growth, cfg.base_channels,
                             cfg.kernel);
    return block;
}

template <typename T>
static Trunk<T> make_trunk(const ModelConfig& cfg) {
    Trunk<T> trunk;
    trunk.rrdbs.resize(cfg.rrdb_count);
    for (auto& rrdb : trunk.rrdbs) {
        rrdb.rdbs.reserve(cfg.rdb_per_rrdb);
        for (int i = 0; i < cfg.rdb_per_rrdb; ++i) rrdb.rdbs.push_back(make_rdb<T>(cfg.rdb));
    }
    for (int i = 0; i < cfg.rrdb_count - 1; ++i)
        trunk.gates.emplace_back(cfg.rdb.base_channels, cfg.rdb.base_channels, 1);
    trunk.tail = Conv2d<T>(cfg.rdb.base_channels, 3, cfg.rdb.kernel);
    return trunk;
}

template <typename T>
Model<T> make_model(const ModelConfig& cfg) {
    Model<T> model;
    model.cfg = cfg;
    model.nen.head = Conv2d<T>(3, cfg.rdb.base_channels, cfg.rdb.kernel);
    model.nen.trunk = make_trunk<T>(cfg);
    model.rn.nob.noise_conv = Conv2d<T>(3, cfg.rdb.base_channels, cfg.rdb.kernel);
    model.rn.nob.image_conv = Conv2d<T>(3, cfg.rdb.base_channels, cfg.rdb.kernel);
    model.rn.nob.att_conv = Conv2d<T>(2, 1, cfg.attention_kernel);
    model.rn.trunk = make_trunk<T>(cfg);
    return model;
}

// ---- init ---------------------------------------------------------------------

namespace {

// Gain sqrt(2 / (1 + slope^2)) for convs feeding LeakyReLU, 1 otherwise.
template <typename T>
void init_conv(Conv2d<T>& layer, Rng& rng, double gain) {
    const double fan_in = static_cast<double>(layer.in_ch) * layer.k * layer.k;
    const double stddev = gain / std::sqrt(fan_in);
    for (auto& w : layer.weight) w = static_cast<T>(rng.normal(0.0, stddev));
    for (auto& b : layer.bias) b = T(0);
}

template <typename T>
void init_trunk(Trunk<T>& trunk, Rng& rng, const ModelConfig& cfg) {
    const double act_gain = std::sqrt(2.0 / (1.0 + cfg.lrelu_slope * cfg.lrelu_slope));
    for (auto& rrdb : trunk.rrdbs)
        for (auto& rdb : rrdb.rdbs)
            for (std::size_t i = 0; i < rdb.convs.size(); ++i)
                init_conv(rdb.convs[i], rng, i + 1 < rdb.convs.size() ? act_gain : 1.0);
    for (auto& gate : trunk.gates) init_conv(gate, rng, act_gain);
    init_conv(trunk.tail, rng, 1.0);
}

}  // namespace

template <typename T>
void initialize(Model<T>& model, std::uint64_t seed) {
    Rng rng(seed);
    const double act_gain =
        std::sqrt(2.0 / (1.0 + model.cfg.lrelu_slope * model.cfg.lrelu_slope));
    init_conv(model.nen.head, rng, act_gain);
    init_trunk(model.nen.trunk, rng, model.cfg);
    init_conv(model.rn.nob.noise_conv, rng, 1.0);
    init_conv(model.rn.nob.image_conv, rng, 1.0);
    init_conv(model.rn.nob.att_conv, rng, 1.0);
    init_trunk(model.rn.trunk, rng, model.cfg);
}

// ---- RDB ---------------------------------------------------------------------

template <typename T>
Tensor<T> rdb_forward(const Rdb<T>& block, const Tensor<T>& x, double slope,
                      RdbCache<T>* cache) {
    const int d = static_cast<int>(block.convs.size());
    if (cache) {
        cache->cats.assign(1, x);
        cache->acts.clear();
    }
    Tensor<T> local;
    const Tensor<T>* cat = cache ? &cache->cats[0] : &x;
    for (int i = 0; i < d - 1; ++i) {
        Tensor<T> act = leaky_relu(conv2d_forward(*cat, block.convs[i]), static_cast<T>(slope));
        Tensor<T> next = concat_channels(*cat, act);
        if (cache) {
            cache->acts.push_back(std::move(act));
            cache->cats.push_back(std::move(next));
            cat = &cache->cats.back();
        } else {
            local = std::move(next);
            cat = &local;
        }
    }
    Tensor<T> fusion = conv2d_forward(*cat, block.convs[d - 1]);
    add_into(fusion, x);
    return fusion;
}

template <typename T>
Tensor<T> rdb_backward(Rdb<T>& block, const RdbCache<T>& cache, const Tensor<T>& grad_out,
                       double slope) {
    const int d = static_cast<int>(block.convs.size());
    const int base = cache.cats[0].c;
    const int growth = d > 1 ? cache.acts[0].c : 0;

    Tensor<T> g_x = grad_out;  // local residual skip
    Tensor<T> g_cat = backward_into(block.convs[d - 1], cache.cats[d - 1], grad_out);

    add_channel_slice(g_x, g_cat, 0);
    std::vector<Tensor<T>> g_act(d - 1);
    for (int i = 0; i < d - 1; ++i)
        g_act[i] = slice_channels(g_cat, base + i * growth, base + (i + 1) * growth);

    for (int i = d - 2; i >= 0; --i) {
        Tensor<T> g_z = leaky_relu_backward(cache.acts[i], g_act[i], static_cast<T>(slope));
        Tensor<T> g_in = backward_into(block.convs[i], cache.cats[i], g_z);
        add_channel_slice(g_x, g_in, 0);
        for (int j = 0; j < i; ++j) {
            Tensor<T> slice = slice_channels(g_in, base + j * growth, base + (j + 1) * growth);
            add_into(g_act[j], slice);
        }
    }
    return g_x;
}

// ---- RRDB --------------------------------------------------------------------

template <typename T>
Tensor<T> rrdb_forward(const Rrdb<T>& block, const Tensor<T>& x, double slope, double beta,
                       RrdbCache<T>* cache) {
    if (cache) cache->rdbs.resize(block.rdbs.size());
    Tensor<T> cur = x;
    for (std::size_t i = 0; i < block.rdbs.size(); ++i)
        cur = rdb_forward(block.rdbs[i], cur, slope, cache ? &cache->rdbs[i] : nullptr);
    // out = x + beta * (chain(x) - x): identity when every rdb is identity
    Tensor<T> out = x;
    const T b = static_cast<T>(beta);
    for (std::size_t i = 0; i < out.numel(); ++i)
        out.values[i] += b * (cur.values[i] - x.values[i]);
    return out;
}

template <typename T>
Tensor<T> rrdb_backward(Rrdb<T>& block, const RrdbCache<T>& cache, const Tensor<T>& grad_out,
                        double slope, double beta) {
    const T b = static_cast<T>(beta);
    Tensor<T> g = scaled(grad_out, b);
    for (int i = static_cast<int>(block.rdbs.size()) - 1; i >= 0; --i)
        g = rdb_backward(block.rdbs[i], cache.rdbs[i], g, slope);
    for (std::size_t i = 0; i < g.numel(); ++i)
        g.values[i] += (T(1) - b) * grad_out.values[i];
    return g;
}

// ---- trunk ---------------------------------------------------------------------

template <typename T>
Tensor<T> trunk_forward(const Trunk<T>& trunk, const Tensor<T>& x, const ModelConfig& cfg,
                        TrunkCache<T>* cache) {
    const int count = static_cast<int>(trunk.rrdbs.size());
    if (cache) {
        cache->rrdbs.resize(count);
        cache->gate_inputs.resize(trunk.gates.size());
        cache->gate_acts.resize(trunk.gates.size());
    }
    Tensor<T> cur = x;
    for (int r = 0; r < count; ++r) {
        cur = rrdb_forward(trunk.rrdbs[r], cur, cfg.lrelu_slope, cfg.residual_scale,
                           cache ? &cache->rrdbs[r] : nullptr);
        if (r + 1 < count) {
            if (cache) cache->gate_inputs[r] = cur;
            cur = leaky_relu(conv2d_forward(cur, trunk.gates[r]),
                             static_cast<T>(cfg.lrelu_slope));
            if (cache) cache->gate_acts[r] = cur;
        }
    }
    if (cache) cache->tail_input = cur;
    return conv2d_forward(cur, trunk.tail);
}

template <typename T>
Tensor<T> trunk_backward(Trunk<T>& trunk, const TrunkCache<T>& cache, const Tensor<T>& grad_out,
                         const ModelConfig& cfg) {
    Tensor<T> g = backward_into(trunk.tail, cache.tail_input, grad_out);
    for (int r = static_cast<int>(trunk.rrdbs.size()) - 1; r >= 0; --r) {
        if (r + 1 < static_cast<int>(trunk.rrdbs.size())) {
            g = leaky_relu_backward(cache.gate_acts[r], g, static_cast<T>(cfg.lrelu_slope));
            g = backward_into(trunk.gates[r], cache.gate_inputs[r], g);
        }
        g = rrdb_backward(trunk.rrdbs[r], cache.rrdbs[r], g, cfg.lrelu_slope,
                          cfg.residual_scale);
    }
    return g;
}

// ---- NEN ----------------------------------------------------------------------

template <typename T>
Tensor<T> nen_forward(const Nen<T>& nen, const Tensor<T>& noisy, const ModelConfig& cfg,
                      NenCache<T>* cache) {
    Tensor<T> act = leaky_relu(conv2d_forward(noisy, nen.head), static_cast<T>(cfg.lrelu_slope));
    if (cache) {
        cache->input = noisy;
        cache->head_act = act;
    }
    return trunk_forward(nen.trunk, act, cfg, cache ? &cache->trunk : nullptr);
}

template <typename T>
Tensor<T> nen_backward(Nen<T>& nen, const NenCache<T>& cache, const Tensor<T>& grad_out,
                       const ModelConfig& cfg) {
    Tensor<T> g = trunk_backward(nen.trunk, cache.trunk, grad_out, cfg);
    g = leaky_relu_backward(cache.head_act, g, static_cast<T>(cfg.lrelu_slope));
    return backward_into(nen.head, cache.input, g);
}

// ---- NOB ----------------------------------------------------------------------

template <typename T>
Tensor<T> nob_forward(const Nob<T>& nob, const Tensor<T>& noisy, const Tensor<T>& est,
                      NobCache<T>* cache) {
    if (noisy.h != est.h || noisy.w != est.w || noisy.n != est.n)
        throw std::runtime_error("nob_forward: spatial shape mismatch");
    Tensor<T> noise_feat = conv2d_forward(est, nob.noise_conv);
    Tensor<T> image_feat = conv2d_forward(noisy, nob.image_conv);
    Tensor<T> pooled = channel_pool(concat_channels(noise_feat, image_feat));
    Tensor<T> attention = sigmoid(conv2d_forward(pooled, nob.att_conv));
    Tensor<T> out = broadcast_mul(image_feat, attention);
    if (cache) {
        cache->noisy = noisy;
        cache->est = est;
        cache->noise_feat = std::move(noise_feat);
        cache->image_feat = std::move(image_feat);
        cache->pooled = std::move(pooled);
        cache->attention = std::move(attention);
    }
    return out;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> nob_backward(Nob<T>& nob, const NobCache<T>& cache,
                                             const Tensor<T>& grad_out) {
    // S_A = A x I_T: product rule
    Tensor<T> g_attention = reduce_mul_channels(grad_out, cache.image_feat);
    Tensor<T> g_image = broadcast_mul(grad_out, cache.attention);

    Tensor<T> g_z = sigmoid_backward(cache.attention, g_attention);
    Tensor<T> g_pooled = backward_into(nob.att_conv, cache.pooled, g_z);

    Tensor<T> xc = concat_channels(cache.noise_feat, cache.image_feat);
    Tensor<T> g_xc = channel_pool_backward(xc, g_pooled);
    Tensor<T> g_noise = slice_channels(g_xc, 0, cache.noise_feat.c);
    Tensor<T> g_image2 = slice_channels(g_xc, cache.noise_feat.c, xc.c);
    add_into(g_image, g_image2);

    Tensor<T> g_noisy = backward_into(nob.image_conv, cache.noisy, g_image);
    Tensor<T> g_est = backward_into(nob.noise_conv, cache.est, g_noise);
    return {std::move(g_noisy), std::move(g_est)};
}

// ---- RN -----------------------------------------------------------------------

template <typename T>
Tensor<T> rn_forward(const Rn<T>& rn, const Tensor<T>& noisy, const Tensor<T>& est,
                     const ModelConfig& cfg, RnCache<T>* cache) {
    Tensor<T> fused = nob_forward(rn.nob, noisy, est, cache ? &cache->nob : nullptr);
    Tensor<T> pre = trunk_forward(rn.trunk, fused, cfg, cache ? &cache->trunk : nullptr);
    if (cache) cache->pre_clamp = pre;
    return clamp01(pre);
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> rn_backward(Rn<T>& rn, const RnCache<T>& cache,
                                            const Tensor<T>& grad_out, const ModelConfig& cfg) {
    Tensor<T> g = clamp01_backward(cache.pre_clamp, grad_out);
    g = trunk_backward(rn.trunk, cache.trunk, g, cfg);
    return nob_backward(rn.nob, cache.nob, g);
}

// ---- pipeline -------------------------------------------------------------------

DenoiseResult pipeline_denoise(const Model<float>& model, const Image& noisy) {
    const Tensor<float> input = to_tensor<float>(noisy);
    const Tensor<float> est = nen_forward(model.nen, input, model.cfg);
    const Tensor<float> clean = rn_forward(model.rn, input, est, model.cfg);
    return {to_image(clean), to_noise_field(est)};
}

// ---- registry -------------------------------------------------------------------

namespace {

template <typename T>
void push_conv(std::vector<ParamRef<T>>& out, Conv2d<T>& layer, const std::string& id) {
    out.push_back({id, "weight", &layer.weight, &layer.weight_grad,
                   {layer.out_ch, layer.in_ch, layer.k, layer.k}});
    out.push_back({id, "bias", &layer.bias, &layer.bias_grad, {layer.out_ch}});
}

template <typename T>
void push_trunk(std::vector<ParamRef<T>>& out, Trunk<T>& trunk, const std::string& prefix) {
    for (std::size_t r = 0; r < trunk.rrdbs.size(); ++r) {
        for (std::size_t d = 0; d < trunk.rrdbs[r].rdbs.size(); ++d)
            for (std::size_t i = 0; i < trunk.rrdbs[r].rdbs[d].convs.size(); ++i)
                push_conv(out, trunk.rrdbs[r].rdbs[d].convs[i],
                          prefix + ".rrdb" + std::to_string(r) + ".rdb" + std::to_string(d) +
                              ".conv" + std::to_string(i));
        if (r < trunk.gates.size())
            push_conv(out, trunk.gates[r], prefix + ".gate" + std::to_string(r));
    }
    push_conv(out, trunk.tail, prefix + ".tail");
}

}  // namespace

template <typename T>
std::vector<ParamRef<T>> collect_params(Nen<T>& nen, const std::string& prefix) {
    std::vector<ParamRef<T>> out;
    push_conv(out, nen.head, prefix + ".head");
    push_trunk(out, nen.trunk, prefix);
    return out;
}

template <typename T>
std::vector<ParamRef<T>> collect_params(Rn<T>& rn, const std::string& prefix) {
    std::vector<ParamRef<T>> out;
    push_conv(out, rn.nob.noise_conv, prefix + ".nob.noise");
    push_conv(out, rn.nob.image_conv, prefix + ".nob.image");
    push_conv(out, rn.nob.att_conv, prefix + ".nob.att");
    push_trunk(out, rn.trunk, prefix);
    return out;
}

template <typename T>
std::vector<ParamRef<T>> collect_params(Model<T>& model) {
    std::vector<ParamRef<T>> out = collect_params(model.nen);
    std::vector<ParamRef<T>> rn = collect_params(model.rn);
    out.insert(out.end(), std::make_move_iterator(rn.begin()), std::make_move_iterator(rn.end()));
    return out;
}

ParamCounts count_params(const ModelConfig& cfg) {
    Model<float> model = make_model<float>(cfg);
    ParamCounts counts;
    for (const auto& p : collect_params(model.nen)) counts.nen += p.values->size();
    for (const auto& p : collect_params(model.rn)) counts.rn += p.values->size();
    counts.total = counts.nen + counts.rn;
    return counts;
}

// ---- instantiations --------------------------------------------------------------

#define NGT_INSTANTIATE_MODEL(T)                                                              \
    template Model<T> make_model(const ModelConfig&);                                         \
    template void initialize(Model<T>&, std::uint64_t);                                       \
    template Tensor<T> rdb_forward(const Rdb<T>&, const Tensor<T>&, double, RdbCache<T>*);    \
    template Tensor<T> rdb_backward(Rdb<T>&, const RdbCache<T>&, const Tensor<T>&, double);   \
    template Tensor<T> rrdb_forward(const Rrdb<T>&, const Tensor<T>&, double, double,         \
                                    RrdbCache<T>*);                                           \
    template Tensor<T> rrdb_backward(Rrdb<T>&, const RrdbCache<T>&, const Tensor<T>&, double, \
                                     double);                                                 \
    template Tensor<T> trunk_forward(const Trunk<T>&, const Tensor<T>&, const ModelConfig&,   \
                                     TrunkCache<T>*);                                         \
    template Tensor<T> trunk_backward(Trunk<T>&, const TrunkCache<T>&, const Tensor<T>&,      \
                                      const ModelConfig&);                                    \
    template Tensor<T> nen_forward(const Nen<T>&, const Tensor<T>&, const ModelConfig&,       \
                                   NenCache<T>*);                                             \
    template Tensor<T> nen_backward(Nen<T>&, const NenCache<T>&, const Tensor<T>&,            \
                                    const ModelConfig&);                                      \
    template Tensor<T> nob_forward(const Nob<T>&, const Tensor<T>&, const Tensor<T>&,         \
                                   NobCache<T>*);                                             \
    template std::pair<Tensor<T>, Tensor<T>> nob_backward(Nob<T>&, const NobCache<T>&,        \
                                                          const Tensor<T>&);                  \
    template Tensor<T> rn_forward(const Rn<T>&, const Tensor<T>&, const Tensor<T>&,           \
                                  const ModelConfig&, RnCache<T>*);                           \
    template std::pair<Tensor<T>, Tensor<T>> rn_backward(Rn<T>&, const RnCache<T>&,           \
                                                         const Tensor<T>&, const ModelConfig&); \
    template std::vector<ParamRef<T>> collect_params(Nen<T>&, const std::string&);            \
    template std::vector<ParamRef<T>> collect_params(Rn<T>&, const std::string&);             \
    template std::vector<ParamRef<T>> collect_params(Model<T>&);

NGT_INSTANTIATE_MODEL(float)
NGT_INSTANTIATE_MODEL(double)
#undef NGT_INSTANTIATE_MODEL

}  // namespace ngt
