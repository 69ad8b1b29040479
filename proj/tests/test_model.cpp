#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>

#include "ngt/checkpoint.hpp"
#include "ngt/model.hpp"
#include "ngt/rng.hpp"
#include "testutil.hpp"

using namespace ngt;

namespace {

template <typename T>
Tensor<T> random_tensor(int n, int c, int h, int w, std::uint64_t seed, double lo = -1.0,
                        double hi = 1.0) {
    Tensor<T> t(n, c, h, w);
    Rng rng(seed);
    for (auto& v : t.values) v = static_cast<T>(rng.uniform_real(lo, hi));
    return t;
}

void zero_params(Model<float>& model) {
    for (auto& p : collect_params(model))
        std::fill(p.values->begin(), p.values->end(), 0.0f);
}

}  // namespace

TEST_CASE("rdb: zero weights reduce to identity; shape preserved") {
    const ModelConfig cfg;
    Model<float> model = make_model<float>(cfg);
    zero_params(model);
    const auto x = random_tensor<float>(1, 32, 6, 6, 1);
    const Tensor<float> y = rdb_forward(model.nen.trunk.rrdbs[0].rdbs[0], x, cfg.lrelu_slope);
    CHECK(y.values == x.values);

    Model<float> live = make_model<float>(cfg);
    initialize(live, 3);
    for (int hw : {3, 5, 8}) {
        const auto inp = random_tensor<float>(1, 32, hw, hw, 10 + hw);
        const Tensor<float> out = rdb_forward(live.nen.trunk.rrdbs[0].rdbs[0], inp, cfg.lrelu_slope);
        CHECK(out.same_shape(inp));
    }
}

TEST_CASE("rdb matches a step-by-step composition of tested primitives") {
    const ModelConfig cfg;
    Model<float> model = make_model<float>(cfg);
    initialize(model, 7);
    const Rdb<float>& block = model.nen.trunk.rrdbs[1].rdbs[2];
    const auto x = random_tensor<float>(1, 32, 4, 4, 21);

    // hand-composed dense block
    Tensor<float> cat = x;
    for (int i = 0; i < 4; ++i) {
        Tensor<float> act = leaky_relu(conv2d_forward(cat, block.convs[i]),
                                       static_cast<float>(cfg.lrelu_slope));
        cat = concat_channels(cat, act);
    }
    Tensor<float> expect = conv2d_forward(cat, block.convs[4]);
    for (std::size_t i = 0; i < expect.numel(); ++i) expect.values[i] += x.values[i];

    const Tensor<float> got = rdb_forward(block, x, cfg.lrelu_slope);
    CHECK(got.values == expect.values);
}

TEST_CASE("rrdb: zero-weight identity and beta = 0 degeneracy") {
    const ModelConfig cfg;
    Model<float> model = make_model<float>(cfg);
    zero_params(model);
    const auto x = random_tensor<float>(1, 32, 5, 5, 2);
    const Tensor<float> y =
        rrdb_forward(model.nen.trunk.rrdbs[0], x, cfg.lrelu_slope, cfg.residual_scale);
    for (std::size_t i = 0; i < y.numel(); ++i)
        CHECK(y.values[i] == doctest::Approx(x.values[i]).epsilon(1e-12));

    Model<float> live = make_model<float>(cfg);
    initialize(live, 5);
    const Tensor<float> same = rrdb_forward(live.nen.trunk.rrdbs[0], x, cfg.lrelu_slope, 0.0);
    CHECK(same.values == x.values);
}

TEST_CASE("rrdb matches its composition from rdb_forward") {
    const ModelConfig cfg;
    Model<float> model = make_model<float>(cfg);
    initialize(model, 11);
    const Rrdb<float>& block = model.nen.trunk.rrdbs[2];
    const auto x = random_tensor<float>(1, 32, 4, 4, 31);

    Tensor<float> cur = x;
    for (const auto& rdb : block.rdbs) cur = rdb_forward(rdb, cur, cfg.lrelu_slope);
    Tensor<float> expect = x;
    for (std::size_t i = 0; i < expect.numel(); ++i)
        expect.values[i] += static_cast<float>(cfg.residual_scale) * (cur.values[i] - x.values[i]);

    const Tensor<float> got = rrdb_forward(block, x, cfg.lrelu_slope, cfg.residual_scale);
    for (std::size_t i = 0; i < got.numel(); ++i)
        CHECK(got.values[i] == doctest::Approx(expect.values[i]).epsilon(1e-12));
}

TEST_CASE("nen: shape contract and zero-weight output") {
    const ModelConfig cfg;
    Model<float> model = make_model<float>(cfg);
    zero_params(model);
    const auto noisy = random_tensor<float>(2, 3, 12, 10, 3, 0.0, 1.0);
    const Tensor<float> est = nen_forward(model.nen, noisy, cfg);
    CHECK(est.n == 2);
    CHECK(est.c == 3);
    CHECK(est.h == 12);
    CHECK(est.w == 10);
    for (float v : est.values) CHECK(v == 0.0f);  // zero weights, zero biases
}

TEST_CASE("nen: finite output across 100 random initializations") {
    const ModelConfig cfg;
    const auto noisy = random_tensor<float>(1, 3, 8, 8, 4, 0.0, 1.0);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Model<float> model = make_model<float>(cfg);
        initialize(model, seed);
        const Tensor<float> est = nen_forward(model.nen, noisy, cfg);
        for (float v : est.values) REQUIRE(std::isfinite(v));
    }
}

TEST_CASE("nob: attention bounds and the zero-attention-conv case") {
    const ModelConfig cfg;
    Model<float> model = make_model<float>(cfg);
    initialize(model, 13);
    const auto noisy = random_tensor<float>(1, 3, 6, 6, 5, 0.0, 1.0);
    const auto est = random_tensor<float>(1, 3, 6, 6, 6, -0.3, 0.3);

    NobCache<float> cache;
    nob_forward(model.rn.nob, noisy, est, &cache);
    for (float v : cache.attention.values) {
        CHECK(v > 0.0f);
        CHECK(v < 1.0f);
    }

    // zero attention conv -> A == 0.5, S_A == 0.5 * I_T
    std::fill(model.rn.nob.att_conv.weight.begin(), model.rn.nob.att_conv.weight.end(), 0.0f);
    std::fill(model.rn.nob.att_conv.bias.begin(), model.rn.nob.att_conv.bias.end(), 0.0f);
    NobCache<float> c2;
    const Tensor<float> out = nob_forward(model.rn.nob, noisy, est, &c2);
    for (float v : c2.attention.values) CHECK(v == 0.5f);
    for (std::size_t i = 0; i < out.numel(); ++i)
        CHECK(out.values[i] == doctest::Approx(0.5f * c2.image_feat.values[i]).epsilon(1e-6));
}

TEST_CASE("nob matches its composition from tested primitives") {
    const ModelConfig cfg;
    Model<float> model = make_model<float>(cfg);
    initialize(model, 17);
    const Nob<float>& nob = model.rn.nob;
    const auto noisy = random_tensor<float>(1, 3, 5, 5, 7, 0.0, 1.0);
    const auto est = random_tensor<float>(1, 3, 5, 5, 8, -0.5, 0.5);

    const Tensor<float> nt = conv2d_forward(est, nob.noise_conv);
    const Tensor<float> it = conv2d_forward(noisy, nob.image_conv);
    const Tensor<float> pooled = channel_pool(concat_channels(nt, it));
    const Tensor<float> att = sigmoid(conv2d_forward(pooled, nob.att_conv));
    const Tensor<float> expect = broadcast_mul(it, att);

    const Tensor<float> got = nob_forward(nob, noisy, est);
    CHECK(got.values == expect.values);
}

TEST_CASE("rn: output in [0,1], shape, determinism") {
    const ModelConfig cfg;
    Model<float> model = make_model<float>(cfg);
    initialize(model, 19);
    const auto noisy = random_tensor<float>(1, 3, 9, 9, 9, 0.0, 1.0);
    const auto est = random_tensor<float>(1, 3, 9, 9, 10, -0.3, 0.3);
    const Tensor<float> a = rn_forward(model.rn, noisy, est, cfg);
    CHECK(a.c == 3);
    CHECK(a.h == 9);
    CHECK(a.w == 9);
    for (float v : a.values) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
    const Tensor<float> b = rn_forward(model.rn, noisy, est, cfg);
    CHECK(a.values == b.values);
}

TEST_CASE("pipeline: dimensions preserved and clamped output") {
    const ModelConfig cfg;
    Model<float> model = make_model<float>(cfg);
    initialize(model, 23);
    const Image noisy = test::random_image(17, 13, 77);
    const DenoiseResult result = pipeline_denoise(model, noisy);
    CHECK(result.clean.height() == 17);
    CHECK(result.clean.width() == 13);
    CHECK(result.estimated_noise.height() == 17);
    for (std::size_t i = 0; i < result.clean.size(); ++i) {
        CHECK(result.clean.data()[i] >= 0.0f);
        CHECK(result.clean.data()[i] <= 1.0f);
    }
}

TEST_CASE("parameter counts: formula per layer and calibration totals") {
    const ModelConfig cfg;
    Model<float> model = make_model<float>(cfg);
    for (const auto& p : collect_params(model)) {
        if (p.role == "weight") {
            REQUIRE(p.shape.size() == 4);
            CHECK(p.values->size() ==
                  static_cast<std::size_t>(p.shape[0]) * p.shape[1] * p.shape[2] * p.shape[3]);
        } else {
            REQUIRE(p.shape.size() == 1);
            CHECK(p.values->size() == static_cast<std::size_t>(p.shape[0]));
        }
    }
    const ParamCounts counts = count_params(cfg);
    CHECK(counts.total == counts.nen + counts.rn);
    // within 2% of the 283,776-parameter reference for the default config
    CHECK(std::abs(static_cast<double>(counts.nen) - 283776.0) / 283776.0 < 0.02);

    // per-layer formula: out*in*k^2 + out, summed, equals the totals
    std::size_t sum = 0;
    for (const auto& p : collect_params(model)) sum += p.values->size();
    CHECK(sum == counts.total);
}

TEST_CASE("initialization is deterministic per seed") {
    const ModelConfig cfg;
    Model<float> a = make_model<float>(cfg);
    Model<float> b = make_model<float>(cfg);
    initialize(a, 42);
    initialize(b, 42);
    CHECK(param_digest(a) == param_digest(b));
    initialize(b, 43);
    CHECK(param_digest(a) != param_digest(b));
}

TEST_CASE("checkpoint: bitwise round trip") {
    test::TempDir dir("ckpt");
    const ModelConfig cfg;
    Model<float> model = make_model<float>(cfg);
    initialize(model, 31);
    const auto path = dir.path() / "model.ngt";
    save_checkpoint(model, path);

    Model<float> loaded = make_model<float>(cfg);
    load_checkpoint(loaded, path);
    auto pa = collect_params(model);
    auto pb = collect_params(loaded);
    REQUIRE(pa.size() == pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) CHECK(*pa[i].values == *pb[i].values);
}

TEST_CASE("checkpoint: corruption and truncation are detected") {
    test::TempDir dir("ckpt2");
    const ModelConfig cfg;
    Model<float> model = make_model<float>(cfg);
    initialize(model, 37);
    const auto path = dir.path() / "model.ngt";
    save_checkpoint(model, path);

    // flip one payload byte
    auto bytes = [&] {
        std::ifstream in(path, std::ios::binary);
        return std::vector<char>((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
    }();
    bytes[bytes.size() / 2] ^= 0x01;
    {
        std::ofstream out(dir.path() / "corrupt.ngt", std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    Model<float> target = make_model<float>(cfg);
    CHECK_THROWS_WITH_AS(load_checkpoint(target, dir.path() / "corrupt.ngt"),
                         doctest::Contains("checksum"), std::runtime_error);

    {
        std::ofstream out(dir.path() / "trunc.ngt", std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    }
    CHECK_THROWS(load_checkpoint(target, dir.path() / "trunc.ngt"));

    {
        std::ofstream out(dir.path() / "junk.ngt", std::ios::binary);
        out << "XYZ1 something";
    }
    CHECK_THROWS_WITH_AS(load_checkpoint(target, dir.path() / "junk.ngt"),
                         doctest::Contains("magic"), std::runtime_error);
}
