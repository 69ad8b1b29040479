#include <benchmark/benchmark.h>

#include "ngt/conv.hpp"
#include "ngt/metrics.hpp"
#include "ngt/model.hpp"
#include "ngt/noise.hpp"
#include "ngt/rng.hpp"
#include "ngt/runtime.hpp"

using namespace ngt;

namespace {

Tensor<float> random_tensor(int n, int c, int h, int w, std::uint64_t seed) {
    Tensor<float> t(n, c, h, w);
    Rng rng(seed);
    for (auto& v : t.values) v = static_cast<float>(rng.uniform_double());
    return t;
}

Conv2d<float> random_conv(int in_ch, int out_ch, int k, std::uint64_t seed) {
    Conv2d<float> layer(in_ch, out_ch, k);
    Rng rng(seed);
    for (auto& w : layer.weight) w = static_cast<float>(rng.normal(0.0, 0.1));
    return layer;
}

Image random_image(int h, int w, std::uint64_t seed) {
    Image img(h, w);
    Rng rng(seed);
    for (std::size_t i = 0; i < img.size(); ++i)
        img.data()[i] = static_cast<float>(rng.uniform_double());
    return img;
}

}  // namespace

static void BM_Conv3x3Forward(benchmark::State& state) {
    const int ic = static_cast<int>(state.range(0));
    const int oc = static_cast<int>(state.range(1));
    const Tensor<float> x = random_tensor(1, ic, 64, 64, 1);
    const Conv2d<float> layer = random_conv(ic, oc, 3, 2);
    for (auto _ : state) {
        Tensor<float> y = conv2d_forward(x, layer);
        benchmark::DoNotOptimize(y.values.data());
    }
    state.counters["GMac/s"] = benchmark::Counter(
        1e-9 * ic * oc * 9 * 64 * 64 * state.iterations(), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Conv3x3Forward)->Args({64, 32})->Args({32, 8})->Args({3, 32});

static void BM_Conv3x3Backward(benchmark::State& state) {
    const int ic = static_cast<int>(state.range(0));
    const int oc = static_cast<int>(state.range(1));
    const Tensor<float> x = random_tensor(1, ic, 64, 64, 1);
    const Conv2d<float> layer = random_conv(ic, oc, 3, 2);
    const Tensor<float> go = random_tensor(1, oc, 64, 64, 3);
    for (auto _ : state) {
        ConvGrads<float> grads = conv2d_backward(x, layer, go);
        benchmark::DoNotOptimize(grads.weight.data());
    }
    state.counters["GMac/s"] = benchmark::Counter(
        2e-9 * ic * oc * 9 * 64 * 64 * state.iterations(), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Conv3x3Backward)->Args({64, 32})->Args({32, 8});

static void BM_RdbForward(benchmark::State& state) {
    Model<float> model = make_model<float>();
    initialize(model, 1);
    const Tensor<float> x = random_tensor(1, 32, 64, 64, 2);
    for (auto _ : state) {
        Tensor<float> y = rdb_forward(model.nen.trunk.rrdbs[0].rdbs[0], x, 0.2);
        benchmark::DoNotOptimize(y.values.data());
    }
}
BENCHMARK(BM_RdbForward);

static void BM_PipelineDenoise(benchmark::State& state) {
    const int size = static_cast<int>(state.range(0));
    Model<float> model = make_model<float>();
    initialize(model, 1);
    const Image noisy = random_image(size, size, 3);
    for (auto _ : state) {
        DenoiseResult result = pipeline_denoise(model, noisy);
        benchmark::DoNotOptimize(result.clean.data());
    }
    state.SetLabel(std::to_string(size) + "x" + std::to_string(size));
}
BENCHMARK(BM_PipelineDenoise)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_Simulate(benchmark::State& state) {
    const Image clean = random_image(256, 256, 4);
    NoiseSpec spec;
    spec.sigma_auto = true;
    spec.pattern = NoisePattern::kAuto;
    Rng rng(5);
    for (auto _ : state) {
        SimulationResult sim = simulate(clean, spec, rng);
        benchmark::DoNotOptimize(sim.noisy.data());
    }
}
BENCHMARK(BM_Simulate);

static void BM_Ssim(benchmark::State& state) {
    const Image a = random_image(256, 256, 6);
    const Image b = random_image(256, 256, 7);
    for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(BM_Ssim);

static void BM_Vifp(benchmark::State& state) {
    const Image a = random_image(256, 256, 8);
    const Image b = random_image(256, 256, 9);
    for (auto _ : state) benchmark::DoNotOptimize(vifp(a, b));
}
BENCHMARK(BM_Vifp);

int main(int argc, char** argv) {
    ngt::tune_allocator();
    ::benchmark::Initialize(&argc, argv);
    if (::benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
    ::benchmark::RunSpecifiedBenchmarks();
    ::benchmark::Shutdown();
    return 0;
}
