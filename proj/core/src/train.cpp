#include "ngt/train.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>

#include "ngt/checkpoint.hpp"

namespace ngt {

namespace {

constexpr char kStateMagic[4] = {'N', 'G', 'S', '1'};
constexpr std::uint16_t kStateVersion = 1;

std::vector<std::span<float>> param_spans(std::vector<ParamRef<float>>& refs) {
    std::vector<std::span<float>> spans;
    spans.reserve(refs.size());
    for (auto& r : refs) spans.emplace_back(r.values->data(), r.values->size());
    return spans;
}

std::vector<std::span<const float>> grad_spans(std::vector<ParamRef<float>>& refs) {
    std::vector<std::span<const float>> spans;
    spans.reserve(refs.size());
    for (auto& r : refs) spans.emplace_back(r.grads->data(), r.grads->size());
    return spans;
}

std::vector<std::size_t> buffer_sizes(std::vector<ParamRef<float>>& refs) {
    std::vector<std::size_t> sizes;
    sizes.reserve(refs.size());
    for (auto& r : refs) sizes.push_back(r.values->size());
    return sizes;
}

NoiseSpec step_spec(const TrainConfig& config) {
    NoiseSpec spec;
    spec.pattern = config.pattern;
    spec.sigma_auto = config.sigma_auto;
    spec.sigma8 = config.sigma8;
    return spec;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    return x;
}

TrainState init_train_state(const TrainConfig& config) {
    TrainState state{.model = make_model<float>(config.model),
                     .adam_nen = {},
                     .adam_rn = {},
                     .step = 0,
                     .best_val_psnr = 0.0,
                     .best_step = -1,
                     .rng = Rng(mix_seed(config.seed, 0x7261696e))};
    initialize(state.model, config.seed);
    auto nen_refs = collect_params(state.model.nen);
    auto rn_refs = collect_params(state.model.rn);
    state.adam_nen = Adam<float>(config.adam, buffer_sizes(nen_refs));
    state.adam_rn = Adam<float>(config.adam, buffer_sizes(rn_refs));
    return state;
}

std::pair<double, double> train_step(TrainState& state, const std::vector<Image>& clean_batch,
                                     const TrainConfig& config) {
    if (clean_batch.empty()) throw std::runtime_error("train_step: empty batch");
    const NoiseSpec spec = step_spec(config);

    std::vector<Image> noisy_images;
    std::vector<NoiseField> residuals;
    noisy_images.reserve(clean_batch.size());
    residuals.reserve(clean_batch.size());
    for (const Image& clean : clean_batch) {
        SimulationResult sim = simulate(clean, spec, state.rng);
        noisy_images.push_back(std::move(sim.noisy));
        residuals.push_back(std::move(sim.residual));
    }

    Tensor<float> noisy = to_batch<float>(noisy_images);
    Tensor<float> target_clean = to_batch<float>(clean_batch);
    Tensor<float> target_residual(noisy.n, 3, noisy.h, noisy.w);
    for (int b = 0; b < noisy.n; ++b)
        for (int c = 0; c < 3; ++c) {
            float* dst = target_residual.plane(b, c);
            const float* src = residuals[b].data();
            for (std::size_t i = 0; i < target_residual.plane_size(); ++i)
                dst[i] = src[i * 3 + c];
        }

    // Stage I: NEN on residual MSE
    NenCache<float> nen_cache;
    Tensor<float> est = nen_forward(state.model.nen, noisy, config.model, &nen_cache);
    LossResult<float> loss_e = mse_loss(est, target_residual);
    if (!std::isfinite(loss_e.value))
        throw std::runtime_error("train_step: non-finite NEN loss at step " +
                                 std::to_string(state.step + 1));
    nen_backward(state.model.nen, nen_cache, loss_e.grad, config.model);
    auto nen_refs = collect_params(state.model.nen);
    state.adam_nen.step(param_spans(nen_refs), grad_spans(nen_refs));

    // Stage II: RN on L1 against the clean target, with the estimate
    // recomputed from the just-updated NEN and detached from it.
    Tensor<float> est_fresh = nen_forward(state.model.nen, noisy, config.model);
    RnCache<float> rn_cache;
    Tensor<float> recon = rn_forward(state.model.rn, noisy, est_fresh, config.model, &rn_cache);
    LossResult<float> loss_r = l1_loss(recon, target_clean);
    if (!std::isfinite(loss_r.value))
        throw std::runtime_error("train_step: non-finite RN loss at step " +
                                 std::to_string(state.step + 1));
    rn_backward(state.model.rn, rn_cache, loss_r.grad, config.model);
    auto rn_refs = collect_params(state.model.rn);
    state.adam_rn.step(param_spans(rn_refs), grad_spans(rn_refs));

    ++state.step;
    return {loss_e.value, loss_r.value};
}

MetricReport validate(const Model<float>& model, const std::vector<Image>& images,
                      const std::vector<std::string>& names, const std::vector<double>& sigmas,
                      std::uint64_t seed) {
    MetricReport report;
    const NoisePattern patterns[] = {NoisePattern::kGaussian, NoisePattern::kSpeckle};
    for (std::size_t i = 0; i < images.size(); ++i)
        for (std::size_t s = 0; s < sigmas.size(); ++s)
            for (int p = 0; p < 2; ++p) {
                NoiseSpec spec;
                spec.pattern = patterns[p];
                spec.sigma8 = sigmas[s];
                spec.seed = mix_seed(seed, (i << 16) | (s << 4) | static_cast<unsigned>(p));
                SimulationResult sim = simulate(images[i], spec);
                DenoiseResult denoised = pipeline_denoise(model, sim.noisy);
                MetricRow row = evaluate_pair(images[i], denoised.clean, names[i]);
                row.pattern = to_string(patterns[p]);
                row.sigma = sigmas[s];
                report.rows.push_back(std::move(row));
            }
    return report;
}

MetricReport validate_baseline(const std::vector<Image>& images,
                               const std::vector<std::string>& names,
                               const std::vector<double>& sigmas, std::uint64_t seed) {
    MetricReport report;
    const NoisePattern patterns[] = {NoisePattern::kGaussian, NoisePattern::kSpeckle};
    for (std::size_t i = 0; i < images.size(); ++i)
        for (std::size_t s = 0; s < sigmas.size(); ++s)
            for (int p = 0; p < 2; ++p) {
                NoiseSpec spec;
                spec.pattern = patterns[p];
                spec.sigma8 = sigmas[s];
                spec.seed = mix_seed(seed, (i << 16) | (s << 4) | static_cast<unsigned>(p));
                SimulationResult sim = simulate(images[i], spec);
                MetricRow row = evaluate_pair(images[i], sim.noisy, names[i]);
                row.pattern = to_string(patterns[p]);
                row.sigma = sigmas[s];
                report.rows.push_back(std::move(row));
            }
    return report;
}

void save_train_state(TrainState& state, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    out.write(kStateMagic, 4);
    out.write(reinterpret_cast<const char*>(&kStateVersion), sizeof(kStateVersion));
    out.write(reinterpret_cast<const char*>(&state.step), sizeof(state.step));
    out.write(reinterpret_cast<const char*>(&state.best_val_psnr), sizeof(state.best_val_psnr));
    out.write(reinterpret_cast<const char*>(&state.best_step), sizeof(state.best_step));
    state.rng.save(out);
    state.adam_nen.save(out);
    state.adam_rn.save(out);
    std::uint64_t checksum = 0xcbf29ce484222325ULL;
    for (const auto& p : collect_params(state.model)) {
        const auto bytes = p.values->size() * sizeof(float);
        out.write(reinterpret_cast<const char*>(p.values->data()),
                  static_cast<std::streamsize>(bytes));
        checksum = fnv1a64(p.values->data(), bytes, checksum);
    }
    out.write(reinterpret_cast<const char*>(&checksum), sizeof(checksum));
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

void load_train_state(TrainState& state, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(path.string() + ": cannot open for reading");
    char magic[4];
    in.read(magic, 4);
    std::uint16_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!in || std::memcmp(magic, kStateMagic, 4) != 0 || version != kStateVersion)
        throw std::runtime_error(path.string() + ": not an NGS1 training state");
    in.read(reinterpret_cast<char*>(&state.step), sizeof(state.step));
    in.read(reinterpret_cast<char*>(&state.best_val_psnr), sizeof(state.best_val_psnr));
    in.read(reinterpret_cast<char*>(&state.best_step), sizeof(state.best_step));
    state.rng.load(in);
    state.adam_nen.load(in);
    state.adam_rn.load(in);
    std::uint64_t checksum = 0xcbf29ce484222325ULL;
    for (const auto& p : collect_params(state.model)) {
        const auto bytes = p.values->size() * sizeof(float);
        in.read(reinterpret_cast<char*>(p.values->data()), static_cast<std::streamsize>(bytes));
        checksum = fnv1a64(p.values->data(), bytes, checksum);
    }
    std::uint64_t expected = 0;
    in.read(reinterpret_cast<char*>(&expected), sizeof(expected));
    if (!in || checksum != expected)
        throw std::runtime_error(path.string() + ": truncated or corrupt training state");
}

TrainState train(const TrainConfig& config, const std::filesystem::path& train_dir,
                 const std::filesystem::path& val_dir, const std::filesystem::path& out_ckpt,
                 std::ostream* log, const std::filesystem::path& resume_from) {
    const auto train_paths = list_pngs(train_dir);
    if (train_paths.empty())
        throw std::runtime_error(train_dir.string() + ": no PNG training images");
    const auto val_paths = list_pngs(val_dir);
    if (val_paths.empty())
        throw std::runtime_error(val_dir.string() + ": no PNG validation images");

    std::vector<Image> train_images;
    train_images.reserve(train_paths.size());
    for (const auto& p : train_paths) train_images.push_back(load_png(p));
    for (const Image& img : train_images)
        if (img.height() < config.patch || img.width() < config.patch)
            throw std::runtime_error("training image smaller than patch size " +
                                     std::to_string(config.patch));
    std::vector<Image> val_images;
    std::vector<std::string> val_names;
    for (const auto& p : val_paths) {
        val_images.push_back(load_png(p));
        val_names.push_back(p.filename().string());
    }

    TrainState state = init_train_state(config);
    if (!resume_from.empty()) load_train_state(state, resume_from);

    const std::filesystem::path best_path = out_ckpt.string() + ".best";
    const std::filesystem::path state_path = out_ckpt.string() + ".state";
    const std::filesystem::path report_dir = out_ckpt.parent_path();
    const std::uint64_t val_seed = mix_seed(config.seed, 0x76616c);

    auto run_validation = [&](bool save_best) {
        MetricReport report =
            validate(state.model, val_images, val_names, config.val_sigmas, val_seed);
        const double mean_psnr = report.aggregate().psnr;
        report.write_csv(report_dir / ("val_step" + std::to_string(state.step) + ".csv"));
        if (save_best && (state.best_step < 0 || mean_psnr > state.best_val_psnr)) {
            state.best_val_psnr = mean_psnr;
            state.best_step = state.step;
            save_checkpoint(state.model, best_path);
        }
        return mean_psnr;
    };

    save_checkpoint(state.model, out_ckpt);
    if (config.steps == 0 || state.step >= config.steps) {
        save_train_state(state, state_path);
        return state;
    }

    while (state.step < config.steps) {
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<Image> batch;
        batch.reserve(config.batch);
        for (int b = 0; b < config.batch; ++b) {
            const auto idx = state.rng.uniform_int(train_images.size());
            const Image& img = train_images[idx];
            const int y0 = static_cast<int>(state.rng.uniform_int(img.height() - config.patch + 1));
            const int x0 = static_cast<int>(state.rng.uniform_int(img.width() - config.patch + 1));
            batch.push_back(crop(img, y0, x0, config.patch));
        }
        const auto [loss_e, loss_r] = train_step(state, batch, config);
        const double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        if (log)
            (*log) << state.step << ' ' << loss_e << ' ' << loss_r << ' ' << ms << '\n';

        if (state.step % config.validate_every == 0 || state.step == config.steps) {
            run_validation(true);
            save_checkpoint(state.model, out_ckpt);
            save_train_state(state, state_path);
        }
    }
    return state;
}

}  // namespace ngt
