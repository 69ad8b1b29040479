// ngt: two-stage medical-image denoiser - noise simulation, training,
// inference, metric reports, and a gradient self-check.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "ngt/checkpoint.hpp"
#include "ngt/gradcheck.hpp"
#include "ngt/image.hpp"
#include "ngt/metrics.hpp"
#include "ngt/model.hpp"
#include "ngt/noise.hpp"
#include "ngt/runtime.hpp"
#include "ngt/train.hpp"

namespace fs = std::filesystem;
using namespace ngt;

namespace {

struct SigmaArg {
    bool is_auto = false;
    double value = 25.0;
};

SigmaArg parse_sigma(const std::string& text) {
    SigmaArg out;
    if (text == "auto") {
        out.is_auto = true;
        return out;
    }
    std::size_t used = 0;
    out.value = std::stod(text, &used);
    if (used != text.size()) throw CLI::ValidationError("--sigma", "expected a number or 'auto'");
    if (out.value < 0.0 || out.value > kSigmaMax)
        throw CLI::ValidationError("--sigma", "sigma must lie in [0, 75]");
    return out;
}

void write_run_cfg(const fs::path& dir, const std::map<std::string, std::string>& entries) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream out(dir / "run.cfg");
    for (const auto& [key, value] : entries) out << key << " = " << value << "\n";
}

// Flat "key = value" file. Keys mirror the train flags; unknown keys are an
// error that names the offender. Values never override flags given on the
// command line (flags > file > defaults).
std::map<std::string, std::string> parse_config_file(const fs::path& path) {
    static const std::set<std::string> known = {
        "steps", "batch", "patch", "lr", "beta1", "beta2", "seed", "validate-every",
        "sigma", "pattern", "data", "val", "out", "threads", "resume"};
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("--config", path.string() + ": cannot open");
    std::map<std::string, std::string> values;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError(
                "--config", path.string() + ":" + std::to_string(line_no) + ": expected key = value");
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!known.contains(key))
            throw CLI::ValidationError("--config", path.string() + ": unknown key '" + key + "'");
        values[key] = value;
    }
    return values;
}

void warn_threads(int threads) {
    if (threads > 1)
        std::cerr << "note: --threads " << threads
                  << " requested; this build executes single-threaded (deterministic mode)\n";
}

int cmd_simulate(const std::string& in_dir, const std::string& out_dir, const std::string& sigma,
                 const std::string& pattern, std::uint64_t seed, int threads) {
    warn_threads(threads);
    const SigmaArg sigma_arg = parse_sigma(sigma);
    const NoisePattern pat = pattern_from_string(pattern);
    const auto inputs = list_pngs(in_dir);
    if (inputs.empty()) {
        std::cerr << "error: " << in_dir << " contains no PNG images\n";
        return 1;
    }
    fs::create_directories(out_dir);
    std::ofstream manifest(fs::path(out_dir) / "manifest.txt");
    manifest << "# name pattern sigma seed\n";
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const Image clean = load_png(inputs[i]);
        NoiseSpec spec;
        spec.pattern = pat;
        spec.sigma_auto = sigma_arg.is_auto;
        spec.sigma8 = sigma_arg.value;
        spec.seed = mix_seed(seed, i);
        const SimulationResult sim = simulate(clean, spec);
        const std::string stem = inputs[i].stem().string();
        save_png(clean, fs::path(out_dir) / (stem + ".clean.png"));
        save_png(sim.noisy, fs::path(out_dir) / (stem + ".noisy.png"));
        manifest << stem << ' ' << to_string(sim.pattern) << ' ' << sim.sigma8 << ' ' << spec.seed
                 << "\n";
    }
    write_run_cfg(out_dir, {{"command", "simulate"},
                            {"in", in_dir},
                            {"out", out_dir},
                            {"sigma", sigma},
                            {"pattern", pattern},
                            {"seed", std::to_string(seed)},
                            {"threads", std::to_string(threads)}});
    std::cout << "simulated " << inputs.size() << " image pair(s) into " << out_dir << "\n";
    return 0;
}

int cmd_train(const TrainConfig& config, const std::string& sigma, const std::string& pattern,
              const std::string& data_dir, const std::string& val_dir, const std::string& out,
              const std::string& resume) {
    warn_threads(config.threads);
    TrainConfig cfg = config;
    const SigmaArg sigma_arg = parse_sigma(sigma);
    cfg.sigma_auto = sigma_arg.is_auto;
    cfg.sigma8 = sigma_arg.value;
    cfg.pattern = pattern_from_string(pattern);

    const fs::path ckpt(out);
    const fs::path out_dir = ckpt.parent_path().empty() ? fs::path(".") : ckpt.parent_path();
    fs::create_directories(out_dir);
    write_run_cfg(out_dir, {{"command", "train"},
                            {"data", data_dir},
                            {"val", val_dir},
                            {"out", out},
                            {"steps", std::to_string(cfg.steps)},
                            {"batch", std::to_string(cfg.batch)},
                            {"patch", std::to_string(cfg.patch)},
                            {"lr", std::to_string(cfg.adam.lr)},
                            {"beta1", std::to_string(cfg.adam.beta1)},
                            {"beta2", std::to_string(cfg.adam.beta2)},
                            {"sigma", sigma},
                            {"pattern", pattern},
                            {"seed", std::to_string(cfg.seed)},
                            {"validate-every", std::to_string(cfg.validate_every)},
                            {"threads", std::to_string(cfg.threads)},
                            {"resume", resume}});

    // the do-nothing baseline over the same validation protocol
    {
        const auto val_paths = list_pngs(val_dir);
        std::vector<Image> images;
        std::vector<std::string> names;
        for (const auto& p : val_paths) {
            images.push_back(load_png(p));
            names.push_back(p.filename().string());
        }
        if (!images.empty()) {
            const MetricReport baseline =
                validate_baseline(images, names, cfg.val_sigmas, mix_seed(cfg.seed, 0x76616c));
            baseline.write_csv(out_dir / "val_baseline.csv");
        }
    }

    std::ofstream log(out_dir / "train.log");
    const TrainState state = train(cfg, data_dir, val_dir, ckpt, &log, resume);
    std::cout << "trained " << state.step << " step(s); best validation PSNR "
              << state.best_val_psnr << " dB at step " << state.best_step << "\n"
              << "checkpoint: " << ckpt.string() << "\n";
    return 0;
}

int cmd_run(const std::string& model_path, const std::string& in_path, const std::string& out_path,
            const std::string& dump_noise, int threads) {
    warn_threads(threads);
    Model<float> model = make_model<float>();
    load_checkpoint(model, model_path);
    const Image noisy = load_png(in_path);
    const DenoiseResult result = pipeline_denoise(model, noisy);
    const fs::path out(out_path);
    if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
    save_png(result.clean, out);
    if (!dump_noise.empty()) {
        // estimated residual is signed; shift by +0.5 for an inspectable image
        Image vis(result.estimated_noise.height(), result.estimated_noise.width());
        for (std::size_t i = 0; i < vis.size(); ++i)
            vis.data()[i] = result.estimated_noise.data()[i] + 0.5f;
        vis.clamp01();
        save_png(vis, dump_noise);
    }
    write_run_cfg(out.parent_path().empty() ? fs::path(".") : out.parent_path(),
                  {{"command", "run"},
                   {"model", model_path},
                   {"in", in_path},
                   {"out", out_path},
                   {"dump-noise", dump_noise},
                   {"threads", std::to_string(threads)}});
    return 0;
}

int cmd_eval(const std::string& ref_dir, const std::string& test_dir, const std::string& report_path,
             const std::string& pairs_path, int threads) {
    warn_threads(threads);
    std::optional<PairList> pairing;
    if (!pairs_path.empty()) {
        PairList list;
        std::ifstream in(pairs_path);
        if (!in) throw std::runtime_error(pairs_path + ": cannot open pair list");
        std::string ref_name, test_name;
        while (in >> ref_name >> test_name) list.pairs.emplace_back(ref_name, test_name);
        pairing = std::move(list);
    }
    const MetricReport report = evaluate_dirs(ref_dir, test_dir, pairing);
    const fs::path out(report_path);
    if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
    report.write_csv(out);
    const MetricRow mean = report.aggregate();
    std::printf("pairs %zu  psnr %.4f  ssim %.4f  delta_e %.4f  vifp %.4f  mse %.4f\n",
                report.rows.size(), mean.psnr, mean.ssim, mean.delta_e, mean.vifp, mean.mse);
    write_run_cfg(out.parent_path().empty() ? fs::path(".") : out.parent_path(),
                  {{"command", "eval"},
                   {"ref", ref_dir},
                   {"test", test_dir},
                   {"report", report_path},
                   {"pairs", pairs_path},
                   {"threads", std::to_string(threads)}});
    return 0;
}

int cmd_gradcheck(std::uint64_t seed, bool corrupt, int threads) {
    warn_threads(threads);
    const auto results = run_gradcheck(seed, corrupt);
    bool all_pass = true;
    std::printf("%-22s %-14s %-10s %s\n", "check", "max-rel-err", "tolerance", "status");
    for (const auto& r : results) {
        std::printf("%-22s %-14.3e %-10.0e %s\n", r.name.c_str(), r.max_rel_err, r.tolerance,
                    r.pass ? "pass" : "FAIL");
        all_pass = all_pass && r.pass;
    }
    std::printf("%zu checks, %s\n", results.size(), all_pass ? "all passed" : "FAILURES above");
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    tune_allocator();
    CLI::App app{"ngt: two-stage self-guided medical image denoiser"};
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads, "worker threads (1 = deterministic mode)")
        ->capture_default_str();

    // simulate
    auto* sim = app.add_subcommand("simulate", "synthesize noisy/clean training pairs");
    std::string sim_in, sim_out, sim_sigma = "auto", sim_pattern = "auto";
    std::uint64_t sim_seed = 1;
    sim->add_option("--in", sim_in, "directory of clean PNGs")->required();
    sim->add_option("--out", sim_out, "output directory")->required();
    sim->add_option("--sigma", sim_sigma, "noise sigma in 8-bit units, or 'auto' for U[0,75]")
        ->capture_default_str();
    sim->add_option("--pattern", sim_pattern, "gaussian|speckle|auto")->capture_default_str();
    sim->add_option("--seed", sim_seed, "PRNG seed")->capture_default_str();

    // train
    auto* tr = app.add_subcommand("train", "train the two-stage model");
    TrainConfig tc;
    std::string tr_data, tr_val, tr_out, tr_resume, tr_config;
    std::string tr_sigma = "auto", tr_pattern = "auto";
    tr->add_option("--config", tr_config, "flat key = value config file; flags override it");
    tr->add_option("--data", tr_data, "training PNG directory");
    tr->add_option("--val", tr_val, "validation PNG directory");
    tr->add_option("--out", tr_out, "checkpoint output path");
    tr->add_option("--steps", tc.steps, "optimization steps")->capture_default_str();
    tr->add_option("--batch", tc.batch, "patches per step")->capture_default_str();
    tr->add_option("--patch", tc.patch, "square patch size")->capture_default_str();
    tr->add_option("--lr", tc.adam.lr, "Adam learning rate")->capture_default_str();
    tr->add_option("--beta1", tc.adam.beta1, "Adam first-moment decay")->capture_default_str();
    tr->add_option("--beta2", tc.adam.beta2, "Adam second-moment decay")->capture_default_str();
    tr->add_option("--seed", tc.seed, "PRNG seed")->capture_default_str();
    tr->add_option("--validate-every", tc.validate_every, "steps between validations")
        ->capture_default_str();
    tr->add_option("--sigma", tr_sigma, "training sigma or 'auto'")->capture_default_str();
    tr->add_option("--pattern", tr_pattern, "gaussian|speckle|auto")->capture_default_str();
    tr->add_option("--resume", tr_resume, "resume from a .state file");

    // run
    auto* rn = app.add_subcommand("run", "denoise one image with a trained model");
    std::string run_model, run_in, run_out, run_dump;
    rn->add_option("--model", run_model, "checkpoint path")->required();
    rn->add_option("--in", run_in, "noisy input PNG")->required();
    rn->add_option("--out", run_out, "denoised output PNG")->required();
    rn->add_option("--dump-noise", run_dump, "also write the estimated-noise visualization");

    // eval
    auto* ev = app.add_subcommand("eval", "score test images against references");
    std::string ev_ref, ev_test, ev_report, ev_pairs;
    ev->add_option("--ref", ev_ref, "reference PNG directory")->required();
    ev->add_option("--test", ev_test, "test PNG directory")->required();
    ev->add_option("--report", ev_report, "CSV report path")->required();
    ev->add_option("--pairs", ev_pairs, "explicit 'ref test' filename pairs");

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "finite-difference check of every backward pass");
    std::uint64_t gc_seed = 42;
    bool gc_corrupt = false;
    gc->add_option("--seed", gc_seed, "PRNG seed")->capture_default_str();
    gc->add_flag("--self-test-corrupt", gc_corrupt,
                 "deliberately corrupt one gradient (harness self-test)")
        ->group("");  // hidden

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*sim) return cmd_simulate(sim_in, sim_out, sim_sigma, sim_pattern, sim_seed, threads);
        if (*tr) {
            tc.threads = threads;
            if (!tr_config.empty()) {
                std::map<std::string, std::string> file_values;
                try {
                    file_values = parse_config_file(tr_config);
                } catch (const CLI::ValidationError& e) {
                    std::cerr << e.what() << "\n";
                    return 2;
                }
                auto apply = [&](const char* key, auto& target, bool flag_given) {
                    const auto it = file_values.find(key);
                    if (it == file_values.end() || flag_given) return;
                    std::istringstream value(it->second);
                    value >> target;
                };
                apply("steps", tc.steps, tr->count("--steps") > 0);
                apply("batch", tc.batch, tr->count("--batch") > 0);
                apply("patch", tc.patch, tr->count("--patch") > 0);
                apply("lr", tc.adam.lr, tr->count("--lr") > 0);
                apply("beta1", tc.adam.beta1, tr->count("--beta1") > 0);
                apply("beta2", tc.adam.beta2, tr->count("--beta2") > 0);
                apply("seed", tc.seed, tr->count("--seed") > 0);
                apply("validate-every", tc.validate_every, tr->count("--validate-every") > 0);
                apply("threads", tc.threads, app.count("--threads") > 0);
                apply("sigma", tr_sigma, tr->count("--sigma") > 0);
                apply("pattern", tr_pattern, tr->count("--pattern") > 0);
                apply("data", tr_data, tr->count("--data") > 0);
                apply("val", tr_val, tr->count("--val") > 0);
                apply("out", tr_out, tr->count("--out") > 0);
                apply("resume", tr_resume, tr->count("--resume") > 0);
            }
            for (const auto& [flag, value] :
                 {std::pair{"--data", &tr_data}, {"--val", &tr_val}, {"--out", &tr_out}}) {
                if (value->empty()) {
                    std::cerr << flag << " is required\nRun with --help for more information.\n";
                    return 2;
                }
            }
            return cmd_train(tc, tr_sigma, tr_pattern, tr_data, tr_val, tr_out, tr_resume);
        }
        if (*rn) return cmd_run(run_model, run_in, run_out, run_dump, threads);
        if (*ev) return cmd_eval(ev_ref, ev_test, ev_report, ev_pairs, threads);
        if (*gc) return cmd_gradcheck(gc_seed, gc_corrupt, threads);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
