/*
 * spic-recon : self-supervised training of unrolled MRI reconstruction
 *
 * Copyright 2026 The spic-recon Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "spic/cg.hpp"
#include "spic/harness.hpp"
#include "spic/perturbation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

using namespace spic;
using nlohmann::json;

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> precision;
    bool deterministic = false;
};

ExperimentConfig resolve_config(const Globals& g)
{
    ExperimentConfig c = g.config.empty() ? ExperimentConfig{} : load_experiment_config(g.config);
    if (g.precision)
        c.model.precision = *g.precision;
    if (g.seed)
        c.optim.seed = *g.seed;
    c.model.validate();
    return c;
}

ExperimentConfig require_config(const Globals& g, const char* command)
{
    if (g.config.empty())
        throw CLI::ValidationError(std::string(command), "--config is required");
    return resolve_config(g);
}

/// Prints "step N  loss X  (t s/step)" every `every` steps.
ProgressFn console_progress(int total, int every)
{
    auto start = std::make_shared<std::chrono::steady_clock::time_point>(std::chrono::steady_clock::now());
    return [=](int step, double loss) {
        if (step % every != 0 && step != total)
            return;
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - *start).count();
        std::cerr << "step " << step << "/" << total << "  loss " << loss << "  (" << secs / step << " s/step)\n";
        if (step == total)
            *start = std::chrono::steady_clock::now();
    };
}

void cmd_simulate(const Globals& g, const std::string& out, const std::string& dtype)
{
    ExperimentConfig c = resolve_config(g);
    if (g.seed)
        c.dataset.seed = *g.seed;
    const std::string path = !out.empty() ? out : !c.dataset.path.empty() ? c.dataset.path : "dataset.spic";
    if (const auto parent = std::filesystem::path(path).parent_path(); !parent.empty())
        std::filesystem::create_directories(parent);
    const Dataset d = simulate_dataset(c.dataset);
    save_dataset(d, path, dtype == "complex128" ? StorageType::complex128 : StorageType::complex64);
    std::cout << json{{"path", path},
                      {"slices", d.slices.size()},
                      {"rows", d.rows()},
                      {"cols", d.cols()},
                      {"n_coils", d.n_coils()},
                      {"dtype", dtype},
                      {"seed", c.dataset.seed}}
                     .dump()
              << "\n";
}

void cmd_mask(const Globals& g, Index rows, Index cols, int R, Index acs, int split_k, double rho, Index shift,
              const std::string& out)
{
    if (!g.config.empty()) {
        const ExperimentConfig c = resolve_config(g);
        rows = c.dataset.rows;
        cols = c.dataset.cols;
        R = c.mask.R;
        acs = c.mask.n_acs;
    }
    const SamplingMask omega = equidistant_mask(rows, cols, R, acs);
    json info = {{"rows", rows}, {"cols", cols}, {"R", R}, {"n_acs", acs}, {"count", omega.count()},
                 {"sampled_rows", omega.rows()}};
    SamplingMask shown = omega;
    if (shift != 0) {
        shown = shifted_pattern(omega, shift);
        info["shift"] = shift;
        info["shifted_rows"] = shown.rows();
    }
    if (split_k > 0) {
        const SSDUSplit s = ssdu_split(omega, rho, split_k, g.seed.value_or(1));
        json pairs = json::array();
        for (const auto& p : s.pairs)
            pairs.push_back({{"theta", p.theta.count()}, {"lambda", p.lambda.count()}});
        info["ssdu"] = {{"rho", rho}, {"seed", g.seed.value_or(1)}, {"pairs", pairs}};
        shown = s.pairs.front().lambda;
    }
    if (!out.empty()) {
        std::ofstream f(out, std::ios::trunc);
        if (!f)
            throw std::runtime_error("cannot write '" + out + "'");
        f << to_pbm(shown);
        info["pbm"] = out;
    } else {
        std::cout << to_pbm(shown);
    }
    std::cerr << info.dump() << "\n";
}

int cmd_perturb_check(const Globals& g, Index n, int R, Index acs, Index coils, int features, double amplitude,
                      int draws)
{
    const std::uint64_t seed = g.seed.value_or(1);
    const ComplexImage<double> phantom = simulate_phantom(n, n, seed);
    const BoolImage support = support_of(phantom);
    const CoilSensitivities<double> maps = simulate_coils(n, n, coils, support);
    const SamplingMask omega = equidistant_mask(n, n, R, acs);
    bool ok = true;
    json results = json::array();
    for (int i = 0; i < draws; ++i) {
        const Perturbation p = generate_perturbation(n, n, R, features, amplitude, seed + static_cast<std::uint64_t>(i),
                                                     &support);
        const OverlapVerdict v = verify_no_overlap(p, R, n);
        const RecoveryCheck<double> rc = verify_pi_recoverable(p.p, maps, omega, 1e-3);
        ok = ok && v.disjoint && rc.recoverable;
        results.push_back({{"seed", p.seed},
                           {"band", {p.band_begin, p.band_begin + p.band_height}},
                           {"rows", p.support_rows},
                           {"disjoint", v.disjoint},
                           {"approximate", v.approximate},
                           {"cg_relative_error", rc.relative_error},
                           {"recoverable", rc.recoverable}});
    }
    std::cout << json{{"n", n}, {"R", R}, {"n_acs", acs}, {"n_coils", coils}, {"draws", results}, {"pass", ok}}.dump(2)
              << "\n";
    return ok ? 0 : 1;
}

void cmd_train(const Globals& g, std::optional<std::string> method, std::optional<int> steps,
               std::optional<std::string> out_dir, bool then_eval)
{
    ExperimentConfig c = require_config(g, "train");
    if (method)
        c.loss.method = parse_loss_method(*method);
    if (steps)
        c.optim.steps = *steps;
    if (out_dir)
        c.output.dir = *out_dir;
    c.loss.validate();
    const DataSplit data = load_data(c.dataset);
    const TrainResult r = train(c, data, console_progress(c.optim.steps, 10));
    json info = {{"checkpoint", r.checkpoint_path}, {"log", r.log_path}, {"steps", r.steps}, {"final_loss", r.final_loss}};
    if (then_eval) {
        const EvalOutputs e = evaluate(c, r.checkpoint_path, data.test, c.output.dir);
        info["eval"] = e.report.summary();
        info["eval"].erase("slices");
    }
    std::cout << info.dump(2) << "\n";
}

void cmd_eval(const Globals& g, const std::string& checkpoint, std::optional<std::string> dataset,
              std::optional<std::string> out_dir)
{
    ExperimentConfig c = require_config(g, "eval");
    if (dataset)
        c.dataset.path = *dataset;
    if (out_dir)
        c.output.dir = *out_dir;
    const DataSplit data = load_data(c.dataset);
    const EvalOutputs e = evaluate(c, checkpoint, data.test, c.output.dir);
    json s = e.report.summary();
    s.erase("slices");
    s["metrics_csv"] = c.path_in_output(c.output.metrics);
    std::cout << s.dump(2) << "\n";
}

void cmd_ablate(const Globals& g, std::optional<std::string> out_dir)
{
    ExperimentConfig c = require_config(g, "ablate-pic");
    if (out_dir)
        c.output.dir = *out_dir;
    const AblationResult r = run_ablation(c, console_progress(c.optim.steps, 10));
    std::cout << json{{"report", r.report_path},
                      {"spicssdu_mean_psnr_db", r.spic.mean_psnr},
                      {"picl2_mean_psnr_db", r.picl2.mean_psnr},
                      {"delta_mean_psnr_db", r.spic.mean_psnr - r.picl2.mean_psnr}}
                     .dump(2)
              << "\n";
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"spic: multi-coil MRI simulation, unrolled reconstruction and self-supervised training"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Override the seed of the command");
    app.add_option("--precision", g.precision, "Network precision")->check(CLI::IsMember({32, 64}));
    app.add_flag("--deterministic", g.deterministic,
                 "Single-threaded, fixed-order execution (the default build is already serial)");

    auto* sim = app.add_subcommand("simulate", "Write a simulated multi-coil dataset");
    std::string sim_out, sim_dtype = "complex64";
    sim->add_option("--out", sim_out, "Output file (default: dataset.path from the config)");
    sim->add_option("--dtype", sim_dtype, "Payload type")->check(CLI::IsMember({"complex64", "complex128"}));

    auto* mask = app.add_subcommand("mask", "Print an undersampling mask as PBM (stats on stderr)");
    Index m_rows = 64, m_cols = 64, m_acs = 8, m_shift = 0;
    int m_R = 4, m_k = 0;
    double m_rho = 0.4;
    std::string m_out;
    mask->add_option("--rows", m_rows);
    mask->add_option("--cols", m_cols);
    mask->add_option("--R", m_R);
    mask->add_option("--acs", m_acs);
    mask->add_option("--shift", m_shift, "Show the pattern shifted by this many rows");
    mask->add_option("--ssdu", m_k, "Draw K SSDU splits and show the first loss mask");
    mask->add_option("--rho", m_rho, "SSDU ratio |Lambda| / |Theta|");
    mask->add_option("--out", m_out, "Write the PBM here instead of stdout");

    auto* pc = app.add_subcommand("perturb-check", "Draw perturbations and verify overlap and PI recovery");
    Index p_n = 64, p_acs = 8, p_coils = 8;
    int p_R = 4, p_feat = 3, p_draws = 5;
    double p_amp = 0.5;
    pc->add_option("--size", p_n);
    pc->add_option("--R", p_R);
    pc->add_option("--acs", p_acs);
    pc->add_option("--coils", p_coils);
    pc->add_option("--features", p_feat);
    pc->add_option("--amplitude", p_amp);
    pc->add_option("--draws", p_draws);

    auto* tr = app.add_subcommand("train", "Train the unrolled network");
    std::optional<std::string> t_method, t_out;
    std::optional<int> t_steps;
    bool t_eval = false;
    tr->add_option("--method", t_method, "Override loss.method");
    tr->add_option("--steps", t_steps, "Override optim.steps");
    tr->add_option("--out-dir", t_out, "Override output.dir");
    tr->add_flag("--eval", t_eval, "Evaluate on the test split afterwards");

    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
    std::string e_ckpt;
    std::optional<std::string> e_data, e_out;
    ev->add_option("--checkpoint", e_ckpt)->required()->check(CLI::ExistingFile);
    ev->add_option("--dataset", e_data, "Dataset file (overrides dataset.path)");
    ev->add_option("--out-dir", e_out, "Override output.dir");

    auto* ab = app.add_subcommand("ablate-pic", "Weighted-l1 vs l2 perturbation-consistency ablation");
    std::optional<std::string> a_out;
    ab->add_option("--out-dir", a_out, "Override output.dir");

    CLI11_PARSE(app, argc, argv);
    if (g.deterministic)
        Eigen::setNbThreads(1);

    try {
        if (*sim)
            cmd_simulate(g, sim_out, sim_dtype);
        else if (*mask)
            cmd_mask(g, m_rows, m_cols, m_R, m_acs, m_k, m_rho, m_shift, m_out);
        else if (*pc)
            return cmd_perturb_check(g, p_n, p_R, p_acs, p_coils, p_feat, p_amp, p_draws);
        else if (*tr)
            cmd_train(g, t_method, t_steps, t_out, t_eval);
        else if (*ev)
            cmd_eval(g, e_ckpt, e_data, e_out);
        else if (*ab)
            cmd_ablate(g, a_out);
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
