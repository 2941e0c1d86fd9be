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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Pass criterion numbers as arguments to run a subset.

#include "dense_oracle.hpp"
#include "overlap_oracle.hpp"
#include "spic/cg.hpp"
#include "spic/data_model.hpp"
#include "spic/harness.hpp"
#include "spic/metrics.hpp"
#include "spic/wavelet.hpp"
#include "tiny_problem.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

using namespace spic;
using namespace spic::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* title;
    double limit_s;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double rel(const ComplexImage<double>& got, const ComplexImage<double>& ref)
{
    return (got - ref).matrix().norm() / ref.matrix().norm();
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + p.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome adjointness()
{
    std::mt19937_64 rng(2026);
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
        const Index rows = std::uniform_int_distribution<Index>(8, 48)(rng);
        const Index cols = std::uniform_int_distribution<Index>(8, 48)(rng);
        const Index nc = std::uniform_int_distribution<Index>(1, 8)(rng);
        const double p = std::uniform_real_distribution<double>(0.1, 0.9)(rng);
        const auto coils = random_coils(rows, cols, nc, rng());
        const SamplingMask m = random_mask(rows, cols, p, rng());
        const ComplexImage<double> x = random_image(rows, cols, rng());
        const KSpace<double> y(nc, random_image(nc * rows, cols, rng()));
        const KSpace<double> ex = forward(x, coils, m);
        const Complex<double> lhs = (ex.data.conjugate() * y.data).sum();
        const Complex<double> rhs = (x.conjugate() * adjoint(y, coils, m)).sum();
        worst = std::max(worst, std::abs(lhs - rhs) / (ex.data.matrix().norm() * y.data.matrix().norm()));
    }
    return {worst < 1e-12, fmt("max relative dot-test error %.2e over 100 triples", worst)};
}

Outcome dense_oracle()
{
    const Index n = 16;
    const CoilSensitivities<double> coils = simulate_coils(n, n, 4, BoolImage::Constant(n, n, true));
    const SamplingMask m = equidistant_mask(n, n, 2, 4);
    const DenseMatrix e = dense_encoding(coils, m);
    const DenseMatrix normal = e.adjoint() * e;
    const KSpace<double> y = m.apply(KSpace<double>(4, random_image(4 * n, n, 5)));
    const ComplexImage<double> z = random_image(n, n, 6);
    double worst = 0;
    for (double mu : {0.0, 0.05, 1.0}) {
        const DenseMatrix a = normal + mu * DenseMatrix::Identity(n * n, n * n);
        const DenseVector b = e.adjoint() * vec(y.data) + mu * vec(z);
        const ComplexImage<double> ref = unvec(a.partialPivLu().solve(b), n, n);
        CgOptions<double> opts;
        opts.mu = mu;
        opts.iterations = 1000;
        opts.tolerance = 1e-14;
        worst = std::max(worst, rel(cg_normal(y, coils, m, opts, &z).x, ref));
    }
    return {worst < 1e-8, fmt("max relative error %.2e for mu in {0, 0.05, 1}", worst)};
}

Outcome cg_sense_recovery()
{
    const ComplexImage<double> x = simulate_phantom(64, 64, 4);
    const CoilSensitivities<double> coils = simulate_coils(64, 64, 8, support_of(x));
    const SamplingMask m = equidistant_mask(64, 64, 2, 0);
    const double err = rel(cg_sense(forward(x, coils, m), coils, m, 50, 1e-10), x);
    return {err < 1e-5, fmt("relative error %.2e", err)};
}

Outcome perturbation_calibration()
{
    const ComplexImage<double> x = simulate_phantom(64, 64, 11);
    const CoilSensitivities<double> coils = simulate_coils(64, 64, 8, support_of(x));
    const SamplingMask omega = equidistant_mask(64, 64, 4, 8);
    const KSpace<double> y = add_noise(forward(x, coils, omega), omega, NoiseSpec{0.01, 12});
    const auto f = [&](const KSpace<double>& k) { return cg_sense(k, coils, omega, 500, 0.0); };
    const ComplexImage<double> clean = f(y);
    double worst = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Perturbation p = generate_perturbation(64, 64, 4, 3, 0.5, 1000 + seed, &coils.support);
        const ComplexImage<double> est = estimate_perturbation(f(perturb_measurements(y, p.p, coils, omega)), clean);
        worst = std::max(worst, rel(est, p.p));
    }
    int mismatches = 0;
    for (int i = 0; i < 200; ++i) {
        const OverlapCase c = overlap_case(i, 17);
        mismatches += verify_no_overlap(c.support_rows, c.R, c.rows).disjoint !=
                      brute_force_disjoint(c.support_rows, c.R, c.rows, c.cols);
    }
    return {worst < 1e-3 && mismatches == 0,
            fmt("max recovery error %.2e over 20 draws; %d/200 verifier mismatches", worst, mismatches)};
}

std::vector<double> band_energies(const Pyramid<double>& p)
{
    std::vector<double> e;
    for (const auto& level : p.bands)
        for (const auto& b : level)
            e.push_back(b.abs2().sum());
    return e;
}

Outcome wavelet_correctness()
{
    const WaveletTransform<double> w(64, 64, 3, WaveletKind::dtcwt);
    double pr = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const ComplexImage<double> x = random_image(64, 64, 500 + seed);
        pr = std::max(pr, (wavelet_inverse(w, wavelet_forward(w, x)) - x).abs().maxCoeff() / x.abs().maxCoeff());
    }
    const WaveletCoeffs<double> c = wavelet_forward(w, ComplexImage<double>(ComplexImage<double>::Constant(64, 64, {0.7, -0.2})));
    double hp = 0;
    for (const Pyramid<double>* p : {&c.re, &c.im})
        for (const auto& level : p->bands)
            for (const auto& b : level)
                hp = std::max(hp, b.abs().maxCoeff());
    RealImage<double> a = RealImage<double>::Zero(64, 64), b = RealImage<double>::Zero(64, 64);
    a(32, 32) = 1.0;
    b(32, 33) = 1.0;
    const WaveletTransform<double> w2(64, 64, 2, WaveletKind::dtcwt);
    const auto ea = band_energies(w2.forward(a)), eb = band_energies(w2.forward(b));
    double shift = 0;
    for (std::size_t i = 0; i < ea.size(); ++i)
        shift = std::max(shift, std::abs(ea[i] - eb[i]) / ea[i]);
    return {pr < 1e-10 && hp < 1e-10 && shift < 0.05,
            fmt("reconstruction %.1e, constant highpass %.1e, 1-px shift energy change %.2f%%", pr, hp,
                100 * shift)};
}

Outcome weighted_l1_semantics()
{
    const double eps = 1e-4;
    const WaveletTransform<double> w(64, 64, 3, WaveletKind::dtcwt);
    double zero = 0, worst_ratio_err = 0, min_alias = 1e300;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const ComplexImage<double> p = generate_perturbation(64, 64, 4, 3, 0.5, seed).p;
        zero = std::max(zero, weighted_l1<double>(w, ComplexImage<double>::Zero(64, 64), p, eps));
        // A coefficient counts as on-support when its magnitude exceeds eps,
        // i.e. where its ratio |c| / (|c| + eps) passes one half.
        const Vector<double> mag = paired_magnitudes(wavelet_forward(w, p));
        const double on_support = static_cast<double>((mag.array() > eps).count()) / static_cast<double>(mag.size());
        const double matched = weighted_l1(w, p, p, eps);
        worst_ratio_err = std::max(worst_ratio_err, std::abs(matched - on_support) / on_support);
        // The same blobs displaced onto an alias replica (shift rows / R).
        ComplexImage<double> aliased(64, 64);
        for (Index r = 0; r < 64; ++r)
            aliased.row((r + 16) % 64) = p.row(r);
        min_alias = std::min(min_alias, weighted_l1(w, aliased, p, eps) / matched);
    }
    return {zero == 0.0 && worst_ratio_err < 0.02 && min_alias >= 10,
            fmt("wl1(0,p)=%g; |wl1(p,p) - on-support/N| <= %.2f%%; aliased/matched >= %.1fx", zero,
                100 * worst_ratio_err, min_alias)};
}

constexpr LossMethod kAllMethods[] = {LossMethod::supervised, LossMethod::mmssdu,   LossMethod::ulim,
                                      LossMethod::ccssdu,     LossMethod::spicssdu, LossMethod::picl2};

Outcome gradient_exactness()
{
    const auto s = tiny_slice(21);
    double worst = 0;
    std::string per;
    for (LossMethod m : kAllMethods) {
        auto params = tiny_params(31);
        const UnrolledNet<double> net(params);
        const LossConfig cfg = tiny_loss(m);
        const LossDraws draws = make_draws(cfg, s.omega, s.coils.support, 41);
        Vector<double> ad = Vector<double>::Zero(params.theta.size());
        evaluate_loss(net, s, cfg, draws, &ad);
        const auto check = check_gradient(params, ad, [&] { return evaluate_loss(net, s, cfg, draws).total; }, 50, 51);
        worst = std::max(worst, check.max_rel_error);
        per += " " + to_string(m) + fmt("=%.1e", check.max_rel_error);
    }
    return {worst < 1e-5, "max relative error per loss:" + per};
}

Outcome degeneracies()
{
    int equal = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const TrainingSlice<double> s = tiny_slice(100 + seed);
        const auto params = tiny_params(200 + seed);
        const UnrolledNet<double> net(params);
        LossConfig mm = tiny_loss(LossMethod::mmssdu), spic = tiny_loss(LossMethod::spicssdu),
                   cc = tiny_loss(LossMethod::ccssdu);
        spic.beta = 0.0;
        cc.beta = 0.0;
        LossDraws draws = make_draws(spic, s.omega, s.coils.support, 300 + seed);
        draws.deltas = make_draws(cc, s.omega, s.coils.support, 300 + seed).deltas;
        const double v_mm = evaluate_loss(net, s, mm, draws).total;
        equal += evaluate_loss(net, s, spic, draws).total == v_mm && evaluate_loss(net, s, cc, draws).total == v_mm;
    }
    return {equal == 10, fmt("%d/10 slices with spicssdu(0) == ccssdu(0) == mmssdu bitwise", equal)};
}

fs::path source_dir()
{
    return fs::path(SPIC_SOURCE_DIR);
}

Outcome desk_benchmark(const fs::path& out)
{
    ExperimentConfig cfg = load_experiment_config((source_dir() / "configs" / "desk_benchmark.json").string());
    const DataSplit data = load_data(cfg.dataset);
    std::vector<ComplexImage<double>> truth;
    for (const DatasetSlice& s : data.test.slices)
        truth.push_back(s.ground_truth);

    const LossMethod methods[] = {LossMethod::supervised, LossMethod::mmssdu, LossMethod::ulim, LossMethod::ccssdu,
                                  LossMethod::spicssdu};
    std::map<LossMethod, double> psnr;
    double baseline = 0;
    std::cout << "  method      support PSNR  SSIM    whole-image PSNR  train s\n";
    for (LossMethod m : methods) {
        ExperimentConfig c = cfg;
        c.loss.method = m;
        c.output.dir = (out / to_string(m)).string();
        const auto t0 = std::chrono::steady_clock::now();
        const TrainResult r = train(c, data);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const EvalOutputs e = evaluate(c, r.checkpoint_path, data.test, c.output.dir);
        const EvalReport whole = evaluate_reconstructions(truth, e.recon);
        psnr[m] = e.report.mean_psnr;
        baseline = e.report.baseline_mean_psnr;
        std::cout << fmt("  %-10s  %10.2f    %.4f  %10.2f        %6.0f\n", to_string(m).c_str(), e.report.mean_psnr,
                         e.report.mean_ssim, whole.mean_psnr, secs)
                  << std::flush;
    }
    std::cout << fmt("  zero-filled %10.2f\n", baseline);
    const double sup = psnr[LossMethod::supervised];
    const bool a = sup - baseline >= 3.0;
    const bool b = psnr[LossMethod::spicssdu] >= psnr[LossMethod::mmssdu] - 0.1;
    double worst_gap = 0;
    for (LossMethod m : {LossMethod::mmssdu, LossMethod::ulim, LossMethod::ccssdu, LossMethod::spicssdu})
        worst_gap = std::max(worst_gap, std::abs(sup - psnr[m]));
    const bool c = worst_gap <= 3.0;
    return {a && b && c, fmt("(a) supervised - zero-filled = %.2f dB %s; (b) spic - mm = %+.2f dB %s; "
                             "(c) largest gap to supervised %.2f dB %s",
                             sup - baseline, a ? "ok" : "FAIL",
                             psnr[LossMethod::spicssdu] - psnr[LossMethod::mmssdu], b ? "ok" : "FAIL", worst_gap,
                             c ? "ok" : "FAIL")};
}

Outcome ablation(const fs::path& out)
{
    ExperimentConfig cfg = load_experiment_config((source_dir() / "configs" / "ablation.json").string());
    std::string csv[2];
    AblationResult r;
    for (int run = 0; run < 2; ++run) {
        const fs::path dir = out / (run == 0 ? "run_a" : "run_b");
        fs::remove_all(dir);
        cfg.output.dir = dir.string();
        r = run_ablation(cfg);
        csv[run] = slurp(dir / "ablation_metrics.csv");
    }
    const fs::path dir = out / "run_b";
    bool complete = true;
    for (const char* f : {"ablation.json", "ablation.md", "ablation_metrics.csv", "panels.json", "panel_000.png",
                          "spicssdu/model.ckpt", "picl2/model.ckpt"})
        complete = complete && fs::exists(dir / f);
    const bool same = csv[0] == csv[1];
    return {complete && same,
            fmt("weighted-l1 %.2f dB vs l2 %.2f dB; report %s; re-run CSV %s", r.spic.mean_psnr, r.picl2.mean_psnr,
                complete ? "complete" : "INCOMPLETE", same ? "byte-identical" : "DIFFERS")};
}

} // namespace

int main(int argc, char** argv)
{
    std::set<int> only;
    for (int i = 1; i < argc; ++i)
        only.insert(std::stoi(argv[i]));
    const fs::path out = fs::current_path() / "acceptance_out";

    const std::vector<Criterion> criteria = {
        {1, "operator adjointness", 10, adjointness},
        {2, "dense-oracle equivalence", 30, dense_oracle},
        {3, "CG-SENSE identifiable recovery", 5, cg_sense_recovery},
        {4, "perturbation-recovery calibration", 60, perturbation_calibration},
        {5, "wavelet correctness", 30, wavelet_correctness},
        {6, "weighted-l1 semantics", 10, weighted_l1_semantics},
        {7, "gradient exactness", 300, gradient_exactness},
        {8, "loss degeneracies", 60, degeneracies},
        {9, "desk-scale directional result", 3600, [&] { return desk_benchmark(out / "desk"); }},
        {10, "ablation harness", 3600, [&] { return ablation(out / "ablation"); }},
    };

    int failed = 0;
    for (const Criterion& c : criteria) {
        if (!only.empty() && !only.count(c.id))
            continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.limit_s;
        const bool pass = o.pass && in_time;
        failed += !pass;
        std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.title << "): " << o.detail
                  << fmt(" [%.1f s, limit %.0f s%s]", secs, c.limit_s, in_time ? "" : ", OVER") << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
