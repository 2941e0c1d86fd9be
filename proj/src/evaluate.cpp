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
#include "spic/harness.hpp"

#include "spic/encoding.hpp"
#include "spic/metrics.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <tuple>

namespace spic {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string fixed6(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string indexed(const char* stem, std::size_t i)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%03zu.png", stem, i);
    return buf;
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

std::pair<double, double> mean_std(const std::vector<double>& v)
{
    double mean = 0;
    for (double x : v)
        mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0;
    for (double x : v)
        var += (x - mean) * (x - mean);
    return {mean, std::sqrt(var / static_cast<double>(v.size()))};
}

/// Stacks equally shaped images vertically into one array.
RealImage<double> stack_rows(const std::vector<RealImage<double>>& parts)
{
    RealImage<double> out(parts.front().rows() * static_cast<Index>(parts.size()), parts.front().cols());
    for (std::size_t i = 0; i < parts.size(); ++i)
        out.middleRows(static_cast<Index>(i) * parts[i].rows(), parts[i].rows()) = parts[i];
    return out;
}

template <typename Scalar>
std::vector<ComplexImage<double>> reconstruct_as(const ExperimentConfig& cfg, const RegularizerParams<double>& params,
                                                 const Dataset& test)
{
    const SamplingMask omega = acquisition_mask(cfg);
    const RegularizerParams<Scalar> p = params.template cast<Scalar>();
    std::vector<ComplexImage<double>> out;
    out.reserve(test.slices.size());
    for (const auto& s : test.slices) {
        const TrainingSlice<Scalar> t = make_training_slice<Scalar>(s, omega);
        out.push_back(unrolled_forward(t.y, t.coils, t.omega, p).template cast<Complex<double>>());
    }
    return out;
}

struct Window {
    double lo, hi;
};

Window min_max(const RealImage<double>& img)
{
    return {img.minCoeff(), img.maxCoeff()};
}

json window_json(const Window& w)
{
    return {{"min", w.lo}, {"max", w.hi}};
}

} // namespace

void write_png(const std::string& path, const RealImage<double>& img, double lo, double hi)
{
    if (img.size() == 0)
        throw std::invalid_argument("write_png: empty image");
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (fp == nullptr)
        throw std::runtime_error("cannot write '" + path + "'");
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(fp, &std::fclose);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png == nullptr ? nullptr : png_create_info_struct(png);
    if (info == nullptr) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("write_png: libpng initialisation failed");
    }
    const auto width = static_cast<png_uint_32>(img.cols()), height = static_cast<png_uint_32>(img.rows());
    std::vector<png_byte> pixels(static_cast<std::size_t>(img.size()));
    const double span = hi > lo ? hi - lo : 1.0;
    for (Index r = 0; r < img.rows(); ++r)
        for (Index c = 0; c < img.cols(); ++c) {
            const double v = std::clamp((img(r, c) - lo) / span, 0.0, 1.0);
            pixels[static_cast<std::size_t>(r * img.cols() + c)] = static_cast<png_byte>(std::lround(255.0 * v));
        }
    std::vector<png_bytep> rows(height);
    for (png_uint_32 r = 0; r < height; ++r)
        rows[r] = pixels.data() + static_cast<std::size_t>(r) * width;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("write_png: libpng failed writing '" + path + "'");
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::string EvalReport::csv() const
{
    std::string out = "slice,psnr_db,ssim\n";
    for (std::size_t i = 0; i < slices.size(); ++i)
        out += std::to_string(i) + "," + fixed6(slices[i].psnr_db) + "," + fixed6(slices[i].ssim) + "\n";
    out += "mean," + fixed6(mean_psnr) + "," + fixed6(mean_ssim) + "\n";
    return out;
}

json EvalReport::summary() const
{
    json per_slice = json::array();
    for (const auto& s : slices)
        per_slice.push_back({{"psnr_db", s.psnr_db}, {"ssim", s.ssim}});
    return {{"n_slices", slices.size()},
            {"per_slice_mean", {{"psnr_db", mean_psnr}, {"ssim", mean_ssim}}},
            {"per_slice_std", {{"psnr_db", std_psnr}, {"ssim", std_ssim}}},
            {"per_volume", {{"psnr_db", volume_psnr}, {"ssim", volume_ssim}}},
            {"zero_filled_mean_psnr_db", baseline_mean_psnr},
            {"slices", per_slice}};
}

EvalReport evaluate_reconstructions(const std::vector<ComplexImage<double>>& truth,
                                    const std::vector<ComplexImage<double>>& recon,
                                    const std::vector<BoolImage>* regions)
{
    if (truth.empty() || truth.size() != recon.size())
        throw std::invalid_argument("evaluate: need one reconstruction per reference slice");
    if (regions != nullptr && regions->size() != truth.size())
        throw std::invalid_argument("evaluate: need one region per reference slice");
    const BoolImage* region = regions ? regions->data() : nullptr;
    EvalReport rep;
    std::vector<double> p, s;
    std::vector<RealImage<double>> ref_mag, est_mag;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const BoolImage* r = region ? &region[i] : nullptr;
        rep.slices.push_back({psnr(truth[i], recon[i], r), ssim(truth[i], recon[i], r)});
        p.push_back(rep.slices.back().psnr_db);
        s.push_back(rep.slices.back().ssim);
        ref_mag.push_back(truth[i].abs());
        est_mag.push_back(recon[i].abs());
    }
    std::tie(rep.mean_psnr, rep.std_psnr) = mean_std(p);
    std::tie(rep.mean_ssim, rep.std_ssim) = mean_std(s);

    // Per-volume: the test slices form one volume with a single peak and MSE.
    // SSIM uses the volume peak as dynamic range and averages every window.
    const RealImage<double> ref_vol = stack_rows(ref_mag), est_vol = stack_rows(est_mag);
    BoolImage region_vol;
    if (region) {
        region_vol.resize(ref_vol.rows(), ref_vol.cols());
        for (std::size_t i = 0; i < truth.size(); ++i)
            region_vol.middleRows(static_cast<Index>(i) * region[i].rows(), region[i].rows()) = region[i];
    }
    rep.volume_psnr = psnr_magnitude(ref_vol, est_vol, region ? &region_vol : nullptr);
    const double peak = ref_vol.maxCoeff();
    double ssim_sum = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        ssim_sum += ssim_magnitude(ref_mag[i], est_mag[i], peak, region ? &region[i] : nullptr);
    rep.volume_ssim = ssim_sum / static_cast<double>(truth.size());
    return rep;
}

std::vector<ComplexImage<double>> reconstruct_all(const ExperimentConfig& cfg, const RegularizerParams<double>& params,
                                                  const Dataset& test)
{
    return cfg.model.precision == 32 ? reconstruct_as<float>(cfg, params, test)
                                     : reconstruct_as<double>(cfg, params, test);
}

EvalOutputs evaluate(const ExperimentConfig& cfg, const std::string& checkpoint, const Dataset& test,
                     const std::string& out_dir)
{
    if (test.slices.empty())
        throw std::invalid_argument("evaluate: no test slices");
    const Checkpoint ck = load_checkpoint(checkpoint);
    if (const auto it = ck.header.find("data"); it != ck.header.end()) {
        const Index rows = it->at("rows"), cols = it->at("cols"), coils = it->at("n_coils");
        if (rows != test.rows() || cols != test.cols() || coils != test.n_coils())
            throw ShapeError("evaluate: checkpoint was trained on " + std::to_string(rows) + "x" + std::to_string(cols) +
                             " with " + std::to_string(coils) + " coils, test data is " +
                             std::to_string(test.rows()) + "x" + std::to_string(test.cols()) + " with " +
                             std::to_string(test.n_coils()));
    }
    if (test.rows() != cfg.dataset.rows || test.cols() != cfg.dataset.cols)
        throw ShapeError("evaluate: test data shape does not match the mask config");

    ExperimentConfig run = cfg;
    run.model = ck.params.config;
    run.model.precision = cfg.model.precision;

    EvalOutputs out;
    out.recon = reconstruct_all(run, ck.params, test);
    std::vector<ComplexImage<double>> truth;
    std::vector<BoolImage> supports;
    for (const auto& s : test.slices) {
        truth.push_back(s.ground_truth);
        supports.push_back(s.coils.support);
    }
    out.report = evaluate_reconstructions(truth, out.recon, cfg.output.support_only ? &supports : nullptr);

    const SamplingMask omega = acquisition_mask(cfg);
    double baseline = 0;
    for (const auto& s : test.slices)
        baseline += psnr(s.ground_truth, adjoint(omega.apply(s.full_kspace), s.coils, omega),
                         cfg.output.support_only ? &s.coils.support : nullptr);
    out.report.baseline_mean_psnr = baseline / static_cast<double>(test.slices.size());

    const fs::path dir(out_dir);
    fs::create_directories(dir);
    write_text(dir / cfg.output.metrics, out.report.csv());
    json summary = out.report.summary();
    summary["checkpoint"] = checkpoint;
    summary["method"] = ck.header.value("method", std::string("unknown"));
    summary["beta"] = ck.header.value("beta", json());
    summary["precision"] = run.model.precision;
    summary["config"] = to_json(cfg);
    write_text(dir / "summary.json", summary.dump(2) + "\n");

    if (cfg.output.images) {
        json windows = json::object();
        const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(cfg.output.n_images), truth.size());
        for (std::size_t i = 0; i < n; ++i) {
            const RealImage<double> mag = out.recon[i].abs();
            const RealImage<double> err = (mag - truth[i].abs()).abs();
            const Window wm = min_max(mag), we = min_max(err);
            write_png((dir / indexed("recon", i)).string(), mag, wm.lo, wm.hi);
            write_png((dir / indexed("error", i)).string(), err, we.lo, we.hi);
            windows[indexed("recon", i)] = window_json(wm);
            windows[indexed("error", i)] = window_json(we);
        }
        write_text(dir / "images.json", windows.dump(2) + "\n");
    }
    return out;
}

AblationResult run_ablation(const ExperimentConfig& cfg, const ProgressFn& progress)
{
    const DataSplit data = load_data(cfg.dataset);
    const fs::path dir(cfg.output.dir);
    fs::create_directories(dir);

    struct Variant {
        LossMethod method;
        ExperimentConfig cfg;
        EvalOutputs eval;
    };
    std::vector<Variant> runs;
    for (LossMethod m : {LossMethod::spicssdu, LossMethod::picl2}) {
        Variant v{m, cfg, {}};
        v.cfg.loss.method = m;
        v.cfg.output.dir = (dir / to_string(m)).string();
        const TrainResult tr = train(v.cfg, data, progress);
        v.eval = evaluate(v.cfg, tr.checkpoint_path, data.test, v.cfg.output.dir);
        runs.push_back(std::move(v));
    }
    const EvalReport& a = runs[0].eval.report;
    const EvalReport& b = runs[1].eval.report;

    std::string csv = "slice,spicssdu_psnr_db,spicssdu_ssim,picl2_psnr_db,picl2_ssim\n";
    for (std::size_t i = 0; i < a.slices.size(); ++i)
        csv += std::to_string(i) + "," + fixed6(a.slices[i].psnr_db) + "," + fixed6(a.slices[i].ssim) + "," +
               fixed6(b.slices[i].psnr_db) + "," + fixed6(b.slices[i].ssim) + "\n";
    csv += "mean," + fixed6(a.mean_psnr) + "," + fixed6(a.mean_ssim) + "," + fixed6(b.mean_psnr) + "," +
           fixed6(b.mean_ssim) + "\n";
    write_text(dir / "ablation_metrics.csv", csv);

    json methods = json::array();
    for (const auto& v : runs) {
        json entry = v.eval.report.summary();
        entry.erase("slices");
        entry["method"] = to_string(v.method);
        entry["beta"] = v.cfg.loss.beta_value();
        entry["weighting"] = v.method == LossMethod::spicssdu ? "wavelet-weighted l1" : "normalized l2";
        methods.push_back(entry);
    }
    json report = {{"methods", methods},
                   {"delta_spic_minus_l2",
                    {{"mean_psnr_db", a.mean_psnr - b.mean_psnr}, {"mean_ssim", a.mean_ssim - b.mean_ssim}}},
                   {"zero_filled_mean_psnr_db", a.baseline_mean_psnr},
                   {"shared_init_seed", cfg.optim.init_seed},
                   {"optim_seed", cfg.optim.seed},
                   {"config", to_json(cfg)}};

    json panels = json::object();
    const std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(cfg.output.n_images), data.test.slices.size());
    for (std::size_t i = 0; i < n; ++i) {
        // Panel rows: truth | spicssdu | picl2 | |error| spicssdu | |error| picl2.
        const RealImage<double> truth = data.test.slices[i].ground_truth.abs();
        const RealImage<double> ra = runs[0].eval.recon[i].abs(), rb = runs[1].eval.recon[i].abs();
        const RealImage<double> ea = (ra - truth).abs(), eb = (rb - truth).abs();
        const Window wi{0.0, truth.maxCoeff()};
        const Window we{0.0, std::max({ea.maxCoeff(), eb.maxCoeff(), 1e-12})};
        const Index w = truth.cols();
        RealImage<double> panel(truth.rows(), 5 * w);
        panel.middleCols(0, w) = (truth - wi.lo) / (wi.hi - wi.lo);
        panel.middleCols(w, w) = (ra - wi.lo) / (wi.hi - wi.lo);
        panel.middleCols(2 * w, w) = (rb - wi.lo) / (wi.hi - wi.lo);
        panel.middleCols(3 * w, w) = (ea - we.lo) / (we.hi - we.lo);
        panel.middleCols(4 * w, w) = (eb - we.lo) / (we.hi - we.lo);
        write_png((dir / indexed("panel", i)).string(), panel, 0.0, 1.0);
        panels[indexed("panel", i)] = {{"columns", {"truth", "spicssdu", "picl2", "error_spicssdu", "error_picl2"}},
                                       {"image_window", window_json(wi)},
                                       {"error_window", window_json(we)},
                                       {"psnr_db", {{"spicssdu", a.slices[i].psnr_db}, {"picl2", b.slices[i].psnr_db}}}};
    }
    write_text(dir / "panels.json", panels.dump(2) + "\n");
    report["panels"] = panels;
    write_text(dir / "ablation.json", report.dump(2) + "\n");

    std::string md = "# PIC weighting ablation\n\n";
    md += "Both variants start from init seed " + std::to_string(cfg.optim.init_seed) + " and train for " +
          std::to_string(cfg.optim.steps) + " steps (lr " + fixed6(cfg.optim.lr) + ", R=" +
          std::to_string(cfg.mask.R) + ", " + std::to_string(cfg.mask.n_acs) + " ACS lines).\n\n";
    md += "| method | beta | PSNR mean (dB) | PSNR std | SSIM mean | SSIM std |\n";
    md += "|---|---|---|---|---|---|\n";
    for (const auto& v : runs) {
        const EvalReport& r = v.eval.report;
        char beta[32];
        std::snprintf(beta, sizeof beta, "%g", v.cfg.loss.beta_value());
        md += "| " + to_string(v.method) + " | " + beta + " | " + fixed6(r.mean_psnr) + " | " + fixed6(r.std_psnr) +
              " | " + fixed6(r.mean_ssim) + " | " + fixed6(r.std_ssim) + " |\n";
    }
    md += "| delta (spicssdu - picl2) | | " + fixed6(a.mean_psnr - b.mean_psnr) + " | | " +
          fixed6(a.mean_ssim - b.mean_ssim) + " | |\n\n";
    md += "Zero-filled baseline mean PSNR: " + fixed6(a.baseline_mean_psnr) + " dB.\n\n";
    md += "Per-slice metrics: `ablation_metrics.csv`. Image panels (truth, spicssdu, picl2, and the two error maps): ";
    md += n == 0 ? std::string("none requested.\n") : "`panel_000.png` onwards, windows in `panels.json`.\n";
    write_text(dir / "ablation.md", md);

    AblationResult result{a, b, (dir / "ablation.json").string()};
    return result;
}

} // namespace spic
