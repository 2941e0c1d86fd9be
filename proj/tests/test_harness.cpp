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
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spic/harness.hpp"
#include "spic/metrics.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace spic;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("spic_test_harness_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

json small_config(const fs::path& dir, const std::string& method, int steps)
{
    return {{"dataset", {{"n_train", 4}, {"n_test", 2}, {"rows", 32}, {"cols", 32}, {"n_coils", 4}, {"sigma", 0.002},
                         {"seed", 3}}},
            {"mask", {{"R", 4}, {"n_acs", 4}}},
            {"model", {{"T", 2}, {"cg_iters", 3}, {"blocks", 1}, {"channels", 4}, {"kernel", 3}, {"precision", 64}}},
            {"loss", {{"method", method}, {"K", 1}, {"n_perturbations", 1}, {"levels", 2}}},
            {"optim", {{"steps", steps}, {"lr", 1e-3}, {"seed", 5}, {"init_seed", 6}}},
            {"output", {{"dir", dir.string()}, {"n_images", 1}}}};
}

std::vector<json> log_lines(const fs::path& p, const std::string& type)
{
    std::ifstream in(p);
    std::vector<json> out;
    for (std::string line; std::getline(in, line);) {
        json j = json::parse(line);
        if (j.at("type") == type)
            out.push_back(std::move(j));
    }
    return out;
}

} // namespace

TEST_CASE("config parsing is strict")
{
    const json good = small_config("/tmp/x", "mmssdu", 2);
    const ExperimentConfig c = parse_experiment_config(good);
    CHECK(c.dataset.n_train == 4);
    CHECK(c.loss.method == LossMethod::mmssdu);
    CHECK(parse_experiment_config(to_json(c)).optim.steps == 2);

    json extra = good;
    extra["optim"]["learning_rate"] = 1.0;
    CHECK_THROWS_AS(parse_experiment_config(extra), std::invalid_argument);
    json root = good;
    root["trainer"] = json::object();
    CHECK_THROWS_AS(parse_experiment_config(root), std::invalid_argument);
    json bad_method = good;
    bad_method["loss"]["method"] = "ssdu++";
    CHECK_THROWS_AS(parse_experiment_config(bad_method), std::invalid_argument);
    json bad_type = good;
    bad_type["dataset"]["rows"] = "many";
    CHECK_THROWS(parse_experiment_config(bad_type));
    json negative = good;
    negative["optim"]["lr"] = -1.0;
    CHECK_THROWS_AS(parse_experiment_config(negative), std::invalid_argument);
    CHECK_THROWS(load_experiment_config("/nonexistent/config.json"));
}

TEST_CASE("smoke training run: log, checkpoint, determinism")
{
    const fs::path a = scratch("smoke");
    const TrainResult ra = train(parse_experiment_config(small_config(a, "mmssdu", 5)));
    CHECK(ra.steps == 5);
    CHECK(ra.losses.size() == 5);
    const auto steps = log_lines(ra.log_path, "step");
    REQUIRE(steps.size() == 5);
    CHECK(steps.back().at("step") == 5);
    CHECK(log_lines(ra.log_path, "config").size() == 1);

    const std::string first = slurp(ra.checkpoint_path), first_log = slurp(ra.log_path);
    const TrainResult rb = train(parse_experiment_config(small_config(a, "mmssdu", 5)));
    CHECK(slurp(rb.checkpoint_path) == first);
    CHECK(slurp(rb.log_path) == first_log);
    CHECK(ra.losses == rb.losses);

    const Checkpoint ck = load_checkpoint(ra.checkpoint_path);
    CHECK(ck.header.at("format") == "spic-checkpoint");
    CHECK(ck.header.at("version") == kCheckpointFormatVersion);
    CHECK(ck.header.at("step") == 5);
    CHECK(ck.header.at("status") == "complete");
    CHECK(ck.header.at("method") == "mmssdu");
    CHECK(ck.params.theta.size() == parameter_count(ck.params.config));
}

TEST_CASE("checkpoint round trip and corruption")
{
    const fs::path dir = scratch("ckpt");
    UnrolledConfig cfg;
    cfg.blocks = 1;
    cfg.channels = 4;
    const RegularizerParams<double> p = init_params<double>(cfg, 4);
    const std::string path = (dir / "m.ckpt").string();
    save_checkpoint(path, p, {{"step", 3}, {"status", "complete"}});
    const Checkpoint back = load_checkpoint(path);
    CHECK((back.params.theta.array() == p.theta.array()).all());
    CHECK(back.params.config.channels == 4);
    CHECK(back.header.at("step") == 3);

    std::string bytes = slurp(path);
    bytes.resize(bytes.size() - 8);
    std::ofstream(dir / "short.ckpt", std::ios::binary) << bytes;
    CHECK_THROWS(load_checkpoint((dir / "short.ckpt").string()));
    std::ofstream(dir / "junk.ckpt", std::ios::binary) << "not a checkpoint";
    CHECK_THROWS(load_checkpoint((dir / "junk.ckpt").string()));
    CHECK_THROWS(load_checkpoint((dir / "missing.ckpt").string()));
}

TEST_CASE("evaluation: truth as reconstruction, CSV layout")
{
    const ExperimentConfig c = parse_experiment_config(small_config("/tmp/unused", "supervised", 1));
    const DataSplit data = load_data(c.dataset);
    std::vector<ComplexImage<double>> truth;
    for (const DatasetSlice& s : data.test.slices)
        truth.push_back(s.ground_truth);
    const EvalReport same = evaluate_reconstructions(truth, truth);
    REQUIRE(same.slices.size() == 2);
    for (const SliceMetrics& m : same.slices) {
        CHECK(m.psnr_db == kPsnrCap);
        CHECK(m.ssim == 1.0);
    }
    const std::string csv = same.csv();
    CHECK(csv.rfind("slice,psnr_db,ssim\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    CHECK(csv.find("\nmean,") != std::string::npos);
    CHECK(same.summary().contains("per_slice_mean"));
}

TEST_CASE("train then evaluate writes deterministic metrics and images")
{
    const fs::path dir = scratch("eval");
    const ExperimentConfig c = parse_experiment_config(small_config(dir, "supervised", 3));
    const DataSplit data = load_data(c.dataset);
    const TrainResult r = train(c, data);
    const EvalOutputs one = evaluate(c, r.checkpoint_path, data.test, (dir / "e1").string());
    const EvalOutputs two = evaluate(c, r.checkpoint_path, data.test, (dir / "e2").string());
    CHECK(slurp(dir / "e1" / "metrics.csv") == slurp(dir / "e2" / "metrics.csv"));
    CHECK(one.report.mean_psnr > one.report.baseline_mean_psnr);
    CHECK(fs::exists(dir / "e1" / "summary.json"));
    CHECK(fs::exists(dir / "e1" / "recon_000.png"));
    CHECK(fs::exists(dir / "e1" / "error_000.png"));
    CHECK(slurp(dir / "e1" / "recon_000.png").substr(1, 3) == "PNG");
    CHECK(two.recon.size() == 2);

    // Data shape must match the checkpoint.
    ExperimentConfig other = c;
    other.dataset.rows = 16;
    other.dataset.cols = 16;
    const DataSplit small = load_data(other.dataset);
    CHECK_THROWS_AS(evaluate(c, r.checkpoint_path, small.test, (dir / "e3").string()), ShapeError);
}

TEST_CASE("non-finite training aborts and keeps the last good checkpoint")
{
    const fs::path dir = scratch("abort");
    json cfg = small_config(dir, "supervised", 20);
    cfg["optim"]["lr"] = 1e300;
    CHECK_THROWS_AS(train(parse_experiment_config(cfg)), NumericalError);
    const Checkpoint ck = load_checkpoint((dir / "model.ckpt").string());
    CHECK(ck.header.at("status") == "aborted");
    CHECK(ck.params.theta.allFinite());
    CHECK(log_lines(dir / "train.jsonl", "abort").size() == 1);
}

TEST_CASE("ablation with beta = 0 trains both variants to the same model")
{
    const fs::path dir = scratch("ablate");
    json cfg = small_config(dir, "spicssdu", 2);
    cfg["loss"]["beta"] = 0.0;
    const AblationResult r = run_ablation(parse_experiment_config(cfg));
    CHECK(slurp(dir / "spicssdu" / "model.ckpt").size() > 0);
    CHECK(r.spic.mean_psnr == r.picl2.mean_psnr);
    CHECK(r.spic.mean_ssim == r.picl2.mean_ssim);
    CHECK(fs::exists(dir / "ablation_metrics.csv"));
    CHECK(fs::exists(dir / "ablation.json"));
    CHECK(fs::exists(dir / "ablation.md"));
    CHECK(fs::exists(dir / "panel_000.png"));
    const std::string csv = slurp(dir / "ablation_metrics.csv");
    CHECK(csv.rfind("slice,spicssdu_psnr_db,spicssdu_ssim,picl2_psnr_db,picl2_ssim\n", 0) == 0);
}
