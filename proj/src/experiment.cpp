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
#include "spic/json_util.hpp"

#include <filesystem>
#include <fstream>

namespace spic {

namespace {

using nlohmann::json;

void parse_section(const json& j, DatasetConfig& c)
{
    require_known_keys(j, {"path", "n_train", "n_test", "rows", "cols", "n_coils", "sigma", "seed"}, "dataset");
    read_optional(j, "path", c.path, "dataset");
    read_optional(j, "n_train", c.n_train, "dataset");
    read_optional(j, "n_test", c.n_test, "dataset");
    read_optional(j, "rows", c.rows, "dataset");
    read_optional(j, "cols", c.cols, "dataset");
    read_optional(j, "n_coils", c.n_coils, "dataset");
    read_optional(j, "sigma", c.sigma, "dataset");
    read_optional(j, "seed", c.seed, "dataset");
    if (c.n_train < 1 || c.n_test < 1)
        throw ConfigError("dataset: n_train and n_test must be >= 1");
    if (c.rows < 16 || c.cols < 16 || c.n_coils < 1)
        throw ConfigError("dataset: need rows, cols >= 16 and n_coils >= 1");
    if (!(c.sigma >= 0))
        throw ConfigError("dataset: sigma must be >= 0");
}

void parse_section(const json& j, MaskConfig& c)
{
    require_known_keys(j, {"R", "n_acs"}, "mask");
    read_optional(j, "R", c.R, "mask");
    read_optional(j, "n_acs", c.n_acs, "mask");
    if (c.R < 1 || c.n_acs < 0)
        throw ConfigError("mask: need R >= 1 and n_acs >= 0");
}

void parse_section(const json& j, OptimConfig& c)
{
    require_known_keys(j,
                       {"steps", "lr", "beta1", "beta2", "eps", "lr_decay", "decay_every", "val_every", "n_val",
                        "seed", "init_seed", "freeze_mu", "resample_splits"},
                       "optim");
    read_optional(j, "steps", c.steps, "optim");
    read_optional(j, "lr", c.lr, "optim");
    read_optional(j, "beta1", c.beta1, "optim");
    read_optional(j, "beta2", c.beta2, "optim");
    read_optional(j, "eps", c.eps, "optim");
    read_optional(j, "lr_decay", c.lr_decay, "optim");
    read_optional(j, "decay_every", c.decay_every, "optim");
    read_optional(j, "val_every", c.val_every, "optim");
    read_optional(j, "n_val", c.n_val, "optim");
    read_optional(j, "seed", c.seed, "optim");
    read_optional(j, "init_seed", c.init_seed, "optim");
    read_optional(j, "freeze_mu", c.freeze_mu, "optim");
    read_optional(j, "resample_splits", c.resample_splits, "optim");
    if (c.steps < 0)
        throw ConfigError("optim: steps must be >= 0");
    if (!(c.lr > 0) || !(c.eps > 0))
        throw ConfigError("optim: lr and eps must be positive");
    if (!(c.beta1 >= 0 && c.beta1 < 1) || !(c.beta2 >= 0 && c.beta2 < 1))
        throw ConfigError("optim: beta1 and beta2 must lie in [0, 1)");
    if (!(c.lr_decay > 0) || c.decay_every < 0 || c.val_every < 0 || c.n_val < 0)
        throw ConfigError("optim: invalid decay or validation settings");
}

void parse_section(const json& j, OutputConfig& c)
{
    require_known_keys(j, {"dir", "checkpoint", "log", "metrics", "images", "n_images", "support_only"}, "output");
    read_optional(j, "dir", c.dir, "output");
    read_optional(j, "checkpoint", c.checkpoint, "output");
    read_optional(j, "log", c.log, "output");
    read_optional(j, "metrics", c.metrics, "output");
    read_optional(j, "images", c.images, "output");
    read_optional(j, "n_images", c.n_images, "output");
    read_optional(j, "support_only", c.support_only, "output");
    if (c.dir.empty() || c.checkpoint.empty() || c.log.empty() || c.metrics.empty())
        throw ConfigError("output: file names must be non-empty");
    if (c.n_images < 0)
        throw ConfigError("output: n_images must be >= 0");
}

template <typename Section>
void parse_if_present(const json& j, const char* key, Section& out)
{
    const auto it = j.find(key);
    if (it != j.end())
        parse_section(*it, out);
}

} // namespace

std::string ExperimentConfig::path_in_output(const std::string& name) const
{
    return (std::filesystem::path(output.dir) / name).string();
}

ExperimentConfig parse_experiment_config(const json& j)
{
    require_known_keys(j, {"dataset", "mask", "model", "loss", "optim", "output"}, "<root>");
    ExperimentConfig c;
    parse_if_present(j, "dataset", c.dataset);
    parse_if_present(j, "mask", c.mask);
    if (const auto it = j.find("model"); it != j.end())
        c.model = it->get<UnrolledConfig>();
    if (const auto it = j.find("loss"); it != j.end())
        c.loss = it->get<LossConfig>();
    parse_if_present(j, "optim", c.optim);
    parse_if_present(j, "output", c.output);
    c.model.validate();
    c.loss.validate();
    if (c.mask.R > c.dataset.rows || c.mask.n_acs > c.dataset.rows)
        throw ConfigError("mask: R and n_acs must not exceed the number of rows");
    return c;
}

ExperimentConfig load_experiment_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_experiment_config(j);
}

json to_json(const ExperimentConfig& c)
{
    const auto& d = c.dataset;
    const auto& o = c.optim;
    const auto& out = c.output;
    return json{
        {"dataset",
         {{"path", d.path},
          {"n_train", d.n_train},
          {"n_test", d.n_test},
          {"rows", d.rows},
          {"cols", d.cols},
          {"n_coils", d.n_coils},
          {"sigma", d.sigma},
          {"seed", d.seed}}},
        {"mask", {{"R", c.mask.R}, {"n_acs", c.mask.n_acs}}},
        {"model", c.model},
        {"loss", c.loss},
        {"optim",
         {{"steps", o.steps},
          {"lr", o.lr},
          {"beta1", o.beta1},
          {"beta2", o.beta2},
          {"eps", o.eps},
          {"lr_decay", o.lr_decay},
          {"decay_every", o.decay_every},
          {"val_every", o.val_every},
          {"n_val", o.n_val},
          {"seed", o.seed},
          {"init_seed", o.init_seed},
          {"freeze_mu", o.freeze_mu},
          {"resample_splits", o.resample_splits}}},
        {"output",
         {{"dir", out.dir},
          {"checkpoint", out.checkpoint},
          {"log", out.log},
          {"metrics", out.metrics},
          {"images", out.images},
          {"n_images", out.n_images},
          {"support_only", out.support_only}}},
    };
}

Dataset simulate_dataset(const DatasetConfig& cfg)
{
    return build_dataset(cfg.n_train + cfg.n_test, cfg.rows, cfg.cols, cfg.n_coils, NoiseSpec{cfg.sigma, cfg.seed},
                         cfg.seed);
}

DataSplit load_data(const DatasetConfig& cfg)
{
    Dataset all;
    if (cfg.path.empty()) {
        all = simulate_dataset(cfg);
    } else {
        all = load_dataset(cfg.path);
        if (all.rows() != cfg.rows || all.cols() != cfg.cols || all.n_coils() != cfg.n_coils)
            throw ShapeError("dataset '" + cfg.path + "' is " + std::to_string(all.rows()) + "x" +
                             std::to_string(all.cols()) + " with " + std::to_string(all.n_coils()) +
                             " coils, config expects " + std::to_string(cfg.rows) + "x" + std::to_string(cfg.cols) +
                             " with " + std::to_string(cfg.n_coils));
    }
    const auto need = static_cast<std::size_t>(cfg.n_train + cfg.n_test);
    if (all.slices.size() < need)
        throw std::invalid_argument("dataset has " + std::to_string(all.slices.size()) + " slices, config needs " +
                                    std::to_string(need));
    DataSplit out;
    out.train.metadata = out.test.metadata = all.metadata;
    auto first = std::make_move_iterator(all.slices.begin());
    out.train.slices.assign(first, first + cfg.n_train);
    out.test.slices.assign(first + cfg.n_train, first + cfg.n_train + cfg.n_test);
    return out;
}

SamplingMask acquisition_mask(const ExperimentConfig& c)
{
    return equidistant_mask(c.dataset.rows, c.dataset.cols, c.mask.R, c.mask.n_acs);
}

template <typename Scalar>
TrainingSlice<Scalar> make_training_slice(const DatasetSlice& s, const SamplingMask& omega)
{
    TrainingSlice<Scalar> t;
    t.y = omega.apply(s.full_kspace).template cast<Scalar>();
    t.coils = s.coils.template cast<Scalar>();
    t.omega = omega;
    t.truth = s.ground_truth.template cast<Complex<Scalar>>();
    return t;
}

template TrainingSlice<float> make_training_slice<float>(const DatasetSlice&, const SamplingMask&);
template TrainingSlice<double> make_training_slice<double>(const DatasetSlice&, const SamplingMask&);

} // namespace spic
