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
#pragma once

#include "spic/data_model.hpp"
#include "spic/losses.hpp"
#include "spic/regularizer.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace spic {

struct DatasetConfig {
    /// Existing dataset file; when empty the slices are simulated in memory.
    std::string path;
    int n_train = 100;
    int n_test = 20;
    Index rows = 64;
    Index cols = 64;
    Index n_coils = 8;
    double sigma = 0.0;
    std::uint64_t seed = 1;
};

struct MaskConfig {
    int R = 4;
    Index n_acs = 8;
};

struct OptimConfig {
    int steps = 200;
    double lr = 5e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    /// lr is multiplied by lr_decay every decay_every steps (0 disables).
    double lr_decay = 1.0;
    int decay_every = 0;
    int val_every = 0;
    int n_val = 4;
    std::uint64_t seed = 1;
    std::uint64_t init_seed = 1;
    bool freeze_mu = false;
    /// Draw fresh SSDU splits every step instead of one fixed set per slice.
    bool resample_splits = false;
};

struct OutputConfig {
    std::string dir = "out";
    std::string checkpoint = "model.ckpt";
    std::string log = "train.jsonl";
    std::string metrics = "metrics.csv";
    bool images = true;
    int n_images = 4;
    /// Restrict evaluation metrics to the object support instead of the FOV.
    bool support_only = false;
};

struct ExperimentConfig {
    DatasetConfig dataset;
    MaskConfig mask;
    UnrolledConfig model;
    LossConfig loss;
    OptimConfig optim;
    OutputConfig output;

    std::string path_in_output(const std::string& name) const;
};

/// Strict parse: unknown sections or keys are errors.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& c);

/// Train and test slices per the dataset section.
struct DataSplit {
    Dataset train;
    Dataset test;
};
DataSplit load_data(const DatasetConfig& cfg);
/// The full dataset (train then test slices) as one object, for `simulate`.
Dataset simulate_dataset(const DatasetConfig& cfg);

SamplingMask acquisition_mask(const ExperimentConfig& c);

template <typename Scalar>
TrainingSlice<Scalar> make_training_slice(const DatasetSlice& s, const SamplingMask& omega);

// ---- checkpoints ----------------------------------------------------------

struct Checkpoint {
    RegularizerParams<double> params;
    nlohmann::json header;
};

inline constexpr int kCheckpointFormatVersion = 1;

/// JSON header (config, step, seeds) + NUL + float64 little-endian theta.
void save_checkpoint(const std::string& path, const RegularizerParams<double>& params, const nlohmann::json& meta);
Checkpoint load_checkpoint(const std::string& path);

// ---- optimiser ------------------------------------------------------------

template <typename Scalar>
class Adam {
public:
    Adam(Index n, const OptimConfig& cfg)
        : cfg_(cfg), m_(Vector<Scalar>::Zero(n)), v_(Vector<Scalar>::Zero(n)) {}

    double learning_rate(int step) const;
    void step(Vector<Scalar>& theta, const Vector<Scalar>& grad);
    int steps_taken() const { return t_; }

private:
    OptimConfig cfg_;
    Vector<Scalar> m_, v_;
    int t_ = 0;
};

// ---- training and evaluation ----------------------------------------------

struct TrainResult {
    std::string checkpoint_path;
    std::string log_path;
    int steps = 0;
    double final_loss = 0;
    std::vector<double> losses;
};

/// Progress callback (step, loss); used by the CLI for console output.
using ProgressFn = std::function<void(int, double)>;

TrainResult train(const ExperimentConfig& cfg, const DataSplit& data, const ProgressFn& progress = {});
TrainResult train(const ExperimentConfig& cfg, const ProgressFn& progress = {});

struct SliceMetrics {
    double psnr_db = 0;
    double ssim = 0;
};

struct EvalReport {
    std::vector<SliceMetrics> slices;
    double mean_psnr = 0, std_psnr = 0, mean_ssim = 0, std_ssim = 0;
    /// Whole-test-set aggregates (one peak and MSE over every slice).
    double volume_psnr = 0, volume_ssim = 0;
    /// Zero-filled E^H y baseline on the same slices.
    double baseline_mean_psnr = 0;

    std::string csv() const;
    nlohmann::json summary() const;
};

/// Metrics of already computed reconstructions against their references,
/// optionally restricted to one region per slice.
EvalReport evaluate_reconstructions(const std::vector<ComplexImage<double>>& truth,
                                    const std::vector<ComplexImage<double>>& recon,
                                    const std::vector<BoolImage>* regions = nullptr);

/// Reconstructs every test slice with the network at the config precision.
std::vector<ComplexImage<double>> reconstruct_all(const ExperimentConfig& cfg, const RegularizerParams<double>& params,
                                                  const Dataset& test);

struct EvalOutputs {
    EvalReport report;
    std::vector<ComplexImage<double>> recon;
};

/// Evaluates `checkpoint` on the test split and writes the CSV, a summary
/// JSON and (optionally) PNG magnitude and error images into `out_dir`.
EvalOutputs evaluate(const ExperimentConfig& cfg, const std::string& checkpoint, const Dataset& test,
                     const std::string& out_dir);

struct AblationResult {
    EvalReport spic;
    EvalReport picl2;
    std::string report_path;
};

/// Trains the weighted-l1 (spicssdu) and l2 (picl2) variants from the same
/// initial parameters and writes a side-by-side report.
AblationResult run_ablation(const ExperimentConfig& cfg, const ProgressFn& progress = {});

// ---- image output ---------------------------------------------------------

/// 8-bit grayscale PNG, linearly windowed from [lo, hi] to [0, 255].
void write_png(const std::string& path, const RealImage<double>& img, double lo, double hi);

} // namespace spic
