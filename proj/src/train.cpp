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

#include "spic/container_io.hpp"
#include "spic/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

namespace spic {

namespace {

using nlohmann::json;

std::uint64_t stream_seed(std::uint64_t seed, std::uint32_t stream, std::uint64_t index)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream,
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

// Stream tags for the training loop's random draws.
constexpr std::uint32_t kEpochOrder = 10;
constexpr std::uint32_t kStepDraws = 11;
constexpr std::uint32_t kFixedSplit = 12;

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch)
{
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(stream_seed(seed, kEpochOrder, epoch));
    // Fisher-Yates written out: std::shuffle's draw sequence is library specific.
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

class JsonLog {
public:
    explicit JsonLog(const std::string& path) : out_(path, std::ios::trunc)
    {
        if (!out_)
            throw std::runtime_error("cannot write training log '" + path + "'");
    }
    void write(const json& line)
    {
        out_ << line.dump() << '\n';
        out_.flush();
    }

private:
    std::ofstream out_;
};

json data_shape(const Dataset& d)
{
    return {{"rows", d.rows()}, {"cols", d.cols()}, {"n_coils", d.n_coils()}};
}

template <typename Scalar>
double validation_psnr(const RegularizerParams<Scalar>& params, const std::vector<TrainingSlice<Scalar>>& val)
{
    double sum = 0;
    for (const auto& s : val) {
        const ComplexImage<Scalar> x = unrolled_forward(s.y, s.coils, s.omega, params);
        sum += psnr(s.truth.template cast<Complex<double>>(), x.template cast<Complex<double>>());
    }
    return sum / static_cast<double>(val.size());
}

template <typename Scalar>
TrainResult train_impl(const ExperimentConfig& cfg, const DataSplit& data, const ProgressFn& progress)
{
    const OptimConfig& opt = cfg.optim;
    const SamplingMask omega = acquisition_mask(cfg);
    std::filesystem::create_directories(cfg.output.dir);

    std::vector<TrainingSlice<Scalar>> slices;
    slices.reserve(data.train.slices.size());
    for (const auto& s : data.train.slices)
        slices.push_back(make_training_slice<Scalar>(s, omega));
    std::vector<TrainingSlice<Scalar>> val;
    if (opt.val_every > 0) {
        const std::size_t n = opt.n_val == 0 ? data.test.slices.size()
                                             : std::min<std::size_t>(static_cast<std::size_t>(opt.n_val),
                                                                     data.test.slices.size());
        for (std::size_t i = 0; i < n; ++i)
            val.push_back(make_training_slice<Scalar>(data.test.slices[i], omega));
    }

    std::vector<SSDUSplit> fixed_splits;
    if (cfg.loss.uses_split() && !opt.resample_splits)
        for (std::size_t i = 0; i < slices.size(); ++i)
            fixed_splits.push_back(ssdu_split(omega, cfg.loss.rho, cfg.loss.K, stream_seed(opt.seed, kFixedSplit, i)));

    // Initialise in double so both precisions start from the same point.
    RegularizerParams<Scalar> params = init_params<double>(cfg.model, opt.init_seed).template cast<Scalar>();
    const UnrolledNet<Scalar> net(params);
    Adam<Scalar> adam(params.theta.size(), opt);
    const Index mu_raw = ParameterLayout(cfg.model).mu_raw;

    TrainResult result;
    result.checkpoint_path = cfg.path_in_output(cfg.output.checkpoint);
    result.log_path = cfg.path_in_output(cfg.output.log);
    JsonLog log(result.log_path);
    log.write({{"type", "config"}, {"config", to_json(cfg)}, {"n_params", params.theta.size()}});

    json meta = {{"config", to_json(cfg)},
                 {"method", to_string(cfg.loss.method)},
                 {"beta", cfg.loss.beta_value()},
                 {"data", data_shape(data.train)},
                 {"init_seed", opt.init_seed},
                 {"optim_seed", opt.seed}};
    auto checkpoint = [&](int step, const char* status) {
        meta["step"] = step;
        meta["status"] = status;
        save_checkpoint(result.checkpoint_path, params.template cast<double>(), meta);
    };

    std::vector<std::size_t> order;
    const std::size_t n = slices.size();
    Vector<Scalar> grad(params.theta.size());
    for (int step = 0; step < opt.steps; ++step) {
        const auto epoch = static_cast<std::uint64_t>(step) / n;
        if (static_cast<std::size_t>(step) % n == 0)
            order = epoch_order(n, opt.seed, epoch);
        const std::size_t idx = order[static_cast<std::size_t>(step) % n];
        const TrainingSlice<Scalar>& slice = slices[idx];

        LossDraws draws =
            make_draws(cfg.loss, omega, slice.coils.support, stream_seed(opt.seed, kStepDraws, static_cast<std::uint64_t>(step)));
        if (!fixed_splits.empty())
            draws.split = fixed_splits[idx];

        grad.setZero();
        LossValue<Scalar> value;
        try {
            value = evaluate_loss(net, slice, cfg.loss, draws, &grad);
        } catch (const NumericalError& e) {
            checkpoint(step, "aborted");
            log.write({{"type", "abort"}, {"step", step + 1}, {"reason", e.what()}});
            throw NumericalError(std::string(e.what()) + " at training step " + std::to_string(step + 1) +
                                 "; last good parameters written to " + result.checkpoint_path);
        }
        if (opt.freeze_mu)
            grad[mu_raw] = 0;
        const double lr = adam.learning_rate(step);
        const Vector<Scalar> previous = params.theta;
        adam.step(params.theta, grad);
        if (!params.theta.allFinite()) {
            params.theta = previous;
            checkpoint(step, "aborted");
            log.write({{"type", "abort"}, {"step", step + 1}, {"reason", "non-finite parameters after update"}});
            throw NumericalError("non-finite parameters after training step " + std::to_string(step + 1) +
                                 "; last good parameters written to " + result.checkpoint_path);
        }

        const double loss = static_cast<double>(value.total);
        result.losses.push_back(loss);
        log.write({{"type", "step"},
                   {"step", step + 1},
                   {"slice", idx},
                   {"loss", loss},
                   {"data_term", static_cast<double>(value.data_term)},
                   {"consistency_term", static_cast<double>(value.consistency_term)},
                   {"mu", static_cast<double>(params.mu())},
                   {"lr", lr}});
        if (opt.val_every > 0 && (step + 1) % opt.val_every == 0 && !val.empty())
            log.write({{"type", "val"}, {"step", step + 1}, {"psnr_db", validation_psnr(params, val)}});
        if (progress)
            progress(step + 1, loss);
    }

    result.steps = opt.steps;
    result.final_loss = result.losses.empty() ? 0.0 : result.losses.back();
    checkpoint(opt.steps, "complete");
    return result;
}

} // namespace

template <typename Scalar>
double Adam<Scalar>::learning_rate(int step) const
{
    if (cfg_.decay_every <= 0)
        return cfg_.lr;
    return cfg_.lr * std::pow(cfg_.lr_decay, step / cfg_.decay_every);
}

template <typename Scalar>
void Adam<Scalar>::step(Vector<Scalar>& theta, const Vector<Scalar>& grad)
{
    if (grad.size() != theta.size() || grad.size() != m_.size())
        throw ShapeError("Adam: gradient size does not match the parameters");
    const double lr = learning_rate(t_);
    ++t_;
    const auto b1 = static_cast<Scalar>(cfg_.beta1), b2 = static_cast<Scalar>(cfg_.beta2);
    m_ = b1 * m_ + (Scalar(1) - b1) * grad;
    v_ = b2 * v_ + (Scalar(1) - b2) * grad.cwiseAbs2();
    const auto c1 = static_cast<Scalar>(1.0 - std::pow(cfg_.beta1, t_));
    const auto c2 = static_cast<Scalar>(1.0 - std::pow(cfg_.beta2, t_));
    const auto eps = static_cast<Scalar>(cfg_.eps);
    theta.array() -= static_cast<Scalar>(lr) * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps);
}

template class Adam<float>;
template class Adam<double>;

void save_checkpoint(const std::string& path, const RegularizerParams<double>& params, const nlohmann::json& meta)
{
    if (params.theta.size() != parameter_count(params.config))
        throw ShapeError("save_checkpoint: parameter vector does not match the model config");
    json header = meta;
    header["format"] = "spic-checkpoint";
    header["version"] = kCheckpointFormatVersion;
    header["model"] = params.config;
    header["n_params"] = params.theta.size();
    std::string payload;
    payload.reserve(static_cast<std::size_t>(params.theta.size()) * sizeof(double));
    for (Index i = 0; i < params.theta.size(); ++i)
        io::append_le(payload, params.theta[i]);
    // Write then rename so an interrupted save never leaves a torn file.
    const std::string tmp = path + ".tmp";
    io::write_container(tmp, header, payload);
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path)
{
    io::Container c = io::read_container(path);
    const json& h = c.header;
    if (h.value("format", std::string()) != "spic-checkpoint")
        throw FormatError("'" + path + "' is not a checkpoint");
    if (h.value("version", -1) != kCheckpointFormatVersion)
        throw FormatError("checkpoint '" + path + "' has unsupported version " + h.value("version", json()).dump());
    Checkpoint out;
    out.header = h;
    out.params.config = h.at("model").get<UnrolledConfig>();
    const Index n = h.at("n_params").get<Index>();
    if (n != parameter_count(out.params.config))
        throw FormatError("checkpoint '" + path + "': parameter count does not match its model config");
    if (c.payload.size() != static_cast<std::size_t>(n) * sizeof(double))
        throw FormatError("checkpoint '" + path + "': payload has " + std::to_string(c.payload.size()) +
                          " bytes, expected " + std::to_string(n * static_cast<Index>(sizeof(double))));
    out.params.theta.resize(n);
    std::size_t offset = 0;
    for (Index i = 0; i < n; ++i)
        out.params.theta[i] = io::read_le<double>(c.payload, offset);
    return out;
}

TrainResult train(const ExperimentConfig& cfg, const DataSplit& data, const ProgressFn& progress)
{
    if (data.train.slices.empty())
        throw std::invalid_argument("train: no training slices");
    return cfg.model.precision == 32 ? train_impl<float>(cfg, data, progress)
                                     : train_impl<double>(cfg, data, progress);
}

TrainResult train(const ExperimentConfig& cfg, const ProgressFn& progress)
{
    return train(cfg, load_data(cfg.dataset), progress);
}

} // namespace spic
