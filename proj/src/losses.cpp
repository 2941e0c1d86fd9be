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
#include "spic/losses.hpp"

#include "spic/json_util.hpp"

#include <random>

namespace spic {

namespace {

struct MethodName {
    LossMethod method;
    const char* name;
};

constexpr MethodName kMethods[] = {
    {LossMethod::supervised, "supervised"}, {LossMethod::mmssdu, "mmssdu"},     {LossMethod::ulim, "ulim"},
    {LossMethod::ccssdu, "ccssdu"},         {LossMethod::spicssdu, "spicssdu"}, {LossMethod::picl2, "picl2"},
};

std::uint64_t derive_seed(std::uint64_t seed, std::uint32_t stream, std::uint32_t index = 0)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream, index};
    std::mt19937_64 rng(seq);
    return rng();
}

} // namespace

LossMethod parse_loss_method(const std::string& name)
{
    for (const auto& m : kMethods)
        if (name == m.name)
            return m.method;
    throw std::invalid_argument("unknown loss method '" + name +
                                "' (expected supervised, mmssdu, ulim, ccssdu, spicssdu or picl2)");
}

std::string to_string(LossMethod m)
{
    for (const auto& entry : kMethods)
        if (entry.method == m)
            return entry.name;
    return "unknown";
}

double LossConfig::beta_value() const
{
    if (beta)
        return *beta;
    switch (method) {
    case LossMethod::spicssdu:
    case LossMethod::picl2:
        return 5e-3;
    case LossMethod::ulim:
    case LossMethod::ccssdu:
        return 1.0;
    default:
        return 0.0;
    }
}

bool LossConfig::uses_split() const
{
    return method == LossMethod::mmssdu || method == LossMethod::ccssdu || method == LossMethod::spicssdu ||
           method == LossMethod::picl2;
}

bool LossConfig::uses_deltas() const { return method == LossMethod::ulim || method == LossMethod::ccssdu; }

bool LossConfig::uses_perturbations() const
{
    return method == LossMethod::spicssdu || method == LossMethod::picl2;
}

void LossConfig::validate() const
{
    if (beta_value() < 0)
        throw std::invalid_argument("loss: beta must be >= 0");
    if (!(rho > 0 && rho < 1))
        throw std::invalid_argument("loss: rho must lie in (0, 1)");
    if (K < 1)
        throw std::invalid_argument("loss: K must be >= 1");
    if (uses_perturbations() && n_perturbations < 1)
        throw std::invalid_argument("loss: n_perturbations must be >= 1");
    if (n_deltas < 0)
        throw std::invalid_argument("loss: n_deltas must be >= 0");
    if (!(eps > 0))
        throw std::invalid_argument("loss: eps must be positive");
    if (levels < 0)
        throw std::invalid_argument("loss: levels must be >= 0");
    if (!(perturbation_amplitude > 0) || perturbation_features < 1)
        throw std::invalid_argument("loss: perturbation amplitude and feature count must be positive");
}

void to_json(nlohmann::json& j, const LossConfig& c)
{
    j = {{"method", to_string(c.method)},
         {"beta", c.beta_value()},
         {"rho", c.rho},
         {"K", c.K},
         {"n_perturbations", c.n_perturbations},
         {"n_deltas", c.n_deltas},
         {"eps", c.eps},
         {"wavelet", to_string(c.wavelet)},
         {"levels", c.levels},
         {"detach_inner", c.detach_inner},
         {"perturbation_amplitude", c.perturbation_amplitude},
         {"perturbation_features", c.perturbation_features}};
}

void from_json(const nlohmann::json& j, LossConfig& c)
{
    const std::string s = "loss";
    require_known_keys(j,
                       {"method", "beta", "rho", "K", "n_perturbations", "n_deltas", "eps", "wavelet", "levels",
                        "detach_inner", "perturbation_amplitude", "perturbation_features"},
                       s);
    std::string name = to_string(c.method);
    read_optional(j, "method", name, s);
    c.method = parse_loss_method(name);
    if (j.contains("beta")) {
        double b = 0;
        read_optional(j, "beta", b, s);
        c.beta = b;
    }
    read_optional(j, "rho", c.rho, s);
    read_optional(j, "K", c.K, s);
    read_optional(j, "n_perturbations", c.n_perturbations, s);
    read_optional(j, "n_deltas", c.n_deltas, s);
    read_optional(j, "eps", c.eps, s);
    std::string wavelet = to_string(c.wavelet);
    read_optional(j, "wavelet", wavelet, s);
    c.wavelet = parse_wavelet_kind(wavelet);
    read_optional(j, "levels", c.levels, s);
    read_optional(j, "detach_inner", c.detach_inner, s);
    read_optional(j, "perturbation_amplitude", c.perturbation_amplitude, s);
    read_optional(j, "perturbation_features", c.perturbation_features, s);
    c.validate();
}

LossDraws make_draws(const LossConfig& cfg, const SamplingMask& omega, const BoolImage& support, std::uint64_t seed)
{
    LossDraws d;
    if (cfg.uses_split())
        d.split = ssdu_split(omega, cfg.rho, cfg.K, derive_seed(seed, 1));
    if (cfg.uses_deltas()) {
        const int n = cfg.n_deltas == 0 ? omega.R - 1 : cfg.n_deltas;
        d.deltas = shifted_patterns(omega, n, derive_seed(seed, 2));
    }
    if (cfg.uses_perturbations())
        for (int i = 0; i < cfg.n_perturbations; ++i)
            d.perturbations.push_back(generate_perturbation(omega.n_pe, omega.n_ro, omega.R,
                                                            cfg.perturbation_features, cfg.perturbation_amplitude,
                                                            derive_seed(seed, 3, static_cast<std::uint32_t>(i)),
                                                            &support));
    return d;
}

} // namespace spic
