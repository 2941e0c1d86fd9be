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

#include "spic/encoding.hpp"

#include <string>
#include <vector>

namespace spic {

template <typename Scalar>
struct CgOptions {
    Scalar mu = 0;
    int iterations = 15;
    /// Relative residual for early exit; 0 runs exactly `iterations` steps.
    Scalar tolerance = 0;
};

template <typename Scalar>
struct CgResult {
    ComplexImage<Scalar> x;
    int iterations = 0;
    /// ||r_k|| for k = 0..iterations.
    std::vector<Scalar> residual_norms;
};

/// Conjugate gradient on (E^H E + mu I) x = E^H y + mu z, started at `start`
/// (default E^H y). `prior` (z) is required when mu > 0.
template <typename Scalar>
CgResult<Scalar> cg_normal(const KSpace<Scalar>& y, const CoilSensitivities<Scalar>& coils, const SamplingMask& mask,
                           const CgOptions<Scalar>& opts, const ComplexImage<Scalar>* prior = nullptr,
                           const ComplexImage<Scalar>* start = nullptr)
{
    if (opts.iterations < 1)
        throw std::invalid_argument("cg_normal: iterations must be >= 1");
    if (opts.mu < 0)
        throw std::invalid_argument("cg_normal: mu must be nonnegative");
    if (opts.mu > 0 && prior == nullptr)
        throw std::invalid_argument("cg_normal: mu > 0 requires a prior image z");

    const ComplexImage<Scalar> ehy = adjoint(y, coils, mask);
    ComplexImage<Scalar> b = ehy;
    if (prior != nullptr) {
        require_same_shape(prior->rows(), prior->cols(), b.rows(), b.cols(), "cg_normal: prior");
        b += opts.mu * *prior;
    }
    auto apply = [&](const ComplexImage<Scalar>& v) -> ComplexImage<Scalar> {
        ComplexImage<Scalar> out = normal_apply(v, coils, mask);
        if (opts.mu != 0)
            out += opts.mu * v;
        return out;
    };

    CgResult<Scalar> res;
    res.x = start != nullptr ? *start : ehy;
    require_same_shape(res.x.rows(), res.x.cols(), b.rows(), b.cols(), "cg_normal: start");
    ComplexImage<Scalar> r = b - apply(res.x);
    ComplexImage<Scalar> p = r;
    Scalar rr = real_dot(r, r);
    const Scalar b_norm = std::sqrt(real_dot(b, b));
    res.residual_norms.push_back(std::sqrt(rr));

    for (int it = 0; it < opts.iterations; ++it) {
        if (opts.tolerance > 0 && std::sqrt(rr) <= opts.tolerance * b_norm)
            break;
        if (rr == 0)
            break;
        const ComplexImage<Scalar> ap = apply(p);
        const Scalar pap = real_dot(p, ap);
        const Scalar alpha = rr / pap;
        res.x += alpha * p;
        r -= alpha * ap;
        const Scalar rr_next = real_dot(r, r);
        if (!std::isfinite(alpha) || !std::isfinite(rr_next))
            throw NumericalError("cg_normal: non-finite value at iteration " + std::to_string(it) +
                                 " (ill-posed configuration?)");
        p = r + (rr_next / rr) * p;
        rr = rr_next;
        res.residual_norms.push_back(std::sqrt(rr));
        res.iterations = it + 1;
    }
    return res;
}

/// Parallel-imaging MLE: cg_normal with mu = 0 (start E^H y).
template <typename Scalar>
ComplexImage<Scalar> cg_sense(const KSpace<Scalar>& y, const CoilSensitivities<Scalar>& coils,
                              const SamplingMask& mask, int iterations, Scalar tolerance)
{
    CgOptions<Scalar> opts;
    opts.iterations = iterations;
    opts.tolerance = tolerance;
    return cg_normal(y, coils, mask, opts).x;
}

} // namespace spic
