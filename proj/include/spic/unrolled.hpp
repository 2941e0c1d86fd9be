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
#include "spic/regularizer.hpp"

#include <memory>
#include <string>
#include <type_traits>
#include <vector>

namespace spic {

/// Intermediates of a fixed-step CG solve, enough to run it backwards.
template <typename Scalar>
struct CgTrace {
    Scalar mu = 0;
    ComplexImage<Scalar> x0;
    std::vector<ComplexImage<Scalar>> r;  // r_0 .. r_n
    std::vector<ComplexImage<Scalar>> p;  // p_0 .. p_{n-1}
    std::vector<ComplexImage<Scalar>> ap; // A p_k
    std::vector<Scalar> rr, alpha, pap;
};

template <typename Scalar>
struct CgGradients {
    ComplexImage<Scalar> b;
    ComplexImage<Scalar> x0;
    Scalar mu = 0;
};

/// v -> (E^H E + mu I) v for one coil set and mask.
template <typename Scalar>
struct NormalOperator {
    const CoilSensitivities<Scalar>& coils;
    const SamplingMask& mask;

    ComplexImage<Scalar> operator()(const ComplexImage<Scalar>& v, Scalar mu) const
    {
        ComplexImage<Scalar> out = normal_apply(v, coils, mask);
        if (mu != 0)
            out += mu * v;
        return out;
    }
};

/// Exactly `iters` CG steps on (E^H E + mu I) x = b from x0 (fewer only if
/// the residual becomes exactly zero). `where` labels diagnostics.
template <typename Scalar>
ComplexImage<Scalar> cg_fixed(const NormalOperator<Scalar>& A, const ComplexImage<Scalar>& b,
                              const ComplexImage<Scalar>& x0, Scalar mu, int iters, std::type_identity_t<CgTrace<Scalar>>* tr,
                              const std::string& where = "cg")
{
    ComplexImage<Scalar> x = x0;
    ComplexImage<Scalar> r = b - A(x, mu);
    ComplexImage<Scalar> p = r;
    Scalar rr = real_dot(r, r);
    if (tr != nullptr) {
        *tr = CgTrace<Scalar>{};
        tr->mu = mu;
        tr->x0 = x0;
        tr->r.push_back(r);
        tr->rr.push_back(rr);
    }
    for (int it = 0; it < iters && rr != 0; ++it) {
        ComplexImage<Scalar> ap = A(p, mu);
        const Scalar pap = real_dot(p, ap);
        const Scalar alpha = rr / pap;
        x += alpha * p;
        r -= alpha * ap;
        const Scalar rr_next = real_dot(r, r);
        if (!std::isfinite(alpha) || !std::isfinite(rr_next))
            throw NumericalError(where + ": non-finite value at CG iteration " + std::to_string(it));
        if (tr != nullptr) {
            tr->p.push_back(p);
            tr->ap.push_back(std::move(ap));
            tr->alpha.push_back(alpha);
            tr->pap.push_back(pap);
            tr->r.push_back(r);
            tr->rr.push_back(rr_next);
        }
        p = r + (rr_next / rr) * p;
        rr = rr_next;
    }
    return x;
}

/// Reverse pass of cg_fixed for an upstream gradient gx on its output.
template <typename Scalar>
CgGradients<Scalar> cg_fixed_backward(const NormalOperator<Scalar>& A, const CgTrace<Scalar>& tr,
                                      const ComplexImage<Scalar>& gx)
{
    const std::size_t n = tr.alpha.size();
    const Scalar mu = tr.mu;
    CgGradients<Scalar> out;
    out.mu = 0;
    ComplexImage<Scalar> gr = ComplexImage<Scalar>::Zero(gx.rows(), gx.cols());
    ComplexImage<Scalar> gp = gr;
    std::vector<Scalar> grr(n + 1, Scalar(0));

    for (std::size_t k = n; k-- > 0;) {
        const auto& pk = tr.p[k];
        const auto& apk = tr.ap[k];
        const auto& rk1 = tr.r[k + 1];
        // p_{k+1} = r_{k+1} + beta_k p_k (only formed when another step used it)
        if (k + 1 < n) {
            const Scalar beta = tr.rr[k + 1] / tr.rr[k];
            const Scalar gbeta = real_dot(gp, pk);
            gr += gp;
            grr[k + 1] += gbeta / tr.rr[k];
            grr[k] -= gbeta * tr.rr[k + 1] / (tr.rr[k] * tr.rr[k]);
            gp = beta * gp;
        } else {
            gp.setZero();
        }
        // rr_{k+1} = <r_{k+1}, r_{k+1}>
        gr += Scalar(2) * grr[k + 1] * rk1;
        // r_{k+1} = r_k - alpha p'; x_{k+1} = x_k + alpha p_k
        Scalar galpha = -real_dot(gr, apk) + real_dot(gx, pk);
        ComplexImage<Scalar> gap = -tr.alpha[k] * gr;
        gp += tr.alpha[k] * gx;
        // alpha = rr_k / pap
        grr[k] += galpha / tr.pap[k];
        const Scalar gpap = -galpha * tr.rr[k] / (tr.pap[k] * tr.pap[k]);
        gp += gpap * apk;
        gap += gpap * pk;
        // ap = (N + mu I) p_k, symmetric
        gp += A(gap, mu);
        out.mu += real_dot(gap, pk);
    }
    // p_0 = r_0, rr_0 = <r_0, r_0>, r_0 = b - A x0
    gr += gp;
    gr += Scalar(2) * grr[0] * tr.r[0];
    out.b = gr;
    out.x0 = gx - A(gr, mu);
    out.mu -= real_dot(gr, tr.x0);
    return out;
}

/// Opaque per-pass record produced by a reconstructor forward pass.
template <typename Scalar>
struct PassTrace {
    virtual ~PassTrace() = default;
};

/// f(y, E; theta). backward() returns dL/dy and accumulates dL/dtheta.
template <typename Scalar>
class Reconstructor {
public:
    virtual ~Reconstructor() = default;
    virtual ComplexImage<Scalar> reconstruct(const KSpace<Scalar>& y, const CoilSensitivities<Scalar>& coils,
                                             const SamplingMask& mask,
                                             std::unique_ptr<PassTrace<Scalar>>* trace = nullptr) const = 0;
    virtual KSpace<Scalar> backward(const PassTrace<Scalar>& trace, const ComplexImage<Scalar>& g,
                                    Vector<Scalar>& grad) const = 0;
    virtual Index parameter_count() const = 0;
};

/// The unrolled variable-splitting network: x0 = E^H y, then T times
/// z = R(x), x = CG on (E^H E + mu I) x = E^H y + mu z from z. One
/// parameter vector is shared by every step.
template <typename Scalar>
class UnrolledNet final : public Reconstructor<Scalar> {
public:
    explicit UnrolledNet(const RegularizerParams<Scalar>& params) : params_(params), reg_(params.config) {}

    struct Trace final : PassTrace<Scalar> {
        const CoilSensitivities<Scalar>* coils = nullptr;
        SamplingMask mask;
        Scalar mu = 0;
        std::vector<RegularizerTrace<Scalar>> reg;
        std::vector<ComplexImage<Scalar>> z;
        std::vector<CgTrace<Scalar>> cg;
    };

    ComplexImage<Scalar> reconstruct(const KSpace<Scalar>& y, const CoilSensitivities<Scalar>& coils,
                                     const SamplingMask& mask,
                                     std::unique_ptr<PassTrace<Scalar>>* trace = nullptr) const override
    {
        const UnrolledConfig& cfg = params_.config;
        const Scalar mu = params_.mu();
        const NormalOperator<Scalar> A{coils, mask};
        const ComplexImage<Scalar> ehy = adjoint(y, coils, mask);
        Trace* tr = nullptr;
        if (trace != nullptr) {
            auto owned = std::make_unique<Trace>();
            tr = owned.get();
            tr->coils = &coils;
            tr->mask = mask;
            tr->mu = mu;
            tr->reg.resize(static_cast<std::size_t>(cfg.T));
            tr->cg.resize(static_cast<std::size_t>(cfg.T));
            *trace = std::move(owned);
        }
        ComplexImage<Scalar> x = ehy;
        for (int t = 0; t < cfg.T; ++t) {
            const auto ti = static_cast<std::size_t>(t);
            ComplexImage<Scalar> z = reg_.apply(x, params_.theta, tr != nullptr ? &tr->reg[ti] : nullptr);
            if (!all_finite(z))
                throw NumericalError("unrolled step " + std::to_string(t + 1) + ": regularizer output is not finite");
            const ComplexImage<Scalar> b = ehy + mu * z;
            x = cg_fixed(A, b, z, mu, cfg.cg_iters, tr != nullptr ? &tr->cg[ti] : nullptr,
                         "unrolled step " + std::to_string(t + 1));
            if (tr != nullptr)
                tr->z.push_back(std::move(z));
        }
        return x;
    }

    KSpace<Scalar> backward(const PassTrace<Scalar>& trace, const ComplexImage<Scalar>& g,
                            Vector<Scalar>& grad) const override
    {
        const auto& tr = dynamic_cast<const Trace&>(trace);
        const ParameterLayout& layout = reg_.layout();
        if (grad.size() != layout.total)
            throw ShapeError("unrolled backward: gradient vector has the wrong size");
        const NormalOperator<Scalar> A{*tr.coils, tr.mask};
        ComplexImage<Scalar> gx = g;
        ComplexImage<Scalar> g_ehy = ComplexImage<Scalar>::Zero(g.rows(), g.cols());
        Scalar g_mu = 0;
        for (std::size_t t = tr.cg.size(); t-- > 0;) {
            const CgGradients<Scalar> gc = cg_fixed_backward(A, tr.cg[t], gx);
            g_mu += gc.mu + real_dot(gc.b, tr.z[t]);
            g_ehy += gc.b;
            const ComplexImage<Scalar> gz = tr.mu * gc.b + gc.x0;
            gx = reg_.backward(tr.reg[t], gz, params_.theta, grad);
        }
        g_ehy += gx;
        grad[layout.mu_raw] += g_mu * RegularizerParams<Scalar>::sigmoid(params_.theta[layout.mu_raw]);
        return forward(g_ehy, *tr.coils, tr.mask);
    }

    Index parameter_count() const override { return reg_.layout().total; }
    const RegularizerParams<Scalar>& params() const { return params_; }

private:
    const RegularizerParams<Scalar>& params_;
    Regularizer<Scalar> reg_;
};

/// Fixed-iteration CG-SENSE as a parameter-free reconstructor; linear in y.
template <typename Scalar>
class CgSenseReconstructor final : public Reconstructor<Scalar> {
public:
    explicit CgSenseReconstructor(int iters) : iters_(iters)
    {
        if (iters < 1)
            throw std::invalid_argument("CgSenseReconstructor: iterations must be >= 1");
    }

    struct Trace final : PassTrace<Scalar> {
        const CoilSensitivities<Scalar>* coils = nullptr;
        SamplingMask mask;
        CgTrace<Scalar> cg;
    };

    ComplexImage<Scalar> reconstruct(const KSpace<Scalar>& y, const CoilSensitivities<Scalar>& coils,
                                     const SamplingMask& mask,
                                     std::unique_ptr<PassTrace<Scalar>>* trace = nullptr) const override
    {
        const ComplexImage<Scalar> ehy = adjoint(y, coils, mask);
        Trace* tr = nullptr;
        if (trace != nullptr) {
            auto owned = std::make_unique<Trace>();
            tr = owned.get();
            tr->coils = &coils;
            tr->mask = mask;
            *trace = std::move(owned);
        }
        return cg_fixed(NormalOperator<Scalar>{coils, mask}, ehy, ehy, Scalar(0), iters_,
                        tr != nullptr ? &tr->cg : nullptr, "cg-sense");
    }

    KSpace<Scalar> backward(const PassTrace<Scalar>& trace, const ComplexImage<Scalar>& g,
                            Vector<Scalar>&) const override
    {
        const auto& tr = dynamic_cast<const Trace&>(trace);
        const CgGradients<Scalar> gc = cg_fixed_backward(NormalOperator<Scalar>{*tr.coils, tr.mask}, tr.cg, g);
        return forward<Scalar>(gc.b + gc.x0, *tr.coils, tr.mask);
    }

    Index parameter_count() const override { return 0; }

private:
    int iters_;
};

template <typename Scalar>
ComplexImage<Scalar> unrolled_forward(const KSpace<Scalar>& y, const CoilSensitivities<Scalar>& coils,
                                      const SamplingMask& mask, const RegularizerParams<Scalar>& params)
{
    return UnrolledNet<Scalar>(params).reconstruct(y, coils, mask);
}

} // namespace spic
