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

// Training objectives. Every loss runs the reconstructor passes it needs and,
// when a gradient vector is supplied, back-propagates each pass as soon as
// its upstream gradient is complete so at most two pass traces are alive.

#include "spic/perturbation.hpp"
#include "spic/sampling.hpp"
#include "spic/unrolled.hpp"
#include "spic/wavelet.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <type_traits>
#include <vector>

namespace spic {

enum class LossMethod { supervised, mmssdu, ulim, ccssdu, spicssdu, picl2 };

LossMethod parse_loss_method(const std::string& name);
std::string to_string(LossMethod m);

struct LossConfig {
    LossMethod method = LossMethod::mmssdu;
    /// Trade-off weight; unset means the method default.
    std::optional<double> beta;
    double rho = 0.4;
    int K = 3;
    int n_perturbations = 3;
    /// Shifted patterns per step for the cyclic losses; 0 means all R - 1.
    int n_deltas = 0;
    double eps = 1e-4;
    WaveletKind wavelet = WaveletKind::dtcwt;
    int levels = 3;
    bool detach_inner = false;
    double perturbation_amplitude = 0.5;
    int perturbation_features = 3;

    double beta_value() const;
    bool uses_split() const;
    bool uses_deltas() const;
    bool uses_perturbations() const;
    void validate() const;
};

void to_json(nlohmann::json& j, const LossConfig& c);
/// Strict: unknown keys throw.
void from_json(const nlohmann::json& j, LossConfig& c);

/// One training example: measurements on omega, the coils, and (for the
/// supervised loss) the reference image.
template <typename Scalar>
struct TrainingSlice {
    KSpace<Scalar> y;
    CoilSensitivities<Scalar> coils;
    SamplingMask omega;
    ComplexImage<Scalar> truth;
};

/// Random quantities consumed by one loss evaluation.
struct LossDraws {
    SSDUSplit split;
    std::vector<SamplingMask> deltas;
    std::vector<Perturbation> perturbations;
};

LossDraws make_draws(const LossConfig& cfg, const SamplingMask& omega, const BoolImage& support, std::uint64_t seed);

template <typename Scalar>
struct LossValue {
    Scalar total = 0;
    Scalar data_term = 0;        ///< supervised / measurement / MM-SSDU part
    Scalar consistency_term = 0; ///< unweighted cyclic or perturbation part
};

/// ||ref - est||_2 / ||ref||_2 + ||ref - est||_1 / ||ref||_1 over complex
/// entries, with optional gradients for either argument.
template <typename Scalar>
Scalar norm_l1l2(const ComplexImage<Scalar>& ref, const ComplexImage<Scalar>& est,
                 std::type_identity_t<ComplexImage<Scalar>>* g_ref = nullptr,
                 std::type_identity_t<ComplexImage<Scalar>>* g_est = nullptr)
{
    require_same_shape(ref.rows(), ref.cols(), est.rows(), est.cols(), "norm_l1l2");
    const Scalar r2 = ref.matrix().norm();
    const Scalar r1 = ref.abs().sum();
    if (r2 == 0)
        throw std::invalid_argument("norm_l1l2: reference is zero");
    const ComplexImage<Scalar> d = ref - est;
    const RealImage<Scalar> ad = d.abs();
    const Scalar n2 = d.matrix().norm();
    const Scalar n1 = ad.sum();
    if (g_ref != nullptr || g_est != nullptr) {
        const ComplexImage<Scalar> sign_d = (ad > 0).select(d / ad.template cast<Complex<Scalar>>(), Complex<Scalar>(0));
        ComplexImage<Scalar> gd = sign_d / r1;
        if (n2 > 0)
            gd += d / (n2 * r2);
        if (g_est != nullptr)
            *g_est = -gd;
        if (g_ref != nullptr) {
            const RealImage<Scalar> ar = ref.abs();
            const ComplexImage<Scalar> sign_r =
                (ar > 0).select(ref / ar.template cast<Complex<Scalar>>(), Complex<Scalar>(0));
            *g_ref = gd - (n2 / (r2 * r2 * r2)) * ref - (n1 / (r1 * r1)) * sign_r;
        }
    }
    return n2 / r2 + n1 / r1;
}

/// weighted_l1 with its gradient with respect to p_est (the reference only
/// sets the weights).
template <typename Scalar>
Scalar weighted_l1_grad(const WaveletTransform<Scalar>& w, const ComplexImage<Scalar>& p_est,
                        const ComplexImage<Scalar>& p_true, Scalar eps, std::type_identity_t<ComplexImage<Scalar>>* g)
{
    require_same_shape(p_est.rows(), p_est.cols(), p_true.rows(), p_true.cols(), "weighted_l1");
    if (!(eps > 0))
        throw std::invalid_argument("weighted_l1: eps must be positive");
    const WaveletCoeffs<Scalar> ce = wavelet_forward(w, p_est);
    const Vector<Complex<Scalar>> a = flatten(ce.re), b = flatten(ce.im);
    const Vector<Scalar> mag = (a.cwiseAbs2() + b.cwiseAbs2()).cwiseSqrt();
    const Vector<Scalar> den = paired_magnitudes(wavelet_forward(w, p_true)).array() + eps;
    const Scalar n = static_cast<Scalar>(mag.size());
    if (g != nullptr) {
        Vector<Complex<Scalar>> ga(a.size()), gb(b.size());
        for (Index i = 0; i < mag.size(); ++i) {
            const Scalar s = mag[i] > 0 ? Scalar(1) / (n * den[i] * mag[i]) : Scalar(0);
            ga[i] = s * a[i];
            gb[i] = s * b[i];
        }
        ComplexImage<Scalar> out(p_est.rows(), p_est.cols());
        out.real() = w.transpose(unflatten(ga, ce.re));
        out.imag() = w.transpose(unflatten(gb, ce.im));
        *g = std::move(out);
    }
    return (mag.array() / den.array()).sum() / n;
}

template <typename Scalar>
Scalar pic_l2_grad(const ComplexImage<Scalar>& p_est, const ComplexImage<Scalar>& p_true,
                   std::type_identity_t<ComplexImage<Scalar>>* g)
{
    const Scalar value = pic_l2(p_est, p_true);
    if (g != nullptr) {
        const ComplexImage<Scalar> d = p_est - p_true;
        const Scalar nd = d.matrix().norm();
        *g = nd > 0 ? ComplexImage<Scalar>(d / (nd * p_true.matrix().norm()))
                    : ComplexImage<Scalar>(ComplexImage<Scalar>::Zero(d.rows(), d.cols()));
    }
    return value;
}

namespace detail {

template <typename Scalar>
using Trace = std::unique_ptr<PassTrace<Scalar>>;

template <typename Scalar>
ComplexImage<Scalar> run(const Reconstructor<Scalar>& f, const KSpace<Scalar>& y, const TrainingSlice<Scalar>& s,
                         const SamplingMask& m, Trace<Scalar>* tr)
{
    return f.reconstruct(y, s.coils, m, tr);
}

template <typename Scalar>
KSpace<Scalar> as_kspace(const KSpace<Scalar>& like, ComplexImage<Scalar> data)
{
    return KSpace<Scalar>(like.n_coils, std::move(data));
}

/// (1/K) sum_k norm_l1l2(y_Lambda_k, E_Lambda_k f(y_Theta_k, E_Theta_k)).
template <typename Scalar>
Scalar mm_term(const Reconstructor<Scalar>& f, const TrainingSlice<Scalar>& s, const SSDUSplit& split,
               Vector<Scalar>* grad)
{
    if (split.K() < 1)
        throw std::invalid_argument("MM-SSDU loss: split has no masks");
    const Scalar inv_k = Scalar(1) / static_cast<Scalar>(split.K());
    Scalar total = 0;
    for (const SSDUPair& pair : split.pairs) {
        if (pair.lambda.count() == 0)
            throw std::invalid_argument("MM-SSDU loss: empty loss mask");
        Trace<Scalar> tr;
        const ComplexImage<Scalar> x = run(f, pair.theta.apply(s.y), s, pair.theta, grad ? &tr : nullptr);
        const KSpace<Scalar> ref = pair.lambda.apply(s.y);
        const KSpace<Scalar> est = forward(x, s.coils, pair.lambda);
        ComplexImage<Scalar> g_est;
        total += inv_k * norm_l1l2(ref.data, est.data, nullptr, grad ? &g_est : nullptr);
        if (grad != nullptr) {
            const ComplexImage<Scalar> gx = inv_k * adjoint(as_kspace(est, std::move(g_est)), s.coils, pair.lambda);
            f.backward(*tr, gx, *grad);
        }
    }
    return total;
}

inline void check_perturbations(const LossDraws& d, const SamplingMask& omega, int needed)
{
    if (static_cast<int>(d.perturbations.size()) < 1 || needed < 1)
        throw std::invalid_argument("perturbation loss: no perturbations drawn");
    for (const Perturbation& p : d.perturbations)
        if (!verify_no_overlap(p, omega.R, omega.n_pe))
            throw std::invalid_argument("perturbation loss: perturbation replicas overlap at R=" +
                                        std::to_string(omega.R));
}

} // namespace detail

/// Evaluates the configured objective on one slice. With `grad` non-null,
/// dL/dtheta is accumulated into it (it must be sized to the parameters).
template <typename Scalar>
LossValue<Scalar> evaluate_loss(const Reconstructor<Scalar>& f, const TrainingSlice<Scalar>& s, const LossConfig& cfg,
                                const LossDraws& draws, Vector<Scalar>* grad = nullptr)
{
    using detail::Trace;
    cfg.validate();
    if (grad != nullptr && grad->size() != f.parameter_count())
        throw ShapeError("evaluate_loss: gradient vector has the wrong size");
    const Scalar beta = static_cast<Scalar>(cfg.beta_value());
    const bool detach = cfg.detach_inner;
    LossValue<Scalar> out;

    switch (cfg.method) {
    case LossMethod::supervised: {
        if (s.truth.size() == 0)
            throw std::invalid_argument("supervised loss: slice has no ground truth");
        Trace<Scalar> tr;
        const ComplexImage<Scalar> x = detail::run(f, s.y, s, s.omega, grad ? &tr : nullptr);
        ComplexImage<Scalar> gx;
        out.data_term = norm_l1l2(s.truth, x, nullptr, grad ? &gx : nullptr);
        if (grad != nullptr)
            f.backward(*tr, gx, *grad);
        break;
    }
    case LossMethod::mmssdu:
        out.data_term = detail::mm_term(f, s, draws.split, grad);
        break;
    case LossMethod::ulim: {
        if (draws.deltas.empty())
            throw std::invalid_argument("ULIM loss: no shifted patterns drawn");
        Trace<Scalar> tr_hat;
        const ComplexImage<Scalar> x_hat = detail::run(f, s.y, s, s.omega, grad ? &tr_hat : nullptr);
        const KSpace<Scalar> e_hat = forward(x_hat, s.coils, s.omega);
        ComplexImage<Scalar> g_e;
        out.data_term = norm_l1l2(s.y.data, e_hat.data, nullptr, grad ? &g_e : nullptr);
        ComplexImage<Scalar> g_hat;
        if (grad != nullptr)
            g_hat = adjoint(detail::as_kspace(e_hat, std::move(g_e)), s.coils, s.omega);
        const Scalar w = Scalar(1) / static_cast<Scalar>(draws.deltas.size());
        for (const SamplingMask& delta : draws.deltas) {
            Trace<Scalar> tr;
            const ComplexImage<Scalar> x_cyc =
                detail::run(f, forward(x_hat, s.coils, delta), s, delta, grad ? &tr : nullptr);
            ComplexImage<Scalar> g_ref, g_cyc;
            out.consistency_term +=
                w * norm_l1l2(x_hat, x_cyc, grad && !detach ? &g_ref : nullptr, grad ? &g_cyc : nullptr);
            if (grad != nullptr) {
                const KSpace<Scalar> gy = f.backward(*tr, (beta * w) * g_cyc, *grad);
                if (!detach)
                    g_hat += (beta * w) * g_ref + adjoint(gy, s.coils, delta);
            }
        }
        if (grad != nullptr)
            f.backward(*tr_hat, g_hat, *grad);
        break;
    }
    case LossMethod::ccssdu: {
        if (draws.deltas.empty())
            throw std::invalid_argument("CC-SSDU loss: no shifted patterns drawn");
        out.data_term = detail::mm_term(f, s, draws.split, grad);
        const bool through_hat = grad != nullptr && !detach;
        Trace<Scalar> tr_hat;
        const ComplexImage<Scalar> x_hat = detail::run(f, s.y, s, s.omega, through_hat ? &tr_hat : nullptr);
        ComplexImage<Scalar> g_hat;
        if (through_hat)
            g_hat = ComplexImage<Scalar>::Zero(x_hat.rows(), x_hat.cols());
        const Scalar w = Scalar(1) / static_cast<Scalar>(draws.deltas.size());
        for (const SamplingMask& delta : draws.deltas) {
            Trace<Scalar> tr;
            const ComplexImage<Scalar> x_cyc =
                detail::run(f, forward(x_hat, s.coils, delta), s, delta, grad ? &tr : nullptr);
            const KSpace<Scalar> e_cyc = forward(x_cyc, s.coils, s.omega);
            ComplexImage<Scalar> g_e;
            out.consistency_term += w * norm_l1l2(s.y.data, e_cyc.data, nullptr, grad ? &g_e : nullptr);
            if (grad != nullptr) {
                const ComplexImage<Scalar> g_cyc =
                    (beta * w) * adjoint(detail::as_kspace(e_cyc, std::move(g_e)), s.coils, s.omega);
                const KSpace<Scalar> gy = f.backward(*tr, g_cyc, *grad);
                if (through_hat)
                    g_hat += adjoint(gy, s.coils, delta);
            }
        }
        if (through_hat)
            f.backward(*tr_hat, g_hat, *grad);
        break;
    }
    case LossMethod::spicssdu:
    case LossMethod::picl2: {
        detail::check_perturbations(draws, s.omega, cfg.n_perturbations);
        out.data_term = detail::mm_term(f, s, draws.split, grad);
        const bool through_clean = grad != nullptr && !detach;
        Trace<Scalar> tr_clean;
        const ComplexImage<Scalar> clean = detail::run(f, s.y, s, s.omega, through_clean ? &tr_clean : nullptr);
        ComplexImage<Scalar> g_clean;
        if (through_clean)
            g_clean = ComplexImage<Scalar>::Zero(clean.rows(), clean.cols());
        std::optional<WaveletTransform<Scalar>> wt;
        if (cfg.method == LossMethod::spicssdu)
            wt.emplace(clean.rows(), clean.cols(), cfg.levels, cfg.wavelet);
        const Scalar w = Scalar(1) / static_cast<Scalar>(draws.perturbations.size());
        for (const Perturbation& pert : draws.perturbations) {
            const ComplexImage<Scalar> p = pert.image<Scalar>();
            Trace<Scalar> tr;
            const ComplexImage<Scalar> x_p =
                detail::run(f, perturb_measurements(s.y, p, s.coils, s.omega), s, s.omega, grad ? &tr : nullptr);
            const ComplexImage<Scalar> p_est = estimate_perturbation(x_p, clean);
            ComplexImage<Scalar> g_p;
            out.consistency_term +=
                w * (wt ? weighted_l1_grad(*wt, p_est, p, static_cast<Scalar>(cfg.eps), grad ? &g_p : nullptr)
                        : pic_l2_grad(p_est, p, grad ? &g_p : nullptr));
            if (grad != nullptr) {
                g_p *= beta * w;
                f.backward(*tr, g_p, *grad);
                if (through_clean)
                    g_clean -= g_p;
            }
        }
        if (through_clean)
            f.backward(*tr_clean, g_clean, *grad);
        break;
    }
    }
    out.total = out.data_term + beta * out.consistency_term;
    if (!std::isfinite(out.total))
        throw NumericalError("loss " + to_string(cfg.method) + " is not finite");
    if (grad != nullptr && !grad->allFinite())
        throw NumericalError("gradient of loss " + to_string(cfg.method) + " is not finite");
    return out;
}

} // namespace spic
