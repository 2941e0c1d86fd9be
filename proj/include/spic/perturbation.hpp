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

#include "spic/cg.hpp"
#include "spic/encoding.hpp"

#include <cstdint>
#include <vector>

namespace spic {

struct PerturbationFeature {
    Index center_row = 0;
    Index center_col = 0;
    Index extent = 0;           ///< side of the square window, pixels
    Complex<double> amplitude;  ///< complex weight before peak normalisation
};

/// A sparse complex image whose occupied rows fit in one band of height
/// below rows / R, so the R aliasing replicas cannot meet.
struct Perturbation {
    ComplexImage<double> p;
    std::vector<Index> support_rows;
    std::vector<PerturbationFeature> features;
    Index band_begin = 0;
    Index band_height = 0;
    std::uint64_t seed = 0;

    template <typename Scalar>
    ComplexImage<Scalar> image() const
    {
        return p.cast<Complex<Scalar>>();
    }
};

/// Gaussian-windowed blobs (extent <= 5) inside a random band of height
/// floor(rows / R) - 1, peak magnitude `amplitude`. When `support` is given
/// every blob window lies inside it (coil maps vanish outside the object).
Perturbation generate_perturbation(Index rows, Index cols, int R, int n_features, double amplitude,
                                   std::uint64_t seed, const BoolImage* support = nullptr);

struct OverlapVerdict {
    bool disjoint = false;
    /// rows is not a multiple of R; replicas use floor(rows / R) shifts.
    bool approximate = false;
    explicit operator bool() const { return disjoint; }
};

/// Whether the R copies of `support_rows` shifted by k * (rows / R), mod
/// rows, are pairwise disjoint.
OverlapVerdict verify_no_overlap(const std::vector<Index>& support_rows, int R, Index rows);

inline OverlapVerdict verify_no_overlap(const Perturbation& p, int R, Index rows)
{
    return verify_no_overlap(p.support_rows, R, rows);
}

/// Rows holding a nonzero pixel of `img`, ascending.
std::vector<Index> occupied_rows(const ComplexImage<double>& img);

template <typename Scalar>
struct RecoveryCheck {
    bool recoverable = false;
    Scalar relative_error = 0;
};

/// Empirical check: CG-SENSE (100 iterations) of E_m p returns p within tol.
template <typename Scalar>
RecoveryCheck<Scalar> verify_pi_recoverable(const ComplexImage<Scalar>& p, const CoilSensitivities<Scalar>& coils,
                                            const SamplingMask& mask, Scalar tol, int iterations = 1000)
{
    const Scalar ref = p.matrix().norm();
    if (ref == 0)
        throw std::invalid_argument("verify_pi_recoverable: perturbation is zero");
    const ComplexImage<Scalar> rec = cg_sense(forward(p, coils, mask), coils, mask, iterations, Scalar(1e-14));
    RecoveryCheck<Scalar> out;
    out.relative_error = (rec - p).matrix().norm() / ref;
    out.recoverable = out.relative_error < tol;
    return out;
}

/// y + E_m p (nonzero only on the sampled set).
template <typename Scalar>
KSpace<Scalar> perturb_measurements(const KSpace<Scalar>& y, const ComplexImage<Scalar>& p,
                                    const CoilSensitivities<Scalar>& coils, const SamplingMask& mask)
{
    require_same_shape(y.rows(), y.cols(), p.rows(), p.cols(), "perturb_measurements");
    if (y.n_coils != coils.n_coils())
        throw ShapeError("perturb_measurements: coil count mismatch");
    KSpace<Scalar> out = forward(p, coils, mask);
    out.data += y.data;
    return out;
}

/// f(y + q) - f(y).
template <typename Scalar>
ComplexImage<Scalar> estimate_perturbation(const ComplexImage<Scalar>& recon_perturbed,
                                           const ComplexImage<Scalar>& recon_clean)
{
    require_same_shape(recon_perturbed.rows(), recon_perturbed.cols(), recon_clean.rows(), recon_clean.cols(),
                       "estimate_perturbation");
    return recon_perturbed - recon_clean;
}

} // namespace spic
