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

#include "spic/fft.hpp"
#include "spic/sampling.hpp"
#include "spic/types.hpp"

#include <random>

namespace spic {

namespace detail {

template <typename Scalar>
void check_encoding_shapes(Index img_rows, Index img_cols, const CoilSensitivities<Scalar>& coils,
                           const SamplingMask& mask)
{
    require_same_shape(img_rows, img_cols, coils.rows(), coils.cols(), "encoding: image vs coil maps");
    require_same_shape(mask.n_pe, mask.n_ro, coils.rows(), coils.cols(), "encoding: mask vs coil maps");
}

} // namespace detail

/// Multi-coil encoding E_m x: per coil, mask(F(S_c * x)) with a unitary DFT.
template <typename Scalar>
KSpace<Scalar> forward(const ComplexImage<Scalar>& x, const CoilSensitivities<Scalar>& coils,
                       const SamplingMask& mask)
{
    detail::check_encoding_shapes(x.rows(), x.cols(), coils, mask);
    KSpace<Scalar> y(coils.n_coils(), x.rows(), x.cols());
    for (Index c = 0; c < coils.n_coils(); ++c) {
        auto plane = y.plane(c);
        plane = coils.maps.plane(c) * x;
        fft2_inplace<Scalar>(plane, false);
        plane = mask.sampled.select(plane, Complex<Scalar>(0));
    }
    return y;
}

/// E_m^H y = sum_c conj(S_c) * F^-1(mask(y_c)).
template <typename Scalar>
ComplexImage<Scalar> adjoint(const KSpace<Scalar>& y, const CoilSensitivities<Scalar>& coils,
                             const SamplingMask& mask)
{
    detail::check_encoding_shapes(y.rows(), y.cols(), coils, mask);
    if (y.n_coils != coils.n_coils())
        throw ShapeError("adjoint: coil count mismatch");
    ComplexImage<Scalar> x = ComplexImage<Scalar>::Zero(y.rows(), y.cols());
    ComplexImage<Scalar> work(y.rows(), y.cols());
    for (Index c = 0; c < coils.n_coils(); ++c) {
        work = mask.sampled.select(y.plane(c), Complex<Scalar>(0));
        fft2_inplace<Scalar>(work, true);
        x += coils.maps.plane(c).conjugate() * work;
    }
    return x;
}

/// E_m^H E_m x without materialising the k-space of every coil at once.
template <typename Scalar>
ComplexImage<Scalar> normal_apply(const ComplexImage<Scalar>& x, const CoilSensitivities<Scalar>& coils,
                                  const SamplingMask& mask)
{
    detail::check_encoding_shapes(x.rows(), x.cols(), coils, mask);
    ComplexImage<Scalar> out = ComplexImage<Scalar>::Zero(x.rows(), x.cols());
    ComplexImage<Scalar> work(x.rows(), x.cols());
    for (Index c = 0; c < coils.n_coils(); ++c) {
        work = coils.maps.plane(c) * x;
        fft2_inplace<Scalar>(work, false);
        work = mask.sampled.select(work, Complex<Scalar>(0));
        fft2_inplace<Scalar>(work, true);
        out += coils.maps.plane(c).conjugate() * work;
    }
    return out;
}

/// Adds i.i.d. complex Gaussian noise (per-component std sigma) at sampled
/// locations only.
template <typename Scalar>
KSpace<Scalar> add_noise(const KSpace<Scalar>& y, const SamplingMask& mask, const NoiseSpec& spec)
{
    require_same_shape(y.rows(), y.cols(), mask.n_pe, mask.n_ro, "add_noise");
    if (spec.sigma < 0)
        throw std::invalid_argument("add_noise: sigma must be nonnegative");
    KSpace<Scalar> out = y;
    if (spec.sigma == 0)
        return out;
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, spec.sigma);
    for (Index c = 0; c < y.n_coils; ++c) {
        auto plane = out.plane(c);
        for (Index r = 0; r < y.rows(); ++r)
            for (Index k = 0; k < y.cols(); ++k) {
                if (!mask.sampled(r, k))
                    continue;
                const double re = gauss(rng);
                const double im = gauss(rng);
                plane(r, k) += Complex<Scalar>(static_cast<Scalar>(re), static_cast<Scalar>(im));
            }
    }
    return out;
}

} // namespace spic
