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

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace spic {

using Eigen::Index;

template <typename Scalar>
using Complex = std::complex<Scalar>;

/// Row-major complex 2D array. Used for images, and (stacked coil-major along
/// rows) for multi-coil k-space and sensitivity maps.
template <typename Scalar>
using ComplexImage = Eigen::Array<Complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RealImage = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using BoolImage = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Per-coil planes stacked along rows: plane c occupies rows [c*rows, (c+1)*rows).
template <typename Scalar>
struct MultiCoil {
    Index n_coils = 0;
    ComplexImage<Scalar> data;

    MultiCoil() = default;
    MultiCoil(Index coils, Index rows, Index cols)
        : n_coils(coils), data(ComplexImage<Scalar>::Zero(coils * rows, cols)) {}
    MultiCoil(Index coils, ComplexImage<Scalar> stacked) : n_coils(coils), data(std::move(stacked))
    {
        if (coils <= 0 || data.rows() % coils != 0)
            throw ShapeError("stacked multi-coil array is not divisible by coil count");
    }

    Index rows() const { return n_coils == 0 ? 0 : data.rows() / n_coils; }
    Index cols() const { return data.cols(); }

    auto plane(Index c) { return data.middleRows(c * rows(), rows()); }
    auto plane(Index c) const { return data.middleRows(c * rows(), rows()); }

    template <typename Other>
    MultiCoil<Other> cast() const
    {
        return MultiCoil<Other>(n_coils, ComplexImage<Other>(data.template cast<Complex<Other>>()));
    }
};

/// Frequency-domain samples y for every coil.
template <typename Scalar>
using KSpace = MultiCoil<Scalar>;

template <typename Scalar>
struct CoilSensitivities {
    MultiCoil<Scalar> maps;
    BoolImage support;

    Index n_coils() const { return maps.n_coils; }
    Index rows() const { return maps.rows(); }
    Index cols() const { return maps.cols(); }

    template <typename Other>
    CoilSensitivities<Other> cast() const
    {
        return {maps.template cast<Other>(), support};
    }
};

struct NoiseSpec {
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

template <typename Derived>
bool all_finite(const Eigen::ArrayBase<Derived>& a)
{
    return a.real().isFinite().all() && a.imag().isFinite().all();
}

inline void require_same_shape(Index r0, Index c0, Index r1, Index c1, const char* what)
{
    if (r0 != r1 || c0 != c1)
        throw ShapeError(std::string(what) + ": shape " + std::to_string(r0) + "x" + std::to_string(c0) +
                         " does not match " + std::to_string(r1) + "x" + std::to_string(c1));
}

/// Real inner product Re<a, b> = sum Re(conj(a) * b).
template <typename DerivedA, typename DerivedB>
auto real_dot(const Eigen::ArrayBase<DerivedA>& a, const Eigen::ArrayBase<DerivedB>& b)
{
    return (a.conjugate() * b).real().sum();
}

} // namespace spic
