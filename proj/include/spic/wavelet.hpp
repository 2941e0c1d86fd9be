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

// 2D dual-tree complex wavelet transform (near_sym_b level-1 pair, 14-tap
// quarter-shift pair above) and an orthonormal Haar fallback.
//
// Every 1D stage is a sparse matrix over one image axis, so a level is
// A_rows * X * A_cols^T and the exact transpose of the analysis operator
// (needed to back-propagate through the sparsity loss) comes for free.

#include "spic/types.hpp"

#include <Eigen/SparseCore>

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace spic {

enum class WaveletKind { dtcwt, dwt };

WaveletKind parse_wavelet_kind(const std::string& name);
std::string to_string(WaveletKind kind);

/// Transform of one real image: complex directional subbands per level
/// (6 for DTCWT, 3 real-valued for Haar) and a real lowpass residual.
template <typename Scalar>
struct Pyramid {
    std::vector<std::vector<ComplexImage<Scalar>>> bands; ///< [level][orientation]
    RealImage<Scalar> lowpass;

    Index count() const
    {
        Index n = lowpass.size();
        for (const auto& level : bands)
            for (const auto& b : level)
                n += b.size();
        return n;
    }
};

/// Coefficients of a complex image: the real and imaginary channels are
/// transformed independently; coefficient n is the pair (re_n, im_n).
template <typename Scalar>
struct WaveletCoeffs {
    WaveletKind kind = WaveletKind::dtcwt;
    int levels = 0;
    Pyramid<Scalar> re;
    Pyramid<Scalar> im;

    /// N: number of paired coefficients.
    Index total_count() const { return re.count(); }
};

namespace filters {

// Kingsbury near-symmetric (13,19)-tap biorthogonal pair "near_sym_b".
inline constexpr std::array<double, 13> kNearSymBH0 = {
    -0.0017578125, 0.0, 0.022265625, -0.046875, -0.0482421875, 0.296875, 0.55546875,
    0.296875,      -0.0482421875, -0.046875, 0.022265625, 0.0, -0.0017578125};
inline constexpr std::array<double, 19> kNearSymBH1 = {
    -7.062639508928571e-05, 0.0, 0.0013419015066964285, -0.0018833705357142855, -0.007156808035714285,
    0.023856026785714284,   0.05564313616071428, -0.05168805803571428, -0.29975760323660716, 0.5594308035714286,
    -0.29975760323660716,   -0.05168805803571428, 0.05564313616071428, 0.023856026785714284, -0.007156808035714285,
    -0.0018833705357142855, 0.0013419015066964285, 0.0, -7.062639508928571e-05};
inline constexpr std::array<double, 19> kNearSymBG0 = {
    7.062639508928571e-05, 0.0, -0.0013419015066964285, -0.0018833705357142855, 0.007156808035714285,
    0.023856026785714284,  -0.05564313616071428, -0.05168805803571428, 0.29975760323660716, 0.5594308035714286,
    0.29975760323660716,   -0.05168805803571428, -0.05564313616071428, 0.023856026785714284, 0.007156808035714285,
    -0.0018833705357142855, -0.0013419015066964285, 0.0, 7.062639508928571e-05};
inline constexpr std::array<double, 13> kNearSymBG1 = {
    -0.0017578125, -0.0, 0.022265625, 0.046875, -0.0482421875, -0.296875, 0.55546875,
    -0.296875,     -0.0482421875, 0.046875, 0.022265625, -0.0, -0.0017578125};

// 14-tap quarter-shift lowpass (tree a), "qshift_b" projected onto exact
// orthonormality with a zero at z = -1. The other q-shift filters derive
// from it: h0b = reverse(h0a), h1a[n] = (-1)^n h0b[n], h1b[n] = -(-1)^n h0a[n].
inline constexpr std::array<double, 14> kQShiftBH0a = {
    0.0032531314539378485, -0.003883200384190765, 0.034660230008252302, -0.03887268833066862,
    -0.11720401465701731,  0.27529548310269081,   0.75614553372343873,  0.56881053235908197,
    0.011865974004314685,  -0.10671169218758104,  0.023825382688208784, 0.017025223370035193,
    -0.0054394560345875391, -0.0045568767428200464};

} // namespace filters

namespace detail {

/// Half-sample symmetric extension: ... x1 x0 | x0 x1 ... x_{n-1} | x_{n-1} ...
inline Index symmetric_index(Index i, Index n)
{
    const Index period = 2 * n;
    Index j = i % period;
    if (j < 0)
        j += period;
    return j >= n ? period - 1 - j : j;
}

using Triplets = std::vector<Eigen::Triplet<double>>;
using FilterMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

inline FilterMatrix from_triplets(Index rows, Index cols, const Triplets& t)
{
    FilterMatrix m(rows, cols);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

/// Undecimated odd-length filtering with symmetric extension (output n).
inline FilterMatrix odd_filter_matrix(std::span<const double> h, Index n)
{
    const auto m = static_cast<Index>(h.size());
    const Index half = m / 2;
    Triplets t;
    for (Index i = 0; i < n; ++i)
        for (Index k = 0; k < m; ++k)
            if (h[static_cast<std::size_t>(k)] != 0.0)
                t.emplace_back(i, symmetric_index(i + m - 1 - k - half, n), h[static_cast<std::size_t>(k)]);
    return from_triplets(n, n, t);
}

inline std::vector<double> taps(std::span<const double> h, std::size_t start)
{
    std::vector<double> out;
    for (std::size_t i = start; i < h.size(); i += 2)
        out.push_back(h[i]);
    return out;
}

inline double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

/// Decimating quarter-shift filtering: n inputs (n % 4 == 0) to n/2 outputs,
/// the two trees interleaved. `ha` acts on one phase, `hb` on the other.
inline FilterMatrix decimating_filter_matrix(std::span<const double> ha, std::span<const double> hb, Index n)
{
    if (n % 4 != 0)
        throw ShapeError("quarter-shift analysis needs a length divisible by 4");
    const auto m = static_cast<Index>(ha.size());
    const auto hao = taps(ha, 0), hae = taps(ha, 1), hbo = taps(hb, 0), hbe = taps(hb, 1);
    const auto L = static_cast<Index>(hao.size());
    const Index n_out = n / 2;
    const bool ab_positive = dot(ha, hb) > 0;
    const Index s1 = ab_positive ? 0 : 1;
    const Index s2 = 1 - s1;
    auto t_of = [](Index j) { return 5 + 4 * j; };
    auto ext = [&](Index j) { return symmetric_index(j - m, n); }; // xe[j]

    Triplets t;
    for (Index i = 0; i < n_out / 2; ++i) {
        for (Index k = 0; k < L; ++k) {
            const Index tj = t_of(i + L - 1 - k);
            t.emplace_back(2 * i + s1, ext(tj - 1), hao[static_cast<std::size_t>(k)]);
            t.emplace_back(2 * i + s1, ext(tj - 3), hae[static_cast<std::size_t>(k)]);
            t.emplace_back(2 * i + s2, ext(tj), hbo[static_cast<std::size_t>(k)]);
            t.emplace_back(2 * i + s2, ext(tj - 2), hbe[static_cast<std::size_t>(k)]);
        }
    }
    return from_triplets(n_out, n, t);
}

/// Interpolating quarter-shift synthesis: n inputs to 2n outputs.
inline FilterMatrix interpolating_filter_matrix(std::span<const double> ha, std::span<const double> hb, Index n)
{
    if (n % 2 != 0)
        throw ShapeError("quarter-shift synthesis needs an even length");
    const auto m = static_cast<Index>(ha.size());
    const Index half = m / 2;
    const auto hao = taps(ha, 0), hae = taps(ha, 1), hbo = taps(hb, 0), hbe = taps(hb, 1);
    const auto L = static_cast<Index>(hao.size());
    const bool ab_positive = dot(ha, hb) > 0;
    auto ext = [&](Index j) { return symmetric_index(j - half, n); };
    const Index n_out = 2 * n;

    Triplets t;
    auto add = [&](Index row, const std::vector<double>& h, Index shift, Index i, Index t0) {
        for (Index k = 0; k < L; ++k) {
            const Index tj = t0 + 2 * (i + L - 1 - k); // t[j] = t0 + 2j
            t.emplace_back(row, ext(tj + shift), h[static_cast<std::size_t>(k)]);
        }
    };
    if (half % 2 == 0) {
        const Index t0 = 3;
        const Index da = ab_positive ? 0 : -1;
        const Index db = ab_positive ? -1 : 0;
        for (Index i = 0; 4 * i < n_out; ++i) {
            add(4 * i, hae, db - 2, i, t0);
            add(4 * i + 1, hbe, da - 2, i, t0);
            add(4 * i + 2, hao, db, i, t0);
            add(4 * i + 3, hbo, da, i, t0);
        }
    } else {
        const Index t0 = 2;
        const Index da = ab_positive ? 0 : -1;
        const Index db = ab_positive ? -1 : 0;
        for (Index i = 0; 4 * i < n_out; ++i) {
            add(4 * i, hao, db, i, t0);
            add(4 * i + 1, hbo, da, i, t0);
            add(4 * i + 2, hae, db, i, t0);
            add(4 * i + 3, hbe, da, i, t0);
        }
    }
    return from_triplets(n_out, n, t);
}

inline FilterMatrix haar_matrix(Index n, bool highpass)
{
    const double s = std::sqrt(0.5);
    Triplets t;
    for (Index i = 0; i < n / 2; ++i) {
        t.emplace_back(i, 2 * i, s);
        t.emplace_back(i, 2 * i + 1, highpass ? -s : s);
    }
    return from_triplets(n / 2, n, t);
}

struct QShiftSet {
    std::array<double, 14> h0a, h0b, h1a, h1b;
};

inline QShiftSet qshift_b()
{
    QShiftSet q{};
    q.h0a = filters::kQShiftBH0a;
    for (std::size_t n = 0; n < 14; ++n)
        q.h0b[n] = q.h0a[13 - n];
    for (std::size_t n = 0; n < 14; ++n) {
        const double sign = n % 2 == 0 ? 1.0 : -1.0;
        q.h1a[n] = sign * q.h0b[n];
        q.h1b[n] = -sign * q.h0a[n];
    }
    return q;
}

/// Quads of a real (2m x 2n) array to two complex (m x n) subbands.
template <typename Scalar>
void quads_to_complex(const RealImage<Scalar>& y, ComplexImage<Scalar>& z1, ComplexImage<Scalar>& z2)
{
    const Index m = y.rows() / 2, n = y.cols() / 2;
    const Scalar s = std::sqrt(Scalar(0.5));
    z1.resize(m, n);
    z2.resize(m, n);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < n; ++j) {
            const Scalar a = y(2 * i, 2 * j), b = y(2 * i, 2 * j + 1);
            const Scalar c = y(2 * i + 1, 2 * j), d = y(2 * i + 1, 2 * j + 1);
            z1(i, j) = {s * (a - d), s * (b + c)};
            z2(i, j) = {s * (a + d), s * (b - c)};
        }
}

/// Inverse (and transpose) of quads_to_complex.
template <typename Scalar>
RealImage<Scalar> complex_to_quads(const ComplexImage<Scalar>& z1, const ComplexImage<Scalar>& z2)
{
    const Index m = z1.rows(), n = z1.cols();
    const Scalar s = std::sqrt(Scalar(0.5));
    RealImage<Scalar> y(2 * m, 2 * n);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < n; ++j) {
            const auto w1 = z1(i, j), w2 = z2(i, j);
            y(2 * i, 2 * j) = s * (w1.real() + w2.real());
            y(2 * i, 2 * j + 1) = s * (w1.imag() + w2.imag());
            y(2 * i + 1, 2 * j) = s * (w1.imag() - w2.imag());
            y(2 * i + 1, 2 * j + 1) = s * (w2.real() - w1.real());
        }
    return y;
}

} // namespace detail

/// A fixed-size transform plan: all 1D stage matrices for a rows x cols
/// image at a given depth.
template <typename Scalar>
class WaveletTransform {
public:
    using Sparse = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;
    using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    WaveletTransform(Index rows, Index cols, int levels, WaveletKind kind)
        : rows_(rows), cols_(cols), levels_(levels), kind_(kind)
    {
        if (levels < 0)
            throw std::invalid_argument("wavelet: levels must be >= 0");
        const Index div = Index{1} << levels;
        if (rows % div != 0 || cols % div != 0)
            throw ShapeError("wavelet: image " + std::to_string(rows) + "x" + std::to_string(cols) +
                             " is not divisible by 2^levels");
        for (int l = 0; l < levels; ++l) {
            // DTCWT level 1 is undecimated before the quad packing
            const int shift = kind == WaveletKind::dtcwt ? std::max(0, l - 1) : l;
            stages_.push_back(make_stage(l, rows >> shift, cols >> shift));
        }
    }

    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    int levels() const { return levels_; }
    WaveletKind kind() const { return kind_; }

    Pyramid<Scalar> forward(const RealImage<Scalar>& x) const
    {
        require_same_shape(x.rows(), x.cols(), rows_, cols_, "wavelet_forward");
        Pyramid<Scalar> p;
        Dense low = x.matrix();
        for (const auto& st : stages_) {
            const Dense lo_cols = st.a0_rows * low; // column lowpass (acts on rows index)
            const Dense hi_cols = st.a1_rows * low;
            Dense h = hi_cols * st.a0_cols.transpose();
            Dense v = lo_cols * st.a1_cols.transpose();
            Dense d = hi_cols * st.a1_cols.transpose();
            low = lo_cols * st.a0_cols.transpose();
            p.bands.push_back(pack(h, v, d));
        }
        p.lowpass = low.array();
        return p;
    }

    /// Adjoint of forward(): maps coefficient-space gradients back to pixels.
    RealImage<Scalar> transpose(const Pyramid<Scalar>& g) const
    {
        check_pyramid(g);
        Dense low = g.lowpass.matrix();
        for (int l = levels_ - 1; l >= 0; --l) {
            const auto& st = stages_[static_cast<std::size_t>(l)];
            Dense h, v, d;
            unpack(g.bands[static_cast<std::size_t>(l)], h, v, d);
            low = st.a0_rows.transpose() * (low * st.a0_cols) + st.a1_rows.transpose() * (h * st.a0_cols) +
                  st.a0_rows.transpose() * (v * st.a1_cols) + st.a1_rows.transpose() * (d * st.a1_cols);
        }
        return low.array();
    }

    RealImage<Scalar> inverse(const Pyramid<Scalar>& p) const
    {
        check_pyramid(p);
        Dense low = p.lowpass.matrix();
        for (int l = levels_ - 1; l >= 0; --l) {
            const auto& st = stages_[static_cast<std::size_t>(l)];
            Dense h, v, d;
            unpack(p.bands[static_cast<std::size_t>(l)], h, v, d);
            const Dense y1 = st.s0_rows * low + st.s1_rows * h;
            const Dense y2 = st.s0_rows * v + st.s1_rows * d;
            low = y1 * st.s0_cols.transpose() + y2 * st.s1_cols.transpose();
        }
        return low.array();
    }

private:
    struct Stage {
        Sparse a0_rows, a1_rows, a0_cols, a1_cols; // analysis
        Sparse s0_rows, s1_rows, s0_cols, s1_cols; // synthesis
    };

    Stage make_stage(int level, Index n_rows, Index n_cols) const
    {
        Stage st;
        auto build = [&](Index n, Sparse& a0, Sparse& a1, Sparse& s0, Sparse& s1) {
            using namespace detail;
            if (kind_ == WaveletKind::dwt) {
                a0 = haar_matrix(n, false).cast<Scalar>();
                a1 = haar_matrix(n, true).cast<Scalar>();
                s0 = Sparse(a0.transpose());
                s1 = Sparse(a1.transpose());
            } else if (level == 0) {
                a0 = odd_filter_matrix(filters::kNearSymBH0, n).cast<Scalar>();
                a1 = odd_filter_matrix(filters::kNearSymBH1, n).cast<Scalar>();
                s0 = odd_filter_matrix(filters::kNearSymBG0, n).cast<Scalar>();
                s1 = odd_filter_matrix(filters::kNearSymBG1, n).cast<Scalar>();
            } else {
                const QShiftSet q = qshift_b();
                // analysis (ha, hb) = (h0b, h0a) / (h1b, h1a); synthesis filters
                // g0a = h0b, g0b = h0a, g1a = h1b, g1b = h1a enter as (g0b, g0a) / (g1b, g1a).
                a0 = decimating_filter_matrix(q.h0b, q.h0a, n).cast<Scalar>();
                a1 = decimating_filter_matrix(q.h1b, q.h1a, n).cast<Scalar>();
                s0 = interpolating_filter_matrix(q.h0a, q.h0b, n / 2).cast<Scalar>();
                s1 = interpolating_filter_matrix(q.h1a, q.h1b, n / 2).cast<Scalar>();
            }
        };
        build(n_rows, st.a0_rows, st.a1_rows, st.s0_rows, st.s1_rows);
        build(n_cols, st.a0_cols, st.a1_cols, st.s0_cols, st.s1_cols);
        return st;
    }

    // DTCWT orientation slots: horizontal pair -> {0, 5}, vertical -> {2, 3},
    // diagonal -> {1, 4}. Haar keeps {h, v, d} as real-valued bands.
    std::vector<ComplexImage<Scalar>> pack(const Dense& h, const Dense& v, const Dense& d) const
    {
        if (kind_ == WaveletKind::dwt)
            return {h.array().template cast<Complex<Scalar>>(), v.array().template cast<Complex<Scalar>>(),
                    d.array().template cast<Complex<Scalar>>()};
        std::vector<ComplexImage<Scalar>> out(6);
        detail::quads_to_complex<Scalar>(h.array(), out[0], out[5]);
        detail::quads_to_complex<Scalar>(v.array(), out[2], out[3]);
        detail::quads_to_complex<Scalar>(d.array(), out[1], out[4]);
        return out;
    }

    void unpack(const std::vector<ComplexImage<Scalar>>& b, Dense& h, Dense& v, Dense& d) const
    {
        if (kind_ == WaveletKind::dwt) {
            h = b[0].real().matrix();
            v = b[1].real().matrix();
            d = b[2].real().matrix();
            return;
        }
        h = detail::complex_to_quads<Scalar>(b[0], b[5]).matrix();
        v = detail::complex_to_quads<Scalar>(b[2], b[3]).matrix();
        d = detail::complex_to_quads<Scalar>(b[1], b[4]).matrix();
    }

    void check_pyramid(const Pyramid<Scalar>& p) const
    {
        const std::size_t per_level = kind_ == WaveletKind::dtcwt ? 6 : 3;
        if (p.bands.size() != static_cast<std::size_t>(levels_))
            throw ShapeError("wavelet: pyramid depth does not match the transform");
        for (int l = 0; l < levels_; ++l) {
            const auto& level = p.bands[static_cast<std::size_t>(l)];
            if (level.size() != per_level)
                throw ShapeError("wavelet: wrong number of subbands at level " + std::to_string(l + 1));
            const Index br = rows_ >> (l + 1), bc = cols_ >> (l + 1);
            for (const auto& b : level)
                require_same_shape(b.rows(), b.cols(), br, bc, "wavelet subband");
        }
        const Index lr = levels_ == 0 ? rows_ : (kind_ == WaveletKind::dtcwt ? rows_ >> (levels_ - 1) : rows_ >> levels_);
        const Index lc = levels_ == 0 ? cols_ : (kind_ == WaveletKind::dtcwt ? cols_ >> (levels_ - 1) : cols_ >> levels_);
        require_same_shape(p.lowpass.rows(), p.lowpass.cols(), lr, lc, "wavelet lowpass");
    }

    Index rows_, cols_;
    int levels_;
    WaveletKind kind_;
    std::vector<Stage> stages_;
};

/// Coefficients in a fixed order (levels, orientations, row-major; then the
/// lowpass) for per-coefficient arithmetic.
template <typename Scalar>
Vector<Complex<Scalar>> flatten(const Pyramid<Scalar>& p)
{
    Vector<Complex<Scalar>> out(p.count());
    Index k = 0;
    for (const auto& level : p.bands)
        for (const auto& b : level)
            for (Index i = 0; i < b.size(); ++i)
                out[k++] = b.data()[i];
    for (Index i = 0; i < p.lowpass.size(); ++i)
        out[k++] = p.lowpass.data()[i];
    return out;
}

/// Inverse of flatten() onto the layout of `like`. Imaginary parts of the
/// lowpass entries are dropped.
template <typename Scalar>
Pyramid<Scalar> unflatten(const Vector<Complex<Scalar>>& v, const Pyramid<Scalar>& like)
{
    Pyramid<Scalar> p = like;
    Index k = 0;
    for (auto& level : p.bands)
        for (auto& b : level)
            for (Index i = 0; i < b.size(); ++i)
                b.data()[i] = v[k++];
    for (Index i = 0; i < p.lowpass.size(); ++i)
        p.lowpass.data()[i] = v[k++].real();
    return p;
}

template <typename Scalar>
WaveletCoeffs<Scalar> wavelet_forward(const WaveletTransform<Scalar>& w, const ComplexImage<Scalar>& img)
{
    WaveletCoeffs<Scalar> c;
    c.kind = w.kind();
    c.levels = w.levels();
    c.re = w.forward(img.real());
    c.im = w.forward(img.imag());
    return c;
}

template <typename Scalar>
WaveletCoeffs<Scalar> wavelet_forward(const ComplexImage<Scalar>& img, int levels, WaveletKind kind)
{
    return wavelet_forward(WaveletTransform<Scalar>(img.rows(), img.cols(), levels, kind), img);
}

template <typename Scalar>
ComplexImage<Scalar> wavelet_inverse(const WaveletTransform<Scalar>& w, const WaveletCoeffs<Scalar>& c)
{
    if (c.kind != w.kind() || c.levels != w.levels())
        throw ShapeError("wavelet_inverse: coefficients do not match the transform");
    ComplexImage<Scalar> out(w.rows(), w.cols());
    out.real() = w.inverse(c.re);
    out.imag() = w.inverse(c.im);
    return out;
}

/// Synthesis; the image size is recovered from the pyramid shape.
template <typename Scalar>
ComplexImage<Scalar> wavelet_inverse(const WaveletCoeffs<Scalar>& c)
{
    Index rows = c.re.lowpass.rows(), cols = c.re.lowpass.cols();
    if (c.levels > 0) {
        if (c.re.bands.empty() || c.re.bands.front().empty())
            throw ShapeError("wavelet_inverse: malformed pyramid");
        rows = 2 * c.re.bands.front().front().rows();
        cols = 2 * c.re.bands.front().front().cols();
    }
    return wavelet_inverse(WaveletTransform<Scalar>(rows, cols, c.levels, c.kind), c);
}

/// Magnitudes of the paired coefficients: sqrt(|re_n|^2 + |im_n|^2).
template <typename Scalar>
Vector<Scalar> paired_magnitudes(const WaveletCoeffs<Scalar>& c)
{
    const auto a = flatten(c.re);
    const auto b = flatten(c.im);
    return (a.cwiseAbs2() + b.cwiseAbs2()).cwiseSqrt();
}

/// (1/N) sum_n |(W p_est)_n| / (|(W p_true)_n| + eps).
template <typename Scalar>
Scalar weighted_l1(const WaveletTransform<Scalar>& w, const ComplexImage<Scalar>& p_est,
                   const ComplexImage<Scalar>& p_true, Scalar eps)
{
    require_same_shape(p_est.rows(), p_est.cols(), p_true.rows(), p_true.cols(), "weighted_l1");
    if (!(eps > 0))
        throw std::invalid_argument("weighted_l1: eps must be positive");
    const Vector<Scalar> num = paired_magnitudes(wavelet_forward(w, p_est));
    const Vector<Scalar> den = paired_magnitudes(wavelet_forward(w, p_true)).array() + eps;
    return (num.array() / den.array()).sum() / static_cast<Scalar>(num.size());
}

template <typename Scalar>
Scalar weighted_l1(const ComplexImage<Scalar>& p_est, const ComplexImage<Scalar>& p_true, int levels,
                   WaveletKind kind, Scalar eps)
{
    require_same_shape(p_est.rows(), p_est.cols(), p_true.rows(), p_true.cols(), "weighted_l1");
    return weighted_l1(WaveletTransform<Scalar>(p_est.rows(), p_est.cols(), levels, kind), p_est, p_true, eps);
}

/// ||p_est - p_true||_2 / ||p_true||_2 in the image domain.
template <typename Scalar>
Scalar pic_l2(const ComplexImage<Scalar>& p_est, const ComplexImage<Scalar>& p_true)
{
    require_same_shape(p_est.rows(), p_est.cols(), p_true.rows(), p_true.cols(), "pic_l2");
    const Scalar ref = p_true.matrix().norm();
    if (ref == 0)
        throw std::invalid_argument("pic_l2: reference perturbation is zero");
    return (p_est - p_true).matrix().norm() / ref;
}

} // namespace spic
