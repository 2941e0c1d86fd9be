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

// Residual CNN regularizer. Layout of the flat parameter vector:
//   input conv (C x 2 x k x k) | block kernels (B x C x C x k x k) |
//   tail conv (C x C x k x k) | output conv (2 x C x k x k) | mu_raw
// Each residual block applies its kernel twice: h + 0.1 * K(relu(K(h))).

#include "spic/types.hpp"

#include <json.hpp>

#include <cmath>
#include <random>

namespace spic {

struct UnrolledConfig {
    int T = 5;
    int cg_iters = 10;
    int blocks = 3;
    int channels = 16;
    int kernel = 3;
    int precision = 64; ///< 32 or 64 bit floating point

    void validate() const;
};

void to_json(nlohmann::json& j, const UnrolledConfig& c);
void from_json(const nlohmann::json& j, UnrolledConfig& c);

inline constexpr double kResidualScale = 0.1;

/// Closed-form trainable parameter count.
inline Index parameter_count(const UnrolledConfig& c)
{
    const Index C = c.channels, k2 = static_cast<Index>(c.kernel) * c.kernel;
    return 2 * C * k2 + c.blocks * C * C * k2 + C * C * k2 + 2 * C * k2 + 1;
}

/// Offsets of each tensor inside the flat vector.
struct ParameterLayout {
    struct Tensor {
        Index offset, out, in;
    };
    Tensor input, tail, output;
    std::vector<Tensor> blocks;
    Index mu_raw = 0;
    Index total = 0;

    explicit ParameterLayout(const UnrolledConfig& c)
    {
        const Index C = c.channels, k2 = static_cast<Index>(c.kernel) * c.kernel;
        Index at = 0;
        auto take = [&](Index out, Index in) {
            Tensor t{at, out, in * k2};
            at += out * in * k2;
            return t;
        };
        input = take(C, 2);
        for (int b = 0; b < c.blocks; ++b)
            blocks.push_back(take(C, C));
        tail = take(C, C);
        output = take(2, C);
        mu_raw = at++;
        total = at;
    }
};

template <typename Scalar>
struct RegularizerParams {
    UnrolledConfig config;
    Vector<Scalar> theta;

    Scalar mu() const { return softplus(theta[ParameterLayout(config).mu_raw]); }

    static Scalar softplus(Scalar v)
    {
        return v > Scalar(20) ? v : std::log1p(std::exp(v));
    }
    static Scalar sigmoid(Scalar v) { return Scalar(1) / (Scalar(1) + std::exp(-v)); }

    template <typename Other>
    RegularizerParams<Other> cast() const
    {
        return {config, theta.template cast<Other>()};
    }
};

/// He-style normal init scaled by fan-in; the output projection starts at
/// zero so the initial regularizer is the identity. mu starts at 0.05.
template <typename Scalar>
RegularizerParams<Scalar> init_params(const UnrolledConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    const ParameterLayout layout(cfg);
    RegularizerParams<Scalar> p{cfg, Vector<Scalar>::Zero(layout.total)};
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto fill = [&](const ParameterLayout::Tensor& t, double gain) {
        const double std_dev = std::sqrt(gain / static_cast<double>(t.in));
        for (Index i = 0; i < t.out * t.in; ++i)
            p.theta[t.offset + i] = static_cast<Scalar>(std_dev * gauss(rng));
    };
    fill(layout.input, 1.0);
    for (const auto& b : layout.blocks)
        fill(b, 2.0);
    fill(layout.tail, 1.0);
    p.theta[layout.mu_raw] = static_cast<Scalar>(std::log(std::expm1(0.05)));
    return p;
}

namespace detail {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Channels x (rows*cols) activations to (channels*k*k) x (rows*cols)
/// patches with zero padding.
template <typename Scalar>
void im2col(const Mat<Scalar>& in, Index rows, Index cols, int k, Mat<Scalar>& out)
{
    const Index C = in.rows(), half = k / 2;
    out.setZero(C * k * k, rows * cols);
    for (Index c = 0; c < C; ++c)
        for (int dy = 0; dy < k; ++dy)
            for (int dx = 0; dx < k; ++dx) {
                const Index row = (c * k + dy) * k + dx;
                const Index oy = dy - half, ox = dx - half;
                const Index x_lo = std::max<Index>(0, -ox), x_hi = std::min<Index>(cols, cols - ox);
                if (x_hi <= x_lo)
                    continue;
                for (Index y = std::max<Index>(0, -oy); y < std::min<Index>(rows, rows - oy); ++y)
                    for (Index x = x_lo; x < x_hi; ++x)
                        out(row, y * cols + x) = in(c, (y + oy) * cols + x + ox);
            }
}

template <typename Scalar>
void col2im_add(const Mat<Scalar>& colsm, Index rows, Index cols, int k, Mat<Scalar>& out)
{
    const Index C = out.rows(), half = k / 2;
    for (Index c = 0; c < C; ++c)
        for (int dy = 0; dy < k; ++dy)
            for (int dx = 0; dx < k; ++dx) {
                const Index row = (c * k + dy) * k + dx;
                const Index oy = dy - half, ox = dx - half;
                const Index x_lo = std::max<Index>(0, -ox), x_hi = std::min<Index>(cols, cols - ox);
                for (Index y = std::max<Index>(0, -oy); y < std::min<Index>(rows, rows - oy); ++y)
                    for (Index x = x_lo; x < x_hi; ++x)
                        out(c, (y + oy) * cols + x + ox) += colsm(row, y * cols + x);
            }
}

} // namespace detail

/// Activations kept by a forward pass for the backward pass.
template <typename Scalar>
struct RegularizerTrace {
    detail::Mat<Scalar> input;            // 2 x HW
    std::vector<detail::Mat<Scalar>> h;   // block inputs, then the tail input
    std::vector<detail::Mat<Scalar>> u;   // post-ReLU inner activations
    detail::Mat<Scalar> t;                // output-conv input
};

template <typename Scalar>
class Regularizer {
public:
    using Mat = detail::Mat<Scalar>;
    using WeightMap = Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
    using GradMap = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

    explicit Regularizer(const UnrolledConfig& cfg) : cfg_(cfg), layout_(cfg) { cfg.validate(); }

    const ParameterLayout& layout() const { return layout_; }

    ComplexImage<Scalar> apply(const ComplexImage<Scalar>& x, const Vector<Scalar>& theta,
                               RegularizerTrace<Scalar>* trace = nullptr) const
    {
        check_theta(theta);
        const Index rows = x.rows(), cols = x.cols(), hw = rows * cols;
        Mat in(2, hw);
        for (Index i = 0; i < hw; ++i) {
            in(0, i) = x.data()[i].real();
            in(1, i) = x.data()[i].imag();
        }
        Mat patches;
        auto conv = [&](const ParameterLayout::Tensor& t, const Mat& a) -> Mat {
            detail::im2col(a, rows, cols, cfg_.kernel, patches);
            return weights(theta, t) * patches;
        };

        const Mat h0 = conv(layout_.input, in);
        Mat h = h0;
        if (trace != nullptr) {
            trace->input = in;
            trace->h.clear();
            trace->u.clear();
        }
        for (const auto& block : layout_.blocks) {
            Mat u = conv(block, h).cwiseMax(Scalar(0));
            const Mat v = conv(block, u);
            if (trace != nullptr) {
                trace->h.push_back(h);
                trace->u.push_back(std::move(u));
            }
            h += Scalar(kResidualScale) * v;
        }
        if (trace != nullptr)
            trace->h.push_back(h);
        const Mat t = conv(layout_.tail, h) + h0;
        const Mat o = conv(layout_.output, t);
        if (trace != nullptr)
            trace->t = t;

        ComplexImage<Scalar> out = x;
        for (Index i = 0; i < hw; ++i)
            out.data()[i] += Complex<Scalar>(o(0, i), o(1, i));
        return out;
    }

    /// Accumulates dL/dtheta into `grad` and returns dL/dx for an upstream
    /// gradient g = dL/dRe(out) + i dL/dIm(out).
    ComplexImage<Scalar> backward(const RegularizerTrace<Scalar>& tr, const ComplexImage<Scalar>& g,
                                  const Vector<Scalar>& theta, Vector<Scalar>& grad) const
    {
        const Index rows = g.rows(), cols = g.cols(), hw = rows * cols;
        const int k = cfg_.kernel;
        Mat go(2, hw);
        for (Index i = 0; i < hw; ++i) {
            go(0, i) = g.data()[i].real();
            go(1, i) = g.data()[i].imag();
        }
        Mat patches;
        // Adds dL/dW for out = W * im2col(a) and returns dL/da.
        auto conv_back = [&](const ParameterLayout::Tensor& t, const Mat& a, const Mat& gout) -> Mat {
            detail::im2col(a, rows, cols, k, patches);
            grad_map(grad, t).noalias() += gout * patches.transpose();
            const Mat gp = weights(theta, t).transpose() * gout;
            Mat ga = Mat::Zero(a.rows(), hw);
            detail::col2im_add(gp, rows, cols, k, ga);
            return ga;
        };

        const Mat gt = conv_back(layout_.output, tr.t, go);
        Mat gh = conv_back(layout_.tail, tr.h.back(), gt);
        for (std::size_t b = layout_.blocks.size(); b-- > 0;) {
            const auto& block = layout_.blocks[b];
            const Mat gv = Scalar(kResidualScale) * gh;
            Mat gu = conv_back(block, tr.u[b], gv);
            gu = (tr.u[b].array() > Scalar(0)).select(gu, Scalar(0));
            gh += conv_back(block, tr.h[b], gu);
        }
        gh += gt; // long skip from the input projection
        const Mat gin = conv_back(layout_.input, tr.input, gh);

        ComplexImage<Scalar> gx = g;
        for (Index i = 0; i < hw; ++i)
            gx.data()[i] += Complex<Scalar>(gin(0, i), gin(1, i));
        return gx;
    }

private:
    void check_theta(const Vector<Scalar>& theta) const
    {
        if (theta.size() != layout_.total)
            throw ShapeError("regularizer: parameter vector has " + std::to_string(theta.size()) +
                             " entries, config needs " + std::to_string(layout_.total));
    }
    static WeightMap weights(const Vector<Scalar>& theta, const ParameterLayout::Tensor& t)
    {
        return WeightMap(theta.data() + t.offset, t.out, t.in);
    }
    static GradMap grad_map(Vector<Scalar>& grad, const ParameterLayout::Tensor& t)
    {
        return GradMap(grad.data() + t.offset, t.out, t.in);
    }

    UnrolledConfig cfg_;
    ParameterLayout layout_;
};

} // namespace spic
