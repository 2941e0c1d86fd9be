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

#include "spic/types.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

namespace spic {

namespace detail {

template <typename Scalar>
struct Fftw;

template <>
struct Fftw<double> {
    using plan = fftw_plan;
    using cpx = fftw_complex;
    static cpx* alloc(std::size_t n) { return fftw_alloc_complex(n); }
    static void release(cpx* p) { fftw_free(p); }
    static plan make(int rows, int cols, cpx* buf, int sign)
    {
        return fftw_plan_dft_2d(rows, cols, buf, buf, sign, FFTW_ESTIMATE);
    }
    static void run(plan p, cpx* buf) { fftw_execute_dft(p, buf, buf); }
    static void destroy(plan p) { fftw_destroy_plan(p); }
};

template <>
struct Fftw<float> {
    using plan = fftwf_plan;
    using cpx = fftwf_complex;
    static cpx* alloc(std::size_t n) { return fftwf_alloc_complex(n); }
    static void release(cpx* p) { fftwf_free(p); }
    static plan make(int rows, int cols, cpx* buf, int sign)
    {
        return fftwf_plan_dft_2d(rows, cols, buf, buf, sign, FFTW_ESTIMATE);
    }
    static void run(plan p, cpx* buf) { fftwf_execute_dft(p, buf, buf); }
    static void destroy(plan p) { fftwf_destroy_plan(p); }
};

/// The FFTW planner is not reentrant.
inline std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

/// In-place 2D plan with its own aligned work buffer. FFTW_ESTIMATE keeps
/// plan selection (and therefore rounding) identical from run to run.
template <typename Scalar>
class FftPlan {
public:
    using F = Fftw<Scalar>;
    FftPlan(Index rows, Index cols, bool inverse) : size_(static_cast<std::size_t>(rows * cols))
    {
        buf_ = F::alloc(size_);
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        plan_ = F::make(static_cast<int>(rows), static_cast<int>(cols), buf_, inverse ? FFTW_BACKWARD : FFTW_FORWARD);
        if (plan_ == nullptr)
            throw std::runtime_error("FFTW failed to create a plan");
    }
    ~FftPlan()
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        F::destroy(plan_);
        F::release(buf_);
    }
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    Complex<Scalar>* buffer() { return reinterpret_cast<Complex<Scalar>*>(buf_); }
    void execute() { F::run(plan_, buf_); }

private:
    std::size_t size_;
    typename F::cpx* buf_ = nullptr;
    typename F::plan plan_{};
};

template <typename Scalar>
FftPlan<Scalar>& fft_plan(Index rows, Index cols, bool inverse)
{
    thread_local std::map<std::tuple<Index, Index, bool>, std::unique_ptr<FftPlan<Scalar>>> cache;
    auto& slot = cache[{rows, cols, inverse}];
    if (!slot)
        slot = std::make_unique<FftPlan<Scalar>>(rows, cols, inverse);
    return *slot;
}

} // namespace detail

/// In-place unitary 2D DFT (1/sqrt(N) scaling in both directions) of a
/// row-major block. `inverse` selects the conjugate transform.
template <typename Scalar, typename Block>
void fft2_inplace(Block&& plane, bool inverse)
{
    const Index rows = plane.rows();
    const Index cols = plane.cols();
    auto& plan = detail::fft_plan<Scalar>(rows, cols, inverse);
    Complex<Scalar>* buf = plan.buffer();
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c)
            buf[r * cols + c] = plane(r, c);
    plan.execute();
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(rows * cols));
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c)
            plane(r, c) = buf[r * cols + c] * scale;
}

template <typename Scalar>
ComplexImage<Scalar> fft2(const ComplexImage<Scalar>& img)
{
    ComplexImage<Scalar> out = img;
    fft2_inplace<Scalar>(out, false);
    return out;
}

template <typename Scalar>
ComplexImage<Scalar> ifft2(const ComplexImage<Scalar>& ksp)
{
    ComplexImage<Scalar> out = ksp;
    fft2_inplace<Scalar>(out, true);
    return out;
}

} // namespace spic
