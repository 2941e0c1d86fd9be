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
#include "spic/metrics.hpp"

#include <cmath>
#include <string>

namespace spic {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;

Eigen::Matrix<double, kWindow, 1> gaussian_window()
{
    Eigen::Matrix<double, kWindow, 1> w;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - kWindow / 2;
        w[i] = std::exp(-d * d / (2 * kSigma * kSigma));
    }
    return w / w.sum();
}

/// Separable "valid" filtering with the normalised Gaussian window.
RealImage<double> filter_valid(const RealImage<double>& img)
{
    static const auto w = gaussian_window();
    const Index out_r = img.rows() - kWindow + 1, out_c = img.cols() - kWindow + 1;
    RealImage<double> tmp = RealImage<double>::Zero(img.rows(), out_c);
    for (int k = 0; k < kWindow; ++k)
        tmp += w[k] * img.middleCols(k, out_c);
    RealImage<double> out = RealImage<double>::Zero(out_r, out_c);
    for (int k = 0; k < kWindow; ++k)
        out += w[k] * tmp.middleRows(k, out_r);
    return out;
}

void check_region(const RealImage<double>& img, const BoolImage* region, const char* what)
{
    if (region == nullptr)
        return;
    require_same_shape(img.rows(), img.cols(), region->rows(), region->cols(), what);
    if (!region->any())
        throw std::invalid_argument(std::string(what) + ": region is empty");
}

} // namespace

double psnr_magnitude(const RealImage<double>& ref, const RealImage<double>& est, const BoolImage* region)
{
    require_same_shape(ref.rows(), ref.cols(), est.rows(), est.cols(), "psnr");
    check_region(ref, region, "psnr");
    const double peak = ref.maxCoeff();
    if (!(peak > 0))
        throw std::invalid_argument("psnr: reference is zero");
    const RealImage<double> sq = (ref - est).square();
    const double mse = region == nullptr ? sq.mean()
                                         : region->select(sq, 0.0).sum() / static_cast<double>(region->count());
    if (mse == 0)
        return kPsnrCap;
    return std::min(kPsnrCap, 20.0 * std::log10(peak / std::sqrt(mse)));
}

double psnr(const ComplexImage<double>& ref, const ComplexImage<double>& est, const BoolImage* region)
{
    return psnr_magnitude(ref.abs(), est.abs(), region);
}

double ssim_magnitude(const RealImage<double>& x, const RealImage<double>& y, double data_range,
                      const BoolImage* region)
{
    require_same_shape(x.rows(), x.cols(), y.rows(), y.cols(), "ssim");
    check_region(x, region, "ssim");
    if (x.rows() < kWindow || x.cols() < kWindow)
        throw std::invalid_argument("ssim: images must be at least 11x11");
    if (!(data_range > 0))
        throw std::invalid_argument("ssim: data range must be positive");
    const double c1 = std::pow(0.01 * data_range, 2), c2 = std::pow(0.03 * data_range, 2);
    const RealImage<double> mx = filter_valid(x), my = filter_valid(y);
    const RealImage<double> vx = filter_valid(x * x) - mx * mx;
    const RealImage<double> vy = filter_valid(y * y) - my * my;
    const RealImage<double> cxy = filter_valid(x * y) - mx * my;
    const RealImage<double> map =
        ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    if (region == nullptr)
        return map.mean();
    const BoolImage centres = region->block(kWindow / 2, kWindow / 2, map.rows(), map.cols());
    if (!centres.any())
        throw std::invalid_argument("ssim: no window is centred inside the region");
    return centres.select(map, 0.0).sum() / static_cast<double>(centres.count());
}

double ssim(const ComplexImage<double>& ref, const ComplexImage<double>& est, const BoolImage* region)
{
    const RealImage<double> a = ref.abs();
    const double peak = a.maxCoeff();
    if (!(peak > 0))
        throw std::invalid_argument("ssim: reference is zero");
    return ssim_magnitude(a, est.abs(), peak, region);
}

} // namespace spic
