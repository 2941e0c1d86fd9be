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

namespace spic {

inline constexpr double kPsnrCap = 99.0;

/// 20 log10(max|ref| / RMSE(|ref|, |est|)) on magnitudes, capped at 99 dB.
/// With `region`, the MSE is taken over the selected pixels only.
double psnr(const ComplexImage<double>& ref, const ComplexImage<double>& est, const BoolImage* region = nullptr);

/// Mean SSIM of the magnitude images over all positions where an 11x11
/// Gaussian window (sigma 1.5) fits, with L = max|ref|. With `region`, only
/// windows centred on a selected pixel are averaged.
double ssim(const ComplexImage<double>& ref, const ComplexImage<double>& est, const BoolImage* region = nullptr);

/// The same on real images (used for per-volume aggregation and tests).
double psnr_magnitude(const RealImage<double>& ref, const RealImage<double>& est, const BoolImage* region = nullptr);
double ssim_magnitude(const RealImage<double>& ref, const RealImage<double>& est, double data_range,
                      const BoolImage* region = nullptr);

} // namespace spic
