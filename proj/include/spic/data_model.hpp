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

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace spic {

/// Piecewise-constant multi-ellipse magnitude with a smooth polynomial phase,
/// normalised to peak magnitude 1. Requires rows, cols >= 16.
ComplexImage<double> simulate_phantom(Index rows, Index cols, std::uint64_t seed);

/// Smooth coil profiles centred around the FOV perimeter, sum-of-squares
/// normalised on `support` (phase taken relative to coil 0) and zero outside.
CoilSensitivities<double> simulate_coils(Index rows, Index cols, Index n_coils, const BoolImage& support);

/// Pixels with nonzero magnitude.
BoolImage support_of(const ComplexImage<double>& img);

/// max over support pixels of |sum_c |S_c|^2 - 1|.
double coil_normalization_error(const CoilSensitivities<double>& coils);

struct DatasetSlice {
    ComplexImage<double> ground_truth;
    CoilSensitivities<double> coils;
    KSpace<double> full_kspace;
};

struct Dataset {
    std::vector<DatasetSlice> slices;
    nlohmann::json metadata = nlohmann::json::object();

    Index rows() const { return slices.empty() ? 0 : slices.front().ground_truth.rows(); }
    Index cols() const { return slices.empty() ? 0 : slices.front().ground_truth.cols(); }
    Index n_coils() const { return slices.empty() ? 0 : slices.front().coils.n_coils(); }
};

Dataset build_dataset(int n_slices, Index rows, Index cols, Index n_coils, const NoiseSpec& noise,
                      std::uint64_t seed);

enum class StorageType { complex64, complex128 };

/// JSON header, one NUL byte, then little-endian interleaved (re, im)
/// payloads per slice: ground truth, coil maps (coil-major), full k-space
/// (coil-major).
void save_dataset(const Dataset& d, const std::string& path, StorageType dtype = StorageType::complex64);
Dataset load_dataset(const std::string& path);

inline constexpr int kDatasetFormatVersion = 1;

} // namespace spic
