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

#include <cstdint>
#include <string>
#include <vector>

namespace spic {

/// Cartesian sampling pattern over an n_pe x n_ro grid. Phase encoding runs
/// along rows; `sampled` may be any point set (SSDU splits are pointwise).
struct SamplingMask {
    Index n_pe = 0;
    Index n_ro = 0;
    BoolImage sampled;
    Index acs_begin = 0; ///< first ACS row
    Index acs_end = 0;   ///< one past the last ACS row
    int R = 1;
    /// Residue class (mod R) of the equidistant rows, or -1 if not equidistant.
    Index pattern_offset = -1;

    Index count() const { return sampled.count(); }
    Index acs_rows() const { return acs_end - acs_begin; }
    bool in_acs(Index row) const { return row >= acs_begin && row < acs_end; }
    /// Rows holding at least one sampled point, ascending.
    std::vector<Index> rows() const;
    bool operator==(const SamplingMask& other) const;

    /// Zero every unsampled location of each stacked plane.
    template <typename Scalar>
    MultiCoil<Scalar> apply(const MultiCoil<Scalar>& k) const
    {
        require_same_shape(k.rows(), k.cols(), n_pe, n_ro, "mask application");
        MultiCoil<Scalar> out = k;
        for (Index c = 0; c < k.n_coils; ++c)
            out.plane(c) = sampled.select(k.plane(c), Complex<Scalar>(0));
        return out;
    }
};

/// Rows {0, R, 2R, ...} plus a centred block of `n_acs` fully sampled rows.
SamplingMask equidistant_mask(Index n_pe, Index n_ro, int R, Index n_acs);

/// A copy of the equidistant rows of `omega` shifted by `offset` (mod n_pe);
/// the ACS block is kept in place.
SamplingMask shifted_pattern(const SamplingMask& omega, Index offset);

/// `count` shifted patterns with distinct offsets drawn from {1..R-1}.
std::vector<SamplingMask> shifted_patterns(const SamplingMask& omega, int count, std::uint64_t seed);

struct SSDUPair {
    SamplingMask theta; ///< data-fidelity set
    SamplingMask lambda; ///< held-out loss set
};

struct SSDUSplit {
    double rho = 0.4;
    std::vector<SSDUPair> pairs;
    int K() const { return static_cast<int>(pairs.size()); }
};

/// K independent disjoint splits of omega into (theta, lambda), with
/// |lambda| = round(rho / (1 + rho) * |omega|) drawn uniformly from the
/// non-ACS points.
SSDUSplit ssdu_split(const SamplingMask& omega, double rho, int K, std::uint64_t seed);

/// Plain-text PBM ("P1") rendering of the sampled set.
std::string to_pbm(const SamplingMask& m);

} // namespace spic
