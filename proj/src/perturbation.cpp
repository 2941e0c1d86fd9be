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
#include "spic/perturbation.hpp"

#include <numbers>
#include <random>

namespace spic {

namespace {

struct Candidate {
    Index row, col;
};

std::vector<Candidate> band_candidates(Index rows, Index cols, Index band_begin, Index band_height, Index radius,
                                       const BoolImage* support)
{
    std::vector<Candidate> out;
    const Index r_lo = band_begin + radius, r_hi = band_begin + band_height - 1 - radius;
    for (Index r = r_lo; r <= r_hi; ++r)
        for (Index c = radius; c < cols - radius; ++c) {
            if (r - radius < 0 || r + radius >= rows)
                continue;
            if (support != nullptr &&
                !support->block(r - radius, c - radius, 2 * radius + 1, 2 * radius + 1).all())
                continue;
            out.push_back({r, c});
        }
    return out;
}

} // namespace

std::vector<Index> occupied_rows(const ComplexImage<double>& img)
{
    std::vector<Index> rows;
    for (Index r = 0; r < img.rows(); ++r)
        if ((img.row(r).abs() > 0).any())
            rows.push_back(r);
    return rows;
}

OverlapVerdict verify_no_overlap(const std::vector<Index>& support_rows, int R, Index rows)
{
    if (R < 1 || rows < 1)
        throw std::invalid_argument("verify_no_overlap: need R >= 1 and rows >= 1");
    OverlapVerdict v;
    v.approximate = rows % R != 0;
    const Index shift = rows / R;
    std::vector<char> seen_row(static_cast<std::size_t>(rows), 0);
    std::vector<Index> distinct;
    for (Index r : support_rows) {
        if (r < 0 || r >= rows)
            throw std::out_of_range("verify_no_overlap: support row " + std::to_string(r) + " outside the grid");
        if (!seen_row[static_cast<std::size_t>(r)]) {
            seen_row[static_cast<std::size_t>(r)] = 1;
            distinct.push_back(r);
        }
    }
    std::vector<char> hit(static_cast<std::size_t>(rows), 0);
    for (int k = 0; k < R; ++k)
        for (Index r : distinct) {
            const auto at = static_cast<std::size_t>((r + k * shift) % rows);
            if (hit[at])
                return v;
            hit[at] = 1;
        }
    v.disjoint = true;
    return v;
}

Perturbation generate_perturbation(Index rows, Index cols, int R, int n_features, double amplitude,
                                   std::uint64_t seed, const BoolImage* support)
{
    if (R < 1 || rows / R < 4)
        throw std::invalid_argument("generate_perturbation: need floor(rows / R) >= 4");
    if (n_features < 1)
        throw std::invalid_argument("generate_perturbation: n_features must be >= 1");
    if (!(amplitude > 0))
        throw std::invalid_argument("generate_perturbation: amplitude must be positive");
    if (support != nullptr)
        require_same_shape(support->rows(), support->cols(), rows, cols, "generate_perturbation: support");

    Perturbation out;
    out.seed = seed;
    out.band_height = rows / R - 1;
    const Index radius = std::min<Index>(2, (out.band_height - 1) / 2);
    if (cols < 2 * radius + 1)
        throw std::invalid_argument("generate_perturbation: grid too narrow for a feature window");
    const double sigma = radius >= 2 ? 1.0 : 0.7;

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Index> band_dist(0, rows - out.band_height);
    std::vector<Candidate> candidates;
    for (int attempt = 0; attempt < 64 && candidates.empty(); ++attempt) {
        out.band_begin = band_dist(rng);
        candidates = band_candidates(rows, cols, out.band_begin, out.band_height, radius, support);
    }
    // The support may be small: fall back to a deterministic scan of bands.
    for (Index b = 0; candidates.empty() && b <= rows - out.band_height; ++b) {
        out.band_begin = b;
        candidates = band_candidates(rows, cols, b, out.band_height, radius, support);
    }
    if (candidates.empty())
        throw std::invalid_argument("generate_perturbation: no band of height " + std::to_string(out.band_height) +
                                    " can hold a feature inside the support");

    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    std::uniform_real_distribution<double> mag(0.5, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    ComplexImage<double> raw = ComplexImage<double>::Zero(rows, cols);
    for (int f = 0; f < n_features; ++f) {
        const Candidate c = candidates[pick(rng)];
        const double m = mag(rng);
        const Complex<double> w = std::polar(m, phase(rng));
        out.features.push_back({c.row, c.col, 2 * radius + 1, w});
        for (Index dr = -radius; dr <= radius; ++dr)
            for (Index dc = -radius; dc <= radius; ++dc) {
                const double g = std::exp(-static_cast<double>(dr * dr + dc * dc) / (2 * sigma * sigma));
                raw(c.row + dr, c.col + dc) += w * g;
            }
    }
    const double peak = raw.abs().maxCoeff();
    if (!(peak > 0))
        throw NumericalError("generate_perturbation: features cancelled out");
    out.p = amplitude * (raw / peak);
    out.support_rows = occupied_rows(out.p);
    if (!verify_no_overlap(out.support_rows, R, rows))
        throw std::logic_error("generate_perturbation: band constraint violated");
    return out;
}

} // namespace spic
