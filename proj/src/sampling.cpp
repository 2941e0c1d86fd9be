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
#include "spic/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace spic {

std::vector<Index> SamplingMask::rows() const
{
    std::vector<Index> out;
    for (Index r = 0; r < n_pe; ++r)
        if (sampled.row(r).any())
            out.push_back(r);
    return out;
}

bool SamplingMask::operator==(const SamplingMask& other) const
{
    return n_pe == other.n_pe && n_ro == other.n_ro && acs_begin == other.acs_begin &&
           acs_end == other.acs_end && R == other.R && pattern_offset == other.pattern_offset &&
           (sampled == other.sampled).all();
}

SamplingMask equidistant_mask(Index n_pe, Index n_ro, int R, Index n_acs)
{
    if (n_pe < 1 || n_ro < 1)
        throw std::invalid_argument("equidistant_mask: empty grid");
    if (R < 1 || R > n_pe)
        throw std::invalid_argument("equidistant_mask: need 1 <= R <= n_pe");
    if (n_acs < 0 || n_acs > n_pe)
        throw std::invalid_argument("equidistant_mask: need 0 <= n_acs <= n_pe");

    SamplingMask m;
    m.n_pe = n_pe;
    m.n_ro = n_ro;
    m.R = R;
    m.pattern_offset = 0;
    m.acs_begin = (n_pe - n_acs) / 2;
    m.acs_end = m.acs_begin + n_acs;
    m.sampled = BoolImage::Constant(n_pe, n_ro, false);
    for (Index r = 0; r < n_pe; r += R)
        m.sampled.row(r).setConstant(true);
    for (Index r = m.acs_begin; r < m.acs_end; ++r)
        m.sampled.row(r).setConstant(true);
    return m;
}

SamplingMask shifted_pattern(const SamplingMask& omega, Index offset)
{
    if (omega.pattern_offset < 0)
        throw std::invalid_argument("shifted_pattern: mask is not equidistant");
    SamplingMask d = omega;
    d.sampled.setConstant(false);
    for (Index r = omega.pattern_offset; r < omega.n_pe; r += omega.R)
        d.sampled.row((r + offset) % omega.n_pe).setConstant(true);
    for (Index r = omega.acs_begin; r < omega.acs_end; ++r)
        d.sampled.row(r).setConstant(true);
    d.pattern_offset = omega.n_pe % omega.R == 0 ? (omega.pattern_offset + offset) % omega.R : -1;
    return d;
}

std::vector<SamplingMask> shifted_patterns(const SamplingMask& omega, int count, std::uint64_t seed)
{
    if (count < 1 || count > omega.R - 1)
        throw std::invalid_argument("shifted_patterns: need 1 <= count <= R-1");
    std::vector<Index> offsets(static_cast<std::size_t>(omega.R - 1));
    std::iota(offsets.begin(), offsets.end(), Index{1});
    std::mt19937_64 rng(seed);
    std::shuffle(offsets.begin(), offsets.end(), rng);

    std::vector<SamplingMask> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int j = 0; j < count; ++j)
        out.push_back(shifted_pattern(omega, offsets[static_cast<std::size_t>(j)]));
    return out;
}

SSDUSplit ssdu_split(const SamplingMask& omega, double rho, int K, std::uint64_t seed)
{
    if (!(rho > 0.0 && rho < 1.0))
        throw std::invalid_argument("ssdu_split: need 0 < rho < 1");
    if (K < 1)
        throw std::invalid_argument("ssdu_split: need K >= 1");

    std::vector<Index> candidates; // flat indices of non-ACS sampled points
    for (Index r = 0; r < omega.n_pe; ++r) {
        if (omega.in_acs(r))
            continue;
        for (Index c = 0; c < omega.n_ro; ++c)
            if (omega.sampled(r, c))
                candidates.push_back(r * omega.n_ro + c);
    }
    if (candidates.empty())
        throw std::invalid_argument("ssdu_split: omega has no non-ACS points");
    const auto n_lambda =
        static_cast<std::size_t>(std::llround(rho / (1.0 + rho) * static_cast<double>(omega.count())));
    if (n_lambda > candidates.size())
        throw std::invalid_argument("ssdu_split: requested |lambda| exceeds available non-ACS points");

    SSDUSplit split;
    split.rho = rho;
    for (int k = 0; k < K; ++k) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(k)};
        std::mt19937_64 rng(seq);
        std::vector<Index> pool = candidates;
        // partial Fisher-Yates: the first n_lambda entries form the draw
        for (std::size_t i = 0; i < n_lambda; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
            std::swap(pool[i], pool[pick(rng)]);
        }

        SSDUPair pair{omega, omega};
        pair.lambda.sampled.setConstant(false);
        pair.lambda.acs_begin = pair.lambda.acs_end = 0;
        pair.lambda.pattern_offset = -1;
        pair.theta.pattern_offset = -1;
        for (std::size_t i = 0; i < n_lambda; ++i) {
            const Index r = pool[i] / omega.n_ro;
            const Index c = pool[i] % omega.n_ro;
            pair.lambda.sampled(r, c) = true;
            pair.theta.sampled(r, c) = false;
        }
        split.pairs.push_back(std::move(pair));
    }
    return split;
}

std::string to_pbm(const SamplingMask& m)
{
    std::ostringstream os;
    os << "P1\n" << m.n_ro << ' ' << m.n_pe << '\n';
    for (Index r = 0; r < m.n_pe; ++r) {
        for (Index c = 0; c < m.n_ro; ++c)
            os << (c ? " " : "") << (m.sampled(r, c) ? '1' : '0');
        os << '\n';
    }
    return os.str();
}

} // namespace spic
