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
#include "spic/data_model.hpp"

#include "spic/encoding.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace spic {

namespace {

struct Ellipse {
    double cx, cy, a, b, angle, intensity;

    bool contains(double x, double y) const
    {
        const double dx = x - cx;
        const double dy = y - cy;
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        const double u = dx * c + dy * s;
        const double v = -dx * s + dy * c;
        return (u * u) / (a * a) + (v * v) / (b * b) <= 1.0;
    }
};

// Normalised coordinates in [-1, 1) along each axis; y follows rows.
double norm_coord(Index i, Index n) { return 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n) - 1.0; }

} // namespace

ComplexImage<double> simulate_phantom(Index rows, Index cols, std::uint64_t seed)
{
    if (rows < 16 || cols < 16)
        throw std::invalid_argument("simulate_phantom: rows and cols must be >= 16");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    std::vector<Ellipse> ellipses;
    // body
    ellipses.push_back({uniform(-0.05, 0.05), uniform(-0.05, 0.05), uniform(0.72, 0.86), uniform(0.72, 0.86),
                        uniform(0.0, std::numbers::pi), uniform(0.45, 0.65)});
    const int n_inner = 4 + static_cast<int>(rng() % 5);
    for (int i = 0; i < n_inner; ++i) {
        const double r = uniform(0.0, 0.45);
        const double t = uniform(0.0, 2.0 * std::numbers::pi);
        ellipses.push_back({r * std::cos(t), r * std::sin(t), uniform(0.06, 0.3), uniform(0.06, 0.3),
                            uniform(0.0, std::numbers::pi), uniform(-0.3, 0.45)});
    }
    // low-order polynomial phase
    const double p0 = uniform(-std::numbers::pi, std::numbers::pi);
    const double px = uniform(-0.8, 0.8);
    const double py = uniform(-0.8, 0.8);
    const double pxy = uniform(-0.4, 0.4);
    const double pxx = uniform(-0.3, 0.3);

    ComplexImage<double> img(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        const double y = norm_coord(r, rows);
        for (Index c = 0; c < cols; ++c) {
            const double x = norm_coord(c, cols);
            double mag = 0.0;
            if (ellipses.front().contains(x, y)) {
                mag = ellipses.front().intensity;
                for (std::size_t e = 1; e < ellipses.size(); ++e)
                    if (ellipses[e].contains(x, y))
                        mag += ellipses[e].intensity;
                mag = std::max(mag, 0.05);
            }
            const double phase = p0 + px * x + py * y + pxy * x * y + pxx * x * x;
            img(r, c) = std::polar(mag, phase);
        }
    }
    img /= img.abs().maxCoeff();
    return img;
}

BoolImage support_of(const ComplexImage<double>& img) { return img.abs() > 0.0; }

CoilSensitivities<double> simulate_coils(Index rows, Index cols, Index n_coils, const BoolImage& support)
{
    if (n_coils < 1)
        throw std::invalid_argument("simulate_coils: n_coils must be >= 1");
    require_same_shape(support.rows(), support.cols(), rows, cols, "simulate_coils: support");

    CoilSensitivities<double> coils{MultiCoil<double>(n_coils, rows, cols), support};
    const double width = 0.85;
    for (Index k = 0; k < n_coils; ++k) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_coils);
        const double cx = 1.15 * std::cos(angle);
        const double cy = 1.15 * std::sin(angle);
        auto plane = coils.maps.plane(k);
        for (Index r = 0; r < rows; ++r) {
            const double y = norm_coord(r, rows);
            for (Index c = 0; c < cols; ++c) {
                const double x = norm_coord(c, cols);
                const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                const double mag = std::exp(-d2 / (2.0 * width * width));
                const double phase = 0.6 * (x * std::cos(angle + 0.7) + y * std::sin(angle + 0.7)) +
                                     0.3 * static_cast<double>(k);
                plane(r, c) = std::polar(mag, phase);
            }
        }
    }

    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c) {
            if (!support(r, c)) {
                for (Index k = 0; k < n_coils; ++k)
                    coils.maps.plane(k)(r, c) = 0.0;
                continue;
            }
            double sos = 0.0;
            for (Index k = 0; k < n_coils; ++k)
                sos += std::norm(coils.maps.plane(k)(r, c));
            const auto ref = coils.maps.plane(0)(r, c);
            const auto rotate = std::conj(ref) / std::abs(ref);
            const double scale = 1.0 / std::sqrt(sos);
            for (Index k = 0; k < n_coils; ++k)
                coils.maps.plane(k)(r, c) *= rotate * scale;
        }
    return coils;
}

double coil_normalization_error(const CoilSensitivities<double>& coils)
{
    double worst = 0.0;
    for (Index r = 0; r < coils.rows(); ++r)
        for (Index c = 0; c < coils.cols(); ++c) {
            if (!coils.support(r, c))
                continue;
            double sos = 0.0;
            for (Index k = 0; k < coils.n_coils(); ++k)
                sos += std::norm(coils.maps.plane(k)(r, c));
            worst = std::max(worst, std::abs(sos - 1.0));
        }
    return worst;
}

Dataset build_dataset(int n_slices, Index rows, Index cols, Index n_coils, const NoiseSpec& noise,
                      std::uint64_t seed)
{
    if (n_slices < 1)
        throw std::invalid_argument("build_dataset: n_slices must be >= 1");

    Dataset d;
    const SamplingMask full = equidistant_mask(rows, cols, 1, 0);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    std::vector<std::uint64_t> slice_seeds(static_cast<std::size_t>(2 * n_slices));
    {
        std::vector<std::uint32_t> words(slice_seeds.size() * 2);
        seq.generate(words.begin(), words.end());
        for (std::size_t i = 0; i < slice_seeds.size(); ++i)
            slice_seeds[i] = (static_cast<std::uint64_t>(words[2 * i]) << 32) | words[2 * i + 1];
    }

    for (int s = 0; s < n_slices; ++s) {
        DatasetSlice slice;
        slice.ground_truth = simulate_phantom(rows, cols, slice_seeds[static_cast<std::size_t>(2 * s)]);
        slice.coils = simulate_coils(rows, cols, n_coils, support_of(slice.ground_truth));
        const KSpace<double> clean = forward(slice.ground_truth, slice.coils, full);
        const NoiseSpec slice_noise{noise.sigma, noise.seed ^ slice_seeds[static_cast<std::size_t>(2 * s + 1)]};
        slice.full_kspace = add_noise(clean, full, slice_noise);
        d.slices.push_back(std::move(slice));
    }
    d.metadata = {{"rows", rows},       {"cols", cols},         {"n_coils", n_coils},
                  {"seed", seed},       {"noise_sigma", noise.sigma}, {"noise_seed", noise.seed},
                  {"generator", "ellipse-phantom/perimeter-coils"}};
    return d;
}

} // namespace spic
