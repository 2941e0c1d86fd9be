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
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spic/losses.hpp"
#include "tiny_problem.hpp"

using namespace spic;
using namespace spic::testing;

namespace {

/// Ignores its input and returns a stored image.
class FixedOutput final : public Reconstructor<double> {
public:
    explicit FixedOutput(ComplexImage<double> x) : x_(std::move(x)) {}
    ComplexImage<double> reconstruct(const KSpace<double>&, const CoilSensitivities<double>&, const SamplingMask&,
                                     std::unique_ptr<PassTrace<double>>* = nullptr) const override
    {
        return x_;
    }
    KSpace<double> backward(const PassTrace<double>&, const ComplexImage<double>&, Vector<double>&) const override
    {
        throw std::logic_error("FixedOutput has no gradient");
    }
    Index parameter_count() const override { return 0; }

private:
    ComplexImage<double> x_;
};

TrainingSlice<double> slice64(std::uint64_t seed, double sigma)
{
    TrainingSlice<double> s;
    s.truth = simulate_phantom(64, 64, seed);
    s.coils = simulate_coils(64, 64, 8, support_of(s.truth));
    s.omega = equidistant_mask(64, 64, 4, 8);
    s.y = add_noise(forward(s.truth, s.coils, s.omega), s.omega, NoiseSpec{sigma, seed});
    return s;
}

} // namespace

TEST_CASE("norm_l1l2: closed forms")
{
    ComplexImage<double> ref(1, 2), est(1, 2);
    ref << Complex<double>(3, 0), Complex<double>(4, 0);
    est << Complex<double>(3, 0), Complex<double>(0, 0);
    CHECK(std::abs(norm_l1l2(ref, est) - (4.0 / 5.0 + 4.0 / 7.0)) < 1e-15);
    CHECK(norm_l1l2(ref, ref) == 0.0);
    CHECK(norm_l1l2(ref, ComplexImage<double>(ComplexImage<double>::Zero(1, 2))) == doctest::Approx(2.0));
    const ComplexImage<double> a = random_image(6, 5, 1);
    CHECK(norm_l1l2(a, ComplexImage<double>(ComplexImage<double>::Zero(6, 5))) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK_THROWS_AS(norm_l1l2(ComplexImage<double>(ComplexImage<double>::Zero(1, 2)), est), std::invalid_argument);
    CHECK_THROWS_AS(norm_l1l2(a, ref), ShapeError);
}

TEST_CASE("norm_l1l2: gradients in both arguments match central differences")
{
    const ComplexImage<double> ref = random_image(4, 3, 2), est = random_image(4, 3, 3);
    ComplexImage<double> g_ref, g_est;
    norm_l1l2(ref, est, &g_ref, &g_est);
    const double h = 1e-6;
    for (Index i = 0; i < ref.size(); ++i) {
        for (const Complex<double> dir : {Complex<double>(1, 0), Complex<double>(0, 1)}) {
            ComplexImage<double> ep = est, em = est, rp = ref, rm = ref;
            ep.data()[i] += h * dir;
            em.data()[i] -= h * dir;
            rp.data()[i] += h * dir;
            rm.data()[i] -= h * dir;
            const double fd_est = (norm_l1l2(ref, ep) - norm_l1l2(ref, em)) / (2 * h);
            const double fd_ref = (norm_l1l2(rp, est) - norm_l1l2(rm, est)) / (2 * h);
            // Gradients use the dRe + i dIm convention.
            const auto component = [&](Complex<double> g) { return dir.real() != 0 ? g.real() : g.imag(); };
            CHECK(std::abs(fd_est - component(g_est.data()[i])) < 1e-7);
            CHECK(std::abs(fd_ref - component(g_ref.data()[i])) < 1e-7);
        }
    }
}

TEST_CASE("degeneracies: spicssdu and ccssdu at beta = 0 equal mmssdu exactly on 10 slices")
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        CAPTURE(seed);
        const TrainingSlice<double> s = tiny_slice(100 + seed);
        auto params = tiny_params(200 + seed);
        const UnrolledNet<double> net(params);
        LossConfig mm = tiny_loss(LossMethod::mmssdu);
        LossConfig spic = tiny_loss(LossMethod::spicssdu);
        LossConfig cc = tiny_loss(LossMethod::ccssdu);
        spic.beta = 0.0;
        cc.beta = 0.0;
        // One draw set serves all three methods.
        LossConfig all = spic;
        all.method = LossMethod::spicssdu;
        LossDraws draws = make_draws(all, s.omega, s.coils.support, 300 + seed);
        draws.deltas = make_draws(cc, s.omega, s.coils.support, 300 + seed).deltas;
        REQUIRE(!draws.deltas.empty());
        REQUIRE(!draws.perturbations.empty());

        const Index n = params.theta.size();
        Vector<double> g_mm = Vector<double>::Zero(n), g_spic = g_mm, g_cc = g_mm;
        const LossValue<double> v_mm = evaluate_loss(net, s, mm, draws, &g_mm);
        const LossValue<double> v_spic = evaluate_loss(net, s, spic, draws, &g_spic);
        const LossValue<double> v_cc = evaluate_loss(net, s, cc, draws, &g_cc);
        CHECK(v_spic.total == v_mm.total);
        CHECK(v_cc.total == v_mm.total);
        CHECK(v_spic.consistency_term > 0);
        CHECK(v_cc.consistency_term > 0);
        CHECK((g_spic.array() == g_mm.array()).all());
        CHECK((g_cc.array() == g_mm.array()).all());
    }
}

TEST_CASE("ULIM at beta = 0 is the measurement-consistency term")
{
    const TrainingSlice<double> s = tiny_slice(4);
    const auto params = tiny_params(5);
    const UnrolledNet<double> net(params);
    LossConfig cfg = tiny_loss(LossMethod::ulim);
    cfg.beta = 0.0;
    const LossDraws draws = make_draws(cfg, s.omega, s.coils.support, 6);
    const ComplexImage<double> x = net.reconstruct(s.y, s.coils, s.omega);
    CHECK(evaluate_loss(net, s, cfg, draws).total == norm_l1l2(s.y.data, forward(x, s.coils, s.omega).data));
}

TEST_CASE("MM-SSDU: K = 1 is the single-mask loss, zero for a matching output, blind outside Lambda")
{
    // One unit coil, so image changes map one-to-one onto k-space changes.
    const Index n = 16;
    const ComplexImage<double> truth = random_image(n, n, 1);
    TrainingSlice<double> s;
    s.truth = truth;
    s.coils = simulate_coils(n, n, 1, BoolImage::Constant(n, n, true));
    s.omega = equidistant_mask(n, n, 2, 4);
    s.y = forward(truth, s.coils, s.omega);
    LossConfig cfg;
    cfg.method = LossMethod::mmssdu;
    cfg.K = 1;
    const LossDraws draws = make_draws(cfg, s.omega, s.coils.support, 3);
    const SSDUPair& pair = draws.split.pairs.at(0);

    CHECK(evaluate_loss(FixedOutput(truth), s, cfg, draws).total < 1e-14);

    const ComplexImage<double> other = random_image(n, n, 2);
    const double single =
        norm_l1l2(pair.lambda.apply(s.y).data, forward(other, s.coils, pair.lambda).data);
    CHECK(evaluate_loss(FixedOutput(other), s, cfg, draws).total == single);

    // Add energy only at k-space points outside Lambda.
    ComplexImage<double> k_off = random_image(n, n, 5);
    k_off = pair.lambda.sampled.select(ComplexImage<double>::Zero(n, n), k_off);
    const ComplexImage<double> moved = other + ifft2(k_off);
    const double base = evaluate_loss(FixedOutput(other), s, cfg, draws).total;
    CHECK(std::abs(evaluate_loss(FixedOutput(moved), s, cfg, draws).total - base) < 1e-12);
    ComplexImage<double> k_on = random_image(n, n, 6);
    k_on = pair.lambda.sampled.select(k_on, ComplexImage<double>::Zero(n, n));
    CHECK(std::abs(evaluate_loss(FixedOutput(ComplexImage<double>(other + ifft2(k_on))), s, cfg, draws).total - base) >
          1e-3);
}

TEST_CASE("perturbation terms: constant reconstructor gives p_est = 0")
{
    const TrainingSlice<double> s = slice64(3, 0.01);
    const FixedOutput f(s.truth);
    LossConfig spic;
    spic.method = LossMethod::spicssdu;
    const LossDraws draws = make_draws(spic, s.omega, s.coils.support, 8);
    const LossValue<double> v = evaluate_loss(f, s, spic, draws);
    CHECK(v.consistency_term == 0.0);

    LossConfig l2 = spic;
    l2.method = LossMethod::picl2;
    l2.beta = 0.25;
    const LossValue<double> w = evaluate_loss(f, s, l2, draws);
    CHECK(w.consistency_term == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(w.total == doctest::Approx(w.data_term + 0.25).epsilon(1e-14));
}

TEST_CASE("PIC-l2 decreases monotonically along the segment from 0 to p")
{
    const ComplexImage<double> p = generate_perturbation(64, 64, 4, 3, 0.5, 2).image<double>();
    double previous = pic_l2(ComplexImage<double>(ComplexImage<double>::Zero(64, 64)), p);
    CHECK(previous == doctest::Approx(1.0));
    for (int k = 1; k <= 10; ++k) {
        const double v = pic_l2(ComplexImage<double>((k / 10.0) * p), p);
        CHECK(v < previous);
        previous = v;
    }
    CHECK(previous < 1e-15);
}

TEST_CASE("SPIC term with converged CG-SENSE equals the on-support ratio sum, not zero")
{
    const TrainingSlice<double> s = slice64(6, 0.01);
    // Converged CG-SENSE recovers recoverable perturbations exactly, so the
    // term reduces to the mean over p of weighted_l1(p, p).
    const CgSenseReconstructor<double> f(1000);
    LossConfig cfg;
    cfg.method = LossMethod::spicssdu;
    cfg.K = 1;
    const LossDraws draws = make_draws(cfg, s.omega, s.coils.support, 4);
    const LossValue<double> v = evaluate_loss(f, s, cfg, draws);
    double expected = 0;
    for (const Perturbation& p : draws.perturbations)
        expected += weighted_l1(p.image<double>(), p.image<double>(), cfg.levels, cfg.wavelet, cfg.eps);
    expected /= static_cast<double>(draws.perturbations.size());
    MESSAGE("SPIC term " << v.consistency_term << ", on-support ratio sum " << expected);
    CHECK(expected > 0.01);
    CHECK(v.consistency_term == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("draws and loss values are bitwise reproducible")
{
    const TrainingSlice<double> s = tiny_slice(9);
    const auto params = tiny_params(10);
    const UnrolledNet<double> net(params);
    for (LossMethod m : {LossMethod::mmssdu, LossMethod::ulim, LossMethod::ccssdu, LossMethod::spicssdu}) {
        CAPTURE(to_string(m));
        const LossConfig cfg = tiny_loss(m);
        const double a = evaluate_loss(net, s, cfg, make_draws(cfg, s.omega, s.coils.support, 11)).total;
        const double b = evaluate_loss(net, s, cfg, make_draws(cfg, s.omega, s.coils.support, 11)).total;
        CHECK(a == b);
        CHECK(a >= 0);
    }
}

TEST_CASE("loss errors")
{
    TrainingSlice<double> s = tiny_slice(12);
    const auto params = tiny_params(13);
    const UnrolledNet<double> net(params);
    s.truth = ComplexImage<double>();
    CHECK_THROWS_AS(evaluate_loss(net, s, tiny_loss(LossMethod::supervised), LossDraws{}), std::invalid_argument);
    CHECK_THROWS_AS(evaluate_loss(net, s, tiny_loss(LossMethod::mmssdu), LossDraws{}), std::invalid_argument);
    CHECK_THROWS_AS(evaluate_loss(net, s, tiny_loss(LossMethod::ccssdu), LossDraws{}), std::invalid_argument);

    // A perturbation whose replicas collide at R=4 is rejected.
    const TrainingSlice<double> big = slice64(2, 0.0);
    LossConfig cfg;
    cfg.method = LossMethod::spicssdu;
    LossDraws draws = make_draws(cfg, big.omega, big.coils.support, 1);
    Perturbation& p = draws.perturbations.at(0);
    p.support_rows.clear();
    for (Index r = 0; r <= 20; ++r)
        p.support_rows.push_back(r);
    CHECK_THROWS_AS(evaluate_loss(FixedOutput(big.truth), big, cfg, draws), std::invalid_argument);
    CHECK_THROWS_AS(parse_loss_method("nope"), std::invalid_argument);
}
