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

#include "spic/cg.hpp"
#include "spic/unrolled.hpp"
#include "tiny_problem.hpp"

using namespace spic;

namespace {

Index count_tensors(const UnrolledConfig& c)
{
    const ParameterLayout l(c);
    Index n = l.input.out * l.input.in + l.tail.out * l.tail.in + l.output.out * l.output.in + 1;
    for (const auto& b : l.blocks)
        n += b.out * b.in;
    return n;
}

} // namespace

TEST_CASE("parameter count")
{
    UnrolledConfig desk;
    CHECK(parameter_count(desk) == count_tensors(desk));
    CHECK(init_params<double>(desk, 1).theta.size() == parameter_count(desk));

    UnrolledConfig large;
    large.blocks = 15;
    large.channels = 64;
    large.kernel = 3;
    CHECK(parameter_count(large) == 592129);
    CHECK(count_tensors(large) == 592129);
}

TEST_CASE("init is deterministic and starts at mu = 0.05 with a zero output projection")
{
    const UnrolledConfig c;
    const auto a = init_params<double>(c, 9), b = init_params<double>(c, 9), other = init_params<double>(c, 10);
    CHECK((a.theta.array() == b.theta.array()).all());
    CHECK((a.theta.array() != other.theta.array()).any());
    CHECK(a.mu() == doctest::Approx(0.05).epsilon(1e-12));
    const ParameterLayout l(c);
    CHECK(a.theta.segment(l.output.offset, l.output.out * l.output.in).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(
        [] {
            UnrolledConfig bad;
            bad.kernel = 4;
            init_params<double>(bad, 1);
        }(),
        std::invalid_argument);
}

TEST_CASE("regularizer identities")
{
    const UnrolledConfig c;
    const Regularizer<double> reg(c);
    const auto p = init_params<double>(c, 3);
    const ComplexImage<double> x = testing::random_image(16, 16, 4);
    CHECK((reg.apply(x, p.theta) == x).all());

    const ComplexImage<double> zero = ComplexImage<double>::Zero(16, 16);
    const auto q = testing::tiny_params(5);
    CHECK(Regularizer<double>(q.config).apply(zero, q.theta).abs().maxCoeff() == 0.0);

    const Regularizer<double> tiny(q.config);
    const ComplexImage<double> y1 = tiny.apply(x, q.theta), y2 = tiny.apply(x, q.theta);
    CHECK((y1 == y2).all());
    CHECK((y1 != x).any());
    CHECK_THROWS_AS(tiny.apply(x, p.theta), ShapeError);
}

TEST_CASE("softplus keeps mu positive")
{
    for (double v : {-50.0, -5.0, 0.0, 3.0, 40.0, 700.0})
        CHECK(RegularizerParams<double>::softplus(v) > 0);
}

TEST_CASE("unrolled forward: identity regularizer, single coil, full mask recovers the image")
{
    UnrolledConfig c;
    c.T = 1;
    const auto p = init_params<double>(c, 2);
    const Index n = 16;
    const CoilSensitivities<double> coils = simulate_coils(n, n, 1, BoolImage::Constant(n, n, true));
    const SamplingMask full = equidistant_mask(n, n, 1, 0);
    const ComplexImage<double> x = testing::random_image(n, n, 8);
    const ComplexImage<double> out = unrolled_forward(forward(x, coils, full), coils, full, p);
    CHECK((out - x).abs().maxCoeff() < 1e-8);
}

TEST_CASE("unrolled forward: linear with the identity regularizer, T matters otherwise")
{
    const auto s = testing::tiny_slice(3);
    UnrolledConfig c = testing::tiny_config();
    auto ident = init_params<double>(c, 4);
    const ComplexImage<double> a = unrolled_forward(s.y, s.coils, s.omega, ident);
    KSpace<double> y2 = s.y;
    y2.data *= 2.0;
    const ComplexImage<double> b = unrolled_forward(y2, s.coils, s.omega, ident);
    CHECK((b - 2.0 * a).abs().maxCoeff() < 1e-12 * a.abs().maxCoeff());

    auto q = testing::tiny_params(4);
    const ComplexImage<double> t2 = unrolled_forward(s.y, s.coils, s.omega, q);
    q.config.T = 1;
    const ComplexImage<double> t1 = unrolled_forward(s.y, s.coils, s.omega, q);
    CHECK((t1 - t2).abs().maxCoeff() > 1e-6);
}

TEST_CASE("differentiable CG agrees with the standalone solver")
{
    const auto s = testing::tiny_slice(6);
    const ComplexImage<double> z = testing::random_image(8, 8, 7);
    CgOptions<double> opts;
    opts.mu = 0.3;
    opts.iterations = 5;
    const ComplexImage<double> ref = cg_normal(s.y, s.coils, s.omega, opts, &z, &z).x;
    const NormalOperator<double> A{s.coils, s.omega};
    const ComplexImage<double> b = adjoint(s.y, s.coils, s.omega) + 0.3 * z;
    const ComplexImage<double> got = cg_fixed(A, b, z, 0.3, 5, nullptr);
    CHECK((got - ref).abs().maxCoeff() < 1e-12);
}

TEST_CASE("CG backward matches finite differences in b, x0 and mu")
{
    const auto s = testing::tiny_slice(11);
    const NormalOperator<double> A{s.coils, s.omega};
    const ComplexImage<double> b = testing::random_image(8, 8, 1), x0 = testing::random_image(8, 8, 2);
    const ComplexImage<double> w = testing::random_image(8, 8, 3);
    const double mu = 0.4;
    auto f = [&](const ComplexImage<double>& bb, const ComplexImage<double>& xx, double m) {
        return real_dot(w, cg_fixed(A, bb, xx, m, 5, nullptr));
    };
    CgTrace<double> tr;
    cg_fixed(A, b, x0, mu, 5, &tr);
    const CgGradients<double> g = cg_fixed_backward(A, tr, w);
    const double h = 1e-6;
    double worst = 0;
    for (Index i = 0; i < 64; i += 7) {
        for (int part = 0; part < 2; ++part) {
            const Complex<double> e = part == 0 ? Complex<double>(h, 0) : Complex<double>(0, h);
            ComplexImage<double> bp = b, bm = b, xp = x0, xm = x0;
            bp.data()[i] += e;
            bm.data()[i] -= e;
            xp.data()[i] += e;
            xm.data()[i] -= e;
            const double fd_b = (f(bp, x0, mu) - f(bm, x0, mu)) / (2 * h);
            const double fd_x = (f(b, xp, mu) - f(b, xm, mu)) / (2 * h);
            const double ad_b = part == 0 ? g.b.data()[i].real() : g.b.data()[i].imag();
            const double ad_x = part == 0 ? g.x0.data()[i].real() : g.x0.data()[i].imag();
            worst = std::max({worst, std::abs(fd_b - ad_b), std::abs(fd_x - ad_x)});
        }
    }
    const double fd_mu = (f(b, x0, mu + h) - f(b, x0, mu - h)) / (2 * h);
    CHECK(worst < 1e-6);
    CHECK(g.mu == doctest::Approx(fd_mu).epsilon(1e-6));
}

TEST_CASE("end-to-end gradients match central differences for every loss")
{
    const auto s = testing::tiny_slice(21);
    for (LossMethod m : {LossMethod::supervised, LossMethod::mmssdu, LossMethod::ulim, LossMethod::ccssdu,
                         LossMethod::spicssdu, LossMethod::picl2}) {
        CAPTURE(to_string(m));
        auto params = testing::tiny_params(31);
        const UnrolledNet<double> net(params);
        const LossConfig cfg = testing::tiny_loss(m);
        const LossDraws draws = make_draws(cfg, s.omega, s.coils.support, 41);
        Vector<double> ad = Vector<double>::Zero(params.theta.size());
        evaluate_loss(net, s, cfg, draws, &ad);
        CHECK(ad.norm() > 0);
        const auto check = testing::check_gradient(
            params, ad, [&] { return evaluate_loss(net, s, cfg, draws).total; }, 50, 51);
        CAPTURE(check.worst_index);
        MESSAGE(to_string(m) << ": max relative error " << check.max_rel_error);
        CHECK(check.max_rel_error < 1e-5);
    }
}

TEST_CASE("gradient of a parameter-independent loss is zero")
{
    // beta = 0 supervised loss against a reconstructor with no parameters:
    // CG-SENSE output does not depend on theta.
    const auto s = testing::tiny_slice(2);
    const CgSenseReconstructor<double> cg(5);
    LossConfig cfg = testing::tiny_loss(LossMethod::supervised);
    Vector<double> g(0);
    CHECK_NOTHROW(evaluate_loss(cg, s, cfg, LossDraws{}, &g));
    CHECK(g.size() == 0);

    auto params = testing::tiny_params(3);
    const UnrolledNet<double> net(params);
    Vector<double> g2 = Vector<double>::Zero(params.theta.size());
    const Regularizer<double> reg(params.config);
    // A loss that ignores the network output: zero upstream gradient.
    std::unique_ptr<PassTrace<double>> tr;
    net.reconstruct(s.y, s.coils, s.omega, &tr);
    net.backward(*tr, ComplexImage<double>::Zero(8, 8), g2);
    CHECK(g2.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("SPIC gradient flows through both network passes")
{
    const auto s = testing::tiny_slice(5);
    auto params = testing::tiny_params(6);
    const UnrolledNet<double> net(params);
    LossConfig both = testing::tiny_loss(LossMethod::spicssdu);
    const LossDraws draws = make_draws(both, s.omega, s.coils.support, 7);
    LossConfig clean_detached = both;
    clean_detached.detach_inner = true;
    Vector<double> g_both = Vector<double>::Zero(params.theta.size());
    Vector<double> g_detached = g_both;
    const auto v1 = evaluate_loss(net, s, both, draws, &g_both);
    const auto v2 = evaluate_loss(net, s, clean_detached, draws, &g_detached);
    CHECK(v1.total == v2.total);
    CHECK((g_both - g_detached).norm() > 1e-6 * g_both.norm());
}

TEST_CASE("non-finite parameters abort with a diagnostic")
{
    const auto s = testing::tiny_slice(5);
    auto params = testing::tiny_params(6);
    params.theta[0] = std::numeric_limits<double>::quiet_NaN();
    try {
        unrolled_forward(s.y, s.coils, s.omega, params);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("step 1") != std::string::npos);
    }
}
