#include "detscope/determinant.hpp"
#include "detscope/errors.hpp"

#include <cmath>
#include <numbers>

#include "doctest.h"

using namespace detscope;
constexpr double pi = std::numbers::pi;

namespace {
OperatorMatrix diag(std::initializer_list<double> mus) {
    OperatorMatrix m;
    m.entries = Eigen::MatrixXcd::Zero(mus.size(), mus.size());
    int i = 0;
    for (double mu : mus) {
        m.entries(i, i) = mu;
        ++i;
    }
    return m;
}
} // namespace

TEST_CASE("det2 on explicit spectra") {
    CHECK(det2(diag({0, 0, 0})).d == cd(1, 0));
    CHECK(det2(diag({0, 0, 0})).log_d == cd(0, 0));
    CHECK(std::abs(det2(diag({0.5})).d - 1.5 * std::exp(-0.5)) < 1e-15);
    CHECK(std::abs(det2(diag({0.5})).d - 0.909796) < 1e-6);
    CHECK(det2(diag({-1, 0.3})).d == cd(0, 0));
    CHECK(std::abs(det2_lu(diag({0.5, -0.2})).log_d - det2(diag({0.5, -0.2})).log_d) < 1e-15);
}

TEST_CASE("series seed agrees with the eigenvalue product") {
    const Potential g = Potential::gaussian_well(2, 1);
    const QuadratureGrid grid = build_grid(g, 6);
    const OperatorMatrix q = assemble_q0(grid, g, cd(0, 6));
    CHECK(std::abs(det2(q).log_d - det2_series(q).log_d) < 1e-12);
    CHECK(std::abs(det2(q).log_d - det2_lu(q).log_d) < 1e-12);
}

TEST_CASE("Blaschke factors") {
    CHECK(blaschke({}, cd(0.3, 2)) == cd(1, 0));
    CHECK(std::abs(blaschke({1.0}, cd(0, 2)) - 1.0 / 3) < 1e-15);
    CHECK(std::abs(blaschke({1.0}, cd(0, 0)) + 1.0) < 1e-15);
    CHECK(std::abs(cd(0, 1) * log_blaschke({1.0}, cd(0, 0)) - pi) < 1e-14);
    CHECK(std::abs(std::abs(blaschke({1.0, 0.4}, cd(2.7, 0))) - 1) < 1e-15);
    CHECK_THROWS_AS(blaschke({1.0}, cd(0, -1)), PoleHit);

    Moments m;
    m.alpha_0 = 0.25;
    m.alpha_1 = 0.01;
    m.alpha_m1 = -0.5;
    const BlaschkeData one = beta_gamma({1.0}, m);
    CHECK(one.n == 1);
    CHECK(one.beta.at(0) == doctest::Approx(2.0));
    CHECK(one.beta.at(2) == doctest::Approx(2.0 / 3));
    CHECK(one.gamma.at(0) == doctest::Approx(0.25 - 2.0));
    const BlaschkeData none = beta_gamma({}, m);
    CHECK(none.gamma.at(-1) == m.alpha_m1);
    CHECK(none.gamma.at(0) == m.alpha_0);
    CHECK(none.gamma.at(1) == m.alpha_1);
}

TEST_CASE("zero potential gives D = 1 everywhere") {
    const auto eng = make_engine(Potential::zero());
    for (cd k : {cd(0, 3), cd(2, 0), cd(-1, -0.5)}) CHECK(eng->evaluate(k).d == cd(1, 0));
    for (const DetValue& v : continue_log(seed_segment(2.0, 3.0), *eng)) CHECK(v.log_d == cd(0, 0));
    CHECK(eng->log_derivative(cd(1, 1)) == cd(0, 0));
}

TEST_CASE("continued branch is odd in phase and even in modulus") {
    const auto eng = make_engine(Potential::gaussian_well(2, 1));
    const double tau0 = seed_height(*eng);
    CHECK(eng->hs_norm(cd(0, tau0)) < 0.4);
    const DetValue p = continue_log(seed_segment(tau0, 1.5), *eng).back();
    const DetValue m = continue_log(seed_segment(tau0, -1.5), *eng).back();
    CHECK(std::abs(p.phi + m.phi) < 1e-10);
    CHECK(std::abs(p.rho - m.rho) < 1e-10);
    CHECK(std::abs(eng->evaluate(cd(-1.5, 0)).d - std::conj(eng->evaluate(cd(1.5, 0)).d)) < 1e-12);
}

TEST_CASE("log derivative matches finite differences") {
    const auto eng = make_engine(Potential::gaussian_well(2, 1));
    const cd k(2, 2);
    const cd exact = eng->log_derivative(k);
    double prev = 1e300;
    for (double h : {1e-2, 1e-3}) {
        const cd fd = (eng->evaluate(k + h).log_d - eng->evaluate(k - h).log_d) / (2 * h);
        const double err = std::abs(fd - exact);
        CHECK(err < prev);
        prev = err;
    }
    CHECK(prev < 1e-6);
}

TEST_CASE("D_B quotient") {
    const auto eng = make_engine(Potential::gaussian_well(2, 1));
    const DetValue v = eng->evaluate(cd(1.2, 0));
    const DetValue same = db_quotient(v, beta_gamma({}, Moments{}));
    CHECK(same.log_d == v.log_d);
    const DetValue q = db_quotient(v, beta_gamma({0.7}, Moments{}));
    CHECK(std::abs(q.rho - v.rho) < 1e-14);
}

TEST_CASE("partial-wave and Nystrom engines converge together") {
    const Potential g = Potential::gaussian_well(1, 1);
    const cd k(0.8, 0.6);
    const cd exact = PartialWaveEngine(g).evaluate(k).log_d;
    // the Nystrom error is algebraic in the node count and slow on the wide Gaussian cube
    double prev = 1e300;
    for (int n : {6, 8, 10}) {
        const double err = std::abs(NystromEngine(g, n).evaluate(k).log_d - exact);
        CHECK(err < prev);
        prev = err;
    }
}

TEST_CASE("variable-phase high channels agree with refined collocation on the real axis") {
    const Potential g = Potential::gaussian_well(2, 1);
    const cd k(6, 0);
    PartialWaveOptions coarse;
    const PartialWaveSum hybrid = partial_wave_log_det(g, k, coarse, true);
    REQUIRE(hybrid.vp_from > 0);
    const Eigen::VectorXcd vp = variable_phase_det3(g, k, hybrid.channels, 8000);
    for (int l : {hybrid.vp_from, hybrid.vp_from + 10, hybrid.channels}) {
        const cd refined = channel_terms(g, l, k, 640, false).log_det3;
        CHECK(std::abs(vp(l) - refined) < 2e-3 * std::abs(refined));
    }
    // log|D| is tiny this far out; the hybrid keeps the bias well below the collocation-only value
    PartialWaveOptions plain;
    plain.variable_phase_channels = false;
    plain.n_per_kr = 1.3;
    CHECK(std::abs(hybrid.log_d.real()) < 0.2 * std::abs(partial_wave_log_det(g, k, plain).log_d.real()));
    CHECK(std::abs(hybrid.log_d.imag() - partial_wave_log_det(g, k, plain).log_d.imag()) < 1e-12);
    const cd fd = (partial_wave_log_det(g, k + 1e-3, coarse).log_d - partial_wave_log_det(g, k - 1e-3, coarse).log_d) / 2e-3;
    CHECK(std::abs(fd - hybrid.dlog_d) < 1e-7);
}

TEST_CASE("Jost channels match refined collocation and the conjugation rule") {
    const Potential g = Potential::gaussian_well(2, 1);
    for (double t : {1.5, 4.0}) {
        for (int l : {0, 3, 8}) {
            const cd refined = channel_terms(g, l, cd(t, 0), 480, false).log_det3;
            const cd jost = jost_det3(g, l, t);
            CHECK(std::abs(jost - refined) < 1e-9 * std::max(1.0, std::abs(refined)) + 1e-13);
            CHECK(std::abs(jost_det3(g, l, -t) - std::conj(jost)) < 1e-15);
        }
    }
    // log|D(3)| is about -6.1e-9; collocation alone misses it by more than itself
    const double rho = partial_wave_log_det(g, cd(3, 0)).log_d.real();
    CHECK(std::abs(rho + 6.128e-9) < 5e-11);
}
