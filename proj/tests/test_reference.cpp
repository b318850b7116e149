#include "detscope/errors.hpp"
#include "detscope/reference.hpp"

#include <cmath>
#include <numbers>

#include "doctest.h"

using namespace detscope;

namespace {
// root of sqrt(V0 - l) cot sqrt(V0 - l) = -sqrt(l) by bisection
double square_well_lambda(double v0) {
    auto g = [v0](double l) {
        const double q = std::sqrt(v0 - l);
        return q * std::cos(q) / std::sin(q) + std::sqrt(l);
    };
    double lo = 1e-12, hi = v0 - 1e-9;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        ((g(lo) < 0) == (g(mid) < 0) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}
} // namespace

TEST_CASE("radial shooting oracle") {
    CHECK(radial_bound_states_all(Potential::zero()).empty());
    const auto sw = radial_bound_states_all(Potential::square_well(4, 1));
    REQUIRE(sw.size() == 1);
    CHECK(sw[0].ell == 0);
    CHECK(sw[0].lambda == doctest::Approx(square_well_lambda(4)).epsilon(1e-10));
    CHECK(radial_bound_states(radial_problem(Potential::square_well(4, 1), 1), 1e-9, 4).empty());
    CHECK(radial_bound_states_all(Potential::square_well(1, 1)).empty());
    // deeper well: l = 1 binds once V0 > pi^2, with multiplicity 3
    const auto deep = radial_bound_states_all(Potential::square_well(12, 1));
    int p_states = 0;
    for (const auto& b : deep)
        if (b.ell == 1) p_states += b.multiplicity;
    CHECK(p_states == 3);
}

TEST_CASE("square-well Jost roots") {
    // above the bound-state point i 0.638
    CHECK(square_well_resonances(4, 1, Rect{-6, 6, 0.7, 3}).empty());
    const auto roots = square_well_resonances(4, 1, Rect{-12, 12, -4, -1e-9});
    REQUIRE(roots.size() >= 4);
    for (cd r : roots) {
        CHECK(std::abs(square_well_jost(4, 1, r)) < 1e-10);
        bool mirrored = false;
        for (cd s : roots) mirrored = mirrored || std::abs(s + std::conj(r)) < 1e-9;
        CHECK(mirrored);
    }
    bool first_pair = false;
    for (cd r : roots) first_pair = first_pair || std::abs(r - cd(3.927779239955, -1.647523470303)) < 1e-9;
    CHECK(first_pair);
    // shallower wells push the roots down
    const auto shallow = square_well_resonances(0.5, 1, Rect{-6, 6, -2, -1e-9});
    for (cd r : shallow) CHECK(r.imag() < -1.647);
}

TEST_CASE("autocorrelation closed forms") {
    const Potential g = Potential::gaussian_well(2, 1);
    const double a0 = moments(g).alpha_0;
    // g(0) = int V^2 / (4 pi) = 4 alpha_0
    CHECK(autocorrelation(g, 0) == doctest::Approx(4 * a0).epsilon(1e-10));
    for (double t : {0.7, 2.0}) {
        const double exact = 4 * std::pow(std::numbers::pi / 2, 1.5) * std::exp(-t * t / 2) / (4 * std::numbers::pi);
        CHECK(autocorrelation(g, t) == doctest::Approx(exact).epsilon(1e-10));
    }
    CHECK(autocorrelation(Potential::zero(), 0.3) == 0.0);
    // overlap of two unit balls at distance t
    const Potential w = Potential::square_well(4, 1);
    const double t = 0.5, exact = 16 * std::numbers::pi * (4 + t) * (2 - t) * (2 - t) / 12 / (4 * std::numbers::pi);
    CHECK(autocorrelation(w, t) == doctest::Approx(exact).epsilon(1e-9));
}

TEST_CASE("direct Tr Q0^2") {
    CHECK(trq0_squared_direct(Potential::zero(), cd(1, 1)) == cd(0, 0));
    const Potential g = Potential::gaussian_well(2, 1);
    CHECK(std::abs(trq0_squared_direct(g, cd(1, 1)) - cd(0.16811281424760702, 0.13449621210704343)) < 1e-12);
    CHECK(std::abs(trq0_squared_direct(g, cd(0, 2)) - 0.14829988856748338) < 1e-12);
    CHECK_THROWS(trq0_squared_direct(g, cd(1, -1)));
}

TEST_CASE("imaginary-axis expansion of Tr Q0^2") {
    const AxisExpansionReport z = imaginary_axis_expansion_check(Potential::zero(), {10, 20, 40}, false);
    CHECK(z.c1 == 0.0);
    CHECK(z.c3 == 0.0);
    const AxisExpansionReport r = imaginary_axis_expansion_check(Potential::gaussian_well(2, 1), {10, 14, 20, 28, 40}, false);
    CHECK(r.c1_rel_err < 1e-2);
}

TEST_CASE("bump test functions") {
    const Bump f{2.0, 1.0};
    CHECK(f(2.0) == doctest::Approx(1.0));
    CHECK(f(0.5) == 0.0);
    CHECK(f(3.0) == 0.0);
    const double h = 1e-5;
    CHECK(f.derivative(2.4) == doctest::Approx((f(2.4 + h) - f(2.4 - h)) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("lattice trace guard rails") {
    CHECK(lattice_trace(Potential::zero(), Bump{2.0, 1.0}, 8, 0.5).value == 0.0);
    CHECK_THROWS_AS(lattice_trace(Potential::gaussian_well(2, 1), Bump{2.0, 1.0}, 1.5, 0.5), BoxTooSmall);
    CHECK_THROWS_AS(lattice_trace(Potential::gaussian_well(2, 1), Bump{2.0, 1.0}, 20, 0.1), ResolutionTooLarge);
}
