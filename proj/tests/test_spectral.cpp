#include "detscope/errors.hpp"
#include "detscope/spectral.hpp"

#include <cmath>

#include "doctest.h"

using namespace detscope;

TEST_CASE("zero potential has no zeros") {
    const auto eng = make_engine(Potential::zero());
    CHECK(find_bound_states(*eng).empty());
    CHECK(count_zeros(*eng, Rect{-3, 3, -1, 1}) == 0);
    const SpectralCatalog cat = find_resonances(*eng, Rect{-3, 3, -1, 0});
    CHECK(cat.resonances.empty());
    CHECK(cat.completeness_count == 0);
    const HadamardData h = hadamard_fit(*eng, eng->evaluate(cd(0.05, 0)));
    CHECK(h.c1 == cd(0, 0));
    CHECK(h.log_d0 == cd(0, 0));
    CHECK(breit_wigner_phi_prime(1.3, h, {}) == 0.0);
}

TEST_CASE("square-well bound state against the shooting oracle") {
    const Potential sw = Potential::square_well(4, 1);
    const auto eng = make_engine(sw);
    const auto found = find_bound_states(*eng);
    REQUIRE(found.size() == 1);
    CHECK(found[0].channel == 0);
    CHECK(found[0].multiplicity == 1);
    const double oracle = std::sqrt(radial_bound_states_all(sw).at(0).lambda);
    CHECK(std::abs(found[0].k.imag() / oracle - 1) < 1e-4);
    CHECK(birman_schwinger_gap(*eng, 0, found[0].k) < 1e-6);
    CHECK(find_bound_states(*make_engine(Potential::square_well(1, 1))).empty());
}

TEST_CASE("argument principle around an s-wave resonance") {
    const auto eng = make_engine(Potential::square_well(4, 1));
    const cd r(3.927779239955, -1.647523470303);
    CHECK(count_zeros_channel(*eng, 0, Rect{r.real() - 0.2, r.real() + 0.2, r.imag() - 0.2, r.imag() + 0.2}) == 1);
    // mirror pair of rectangles
    const int left = count_zeros(*eng, Rect{-4.5, -0.5, -2, -0.1});
    const int right = count_zeros(*eng, Rect{0.5, 4.5, -2, -0.1});
    CHECK(left == right);
    CHECK_THROWS_AS(count_zeros(*eng, Rect{-1, 1, -50, -1}), DepthLimitExceeded);
}

TEST_CASE("Hadamard data symmetry") {
    const auto eng = make_engine(Potential::gaussian_well(2, 1));
    const double tau0 = seed_height(*eng);
    const DetValue near = continue_log(seed_segment(tau0, 0.05), *eng).back();
    const HadamardData h = hadamard_fit(*eng, near);
    CHECK(std::abs(h.c1.real()) < 1e-6);
    CHECK(std::abs(h.c2.imag()) < 1e-6);
    CHECK(std::abs(h.c3.real()) < 1e-5);
    CHECK(h.log_d0.real() < 0);
    // the zero-order sum term vanishes at t = 0
    CHECK(breit_wigner_phi_prime(0.0, h, {Zero{cd(1, -1)}}) == doctest::Approx(h.c1.imag()));
}
