#include "detscope/discretize.hpp"
#include "detscope/errors.hpp"

#include <cmath>

#include "doctest.h"

using namespace detscope;

TEST_CASE("cube grids") {
    const QuadratureGrid g2 = build_cube_grid(2, 1.0);
    CHECK(g2.size() == 8);
    CHECK(g2.weights.sum() == doctest::Approx(8.0).epsilon(1e-14));
    CHECK(build_cube_grid(4, 1.0).size() == 64);
    CHECK_THROWS_AS(build_cube_grid(40, 1.0), ResolutionTooLarge);
    CHECK_THROWS_AS(build_cube_grid(1, 1.0), ResolutionTooLarge);
}

TEST_CASE("Q0 assembly structure") {
    const Potential zero = Potential::zero();
    const QuadratureGrid gz = build_cube_grid(3, 1.0);
    CHECK(assemble_q0(gz, zero, cd(1, 1)).entries.cwiseAbs().maxCoeff() == 0.0);
    CHECK(assemble_q(gz, zero, cd(1, 1)).entries.cwiseAbs().maxCoeff() == 0.0);
    CHECK(assemble_q0_prime(gz, zero, cd(1, 1)).entries.trace() == cd(0, 0));

    const Potential g = Potential::gaussian_well(2, 1);
    const QuadratureGrid grid = build_grid(g, 4);
    const cd k(1.3, 0.4);
    const auto a = assemble_q0(grid, g, k).entries;
    const auto b = assemble_q0(grid, g, -std::conj(k)).entries;
    CHECK((a.conjugate() - b).cwiseAbs().maxCoeff() < 1e-15);

    const auto qp = assemble_q0_prime(grid, g, k);
    CHECK(qp.entries.allFinite());
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        const double v = evaluate(g, grid.nodes.col(i));
        CHECK(std::abs(qp.entries(i, i) - grid.weights(i) * v * cd(0, 1) / (4 * std::numbers::pi)) < 1e-15);
    }

    // (I + Q0)(I - Q) = I
    const auto q0 = assemble_q0(grid, g, k);
    const auto q = assemble_q_from(q0);
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(grid.size(), grid.size());
    CHECK(((id + q0.entries) * (id - q.entries) - id).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("Q0 decays up the imaginary axis") {
    const Potential g = Potential::gaussian_well(2, 1);
    const QuadratureGrid grid = build_grid(g, 6);
    double last = 1e300;
    for (double tau : {1.0, 4.0, 16.0, 64.0}) {
        const double n = assemble_q0(grid, g, cd(0, tau)).entries.norm();
        CHECK(n < last);
        last = n;
    }
    // symmetrized Q0(i tau) is real symmetric for a sign-definite V
    const auto m = assemble_q0(grid, g, cd(0, 2)).entries;
    CHECK(m.imag().cwiseAbs().maxCoeff() < 1e-15);
    CHECK((m - m.transpose()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("Tr Q0' is i alpha_-1") {
    const Potential g = Potential::gaussian_well(2, 1);
    // 16^3 nodes; 12^3 leave a 1e-2 quadrature error on the Gaussian tails
    const QuadratureGrid grid = build_grid(g, 16);
    const double alpha_m1 = -std::sqrt(std::numbers::pi) / 2;
    for (cd k : {cd(0, 2), cd(1, 1), cd(5, 0)})
        CHECK(std::abs(assemble_q0_prime(grid, g, k).entries.trace() - cd(0, alpha_m1)) < 1e-3 * std::abs(alpha_m1));
}

TEST_CASE("condition check") {
    const QuadratureGrid gz = build_cube_grid(3, 1.0);
    const ConditionReport z = check_condition_c(gz, Potential::zero());
    CHECK(z.min_distance == 1.0);
    CHECK(z.pass);
    const Potential shallow = Potential::gaussian_well(0.1, 1);
    CHECK(check_condition_c(build_grid(shallow, 6), shallow).pass);
}

TEST_CASE("diagonal kernel average tends to the static ball value") {
    const double v = 1e-3, rho = std::cbrt(3 * v / (4 * std::numbers::pi));
    // (3/rho^3) int_0^rho r dr / (4 pi) = 3/(8 pi rho)
    CHECK(std::abs(diagonal_kernel_average(0.0, v) - 3 / (8 * std::numbers::pi * rho)) < 1e-12);
}
