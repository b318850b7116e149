#include "detscope/discretize.hpp"

#include "detscope/errors.hpp"
#include "detscope/quadrature.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>

namespace detscope {

namespace {
constexpr double pi = std::numbers::pi;
const cd I(0, 1);
} // namespace

QuadratureGrid build_cube_grid(int resolution, double half_width, const Eigen::Vector3d& center,
                               const GridOptions& opt) {
    if (resolution < 2) throw ResolutionTooLarge("resolution must be at least 2");
    const Eigen::Index count = static_cast<Eigen::Index>(resolution) * resolution * resolution;
    if (count > opt.max_nodes)
        throw ResolutionTooLarge(std::to_string(count) + " nodes exceed the budget of " +
                                 std::to_string(opt.max_nodes));
    auto [x, w] = gauss_legendre<double>(resolution, -half_width, half_width);
    QuadratureGrid g;
    g.resolution = resolution;
    g.half_width = half_width;
    g.center = center;
    g.cell_diameter = std::sqrt(3.0) * 2 * half_width / resolution;
    g.nodes.resize(3, count);
    g.weights.resize(count);
    Eigen::Index idx = 0;
    for (int c = 0; c < resolution; ++c)
        for (int b = 0; b < resolution; ++b)
            for (int a = 0; a < resolution; ++a, ++idx) {
                g.nodes.col(idx) = center + Eigen::Vector3d(x(a), x(b), x(c));
                g.weights(idx) = w(a) * w(b) * w(c);
            }
    return g;
}

QuadratureGrid build_grid(const Potential& pot, int resolution, const GridOptions& opt) {
    return build_cube_grid(resolution, pot.r_eff, pot.center, opt);
}

cd diagonal_kernel_average(cd k, double volume) {
    const double rho = std::cbrt(3 * volume / (4 * pi));
    // (3/rho^3) int_0^rho r e^{ikr} dr / (4 pi) = 3/(4 pi rho) * S(ik rho)
    const cd z = I * k * rho;
    cd sum;
    if (std::abs(z) > 1) {
        sum = (std::exp(z) * (z - 1.0) + 1.0) / (z * z);
    } else {
        // S(z) = sum z^n / (n! (n+2)), free of the cancellation in the closed form
        cd term = 1.0;
        for (int n = 0; n < 60; ++n) {
            const cd add = term / static_cast<double>(n + 2);
            sum += add;
            if (std::abs(add) < 1e-17 * std::abs(sum)) break;
            term *= z / static_cast<double>(n + 1);
        }
    }
    return 3.0 / (rho * 4 * pi) * sum;
}

namespace {

struct Sandwich {
    Eigen::VectorXd left, right; // sqrt(w)|V|^{1/2}, sqrt(w) V/|V|^{1/2}
};

Sandwich sandwich(const QuadratureGrid& grid, const Potential& pot) {
    Sandwich s;
    s.left.resize(grid.size());
    s.right.resize(grid.size());
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
        auto [a, b] = split_weights(pot, grid.nodes.col(i));
        const double sw = std::sqrt(grid.weights(i));
        s.left(i) = sw * a;
        s.right(i) = sw * b;
    }
    return s;
}

double condition_of(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff() * static_cast<double>(m.rows()); }

} // namespace

OperatorMatrix assemble_q0(const QuadratureGrid& grid, const Potential& pot, cd k) {
    note_assembly();
    const Sandwich s = sandwich(grid, pot);
    const Eigen::Index n = grid.size();
    OperatorMatrix out;
    out.k = k;
    out.kind = OperatorKind::q0;
    out.entries.setZero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        if (s.right(j) == 0) continue;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (s.left(i) == 0) continue;
            cd kern;
            if (i == j) {
                kern = diagonal_kernel_average(k, grid.weights(i));
            } else {
                const double r = (grid.nodes.col(i) - grid.nodes.col(j)).norm();
                kern = std::exp(I * k * r) / (4 * pi * r);
            }
            out.entries(i, j) = s.left(i) * kern * s.right(j);
        }
    }
    out.condition_estimate = condition_of(out.entries);
    return out;
}

OperatorMatrix assemble_q0_prime(const QuadratureGrid& grid, const Potential& pot, cd k) {
    note_assembly();
    const Sandwich s = sandwich(grid, pot);
    const Eigen::Index n = grid.size();
    OperatorMatrix out;
    out.k = k;
    out.kind = OperatorKind::q0_prime;
    out.entries.setZero(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) {
            const double r = (grid.nodes.col(i) - grid.nodes.col(j)).norm();
            out.entries(i, j) = s.left(i) * (I * std::exp(I * k * r) / (4 * pi)) * s.right(j);
        }
    out.condition_estimate = condition_of(out.entries);
    return out;
}

OperatorMatrix assemble_q_from(const OperatorMatrix& q0, double singular_tol) {
    const Eigen::Index n = q0.entries.rows();
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Identity(n, n) + q0.entries;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
    double umin = std::numeric_limits<double>::infinity(), umax = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double u = std::abs(lu.matrixLU()(i, i));
        umin = std::min(umin, u);
        umax = std::max(umax, u);
    }
    if (n > 0 && !(umin > singular_tol * std::max(umax, 1.0)))
        throw SingularAtEigenvalue("I + Q0 is singular near k = (" + std::to_string(q0.k.real()) + ", " +
                                   std::to_string(q0.k.imag()) + ")");
    OperatorMatrix out;
    out.k = q0.k;
    out.kind = OperatorKind::q;
    out.entries = Eigen::MatrixXcd::Identity(n, n) - lu.inverse();
    out.condition_estimate = condition_of(out.entries);
    return out;
}

OperatorMatrix assemble_q(const QuadratureGrid& grid, const Potential& pot, cd k, double singular_tol) {
    return assemble_q_from(assemble_q0(grid, pot, k), singular_tol);
}

ConditionReport check_condition_c(const QuadratureGrid& grid, const Potential& pot) {
    ConditionReport rep;
    const OperatorMatrix q0 = assemble_q0(grid, pot, 0.0);
    if (q0.entries.size() == 0) return rep;
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(q0.entries, false);
    if (es.info() != Eigen::Success) throw EigenSolveFailed("Q0(0) spectrum");
    rep.min_distance = (es.eigenvalues().array() + 1.0).abs().minCoeff();
    rep.pass = rep.min_distance >= rep.threshold;
    return rep;
}

namespace {
std::atomic<std::uint64_t> assemblies{0};
}

std::uint64_t assembly_count() { return assemblies.load(); }
void note_assembly() { ++assemblies; }

double kappa_max(double r_eff) {
    return std::log(1e-6 / std::numeric_limits<double>::epsilon()) / (2 * r_eff);
}

} // namespace detscope
