#pragma once

#include <cstdint>

#include "detscope/potential.hpp"
#include "detscope/special.hpp"

#include <Eigen/Dense>

namespace detscope {

// Tensor-product Gauss-Legendre nodes over the cube [c - R_eff, c + R_eff]^3.
struct QuadratureGrid {
    Eigen::Matrix3Xd nodes;
    Eigen::VectorXd weights;
    int resolution = 0;
    double half_width = 0;
    double cell_diameter = 0;
    Eigen::Vector3d center = Eigen::Vector3d::Zero();

    Eigen::Index size() const { return weights.size(); }
};

struct GridOptions {
    Eigen::Index max_nodes = 6000;
};

QuadratureGrid build_grid(const Potential& pot, int resolution, const GridOptions& opt = {});
// Same rule on an explicit cube [-h, h]^3 about `center`.
QuadratureGrid build_cube_grid(int resolution, double half_width, const Eigen::Vector3d& center = Eigen::Vector3d::Zero(),
                               const GridOptions& opt = {});

enum class OperatorKind { q0, q0_prime, q };

// Stored in the weight-symmetrized form sqrt(w_i) K_ij sqrt(w_j) (a similarity transform of the
// plain Nystrom matrix), so traces and spectra are those of the discretized operator.
struct OperatorMatrix {
    cd k{0, 0};
    Eigen::MatrixXcd entries;
    OperatorKind kind = OperatorKind::q0;
    double condition_estimate = 0;
};

// Ball-average of e^{ik|x|}/(4 pi |x|) over a ball of volume `volume` about the origin.
cd diagonal_kernel_average(cd k, double volume);

OperatorMatrix assemble_q0(const QuadratureGrid& grid, const Potential& pot, cd k);
OperatorMatrix assemble_q0_prime(const QuadratureGrid& grid, const Potential& pot, cd k);
// Q = I - (I + Q0)^{-1}; SingularAtEigenvalue when I + Q0 is numerically singular.
OperatorMatrix assemble_q(const QuadratureGrid& grid, const Potential& pot, cd k, double singular_tol = 1e-12);
OperatorMatrix assemble_q_from(const OperatorMatrix& q0, double singular_tol = 1e-12);

struct ConditionReport {
    double min_distance = 1; // min_j |1 + mu_j| over eigenvalues of Q0(0)
    bool pass = true;
    double threshold = 1e-6;
};
ConditionReport check_condition_c(const QuadratureGrid& grid, const Potential& pot);

// Depth gate: Im k >= -kappa_max(R_eff), where e^{2 kappa R} eps = 1e-6.
double kappa_max(double r_eff);

// Process-wide count of operator matrix assemblies (Nystrom and collocation).
std::uint64_t assembly_count();
void note_assembly();

} // namespace detscope
