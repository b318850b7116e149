#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace detscope {

enum class PotentialKind { zero, gaussian_well, polynomial_bump, square_well, grid_sampled };

const char* to_string(PotentialKind kind);
PotentialKind potential_kind_from_string(const std::string& name);

// Samples on a rectilinear grid, x-fastest.
struct GridData {
    std::array<std::uint32_t, 3> n{0, 0, 0};
    Eigen::Vector3d origin = Eigen::Vector3d::Zero();
    Eigen::Vector3d spacing = Eigen::Vector3d::Ones();
    std::vector<double> values;

    double at(std::uint32_t i, std::uint32_t j, std::uint32_t k) const {
        return values[(static_cast<std::size_t>(k) * n[1] + j) * n[0] + i];
    }
    Eigen::Vector3d node(std::uint32_t i, std::uint32_t j, std::uint32_t k) const {
        return origin + spacing.cwiseProduct(Eigen::Vector3d(i, j, k));
    }
};

// Relative threshold sup_{|x|>R_eff}|V| <= eps * max|V|.
inline constexpr double support_cutoff = 1e-10;

struct Potential {
    PotentialKind kind = PotentialKind::zero;
    double depth = 0;   // V0 > 0 means an attractive well
    double width = 1;   // sigma (gaussian) or a (bump, square)
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    bool smooth = true; // C^2 flag
    double r_eff = 1;   // effective support radius about `center`
    std::shared_ptr<const GridData> grid;

    static Potential zero();
    static Potential gaussian_well(double depth, double sigma, Eigen::Vector3d center = Eigen::Vector3d::Zero());
    static Potential polynomial_bump(double depth, double a, Eigen::Vector3d center = Eigen::Vector3d::Zero());
    static Potential square_well(double depth, double a, Eigen::Vector3d center = Eigen::Vector3d::Zero());
    static Potential grid_sampled(GridData data);

    bool is_zero() const { return kind == PotentialKind::zero || (kind != PotentialKind::grid_sampled && depth == 0.0); }
    bool radial() const { return kind != PotentialKind::grid_sampled; }
    double max_abs() const;

    // v(r) about `center`; radial kinds only.
    double profile(double r) const;
    double profile_derivative(double r) const;

    // Stable textual identity, used in cache keys.
    std::string fingerprint() const;
};

double evaluate(const Potential& pot, const Eigen::Vector3d& x);
Eigen::Vector3d gradient(const Potential& pot, const Eigen::Vector3d& x);

// (|V|^{1/2}, V/|V|^{1/2}); zero where V = 0.
std::pair<double, double> split_weights(double v);
inline std::pair<double, double> split_weights(const Potential& pot, const Eigen::Vector3d& x) {
    return split_weights(evaluate(pot, x));
}

struct Moments {
    double alpha_m1 = 0;
    double alpha_0 = 0;
    double alpha_1 = 0;
    bool has_alpha_1 = false;
    Eigen::Vector3d error = Eigen::Vector3d::Zero();
    // raw integrals, kept for the expansion checks
    double int_v2 = 0, int_grad2 = 0, int_v3 = 0;
};

struct MomentOptions {
    double tolerance = 1e-9;
    bool want_alpha_1 = true;
    int max_refinements = 8;
};

Moments moments(const Potential& pot, const MomentOptions& opt = {});

// Sample an analytic potential onto nodes origin + spacing*(i,j,k).
GridData sample_to_grid(const Potential& pot, std::array<std::uint32_t, 3> n, const Eigen::Vector3d& origin,
                        const Eigen::Vector3d& spacing);
void write_grid_file(const std::string& path, const GridData& data);
GridData read_grid_file(const std::string& path);

} // namespace detscope
