#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <utility>

namespace detscope {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton on P_n.
template <typename Real = double>
std::pair<Eigen::Matrix<Real, Eigen::Dynamic, 1>, Eigen::Matrix<Real, Eigen::Dynamic, 1>>
gauss_legendre(int n) {
    using Vec = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
    Vec x(n), w(n);
    const Real pi = std::numbers::pi_v<Real>;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        Real z = std::cos(pi * (i + Real(0.75)) / (n + Real(0.5)));
        Real pp = 0;
        for (int it = 0; it < 100; ++it) {
            Real p1 = 1, p2 = 0;
            for (int j = 1; j <= n; ++j) {
                Real p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) * z * p2 - (j - 1) * p3) / j;
            }
            pp = n * (z * p1 - p2) / (z * z - 1);
            Real dz = p1 / pp;
            z -= dz;
            if (std::abs(dz) < 4 * std::numeric_limits<Real>::epsilon()) break;
        }
        x(i) = -z;
        x(n - 1 - i) = z;
        w(i) = w(n - 1 - i) = 2 / ((1 - z * z) * pp * pp);
    }
    return {x, w};
}

// Rule mapped to [a, b].
template <typename Real = double>
std::pair<Eigen::Matrix<Real, Eigen::Dynamic, 1>, Eigen::Matrix<Real, Eigen::Dynamic, 1>>
gauss_legendre(int n, Real a, Real b) {
    auto [x, w] = gauss_legendre<Real>(n);
    const Real h = (b - a) / 2, c = (b + a) / 2;
    x = (x.array() * h + c).matrix();
    w *= h;
    return {x, w};
}

// Composite rule: `panels` equal panels of `order` points each.
std::pair<Eigen::VectorXd, Eigen::VectorXd> composite_gauss_legendre(int order, int panels, double a, double b);

// Chebyshev-Gauss-Lobatto points x_j = cos(pi j / n) and the differentiation matrix.
struct Chebyshev {
    Eigen::VectorXd x;
    Eigen::MatrixXd d;
};
Chebyshev chebyshev(int n);

} // namespace detscope
