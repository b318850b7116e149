#include "detscope/quadrature.hpp"

namespace detscope {

std::pair<Eigen::VectorXd, Eigen::VectorXd> composite_gauss_legendre(int order, int panels, double a, double b) {
    auto [x0, w0] = gauss_legendre<double>(order);
    Eigen::VectorXd x(order * panels), w(order * panels);
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * h;
        for (int i = 0; i < order; ++i) {
            x(p * order + i) = lo + (x0(i) + 1) * h / 2;
            w(p * order + i) = w0(i) * h / 2;
        }
    }
    return {x, w};
}

Chebyshev chebyshev(int n) {
    Chebyshev c;
    c.x.resize(n + 1);
    for (int j = 0; j <= n; ++j) c.x(j) = std::cos(std::numbers::pi * j / n);
    c.d.setZero(n + 1, n + 1);
    for (int i = 0; i <= n; ++i) {
        const double ci = (i == 0 || i == n) ? 2.0 : 1.0;
        for (int j = 0; j <= n; ++j) {
            if (i == j) continue;
            const double cj = (j == 0 || j == n) ? 2.0 : 1.0;
            const double s = ((i + j) % 2 == 0) ? 1.0 : -1.0;
            c.d(i, j) = ci / cj * s / (c.x(i) - c.x(j));
        }
    }
    // negative-sum trick for the diagonal
    for (int i = 0; i <= n; ++i) c.d(i, i) = -c.d.row(i).sum();
    return c;
}

} // namespace detscope
