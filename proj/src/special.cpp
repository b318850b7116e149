#include "detscope/special.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace detscope {

namespace {

constexpr double euler_gamma = 0.57721566490153286061;

cd ein_series(cd z) {
    cd term = z, sum = z;
    for (int n = 2; n < 4000; ++n) {
        term *= -z / static_cast<double>(n);
        const cd add = term / static_cast<double>(n);
        sum += add;
        if (std::abs(add) < 1e-17 * std::abs(sum) && n > std::abs(z)) break;
    }
    return sum;
}

// Modified Lentz on E1(z) = e^{-z} / (z + 1 - 1/(z + 3 - 4/(z + 5 - ...))).
cd e1_fraction(cd z) {
    const double tiny = 1e-300;
    cd b = z + 1.0;
    cd c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 50000; ++i) {
        const double a = -static_cast<double>(i) * i;
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        const cd del = c * d;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return h * std::exp(-z);
}

bool use_series(cd z) { return std::abs(z) < 2.0 || std::abs(z) + z.real() < 10.0; }

} // namespace

cd ein(cd z) {
    if (use_series(z)) return ein_series(z);
    return e1_fraction(z) + std::log(z) + euler_gamma;
}

cd e1(cd z) {
    if (use_series(z)) return ein_series(z) - std::log(z) - euler_gamma;
    return e1_fraction(z);
}

cd oscillatory_log_kernel(cd k, double a, double b) {
    const cd m = cd(0, -2) * k;
    const cd za = m * a, zb = m * b;
    // Large arguments in the right half-plane: direct difference of E1 avoids the log cancellation.
    if (!use_series(za) && !use_series(zb) && za.real() > 0) return e1_fraction(za) - e1_fraction(zb);
    return std::log(b / a) + ein(za) - ein(zb);
}

cd outgoing_log_derivative(int ell, cd k, double R) {
    const cd i(0, 1);
    if (ell == 0) return i * k;
    const cd z = k * R;
    // b_l = h_{l-1}/h_l, upward (h dominates in l, so this is stable).
    cd b = i * z / (z + i);
    for (int l = 1; l < ell; ++l) b = z / (2.0 * l + 1.0 - z * b);
    return k * b - static_cast<double>(ell) / R;
}

Eigen::VectorXcd riccati_products(int L, cd z) {
    const cd i(0, 1);
    Eigen::VectorXcd p(L + 1);
    p(0) = std::sin(z) * (-i) * std::exp(i * z);
    if (L == 0) return p;
    // a_l = j_{l-1}/j_l downward from well above max(L, |z|)
    const int top = L + 60 + static_cast<int>(std::abs(z));
    Eigen::VectorXcd a(top + 2);
    a(top + 1) = (2.0 * top + 3.0) / z;
    for (int l = top; l >= 1; --l) a(l) = (2.0 * l + 1.0) / z - 1.0 / a(l + 1);
    cd b = i * z / (z + i);
    for (int l = 1; l <= L; ++l) {
        p(l) = i / (b - a(l));
        b = z / (2.0 * l + 1.0 - z * b);
    }
    return p;
}

} // namespace detscope
