#include "detscope/special.hpp"

#include <cmath>

#include "doctest.h"

using namespace detscope;

TEST_CASE("exponential integrals") {
    CHECK(std::abs(e1(cd(1, 0)) - 0.21938393439552062) < 1e-14);
    CHECK(std::abs(e1(cd(10, 0)) - 4.1569689296853243e-06) < 1e-19);
    // Ein(z) = E1(z) + log z + gamma off the cut
    for (cd z : {cd(0.3, 0.2), cd(2, -1), cd(-3, 4), cd(12, 5)}) {
        const cd want = e1(z) + std::log(z) + 0.57721566490153286;
        CHECK(std::abs(ein(z) - want) < 1e-12 * std::max(1.0, std::abs(want)));
    }
    // Ein(z) = z - z^2/4 + ...
    CHECK(std::abs(ein(cd(1e-8, 0)) - (1e-8 - 2.5e-17)) < 1e-24);
}

TEST_CASE("outgoing log derivative at small k") {
    for (int l : {0, 1, 4}) CHECK(std::abs(outgoing_log_derivative(l, cd(0, 0), 2.0) + l / 2.0) < 1e-14);
    // l = 0: hhat = e^{iz}, so the log derivative is ik
    CHECK(std::abs(outgoing_log_derivative(0, cd(1.3, 0.4), 2.0) - cd(0, 1) * cd(1.3, 0.4)) < 1e-13);
}

TEST_CASE("riccati products") {
    const cd z(1.7, 0.3);
    const Eigen::VectorXcd p = riccati_products(3, z);
    // jhat_0 = sin z, hhat_0 = -i e^{iz}; jhat_1 = sin z / z - cos z, hhat_1 = e^{iz}(-i/z - 1)
    CHECK(std::abs(p(0) - std::sin(z) * cd(0, -1) * std::exp(cd(0, 1) * z)) < 1e-13);
    const cd j1 = std::sin(z) / z - std::cos(z), h1 = std::exp(cd(0, 1) * z) * (cd(0, -1) / z - 1.0);
    CHECK(std::abs(p(1) - j1 * h1) < 1e-13);
}
