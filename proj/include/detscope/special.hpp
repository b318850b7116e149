#pragma once

#include <Eigen/Dense>
#include <complex>

namespace detscope {

using cd = std::complex<double>;

// Exponential integral E1 (principal branch) and the entire Ein(z) = int_0^z (1 - e^{-t})/t dt.
cd e1(cd z);
cd ein(cd z);

// int_a^b e^{2iks}/s ds for 0 < a <= b, entire in k.
cd oscillatory_log_kernel(cd k, double a, double b);

// k * hhat'(kR)/hhat(kR) for the outgoing Riccati-Hankel function hhat_l(z) = z h_l^(1)(z).
// Finite at k = 0, where it equals -l/R.
cd outgoing_log_derivative(int ell, cd k, double R);

// p_l(z) = jhat_l(z) hhat_l(z) for l = 0..L by continued-fraction ratios (stable for all l).
Eigen::VectorXcd riccati_products(int L, cd z);

} // namespace detscope
