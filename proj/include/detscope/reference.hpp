#pragma once

#include "detscope/potential.hpp"
#include "detscope/special.hpp"

#include <functional>
#include <vector>

namespace detscope {

struct RadialProblem {
    std::function<double(double)> v; // radial profile, taken as 0 beyond r_max
    int ell = 0;
    double r_max = 1;
    double ode_step = 1.0 / 2000;
};

RadialProblem radial_problem(const Potential& pot, int ell);

struct BoundState {
    double lambda = 0; // energy is -lambda
    int ell = 0;
    int multiplicity = 1;
};

// Shooting with RK4; eigenvalues -lambda in [-lambda_hi, -lambda_lo].
std::vector<double> radial_bound_states(const RadialProblem& problem, double lambda_lo, double lambda_hi);
// Union over l <= l_max with multiplicity 2l+1, sorted by decreasing lambda.
std::vector<BoundState> radial_bound_states_all(const Potential& pot, int l_max = 4);

struct Rect {
    double re_lo = -1, re_hi = 1, im_lo = -1, im_hi = 0;
    bool contains(cd k) const {
        return k.real() >= re_lo && k.real() <= re_hi && k.imag() >= im_lo && k.imag() <= im_hi;
    }
};

// Roots of cos(kappa a) - i k sin(kappa a)/kappa, kappa^2 = k^2 + V0 (s-wave square well).
std::vector<cd> square_well_resonances(double depth, double a, const Rect& region);
cd square_well_jost(double depth, double a, cd k);

// Autocorrelation g(t) = (4 pi)^{-2} int dw int V(x) V(x + t w) dx.
double autocorrelation(const Potential& pot, double t);
// Tr Q0(k)^2 = int_0^inf e^{2ikt} g(t) dt, Im k >= 0.
cd trq0_squared_direct(const Potential& pot, cd k);

struct AxisExpansionReport {
    double c1 = 0, c3 = 0;              // fitted coefficients of (i/2) Tr Q0^2 = c1/k + c3/k^3 + ...
    double c1_expected = 0, c3_expected = 0;
    double c1_rel_err = 0, c3_rel_err = 0;
    double trq4_slope = 0;              // log-log slope of |Tr Q0^4(i tau)|
    std::vector<double> taus;
    std::vector<double> trq4;
};
// Fit along k = i tau, tau in `taus`; Tr Q0^4 from partial-wave collocation blocks.
AxisExpansionReport imaginary_axis_expansion_check(const Potential& pot, const std::vector<double>& taus, bool with_trq4 = true);

// Smooth compactly supported bump exp(1 - 1/(1 - u^2)), u = (E - center)/half_width.
struct Bump {
    double center = 0;
    double half_width = 1;
    double operator()(double e) const;
    double derivative(double e) const;
    double lo() const { return center - half_width; }
    double hi() const { return center + half_width; }
};

struct LatticeTrace {
    double value = 0;
    int points_per_side = 0;
    double spacing = 0;
    long interacting_states = 0; // eigenvalues of H inside the support of f
};
// EXPERIMENTAL: periodic 7-point finite differences, dense eigenvalues of H, analytic spectrum of H0.
LatticeTrace lattice_trace(const Potential& pot, const Bump& f, double box, double spacing);

} // namespace detscope
