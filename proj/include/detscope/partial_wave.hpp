#pragma once

#include "detscope/potential.hpp"
#include "detscope/special.hpp"

#include <Eigen/Dense>
#include <vector>

namespace detscope {

// Partial-wave reduction for radial potentials: D = prod_l det2(I + Q_l)^{2l+1}.
// Each Q_l is discretized by Chebyshev collocation on [0, R_eff] with the outgoing
// boundary condition u' = beta_l(k) u at R_eff.
struct PartialWaveOptions {
    int n_base = 40;          // collocation order at k = 0
    double n_per_kr = 2.6;    // extra points per unit |k| R
    int n_max = 320;
    int l_extra = 36;         // channels beyond |k| R_core
    double l_per_kr = 1.2;
    int l_max = 600;
    // For Im k >= 0 and smooth V, channels l >= vp_from_kr |k| R_core come from the variable-phase
    // equations: collocation needs n growing with l there, the ODE does not.
    bool variable_phase_channels = true;
    double vp_from_kr = 1.0;
    // On the real axis the channels below that come from the radial Jost equation instead.
    // Collocation leaves a bias of order 1e-9 in log|D| there, which the moment identities amplify.
    bool jost_real_axis = true;
};

struct CollocationBlock {
    Eigen::VectorXd r;        // nodes r_1..r_N (r_0 = 0 dropped)
    Eigen::MatrixXcd a;       // free operator with boundary row
    Eigen::MatrixXcd m;       // A^{-1} B
    cd beta{0, 0};
};

CollocationBlock collocation_block(const Potential& pot, int ell, cd k, int n);

struct ChannelTerms {
    cd log_det{0, 0};   // log det(I + M), principal per pivot
    cd trace{0, 0};     // tr M
    cd trace2{0, 0};    // tr M^2
    cd log_det3{0, 0};  // log det(I+M) - tr M + tr M^2 / 2
    cd dlog_det3{0, 0}; // d/dk of log_det3 (when requested)
    cd dlog_det{0, 0};  // d/dk log det(I + M)
    double min_pivot = 0;
};

ChannelTerms channel_terms(const Potential& pot, int ell, cd k, int n, bool derivative);

// Collocation order and channel count used at wavenumber k.
int collocation_order(const Potential& pot, cd k, const PartialWaveOptions& opt);
int channel_count(const Potential& pot, cd k, const PartialWaveOptions& opt);
double core_radius(const Potential& pot);

// Tail of sum_{l > L} s_l with s_l ~ sum_{q=p}^{p+2} c_q (l + 1/2)^{-q}, fitted to the last terms.
struct TailFit {
    double power = 0;
    cd sum{0, 0};
    cd spread{0, 0}; // difference between two fit windows, an error proxy
};
TailFit fit_power_tail(const std::vector<cd>& terms, int first_power);

// Hurwitz zeta sum_{m>=0} (a+m)^{-s} for a >= 8.
double hurwitz_tail(double s, double a);

// Tr Q0(k)^2 for a radial potential by the radial double integral with the kernel
// int_{|r-r'|}^{r+r'} e^{2iks}/s ds, and its k-derivative.
cd radial_trq0_squared(const Potential& pot, cd k, double rel_tol = 1e-13);
cd radial_trq0_squared_derivative(const Potential& pot, cd k);

struct PartialWaveSum {
    cd log_d{0, 0};
    cd det3_sum{0, 0};
    cd det3_tail{0, 0};
    cd t2{0, 0};
    cd dlog_d{0, 0};
    int channels = 0;
    int order = 0;
    int vp_from = -1; // first variable-phase channel, -1 when none
    double min_pivot = 0;
};

PartialWaveSum partial_wave_log_det(const Potential& pot, cd k, const PartialWaveOptions& opt = {},
                                    bool derivative = false);

// sum_l (2l+1) tr M_l^2 with fitted channel tail: the collocation value of Tr Q0^2.
struct MatrixTraceSquared {
    cd value{0, 0};
    cd tail{0, 0};
    int channels = 0;
};
MatrixTraceSquared partial_wave_trace_squared(const Potential& pot, cd k, const PartialWaveOptions& opt = {});

// Variable-phase per-channel log det3 for Im k >= 0 (exact up to ODE error); entries l = 0..L.
// On the real axis an entry is usable only if jhat_l(kr) has no zero where V is not negligible.
Eigen::VectorXcd variable_phase_det3(const Potential& pot, cd k, int L, int steps);
// log D for Im k > 0 from variable-phase channels 0..L with a fitted channel tail, minus Tr Q0^2 / 2.
// Accurate far up the imaginary axis, where the collocation blocks lose a few digits.
cd variable_phase_log_det(const Potential& pot, cd k, int L = 720);

// Per-channel log det3 at real k != 0 from the Jost equation u = A jhat + B yhat, integrated
// together with tr Q_l and tr Q_l^2 from the same inner radius so that the truncation cancels.
cd jost_det3(const Potential& pot, int ell, double k);

} // namespace detscope
