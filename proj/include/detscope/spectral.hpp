#pragma once

#include "detscope/determinant.hpp"
#include "detscope/reference.hpp"

#include <vector>

namespace detscope {

struct Zero {
    cd k{0, 0};
    int multiplicity = 1;
    double residual = 0; // |f(k)| / max |f| on the enclosing cell boundary
    int channel = 0;
};

struct SpectralCatalog {
    std::vector<Zero> bound_states; // k = i sqrt(lambda)
    std::vector<Zero> resonances;   // Im k < 0, sorted by |k|
    Rect region;
    int completeness_count = 0;     // argument-principle total inside `region`
    // bound states expanded by multiplicity, descending
    std::vector<double> kappas() const;
    int bound_count() const;
};

struct BoundStateOptions {
    double tau_lo = 1e-3;
    double tau_hi = 0;  // 0: sqrt(max |V|)
    int samples = 240;
};

// Per-channel sign changes of det(I + M_l)(i tau), refined by bisection and Newton.
std::vector<Zero> find_bound_states(const DetEngine& engine, const BoundStateOptions& opt = {});

// Smallest |1 + mu| over the Birman-Schwinger spectrum of channel `channel` at k.
double birman_schwinger_gap(const DetEngine& engine, int channel, cd k);

struct CountOptions {
    double max_arg_step = 0.7853981633974483;
    int edge_samples = 12;
    int max_nudges = 5;
    int workers = 1;
};

// Zeros of D in the rectangle, by winding of the continued channel logs; summed with multiplicity.
int count_zeros(const DetEngine& engine, const Rect& region, const CountOptions& opt = {});
int count_zeros_channel(const DetEngine& engine, int channel, const Rect& region, const CountOptions& opt = {});

struct ResonanceOptions {
    CountOptions count;
    int max_depth = 14;
    int extra_levels = 3;
    int newton_iterations = 50;
    double newton_tolerance = 1e-12;
};

SpectralCatalog find_resonances(const DetEngine& engine, const Rect& region, const ResonanceOptions& opt = {});

struct HadamardData {
    cd c1{0, 0}, c2{0, 0}, c3{0, 0}; // P(k) = c1 k + c2 k^2 + c3 k^3
    cd log_d0{0, 0};                 // branch continued from the upper half-plane to 0+
    double scale = 1;
    cd p(cd k) const { return c1 * k + c2 * k * k + c3 * k * k * k; }
    cd p_prime(cd k) const { return c1 + 2.0 * c2 * k + 3.0 * c3 * k * k; }
};

// Taylor data of log D at 0 from central stencils on the analytic branch; `near_zero` is a continued
// value at small t > 0.
HadamardData hadamard_fit(const DetEngine& engine, const DetValue& near_zero, double scale = 1);

// All zeros of the catalog (bound states and resonances) with |k| <= radius, with multiplicity.
std::vector<Zero> zeros_within(const SpectralCatalog& catalog, double radius);

// log D(k) from D(0), P and the genus-3 product over `zeros` (mod 2 pi i).
cd hadamard_log(const HadamardData& h, const std::vector<Zero>& zeros, cd k);

// Im P'(t) + Im sum t^3 / (k_n^3 (t - k_n)) over `zeros`.
double breit_wigner_phi_prime(double t, const HadamardData& h, const std::vector<Zero>& zeros);

} // namespace detscope
