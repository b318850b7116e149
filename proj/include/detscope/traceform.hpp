#pragma once

#include "detscope/determinant.hpp"
#include "detscope/reference.hpp"
#include "detscope/spectral.hpp"

#include <optional>
#include <string>
#include <vector>

namespace detscope {

// Key/value store for continued values; the CLI backs it with the disk cache.
class ValueStore {
public:
    virtual ~ValueStore() = default;
    virtual std::optional<DetValue> get(const std::string& key) = 0;
    virtual void put(const std::string& key, const DetValue& value) = 0;
};

struct ScanOptions {
    double t_max = 12;
    double step = 0.05;
    double join = 1.0;     // the seed segment meets the real axis at +-join
    int seed_samples = 24;
    int workers = 1;
};

struct ScanRow {
    double t = 0;
    int side = +1;         // +1: path through the first quadrant, -1: second
    DetValue value;
    double phi_sc = 0;
    double phi_b = 0;
    double rho_b = 0;
    double dphi_b = 0;
};

struct RealAxisScan {
    std::vector<ScanRow> rows; // ascending t; t = 0 appears twice (side -1 then +1)
    double step = 0;
    double t_max = 0;
    double alpha_m1 = 0;
    std::vector<double> kappas;
    int half_nodes = 0;        // nodes per side, 0..half_nodes-1
    const ScanRow& plus(int j) const { return rows[half_nodes + j]; }
    const ScanRow& minus(int j) const { return rows[half_nodes - 1 - j]; }
};

RealAxisScan real_axis_scan(const DetEngine& engine, const std::vector<double>& kappas, double alpha_m1,
                            const ScanOptions& opt = {}, ValueStore* store = nullptr);

// det S(t) = conj(D)/D e^{-2 i t alpha_-1}.
cd scattering_det(const DetValue& value, double alpha_m1);
double scattering_phase(const DetValue& value, double alpha_m1);

struct TraceRecord {
    std::string name;
    double lhs = 0, rhs = 0, abs_err = 0, rel_err = 0, tail_estimate = 0;
    bool tail_converged = true;
};

struct TraceOptions {
    double tail_tolerance = 0.05; // tail-fit disagreement allowed, relative to the formula scale
    bool throw_on_tail = true;    // otherwise flag the record and carry on
};

struct TraceReport {
    std::vector<TraceRecord> records;
    double levinson_phi = 0;  // phi_sc(+0)
    int bound_count = 0;
    double unitarity_defect = 0;
    double oddness_defect = 0;
    double evenness_defect = 0;
    double log_abs_d0 = 0;
    const TraceRecord* find(const std::string& name) const;
};

TraceReport trace_formula_suite(const RealAxisScan& scan, const BlaschkeData& blaschke, const Moments& m,
                                const TraceOptions& opt = {});

struct DirichletRecord {
    double lhs_area = 0;     // (1/pi) double integral of |Psi_B'|^2 over the half-plane
    double lhs_boundary = 0; // same quantity as (1/pi) int rho phi_B' dt
    double m_b = 0;
    double s0 = 0;
    double rhs = 0;
    double tail_estimate = 0;
    double rel_err = 0;      // area form vs rhs
};

struct DirichletOptions {
    int radial_order = 8;
    int angular_order = 12;
    int workers = 1;
};

DirichletRecord dirichlet_identity(const DetEngine& engine, const RealAxisScan& scan, const BlaschkeData& blaschke,
                                   const Moments& m, const DirichletOptions& opt = {});

struct HilbertRecord {
    double lhs = 0, rhs = 0, abs_err = 0, rel_err = 0, tail_estimate = 0;
};
HilbertRecord hilbert_identity(const RealAxisScan& scan);

struct KreinRecord {
    double ssf_side = 0;
    double resonance_side = 0;
    std::optional<double> lattice_side;
};

KreinRecord krein_trace(const Bump& f, const RealAxisScan& scan, const std::vector<Zero>& zeros, const HadamardData& h,
                        const Moments& m, const std::vector<double>& bound_lambdas);

// One-sided phi_sc'(+0) from the odd structure of phi about the threshold.
double threshold_phase_slope(const RealAxisScan& scan);

} // namespace detscope
