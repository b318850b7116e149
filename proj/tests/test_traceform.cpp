#include "detscope/errors.hpp"
#include "detscope/traceform.hpp"

#include <cmath>
#include <map>
#include <numbers>

#include "doctest.h"

using namespace detscope;

namespace {
struct MapStore final : ValueStore {
    std::map<std::string, DetValue> values;
    int gets = 0, puts = 0;
    std::optional<DetValue> get(const std::string& key) override {
        ++gets;
        auto it = values.find(key);
        if (it == values.end()) return std::nullopt;
        return it->second;
    }
    void put(const std::string& key, const DetValue& v) override {
        ++puts;
        values[key] = v;
    }
};

ScanOptions coarse(double t_max, double step) {
    ScanOptions o;
    o.t_max = t_max;
    o.step = step;
    return o;
}
} // namespace

TEST_CASE("zero potential: every identity is 0 = 0") {
    const auto eng = make_engine(Potential::zero());
    const RealAxisScan scan = real_axis_scan(*eng, {}, 0.0, coarse(3.2, 0.2));
    const Moments m;
    const BlaschkeData b = beta_gamma({}, m);
    const TraceReport rep = trace_formula_suite(scan, b, m);
    CHECK(rep.records.size() == 6);
    for (const TraceRecord& r : rep.records) {
        CHECK(r.lhs == 0.0);
        CHECK(r.rhs == 0.0);
        CHECK(r.abs_err == 0.0);
    }
    const HilbertRecord h = hilbert_identity(scan);
    CHECK(h.lhs == 0.0);
    CHECK(h.rhs == 0.0);
    const DirichletRecord d = dirichlet_identity(*eng, scan, b, m);
    CHECK(d.lhs_area == 0.0);
    CHECK(d.s0 == 0.0);
    CHECK(d.rhs == 0.0);
    const KreinRecord k = krein_trace(Bump{2, 1}, scan, {}, HadamardData{}, m, {});
    CHECK(k.ssf_side == 0.0);
    CHECK(k.resonance_side == 0.0);
    for (const ScanRow& r : scan.rows) {
        CHECK(scattering_det(r.value, 0.0) == cd(1, 0));
        CHECK(r.phi_sc == 0.0);
    }
}

TEST_CASE("scan structure and the value store") {
    const auto eng = make_engine(Potential::gaussian_well(2, 1));
    const double a_m1 = -std::sqrt(std::numbers::pi) / 2;
    MapStore store;
    const RealAxisScan scan = real_axis_scan(*eng, {}, a_m1, coarse(1.6, 0.1), &store);
    CHECK(scan.rows.size() == 2 * static_cast<std::size_t>(scan.half_nodes));
    CHECK(scan.plus(0).t == 0.0);
    CHECK(scan.minus(0).t == 0.0);
    CHECK(store.puts == static_cast<int>(scan.rows.size()));
    for (int j = 0; j < scan.half_nodes; ++j) {
        CHECK(std::abs(scan.plus(j).value.phi + scan.minus(j).value.phi) < 1e-10);
        CHECK(std::abs(scan.plus(j).value.rho - scan.minus(j).value.rho) < 1e-10);
    }
    for (const ScanRow& r : scan.rows) {
        CHECK(std::abs(std::abs(scattering_det(r.value, a_m1)) - 1) < 1e-12);
        CHECK(std::abs(std::exp(cd(0, -2) * r.phi_sc) - scattering_det(r.value, a_m1)) < 1e-10);
    }
    // warm store: no further writes and identical rows
    const RealAxisScan again = real_axis_scan(*eng, {}, a_m1, coarse(1.6, 0.1), &store);
    CHECK(store.puts == static_cast<int>(scan.rows.size()));
    for (std::size_t i = 0; i < scan.rows.size(); ++i) CHECK(again.rows[i].value.log_d == scan.rows[i].value.log_d);
}

TEST_CASE("Blaschke-removed phase is continuous through 0 with a bound state") {
    const Potential sw = Potential::polynomial_bump(16, 1);
    const auto eng = make_engine(sw);
    const auto bs = find_bound_states(*eng);
    REQUIRE(!bs.empty());
    SpectralCatalog c;
    c.bound_states = bs;
    const RealAxisScan scan = real_axis_scan(*eng, c.kappas(), moments(sw).alpha_m1, coarse(1.6, 0.1));
    CHECK(std::abs(scan.plus(0).phi_b) < 1e-12);
    CHECK(std::abs(scan.minus(0).phi_b) < 1e-12);
    // Levinson: phi_sc(+0) = -pi N
    CHECK(std::abs(scan.plus(0).phi_sc + std::numbers::pi * c.bound_count()) < 0.05);
}
