#include "detscope/determinant.hpp"

#include "detscope/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace detscope {

namespace {

constexpr double pi = std::numbers::pi;
const cd I(0, 1);

std::string fmt_k(cd k) {
    std::ostringstream os;
    os.precision(17);
    os << "(" << k.real() << ", " << k.imag() << ")";
    return os.str();
}

// Per-factor principal log(1 + mu) - mu, with the zero clamp.
cd log_factor(cd mu, bool& zero) {
    const cd one_plus = 1.0 + mu;
    if (std::abs(one_plus) < 1e-14) {
        zero = true;
        return 0.0;
    }
    if (std::abs(mu) < 1e-4) {
        // log(1+mu) - mu = -mu^2/2 + mu^3/3 - ...
        cd term = -mu * mu / 2.0, sum = term;
        for (int n = 3; n < 12; ++n) {
            term *= -mu * static_cast<double>(n - 1) / static_cast<double>(n);
            sum += term;
        }
        return sum;
    }
    return std::log(one_plus) - mu;
}

} // namespace

DetValue make_det_value(cd k, cd log_d) {
    DetValue v;
    v.k = k;
    v.log_d = log_d;
    v.rho = log_d.real();
    v.phi = log_d.imag();
    v.d = std::exp(log_d);
    return v;
}

DetValue det2(const OperatorMatrix& q0) {
    if (q0.kind != OperatorKind::q0) throw Error("det2 expects a Q0 matrix");
    if (q0.entries.size() == 0) return make_det_value(q0.k, 0.0);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(q0.entries, false);
    if (es.info() != Eigen::Success) throw EigenSolveFailed("Q0 spectrum at k = " + fmt_k(q0.k));
    cd log_d = 0;
    bool zero = false;
    std::vector<cd> mu(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    for (const cd& m : mu) log_d += log_factor(m, zero);
    DetValue v = make_det_value(q0.k, log_d);
    if (zero) {
        v.d = 0;
        v.rho = -std::numeric_limits<double>::infinity();
    }
    v.eigenvalues = std::move(mu);
    return v;
}

DetValue det2_lu(const OperatorMatrix& q0) {
    if (q0.kind != OperatorKind::q0) throw Error("det2 expects a Q0 matrix");
    const Eigen::Index n = q0.entries.rows();
    if (n == 0) return make_det_value(q0.k, 0.0);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(Eigen::MatrixXcd::Identity(n, n) + q0.entries);
    cd log_d = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const cd p = lu.matrixLU()(i, i);
        if (std::abs(p) < 1e-14) {
            DetValue v = make_det_value(q0.k, 0.0);
            v.d = 0;
            v.rho = -std::numeric_limits<double>::infinity();
            return v;
        }
        log_d += std::log(p);
    }
    if (lu.permutationP().determinant() < 0) log_d += I * pi;
    log_d -= q0.entries.trace();
    log_d = {log_d.real(), std::remainder(log_d.imag(), 2 * pi)};
    return make_det_value(q0.k, log_d);
}

DetValue det2_series(const OperatorMatrix& q0, double tol) {
    const Eigen::Index n = q0.entries.rows();
    if (n == 0) return make_det_value(q0.k, 0.0);
    const Eigen::BDCSVD<Eigen::MatrixXcd> svd(q0.entries);
    const double op = svd.singularValues()(0);
    const double hs2 = svd.singularValues().squaredNorm();
    if (!(op < 0.5)) throw Error("series seed needs ||Q0|| < 1/2, got " + std::to_string(op));
    // log det2(I+Q) = sum_{m>=2} (-1)^{m+1} tr Q^m / m
    Eigen::MatrixXcd power = q0.entries * q0.entries;
    cd sum = 0;
    for (int m = 2; m < 400; ++m) {
        sum += (m % 2 == 0 ? -1.0 : 1.0) * power.trace() / static_cast<double>(m);
        const double remainder = std::pow(op, m - 1) * hs2 / (m + 1);
        if (remainder < tol) break;
        power = power * q0.entries;
    }
    return make_det_value(q0.k, sum);
}

// ---- Nystrom engine -------------------------------------------------------

NystromEngine::NystromEngine(Potential pot, int resolution, bool eigen_route)
    : pot_(std::move(pot)), grid_(build_grid(pot_, resolution)), eigen_route_(eigen_route) {}

DetValue NystromEngine::evaluate(cd k) const {
    const OperatorMatrix q0 = assemble_q0(grid_, pot_, k);
    return eigen_route_ ? det2(q0) : det2_lu(q0);
}

DetValue NystromEngine::seed(cd k) const { return det2_series(assemble_q0(grid_, pot_, k)); }

cd log_derivative(const QuadratureGrid& grid, const Potential& pot, cd k) {
    const OperatorMatrix q = assemble_q(grid, pot, k);
    const OperatorMatrix qp = assemble_q0_prime(grid, pot, k);
    return -q.entries.cwiseProduct(qp.entries.transpose()).sum();
}

cd NystromEngine::log_derivative(cd k) const { return detscope::log_derivative(grid_, pot_, k); }

double NystromEngine::hs_norm(cd k) const { return assemble_q0(grid_, pot_, k).entries.norm(); }

std::string NystromEngine::fingerprint() const {
    std::ostringstream os;
    os << "nystrom;" << grid_.resolution << ';' << (eigen_route_ ? "eig" : "lu") << ';' << pot_.fingerprint();
    return os.str();
}

// ---- partial-wave engine ---------------------------------------------------

PartialWaveEngine::PartialWaveEngine(Potential pot, PartialWaveOptions opt) : pot_(std::move(pot)), opt_(opt) {
    if (!pot_.radial()) throw Error("partial-wave engine needs a radial potential");
}

DetValue PartialWaveEngine::evaluate(cd k) const {
    const PartialWaveSum s = partial_wave_log_det(pot_, k, opt_);
    DetValue v = make_det_value(k, s.log_d);
    if (s.min_pivot < 1e-14 && !pot_.is_zero()) {
        v.d = 0;
        v.rho = -std::numeric_limits<double>::infinity();
    }
    return v;
}

cd PartialWaveEngine::log_derivative(cd k) const {
    const PartialWaveSum s = partial_wave_log_det(pot_, k, opt_, true);
    if (s.min_pivot < 1e-13 && !pot_.is_zero()) throw SingularAtEigenvalue("D vanishes near k = " + fmt_k(k));
    return s.dlog_d;
}

double PartialWaveEngine::hs_norm(cd k) const {
    // For fixed-sign V, ||Q0(k)||_2^2 = Tr Q0(i Im k)^2.
    return std::sqrt(std::abs(radial_trq0_squared(pot_, cd(0, std::max(k.imag(), 0.0)))));
}

std::string PartialWaveEngine::fingerprint() const {
    std::ostringstream os;
    os << "pw;" << opt_.n_base << ',' << opt_.n_per_kr << ',' << opt_.n_max << ',' << opt_.l_extra << ','
       << opt_.l_per_kr << ',' << opt_.l_max << ',' << (opt_.variable_phase_channels ? opt_.vp_from_kr : 0.0) << ','
       << opt_.jost_real_axis << ';'
       << pot_.fingerprint();
    return os.str();
}

cd PartialWaveEngine::channel_log(int ell, cd k) const {
    if (pot_.is_zero()) return 0.0;
    return channel_terms(pot_, ell, k, collocation_order(pot_, k, opt_), false).log_det;
}

cd PartialWaveEngine::channel_log_derivative(int ell, cd k) const {
    if (pot_.is_zero()) return 0.0;
    return channel_terms(pot_, ell, k, collocation_order(pot_, k, opt_), true).dlog_det;
}

int PartialWaveEngine::channel_limit(double radius) const {
    const double R = pot_.r_eff;
    return static_cast<int>(std::ceil(1.5 * radius * R + R * std::sqrt(pot_.max_abs()))) + 6;
}

std::unique_ptr<DetEngine> make_engine(const Potential& pot, int resolution) {
    if (pot.radial()) return std::make_unique<PartialWaveEngine>(pot);
    return std::make_unique<NystromEngine>(pot, resolution, false);
}

double seed_height(const DetEngine& engine, double bound) {
    double hi = 1;
    while (engine.hs_norm(cd(0, hi)) >= bound) {
        hi *= 2;
        if (hi > 1e6) throw Error("no seed height found");
    }
    double lo = hi / 2;
    if (engine.hs_norm(cd(0, lo)) < bound) return lo;
    while (hi - lo > 0.05 * hi) {
        const double mid = (lo + hi) / 2;
        (engine.hs_norm(cd(0, mid)) < bound ? hi : lo) = mid;
    }
    return hi;
}

DetValue continue_from(const DetValue& from, cd to, const DetEngine& engine, const ContinuationOptions& opt) {
    // Recursive bisection of the segment until every step moves log D by less than max_jump.
    std::vector<std::pair<cd, DetValue>> stack;
    DetValue cur = from;
    cd target = to;
    DetValue at_target = engine.evaluate(to);
    while (true) {
        const double n = std::round((cur.log_d.imag() - at_target.log_d.imag()) / (2 * pi));
        const cd matched = at_target.log_d + 2.0 * pi * n * I;
        if (std::abs(matched - cur.log_d) <= opt.max_jump || at_target.d == 0.0) {
            DetValue next = at_target;
            next.log_d = matched;
            next.phi = matched.imag();
            next.branch_path = from.branch_path;
            cur = next;
            if (stack.empty()) return cur;
            target = stack.back().first;
            at_target = stack.back().second;
            stack.pop_back();
            continue;
        }
        if (std::abs(target - cur.k) < opt.min_step)
            throw BranchJumpDetected("log D jumps by " + std::to_string(std::abs(matched - cur.log_d)) +
                                     " between k = " + fmt_k(cur.k) + " and k = " + fmt_k(target));
        stack.emplace_back(target, at_target);
        target = (cur.k + target) / 2.0;
        at_target = engine.evaluate(target);
    }
}

std::vector<DetValue> continue_log(const std::vector<cd>& path, const DetEngine& engine, int path_id,
                                   const ContinuationOptions& opt) {
    std::vector<DetValue> out;
    if (path.empty()) return out;
    DetValue first = engine.seed(path.front());
    first.branch_path = path_id;
    out.push_back(first);
    for (std::size_t i = 1; i < path.size(); ++i) out.push_back(continue_from(out.back(), path[i], engine, opt));
    return out;
}

std::vector<cd> seed_segment(double tau0, double t, int samples) {
    std::vector<cd> pts;
    for (int i = 0; i <= samples; ++i) {
        const double s = static_cast<double>(i) / samples;
        pts.emplace_back(s * t, (1 - s) * tau0);
    }
    return pts;
}

// ---- Blaschke --------------------------------------------------------------

cd blaschke(const std::vector<double>& kappas, cd k) {
    cd b = 1;
    for (double kap : kappas) {
        if (std::abs(k + I * kap) < 1e-14) throw PoleHit("k = -i sqrt(lambda)");
        b *= (k - I * kap) / (k + I * kap);
    }
    return b;
}

cd log_blaschke(const std::vector<double>& kappas, cd k) {
    cd s = 0;
    for (double kap : kappas) {
        if (std::abs(k + I * kap) < 1e-14) throw PoleHit("k = -i sqrt(lambda)");
        if (k.imag() == 0.0)
            s += cd(0, k.real() == 0.0 ? -pi : -2 * std::atan(kap / k.real()));
        else
            s += std::log((k - I * kap) / (k + I * kap));
    }
    return s;
}

DetValue db_quotient(const DetValue& value, const BlaschkeData& data) {
    if (data.kappas.empty()) return value;
    DetValue out = value;
    out.log_d = value.log_d - log_blaschke(data.kappas, value.k);
    out.rho = out.log_d.real();
    out.phi = out.log_d.imag();
    out.d = value.d / blaschke(data.kappas, value.k);
    return out;
}

BlaschkeData beta_gamma(std::vector<double> kappas, const Moments& m) {
    std::sort(kappas.begin(), kappas.end(), std::greater<>());
    BlaschkeData b;
    b.kappas = kappas;
    b.n = static_cast<int>(kappas.size());
    for (int n : {-2, 0, 1, 2, 3, 4}) {
        double s = 0;
        for (double kap : kappas) s += std::pow(kap, n + 1);
        b.beta[n] = 2.0 / (n + 1) * s;
    }
    b.gamma[-1] = m.alpha_m1 + b.beta[-2];
    b.gamma[0] = m.alpha_0 - b.beta[0];
    b.gamma[1] = m.alpha_1 + b.beta[2];
    return b;
}

} // namespace detscope
