#include "detscope/traceform.hpp"

#include "detscope/errors.hpp"
#include "detscope/quadrature.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <thread>

namespace detscope {

namespace {

constexpr double pi = std::numbers::pi;

std::string row_key(const DetEngine& engine, int side, double t) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "|scan|%+d|%.17g", side, t);
    return engine.fingerprint() + buf;
}

// One side of the scan: nodes j*h, j = 0..m, continued from i*tau0 through +-join.
std::vector<DetValue> scan_side(const DetEngine& engine, int side, int m, double h, const ScanOptions& opt,
                                ValueStore* store) {
    std::vector<DetValue> out(m + 1);
    const int j1 = std::clamp(static_cast<int>(std::lround(opt.join / h)), 0, m);
    std::optional<DetValue> cur;
    auto node = [&](int j) {
        const double t = side * j * h;
        if (store) {
            if (auto hit = store->get(row_key(engine, side, t))) {
                cur = *hit;
                out[j] = *hit;
                return;
            }
        }
        if (!cur) {
            const double tau0 = seed_height(engine);
            cur = continue_log(seed_segment(tau0, t, opt.seed_samples), engine, side).back();
        } else {
            cur = continue_from(*cur, cd(t, 0), engine);
        }
        cur->branch_path = side;
        out[j] = *cur;
        if (store) store->put(row_key(engine, side, t), *cur);
    };
    for (int j = j1; j <= m; ++j) node(j);
    cur = out[j1];
    for (int j = j1 - 1; j >= 0; --j) node(j);
    return out;
}

double simpson(const std::vector<double>& f, double h) {
    const int m = static_cast<int>(f.size()) - 1;
    if (m < 2) return m == 1 ? h * (f[0] + f[1]) / 2 : 0.0;
    double s = f[0] + f[m];
    for (int j = 1; j < m; ++j) s += (j % 2 ? 4 : 2) * f[j];
    return s * h / 3;
}

// Least-squares fit of sum c_p t^-p on the nodes with t in [lo, hi]; returns the tail integral beyond hi.
double fitted_tail(const std::vector<double>& t, const std::vector<double>& f, const std::vector<int>& powers, double lo,
                   double hi) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= lo - 1e-12 && t[i] <= hi + 1e-12) idx.push_back(static_cast<int>(i));
    if (idx.size() < powers.size() + 1) throw TailNotConverged("too few nodes in the tail window");
    Eigen::MatrixXd a(idx.size(), powers.size());
    Eigen::VectorXd y(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        // scale columns by hi^p so the fit is well conditioned
        for (std::size_t c = 0; c < powers.size(); ++c) a(r, c) = std::pow(hi / t[idx[r]], powers[c]);
        y(r) = f[idx[r]];
    }
    const Eigen::VectorXd c = a.colPivHouseholderQr().solve(y);
    double tail = 0;
    for (std::size_t k = 0; k < powers.size(); ++k) tail += c(k) * hi / (powers[k] - 1);
    return tail;
}

struct HalfLine {
    double integral = 0;
    double tail = 0;
    double tail_spread = 0;
    double abs_integral = 0;
};

HalfLine half_line(const std::vector<double>& t, const std::vector<double>& f, double h, const std::vector<int>& powers) {
    HalfLine r;
    r.integral = simpson(f, h);
    std::vector<double> af(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) af[i] = std::abs(f[i]);
    r.abs_integral = simpson(af, h);
    if (powers.empty()) return r;
    const double T = t.back();
    const double wide = fitted_tail(t, f, powers, T / 2, T);
    const double narrow = fitted_tail(t, f, powers, 0.75 * T, T);
    r.tail = wide;
    r.tail_spread = std::abs(wide - narrow);
    return r;
}

// Value at 0 of an even function from samples at h, 2h, 3h (quadratic in t^2).
double even_extrapolate(double g1, double g2, double g3) { return 1.5 * g1 - 0.6 * g2 + 0.1 * g3; }

template <typename F>
void parallel_for(int n, int workers, F&& body) {
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errs(n);
    auto work = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                body(i);
            } catch (...) {
                errs[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int i = 1; i < std::clamp(workers, 1, std::max(n, 1)); ++i) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

} // namespace

cd scattering_det(const DetValue& value, double alpha_m1) {
    const double t = value.k.real();
    return std::exp(std::conj(value.log_d) - value.log_d - cd(0, 2 * t * alpha_m1));
}

double scattering_phase(const DetValue& value, double alpha_m1) { return value.k.real() * alpha_m1 + value.phi; }

RealAxisScan real_axis_scan(const DetEngine& engine, const std::vector<double>& kappas, double alpha_m1,
                            const ScanOptions& opt, ValueStore* store) {
    RealAxisScan scan;
    int m = std::max(2, static_cast<int>(std::ceil(opt.t_max / opt.step - 1e-9)));
    if (m % 2) ++m;
    const double h = opt.t_max / m;
    scan.step = h;
    scan.t_max = opt.t_max;
    scan.alpha_m1 = alpha_m1;
    scan.kappas = kappas;
    scan.half_nodes = m + 1;
    std::vector<DetValue> sides[2];
    parallel_for(2, std::min(opt.workers, 2), [&](int s) { sides[s] = scan_side(engine, s == 0 ? -1 : +1, m, h, opt, store); });
    const int n = static_cast<int>(kappas.size());
    scan.rows.resize(2 * (m + 1));
    for (int j = 0; j <= m; ++j) {
        for (int s = 0; s < 2; ++s) {
            const int side = s == 0 ? -1 : +1;
            ScanRow& row = s == 0 ? scan.rows[m - j] : scan.rows[m + 1 + j];
            row.t = side * j * h;
            row.side = side;
            row.value = sides[s][j];
            row.phi_sc = scattering_phase(row.value, alpha_m1);
            // arg B at the threshold is -pi N from the right and +pi N from the left
            const cd lb = j == 0 ? cd(0, -side * pi * n) : log_blaschke(kappas, cd(row.t, 0));
            row.phi_b = row.value.phi - lb.imag();
            row.rho_b = row.value.rho - lb.real();
        }
    }
    // phi_B is smooth through 0; differentiate on the merged grid
    std::vector<double> t, pb;
    for (int j = m; j >= 1; --j) {
        t.push_back(scan.minus(j).t);
        pb.push_back(scan.minus(j).phi_b);
    }
    for (int j = 0; j <= m; ++j) {
        t.push_back(scan.plus(j).t);
        pb.push_back(scan.plus(j).phi_b);
    }
    const int g = static_cast<int>(pb.size());
    std::vector<double> d(g);
    for (int i = 0; i < g; ++i) {
        if (i >= 2 && i + 2 < g)
            d[i] = (-pb[i + 2] + 8 * pb[i + 1] - 8 * pb[i - 1] + pb[i - 2]) / (12 * h);
        else if (i < 2)
            d[i] = (-3 * pb[i] + 4 * pb[i + 1] - pb[i + 2]) / (2 * h);
        else
            d[i] = (3 * pb[i] - 4 * pb[i - 1] + pb[i - 2]) / (2 * h);
    }
    for (int j = 1; j <= m; ++j) scan.rows[m - j].dphi_b = d[m - j];
    for (int j = 0; j <= m; ++j) scan.rows[m + 1 + j].dphi_b = d[m + j];
    scan.rows[m].dphi_b = scan.rows[m + 1].dphi_b;
    return scan;
}

const TraceRecord* TraceReport::find(const std::string& name) const {
    for (const auto& r : records)
        if (r.name == name) return &r;
    return nullptr;
}

double threshold_phase_slope(const RealAxisScan& scan) {
    const double p0 = scan.plus(0).value.phi;
    double g[3];
    for (int j = 1; j <= 3; ++j) g[j - 1] = (scan.plus(j).value.phi - p0) / scan.plus(j).t;
    return scan.alpha_m1 + even_extrapolate(g[0], g[1], g[2]);
}

TraceReport trace_formula_suite(const RealAxisScan& scan, const BlaschkeData& b, const Moments& mo, const TraceOptions& opt) {
    TraceReport rep;
    const int m = scan.half_nodes - 1;
    const double h = scan.step;
    rep.bound_count = b.n;
    rep.levinson_phi = scan.plus(0).phi_sc;
    rep.log_abs_d0 = scan.plus(0).value.rho;
    for (const auto& r : scan.rows) rep.unitarity_defect = std::max(rep.unitarity_defect, std::abs(std::abs(scattering_det(r.value, scan.alpha_m1)) - 1));
    for (int j = 1; j <= m; ++j) {
        rep.oddness_defect = std::max(rep.oddness_defect, std::abs(scan.plus(j).value.phi + scan.minus(j).value.phi));
        rep.evenness_defect = std::max(rep.evenness_defect, std::abs(scan.plus(j).value.rho - scan.minus(j).value.rho));
    }
    const double a0 = mo.alpha_0, a1 = mo.alpha_1;
    const double rho0 = scan.plus(0).value.rho;

    struct Formula {
        std::string name;
        double rhs;
        std::vector<int> powers;
        double (*integrand)(double t, const DetValue& v, double a0, double a1, double rho0);
        bool singular_at_zero;
    };
    const std::vector<Formula> formulas = {
        {"phase_first_moment", b.beta.at(1), {2, 4},
         [](double t, const DetValue& v, double a0, double, double) { return t * v.phi + a0; }, false},
        {"phase_third_moment", -b.beta.at(3), {2, 4},
         [](double t, const DetValue& v, double a0, double a1, double) { return t * t * t * v.phi + a0 * t * t + a1; }, false},
        {"log_modulus", -b.gamma.at(0), {4, 6},
         [](double, const DetValue& v, double, double, double) { return v.rho; }, false},
        {"log_modulus_second_moment", -b.gamma.at(1), {2, 4},
         [](double t, const DetValue& v, double, double, double) { return t * t * v.rho; }, false},
        {"log_modulus_threshold", b.gamma.at(-1), {2, 4, 6},
         [](double t, const DetValue& v, double, double, double rho0) { return (v.rho - rho0) / (t * t); }, true},
    };
    for (const Formula& fm : formulas) {
        double lhs = 0, tail = 0, spread = 0, absint = 0;
        for (int side : {-1, +1}) {
            std::vector<double> t(m + 1), f(m + 1);
            for (int j = 0; j <= m; ++j) {
                const ScanRow& r = side > 0 ? scan.plus(j) : scan.minus(j);
                t[j] = j * h;
                f[j] = j == 0 && fm.singular_at_zero ? 0.0 : fm.integrand(r.t, r.value, a0, a1, rho0);
            }
            if (fm.singular_at_zero) f[0] = even_extrapolate(f[1], f[2], f[3]);
            const HalfLine hl = half_line(t, f, h, fm.powers);
            lhs += hl.integral + hl.tail;
            tail += hl.tail;
            spread += hl.tail_spread;
            absint += hl.abs_integral;
        }
        TraceRecord rec;
        rec.name = fm.name;
        rec.lhs = lhs / pi;
        rec.rhs = fm.rhs;
        if (fm.name == "log_modulus_threshold") rec.lhs += threshold_phase_slope(scan);
        rec.tail_estimate = tail / pi;
        rec.abs_err = std::abs(rec.lhs - rec.rhs);
        // when the right side vanishes the residual is measured against the size of the integrand
        const double scale = std::max(std::abs(rec.rhs), absint / pi);
        rec.rel_err = scale > 0 ? rec.abs_err / scale : 0.0;
        if (scale > 0 && spread / pi > opt.tail_tolerance * scale) {
            if (opt.throw_on_tail) throw TailNotConverged(fm.name + ": tail fits disagree by " + std::to_string(spread / pi));
            rec.tail_converged = false;
        }
        rep.records.push_back(rec);
    }
    TraceRecord lev;
    lev.name = "levinson";
    lev.lhs = rep.levinson_phi;
    lev.rhs = -pi * b.n;
    lev.abs_err = std::abs(lev.lhs - lev.rhs);
    lev.rel_err = b.n ? lev.abs_err / (pi * b.n) : lev.abs_err;
    rep.records.push_back(lev);
    return rep;
}

HilbertRecord hilbert_identity(const RealAxisScan& scan) {
    HilbertRecord rec;
    const int m = scan.half_nodes - 1;
    const double h = scan.step;
    double lhs = 0, tail = 0;
    for (int side : {-1, +1}) {
        std::vector<double> t(m + 1), f(m + 1);
        for (int j = 1; j <= m; ++j) {
            const ScanRow& r = side > 0 ? scan.plus(j) : scan.minus(j);
            t[j] = j * h;
            f[j] = r.phi_b / r.t;
        }
        f[0] = even_extrapolate(f[1], f[2], f[3]);
        const HalfLine hl = half_line(t, f, h, {2, 4});
        lhs += hl.integral + hl.tail;
        tail += hl.tail;
    }
    rec.lhs = lhs / pi;
    rec.tail_estimate = tail / pi;
    rec.rhs = scan.plus(0).value.rho;
    rec.abs_err = std::abs(rec.lhs - rec.rhs);
    rec.rel_err = rec.rhs != 0 ? rec.abs_err / std::abs(rec.rhs) : rec.abs_err;
    return rec;
}

DirichletRecord dirichlet_identity(const DetEngine& engine, const RealAxisScan& scan, const BlaschkeData& b,
                                   const Moments& mo, const DirichletOptions& opt) {
    DirichletRecord rec;
    const int m = scan.half_nodes - 1;
    const double h = scan.step;
    double min_d = 0;
    for (const auto& r : scan.rows) min_d = std::min(min_d, r.dphi_b);
    rec.m_b = -min_d;
    const double gamma0 = b.gamma.at(0);
    rec.rhs = rec.m_b * gamma0;
    double s0 = 0, bnd = 0;
    for (int side : {-1, +1}) {
        std::vector<double> fs(m + 1), fb(m + 1);
        for (int j = 0; j <= m; ++j) {
            const ScanRow& r = side > 0 ? scan.plus(j) : scan.minus(j);
            fs[j] = r.value.rho * (rec.m_b + r.dphi_b);
            fb[j] = r.value.rho * r.dphi_b;
        }
        s0 += simpson(fs, h);
        bnd += simpson(fb, h);
    }
    rec.s0 = -s0 / pi;
    rec.lhs_boundary = bnd / pi;
    if (engine.potential().is_zero()) return rec;

    // quarter disc (the integrand is mirror symmetric), geometric radial panels
    const double T = scan.t_max;
    std::vector<double> edges = {0};
    for (double e = 0.5; e < T; e *= 2) edges.push_back(e);
    edges.push_back(T);
    std::vector<double> rr, wr;
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const auto [x, w] = gauss_legendre(opt.radial_order, edges[p], edges[p + 1]);
        for (int i = 0; i < x.size(); ++i) {
            rr.push_back(x(i));
            wr.push_back(w(i));
        }
    }
    const auto [th, wth] = gauss_legendre(opt.angular_order, 0.0, pi / 2);
    const int nr = static_cast<int>(rr.size()), na = static_cast<int>(th.size());
    std::vector<double> val(nr * na);
    parallel_for(nr * na, opt.workers, [&](int idx) {
        const int i = idx / na, a = idx % na;
        const cd k = std::polar(rr[i], th(a));
        cd bb = 0;
        for (double kap : b.kappas) bb += cd(0, 2 * kap) / (k * k + kap * kap);
        val[idx] = std::norm(engine.log_derivative(k) - bb);
    });
    double area = 0;
    for (int i = 0; i < nr; ++i)
        for (int a = 0; a < na; ++a) area += wr[i] * wth(a) * rr[i] * val[i * na + a];
    area *= 2;
    rec.tail_estimate = gamma0 * gamma0 / (2 * T * T);
    rec.lhs_area = area / pi + rec.tail_estimate;
    const double scale = std::max(std::abs(rec.rhs), std::abs(rec.lhs_area));
    rec.rel_err = scale > 0 ? std::abs(rec.lhs_area + rec.s0 - rec.rhs) / scale : 0.0;
    (void)mo;
    return rec;
}

KreinRecord krein_trace(const Bump& f, const RealAxisScan& scan, const std::vector<Zero>& zeros, const HadamardData& had,
                        const Moments& mo, const std::vector<double>& bound_lambdas) {
    KreinRecord rec;
    double bound = 0;
    for (double lam : bound_lambdas) bound += f(-lam);
    const int n = static_cast<int>(bound_lambdas.size());
    // ssf side: trapezoid on the scan (the integrand vanishes to all orders at the ends of its support)
    double s = 0;
    for (int j = 1; j < scan.half_nodes; ++j) {
        const ScanRow& r = scan.plus(j);
        s += r.phi_sc * f.derivative(r.t * r.t) * 2 * r.t;
    }
    rec.ssf_side = bound - n * f(0) + s * scan.step / pi;
    // resonance side: Gauss-Legendre over the support in t
    const double tlo = std::sqrt(std::max(0.0, f.lo())), thi = std::sqrt(std::max(0.0, f.hi()));
    double r = 0;
    if (thi > tlo) {
        const auto [x, w] = composite_gauss_legendre(8, 24, tlo, thi);
        for (int i = 0; i < x.size(); ++i) {
            const double t = x(i);
            r += w(i) * f(t * t) * (mo.alpha_m1 + breit_wigner_phi_prime(t, had, zeros));
        }
    }
    rec.resonance_side = bound - r / pi;
    return rec;
}

} // namespace detscope
