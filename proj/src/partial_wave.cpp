#include "detscope/partial_wave.hpp"

#include "detscope/discretize.hpp"
#include "detscope/errors.hpp"
#include "detscope/quadrature.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace detscope {

namespace {

constexpr double pi = std::numbers::pi;
const cd I(0, 1);

cd principal(cd z) { return {z.real(), std::remainder(z.imag(), 2 * pi)}; }

struct ChebCache {
    int n = -1;
    Chebyshev c;
};

const Chebyshev& cheb_cached(int n) {
    thread_local ChebCache cache;
    if (cache.n != n) {
        cache.c = chebyshev(n);
        cache.n = n;
    }
    return cache.c;
}

cd beta_derivative(int ell, cd k, double R) {
    if (std::abs(k) < 1e-3) {
        const double h = 1e-5;
        return (outgoing_log_derivative(ell, k + h, R) - outgoing_log_derivative(ell, k - h, R)) / (2 * h);
    }
    const cd b = outgoing_log_derivative(ell, k, R);
    const cd g = b / k;
    const cd z = k * R;
    return g + z * (static_cast<double>(ell) * (ell + 1) / (z * z) - 1.0 - g * g);
}

} // namespace

double core_radius(const Potential& pot) {
    switch (pot.kind) {
    case PotentialKind::gaussian_well: return pot.width * std::sqrt(std::log(1e6));
    default: return pot.r_eff;
    }
}

int collocation_order(const Potential& pot, cd k, const PartialWaveOptions& opt) {
    int n = opt.n_base + static_cast<int>(std::ceil(opt.n_per_kr * std::abs(k) * pot.r_eff));
    n = (n + 3) / 4 * 4;
    return std::min(n, opt.n_max);
}

int channel_count(const Potential& pot, cd k, const PartialWaveOptions& opt) {
    const int l = static_cast<int>(std::ceil(opt.l_per_kr * std::abs(k) * core_radius(pot))) + opt.l_extra;
    return std::min(l, opt.l_max);
}

CollocationBlock collocation_block(const Potential& pot, int ell, cd k, int n) {
    if (!pot.radial()) throw Error("partial-wave blocks need a radial potential");
    note_assembly();
    const double R = pot.r_eff;
    const Chebyshev& c = cheb_cached(n);
    CollocationBlock blk;
    blk.r.resize(n);
    for (int j = 1; j <= n; ++j) blk.r(j - 1) = R * (1 - c.x(j)) / 2;
    const Eigen::MatrixXd d1 = (-2.0 / R) * c.d;
    const Eigen::MatrixXd d2 = d1 * d1;
    blk.beta = outgoing_log_derivative(ell, k, R);
    blk.a.resize(n, n);
    const double centrifugal = static_cast<double>(ell) * (ell + 1);
    for (int i = 1; i < n; ++i) {
        for (int j = 1; j <= n; ++j) blk.a(i - 1, j - 1) = -d2(i, j);
        blk.a(i - 1, i - 1) += centrifugal / (blk.r(i - 1) * blk.r(i - 1)) - k * k;
    }
    for (int j = 1; j <= n; ++j) blk.a(n - 1, j - 1) = d1(n, j);
    blk.a(n - 1, n - 1) -= blk.beta;
    Eigen::VectorXd v(n);
    for (int i = 0; i < n - 1; ++i) v(i) = pot.profile(blk.r(i));
    v(n - 1) = 0;
    blk.m = blk.a.partialPivLu().inverse() * v.asDiagonal();
    return blk;
}

ChannelTerms channel_terms(const Potential& pot, int ell, cd k, int n, bool derivative) {
    const CollocationBlock blk = collocation_block(pot, ell, k, n);
    const Eigen::MatrixXcd& m = blk.m;
    ChannelTerms t;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(Eigen::MatrixXcd::Identity(n, n) + m);
    const auto& u = lu.matrixLU();
    t.min_pivot = std::abs(u(0, 0));
    for (int i = 0; i < n; ++i) {
        t.log_det += std::log(u(i, i));
        t.min_pivot = std::min(t.min_pivot, std::abs(u(i, i)));
    }
    if (lu.permutationP().determinant() < 0) t.log_det += I * pi;
    t.log_det = principal(t.log_det);
    t.trace = m.trace();
    t.trace2 = m.cwiseProduct(m.transpose()).sum();
    t.log_det3 = principal(t.log_det - t.trace + 0.5 * t.trace2);
    if (derivative) {
        const double R = pot.r_eff;
        const cd bp = beta_derivative(ell, k, R);
        Eigen::MatrixXcd am = (-2.0 * k) * m;
        am.row(n - 1) = -bp * m.row(n - 1);
        const Eigen::MatrixXcd dm = -(blk.a.partialPivLu().solve(am));
        t.dlog_det = lu.solve(dm).trace();
        t.dlog_det3 = t.dlog_det - dm.trace() + m.cwiseProduct(dm.transpose()).sum();
    }
    return t;
}

double hurwitz_tail(double s, double a) {
    // Euler-Maclaurin about a (a >= 8 keeps the remainder far below 1e-16 relative).
    const double as = std::pow(a, -s);
    return a * as / (s - 1) + as / 2 + s * as / (12 * a) - s * (s + 1) * (s + 2) * as / (720 * a * a * a) +
           s * (s + 1) * (s + 2) * (s + 3) * (s + 4) * as / (30240 * std::pow(a, 5));
}

TailFit fit_power_tail(const std::vector<cd>& terms, int first_power) {
    TailFit fit;
    fit.power = first_power;
    const int L = static_cast<int>(terms.size()) - 1;
    if (L < 12) return fit;
    auto tail_with = [&](int d) {
        Eigen::Matrix3cd a;
        Eigen::Vector3cd b;
        for (int row = 0; row < 3; ++row) {
            const int l = L - row * d;
            const double x = l + 0.5;
            for (int q = 0; q < 3; ++q) a(row, q) = std::pow(x, -(first_power + q));
            b(row) = terms[l];
        }
        const Eigen::Vector3cd c = a.fullPivLu().solve(b);
        cd sum = 0;
        for (int q = 0; q < 3; ++q) sum += c(q) * hurwitz_tail(first_power + q, L + 1.5);
        return sum;
    };
    const int d = std::max(2, L / 8);
    fit.sum = tail_with(d);
    fit.spread = tail_with(std::max(1, d / 2)) - fit.sum;
    return fit;
}

namespace {

// Inner and outer panelling for the radial double integral.
double panel_length(cd k) { return std::min(0.25, 0.6 / (std::abs(k) + 0.5)); }

struct Rule {
    Eigen::VectorXd x, w;
};

const Rule& gl12() {
    static const Rule r = [] {
        auto [x, w] = gauss_legendre<double>(12);
        return Rule{x, w};
    }();
    return r;
}

template <typename F> void panels(double a, double b, double h, F&& f) {
    if (b <= a) return;
    const int np = std::max(1, static_cast<int>(std::ceil((b - a) / h)));
    const double len = (b - a) / np;
    const Rule& g = gl12();
    for (int p = 0; p < np; ++p) {
        const double lo = a + p * len;
        for (int i = 0; i < g.x.size(); ++i) f(lo + (g.x(i) + 1) * len / 2, g.w(i) * len / 2);
    }
}

// int_0^h f(s) ds for f with a log singularity at 0: geometric panels toward 0.
template <typename F> void graded(double h, F&& f) {
    double hi = h;
    for (int m = 0; m < 26; ++m) {
        const double lo = hi * 0.25;
        panels(lo, hi, hi, f);
        hi = lo;
    }
}

} // namespace

cd radial_trq0_squared(const Potential& pot, cd k, double) {
    if (pot.is_zero()) return 0.0;
    const double R = pot.r_eff;
    const double h = panel_length(k);
    const double decay = k.imag() > 0 ? 20.0 / k.imag() : std::numeric_limits<double>::infinity();
    cd outer = 0;
    panels(0.0, R, std::min(h, R / 8), [&](double r, double wr) {
        const double vr = pot.profile(r);
        if (vr == 0) return;
        const double h0 = std::min(r, h);
        cd inner = 0;
        // near the diagonal: E(s) = -log s + S(s) with S smooth
        graded(h0, [&](double s, double ws) {
            const double rp = r - s;
            inner += ws * pot.profile(rp) * rp * -std::log(s);
        });
        panels(0.0, h0, h0, [&](double s, double ws) {
            const double rp = r - s;
            const cd smooth = oscillatory_log_kernel(k, s, 2 * r - s) + std::log(s);
            inner += ws * pot.profile(rp) * rp * smooth;
        });
        panels(h0, std::min(r, h0 + decay), h, [&](double s, double ws) {
            const double rp = r - s;
            inner += ws * pot.profile(rp) * rp * oscillatory_log_kernel(k, s, 2 * r - s);
        });
        outer += wr * vr * r * inner;
    });
    return outer;
}

cd radial_trq0_squared_derivative(const Potential& pot, cd k) {
    if (pot.is_zero()) return 0.0;
    const double R = pot.r_eff;
    const double h = panel_length(k);
    const double decay = k.imag() > 0 ? 20.0 / k.imag() : std::numeric_limits<double>::infinity();
    auto dkernel = [&](double a, double b) -> cd {
        // int_a^b 2i e^{2iks} ds
        const cd z = 2.0 * I * k * (b - a);
        cd frac; // (e^z - 1)/z
        if (std::abs(z) < 1e-4)
            frac = 1.0 + z / 2.0 + z * z / 6.0;
        else
            frac = (std::exp(z) - 1.0) / z;
        return 2.0 * I * std::exp(2.0 * I * k * a) * (b - a) * frac;
    };
    cd outer = 0;
    panels(0.0, R, std::min(h, R / 8), [&](double r, double wr) {
        const double vr = pot.profile(r);
        if (vr == 0) return;
        cd inner = 0;
        panels(0.0, std::min(r, decay), h, [&](double s, double ws) {
            const double rp = r - s;
            inner += ws * pot.profile(rp) * rp * dkernel(s, 2 * r - s);
        });
        outer += wr * vr * r * inner;
    });
    return outer;
}

int variable_phase_start(const Potential& pot, cd k, int channels, const PartialWaveOptions& opt) {
    // the equations divide by k; at small |k| collocation is cheap and accurate anyway
    if (!opt.variable_phase_channels || !pot.smooth || k.imag() < 0 || std::abs(k) < 1) return -1;
    const int l = static_cast<int>(std::ceil(opt.vp_from_kr * std::abs(k) * core_radius(pot)));
    return l <= channels ? l : -1;
}

int variable_phase_steps(int L) { return 2000 + 16 * L; }

cd jost_det3(const Potential& pot, int ell, double k) {
    if (k == 0) throw Error("Jost evaluation needs k != 0");
    namespace ode = boost::numeric::odeint;
    using State = std::array<double, 7>;
    const double R = pot.r_eff;
    // start where |yhat_l| ~ 1e150, so yhat^2 B cannot overflow
    double lg = 0;
    for (int j = 3; j <= 2 * ell - 1; j += 2) lg += std::log(static_cast<double>(j));
    const double z0 = ell == 0 ? 0.0 : std::exp((lg - 150 * std::log(10.0)) / ell);
    const double kk = std::abs(k), r0 = std::max(z0 / kk, 1e-10 * R);
    // (A - 1, B, tr Q, C = int v jhat^2, tr Q^2)
    auto rhs = [&](const State& s, State& d, double r) {
        const double z = kk * r;
        const double jh = z * std::sph_bessel(ell, z), yh = z * std::sph_neumann(ell, z);
        const double v = pot.profile(r);
        const double u = (1 + s[0]) * jh + s[1] * yh;
        d[0] = -yh * v * u / kk;
        d[1] = jh * v * u / kk;
        d[2] = -v * yh * jh / kk;
        d[3] = v * jh * jh / kk;
        d[4] = v * jh * jh;
        d[5] = -2 / (kk * kk) * v * (jh * jh - yh * yh) * s[4];
        d[6] = -2 / (kk * kk) * v * 2 * jh * yh * s[4];
    };
    State s{};
    ode::integrate_adaptive(ode::make_controlled(1e-18, 1e-15, ode::runge_kutta_fehlberg78<State>()), rhs, s, r0, R,
                            1e-3 * R);
    const cd t1(s[2], s[3]), t2(s[5], s[6]);
    const cd det3 = std::log(cd(1 + s[0], s[1])) - t1 + 0.5 * t2;
    // det3 at -k is the conjugate
    return k > 0 ? det3 : std::conj(det3);
}

PartialWaveSum partial_wave_log_det(const Potential& pot, cd k, const PartialWaveOptions& opt, bool derivative) {
    PartialWaveSum out;
    if (pot.is_zero()) return out;
    out.order = collocation_order(pot, k, opt);
    out.channels = channel_count(pot, k, opt);
    out.vp_from = variable_phase_start(pot, k, out.channels, opt);
    const int n_colloc = out.vp_from < 0 ? out.channels + 1 : out.vp_from;
    Eigen::VectorXcd vp, dvp;
    if (out.vp_from >= 0) {
        const int steps = variable_phase_steps(out.channels);
        vp = variable_phase_det3(pot, k, out.channels, steps);
        if (derivative) {
            // real shifts keep Im k >= 0
            const double dk = 1e-3 * std::max(1.0, std::abs(k));
            dvp = (variable_phase_det3(pot, k + dk, out.channels, steps) - variable_phase_det3(pot, k - dk, out.channels, steps)) /
                  (2 * dk);
        }
    }
    const bool jost = opt.jost_real_axis && out.vp_from >= 0 && k.imag() == 0;
    std::vector<cd> terms, dterms;
    out.min_pivot = std::numeric_limits<double>::infinity();
    for (int l = 0; l <= out.channels; ++l) {
        const double g = 2.0 * l + 1;
        if (l < n_colloc) {
            // collocation still supplies the derivative and the pivot diagnostic
            if (derivative || !jost) {
                const ChannelTerms t = channel_terms(pot, l, k, out.order, derivative);
                terms.push_back(g * t.log_det3);
                if (derivative) dterms.push_back(g * t.dlog_det3);
                out.min_pivot = std::min(out.min_pivot, t.min_pivot);
            } else {
                terms.emplace_back();
            }
            if (jost) terms.back() = g * jost_det3(pot, l, k.real());
        } else {
            terms.push_back(g * vp(l));
            if (derivative) dterms.push_back(g * dvp(l));
        }
        out.det3_sum += terms.back();
        if (derivative) out.dlog_d += dterms.back();
    }
    out.det3_tail = fit_power_tail(terms, 4).sum;
    out.t2 = radial_trq0_squared(pot, k);
    out.log_d = out.det3_sum + out.det3_tail - 0.5 * out.t2;
    if (derivative) out.dlog_d += fit_power_tail(dterms, 4).sum - 0.5 * radial_trq0_squared_derivative(pot, k);
    return out;
}

MatrixTraceSquared partial_wave_trace_squared(const Potential& pot, cd k, const PartialWaveOptions& opt) {
    MatrixTraceSquared out;
    if (pot.is_zero()) return out;
    const int n = collocation_order(pot, k, opt);
    out.channels = channel_count(pot, k, opt);
    std::vector<cd> terms;
    for (int l = 0; l <= out.channels; ++l) {
        const Eigen::MatrixXcd m = collocation_block(pot, l, k, n).m;
        terms.push_back((2.0 * l + 1) * m.cwiseProduct(m.transpose()).sum());
        out.value += terms.back();
    }
    out.tail = fit_power_tail(terms, 2).sum;
    out.value += out.tail;
    return out;
}

Eigen::VectorXcd variable_phase_det3(const Potential& pot, cd k, int L, int steps) {
    // on the real axis the caller keeps l large enough that jhat_l(kr) has no zero where V lives
    if (k.imag() < 0) throw Error("variable-phase evaluation needs Im k >= 0");
    const double R = pot.r_eff;
    const double r_min = 1e-4 * std::min(1.0, R), r_sw = std::min(0.5, R / 4);
    std::vector<double> grid;
    const int half = steps / 2;
    for (int i = 0; i < half; ++i) grid.push_back(r_min * std::pow(r_sw / r_min, static_cast<double>(i) / half));
    for (int i = 0; i <= half; ++i) grid.push_back(r_sw + (R - r_sw) * i / half);

    Eigen::VectorXcd w = Eigen::VectorXcd::Zero(L + 1), z2 = w, acc = w;
    const cd ik = I * k;
    struct Deriv {
        Eigen::VectorXcd dw, dz, da;
    };
    auto rhs = [&](double r, const Eigen::VectorXcd& ww, const Eigen::VectorXcd& zz) {
        const Eigen::VectorXcd p = riccati_products(L, k * r);
        const double v = pot.profile(r);
        Deriv d;
        d.dw.resize(L + 1);
        d.dz.resize(L + 1);
        d.da.resize(L + 1);
        for (int l = 0; l <= L; ++l) {
            const cd vp = v / ik * p(l);
            const cd damp = ik / p(l);
            d.dw(l) = vp * (1.0 + ww(l)) * (1.0 + ww(l)) + damp * ww(l);
            d.dz(l) = vp * (2.0 * ww(l) + ww(l) * ww(l)) + damp * zz(l);
            d.da(l) = I / k * v * p(l) * zz(l);
        }
        return d;
    };
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double r = grid[i], h = grid[i + 1] - grid[i];
        const Deriv k1 = rhs(r, w, z2);
        const Deriv k2 = rhs(r + h / 2, w + h / 2 * k1.dw, z2 + h / 2 * k1.dz);
        const Deriv k3 = rhs(r + h / 2, w + h / 2 * k2.dw, z2 + h / 2 * k2.dz);
        const Deriv k4 = rhs(r + h, w + h * k3.dw, z2 + h * k3.dz);
        w += h / 6 * (k1.dw + 2 * k2.dw + 2 * k3.dw + k4.dw);
        z2 += h / 6 * (k1.dz + 2 * k2.dz + 2 * k3.dz + k4.dz);
        acc += h / 6 * (k1.da + 2 * k2.da + 2 * k3.da + k4.da);
    }
    return acc;
}

cd variable_phase_log_det(const Potential& pot, cd k, int L) {
    if (pot.is_zero()) return 0.0;
    if (!(k.imag() > 0)) throw Error("variable-phase log D needs Im k > 0");
    // RK4 stability near r_min needs (2l+1) h/r bounded, hence steps growing with L
    const Eigen::VectorXcd det3 = variable_phase_det3(pot, k, L, 4000 + 16 * L);
    std::vector<cd> terms;
    cd sum = 0;
    for (int l = 0; l <= L; ++l) {
        terms.push_back((2.0 * l + 1) * det3(l));
        sum += terms.back();
    }
    return sum + fit_power_tail(terms, 4).sum - 0.5 * radial_trq0_squared(pot, k);
}

} // namespace detscope
