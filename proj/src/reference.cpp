#include "detscope/reference.hpp"

#include "detscope/errors.hpp"
#include "detscope/partial_wave.hpp"
#include "detscope/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace detscope {

namespace {

constexpr double pi = std::numbers::pi;

// Log-derivative of the decaying exterior solution e^{-x} sum_j c_j x^{-j}, x = kappa r.
double decaying_log_derivative(int ell, double kappa, double r) {
    const double x = kappa * r;
    double s = 0, ds = 0, c = 1;
    for (int j = 0; j <= ell; ++j) {
        if (j > 0) c *= double(ell + j) * (ell - j + 1) / (2.0 * j);
        s += c * std::pow(x, -j);
        ds += -j * c * std::pow(x, -j - 1);
    }
    return kappa * (ds / s - 1);
}

struct Shot {
    double u = 0, du = 0;
};

// Outward RK4 from r^{l+1}; geometric steps near 0, then uniform steps of `h`. Rescaled as it goes.
Shot shoot(const RadialProblem& p, double lambda, double h) {
    const double R = p.r_max;
    const double ll = p.ell * (p.ell + 1.0);
    auto q = [&](double r) { return ll / (r * r) + p.v(std::min(r, R * (1 - 1e-13))) + lambda; };
    auto step = [&](double r, double dr, double& u, double& du) {
        const double k1u = du, k1d = q(r) * u;
        const double q2 = q(r + dr / 2), q4 = q(r + dr);
        const double k2u = du + dr / 2 * k1d, k2d = q2 * (u + dr / 2 * k1u);
        const double k3u = du + dr / 2 * k2d, k3d = q2 * (u + dr / 2 * k2u);
        const double k4u = du + dr * k3d, k4d = q4 * (u + dr * k3u);
        u += dr / 6 * (k1u + 2 * k2u + 2 * k3u + k4u);
        du += dr / 6 * (k1d + 2 * k2d + 2 * k3d + k4d);
        const double s = std::abs(u) + std::abs(du);
        if (s > 1e100) {
            u /= s;
            du /= s;
        }
    };
    const int n_uniform = std::max(1, int(std::ceil(R / h)));
    const double hu = R / n_uniform;
    const double r_switch = std::min(hu * 20, R / 2);
    double r = std::min(1e-6, r_switch / 10);
    double u = std::pow(r, p.ell + 1), du = (p.ell + 1) * std::pow(r, p.ell);
    const double s0 = std::abs(u) + std::abs(du);
    u /= s0;
    du /= s0;
    while (r < r_switch) {
        const double dr = std::min(0.02 * r, r_switch - r);
        step(r, dr, u, du);
        r += dr;
    }
    // uniform grid that ends exactly on R
    const int first = int(std::ceil(r / hu - 1e-9));
    if (first * hu > r) {
        step(r, first * hu - r, u, du);
        r = first * hu;
    }
    for (int i = first; i < n_uniform; ++i) {
        step(i * hu, hu, u, du);
    }
    return {u, du};
}

double mismatch(const RadialProblem& p, double lambda, double h) {
    const Shot s = shoot(p, lambda, h);
    const double l = decaying_log_derivative(p.ell, std::sqrt(lambda), p.r_max);
    return (s.du - l * s.u) / std::hypot(s.u, s.du);
}

std::vector<double> roots_at_step(const RadialProblem& p, double lo, double hi, double h) {
    std::vector<double> out;
    const int samples = 800;
    const double klo = std::sqrt(lo), khi = std::sqrt(hi);
    auto f = [&](double kap) { return mismatch(p, kap * kap, h); };
    double a = klo, fa = f(a);
    for (int i = 1; i <= samples; ++i) {
        const double b = klo + (khi - klo) * i / samples;
        const double fb = f(b);
        if (fa == 0 || (fa < 0) != (fb < 0)) {
            double x0 = a, x1 = b, f0 = fa;
            for (int it = 0; it < 80 && x1 - x0 > 1e-15 * x1; ++it) {
                const double m = (x0 + x1) / 2, fm = f(m);
                if ((fm < 0) == (f0 < 0)) {
                    x0 = m;
                    f0 = fm;
                } else {
                    x1 = m;
                }
            }
            const double kr = (x0 + x1) / 2;
            if (std::abs(f(kr)) < 1e-6) out.push_back(kr * kr);
        }
        a = b;
        fa = fb;
    }
    return out;
}

} // namespace

RadialProblem radial_problem(const Potential& pot, int ell) {
    if (!pot.radial()) throw ConfigError("radial oracle needs a radial potential");
    RadialProblem p;
    p.ell = ell;
    p.r_max = pot.r_eff;
    p.ode_step = pot.width / 2000;
    p.v = [pot](double r) { return pot.profile(r); };
    return p;
}

std::vector<double> radial_bound_states(const RadialProblem& problem, double lambda_lo, double lambda_hi) {
    if (lambda_hi <= lambda_lo) return {};
    lambda_lo = std::max(lambda_lo, 1e-10);
    const auto coarse = roots_at_step(problem, lambda_lo, lambda_hi, problem.ode_step);
    const auto fine = roots_at_step(problem, lambda_lo, lambda_hi, problem.ode_step / 2);
    std::vector<double> out;
    // Richardson on the fourth-order error; fall back to the fine value if the counts differ
    if (coarse.size() == fine.size()) {
        for (std::size_t i = 0; i < fine.size(); ++i) out.push_back((16 * fine[i] - coarse[i]) / 15);
    } else {
        out = fine;
    }
    std::sort(out.rbegin(), out.rend());
    return out;
}

std::vector<BoundState> radial_bound_states_all(const Potential& pot, int l_max) {
    std::vector<BoundState> out;
    if (pot.is_zero()) return out;
    double vmin = 0;
    for (int i = 0; i <= 4000; ++i) vmin = std::min(vmin, pot.profile(pot.r_eff * i / 4000.0));
    for (int ell = 0; ell <= l_max; ++ell) {
        for (double lam : radial_bound_states(radial_problem(pot, ell), 1e-8, -vmin)) {
            out.push_back({lam, ell, 2 * ell + 1});
        }
    }
    std::sort(out.begin(), out.end(), [](const BoundState& a, const BoundState& b) { return a.lambda > b.lambda; });
    return out;
}

cd square_well_jost(double depth, double a, cd k) {
    const cd kappa = std::sqrt(k * k + depth);
    const cd x = kappa * a;
    // sin(x)/x is even and entire, so the choice of square root does not matter
    const cd sinc = std::abs(x) < 1e-4 ? 1.0 - x * x / 6.0 + x * x * x * x / 120.0 : std::sin(x) / x;
    return std::cos(x) - cd(0, 1) * k * a * sinc;
}

std::vector<cd> square_well_resonances(double depth, double a, const Rect& region) {
    std::vector<cd> roots;
    if (depth == 0) return roots;
    auto f = [&](cd k) { return square_well_jost(depth, a, k); };
    const double step = 0.1;
    const int nr = std::max(1, int(std::ceil((region.re_hi - region.re_lo) / step)));
    const int ni = std::max(1, int(std::ceil((region.im_hi - region.im_lo) / step)));
    for (int i = 0; i <= nr; ++i) {
        for (int j = 0; j <= ni; ++j) {
            cd k(region.re_lo + (region.re_hi - region.re_lo) * i / nr,
                 region.im_lo + (region.im_hi - region.im_lo) * j / ni);
            bool ok = false;
            for (int it = 0; it < 60; ++it) {
                const double h = 1e-6 * (1 + std::abs(k));
                const cd fk = f(k);
                const cd df = (f(k + h) - f(k - h)) / (2 * h);
                if (df == 0.0) break;
                const cd dk = fk / df;
                k -= dk;
                if (std::abs(k) > 1e3) break;
                if (std::abs(dk) < 1e-14 * (1 + std::abs(k))) {
                    ok = true;
                    break;
                }
            }
            if (!ok || std::abs(f(k)) > 1e-10) continue;
            // half-open in Im: the real axis is not a resonance location
            if (!region.contains(k) || (region.im_hi <= 0 && k.imag() >= region.im_hi)) continue;
            const bool dup = std::any_of(roots.begin(), roots.end(),
                                         [&](cd r) { return std::abs(r - k) < 1e-8 * (1 + std::abs(k)); });
            if (!dup) roots.push_back(k);
        }
    }
    std::sort(roots.begin(), roots.end(), [](cd x, cd y) {
        if (std::abs(std::abs(x) - std::abs(y)) > 1e-12) return std::abs(x) < std::abs(y);
        return x.real() < y.real();
    });
    return roots;
}

double autocorrelation(const Potential& pot, double t) {
    if (pot.is_zero()) return 0;
    t = std::abs(t);
    if (pot.radial()) {
        // C(t) = 2 pi int w dw int dz v(r1) v(r2) after rho = sqrt(R^2 - w^2); z runs over [-w, w - t]
        const double R = pot.r_eff;
        if (t >= 2 * R) return 0;
        const auto [xw, ww] = composite_gauss_legendre(16, 24, t / 2, R);
        double c = 0;
        for (int i = 0; i < xw.size(); ++i) {
            const double w = xw(i);
            const double rho2 = std::max(0.0, R * R - w * w);
            const double zlo = -w, zhi = w - t;
            if (zhi <= zlo) continue;
            const auto [xz, wz] = composite_gauss_legendre(16, 12, zlo, zhi);
            double inner = 0;
            for (int j = 0; j < xz.size(); ++j) {
                const double z = xz(j);
                inner += wz(j) * pot.profile(std::sqrt(rho2 + z * z)) * pot.profile(std::sqrt(rho2 + (z + t) * (z + t)));
            }
            c += ww(i) * w * inner;
        }
        return 2 * pi * c / (4 * pi);
    }
    // grid-sampled: direction average of the 3D overlap over the sampled box
    const GridData& g = *pot.grid;
    Eigen::Vector3d lo = g.origin;
    Eigen::Vector3d hi = g.origin;
    for (int d = 0; d < 3; ++d) hi(d) += g.spacing(d) * (g.n[d] - 1);
    const int m = 20;
    std::array<std::pair<Eigen::VectorXd, Eigen::VectorXd>, 3> rule;
    for (int d = 0; d < 3; ++d) rule[d] = composite_gauss_legendre(5, m / 5 * 2, lo(d), hi(d));
    const auto [ct, wct] = gauss_legendre(6);
    const int nphi = 12;
    double c = 0;
    for (int a = 0; a < ct.size(); ++a) {
        const double st = std::sqrt(1 - ct(a) * ct(a));
        for (int b = 0; b < nphi; ++b) {
            const double ph = 2 * pi * b / nphi;
            const Eigen::Vector3d w(st * std::cos(ph), st * std::sin(ph), ct(a));
            double s = 0;
            for (int i = 0; i < rule[0].first.size(); ++i)
                for (int j = 0; j < rule[1].first.size(); ++j)
                    for (int l = 0; l < rule[2].first.size(); ++l) {
                        const Eigen::Vector3d x(rule[0].first(i), rule[1].first(j), rule[2].first(l));
                        const double v = evaluate(pot, x);
                        if (v == 0) continue;
                        s += rule[0].second(i) * rule[1].second(j) * rule[2].second(l) * v * evaluate(pot, x + t * w);
                    }
            c += wct(a) * (2 * pi / nphi) * s;
        }
    }
    return c / (16 * pi * pi);
}

cd trq0_squared_direct(const Potential& pot, cd k) {
    if (k.imag() < 0) throw ConfigError("trq0_squared_direct needs Im k >= 0");
    if (pot.is_zero()) return 0;
    double t_end = 2 * pot.r_eff;
    if (k.imag() > 0) t_end = std::min(t_end, 40.0 / k.imag());
    // phase-resolving panels; g is smooth on [0, 2R] so plain Gauss-Legendre per panel suffices
    const double h = std::min(0.25, 0.5 / (std::abs(k) + 0.5));
    const int panels = std::max(8, int(std::ceil(t_end / h)));
    auto integrate = [&](int order) {
        const auto [x, w] = composite_gauss_legendre(order, panels, 0.0, t_end);
        cd s = 0;
        for (int i = 0; i < x.size(); ++i) s += w(i) * std::exp(cd(0, 2) * k * x(i)) * autocorrelation(pot, x(i));
        return s;
    };
    const cd fine = integrate(12);
    const cd coarse = integrate(8);
    if (std::abs(fine - coarse) > 1e-8 * std::max(1e-300, std::abs(fine)))
        throw QuadratureNotConverged("oscillatory autocorrelation integral: " + std::to_string(std::abs(fine - coarse)));
    return fine;
}

AxisExpansionReport imaginary_axis_expansion_check(const Potential& pot, const std::vector<double>& taus, bool with_trq4) {
    AxisExpansionReport rep;
    rep.taus = taus;
    if (pot.is_zero()) return rep;
    if (!pot.smooth) throw NotDifferentiable("expansion check needs a C^2 potential");
    if (taus.size() < 4) throw FitUnstable("need at least 4 ray points");
    const Moments m = moments(pot);
    rep.c1_expected = -m.int_v2 / (16 * pi);
    rep.c3_expected = -m.int_grad2 / (192 * pi);
    // (i/2) Tr Q0^2(i tau) = i (-c1/tau + c3/tau^3 - c5/tau^5)
    const int n = int(taus.size());
    Eigen::MatrixXd a(n, 3);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        const double tau = taus[i];
        y(i) = trq0_squared_direct(pot, cd(0, tau)).real() / 2;
        a(i, 0) = -1 / tau;
        a(i, 1) = 1 / std::pow(tau, 3);
        a(i, 2) = -1 / std::pow(tau, 5);
    }
    const auto qr = a.colPivHouseholderQr();
    if (qr.rank() < 3) throw FitUnstable("ray fit is rank deficient");
    const Eigen::Vector3d c = qr.solve(y);
    rep.c1 = c(0);
    rep.c3 = c(1);
    rep.c1_rel_err = std::abs(rep.c1 - rep.c1_expected) / std::abs(rep.c1_expected);
    rep.c3_rel_err = std::abs(rep.c3 - rep.c3_expected) / std::max(1e-300, std::abs(rep.c3_expected));
    if (!with_trq4) return rep;
    PartialWaveOptions opt;
    for (double tau : taus) {
        const cd k(0, tau);
        const int order = collocation_order(pot, k, opt);
        const int lmax = channel_count(pot, k, opt);
        cd sum = 0;
        int quiet = 0;
        for (int ell = 0; ell <= lmax; ++ell) {
            const auto blk = collocation_block(pot, ell, k, order);
            const Eigen::MatrixXcd m2 = blk.m * blk.m;
            const cd term = double(2 * ell + 1) * (m2.array() * m2.transpose().array()).sum();
            sum += term;
            quiet = std::abs(term) < 1e-10 * std::abs(sum) ? quiet + 1 : 0;
            if (quiet >= 3) break;
        }
        rep.trq4.push_back(std::abs(sum));
    }
    Eigen::MatrixXd b(n, 2);
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) {
        b(i, 0) = 1;
        b(i, 1) = std::log(taus[i]);
        z(i) = std::log(rep.trq4[i]);
    }
    rep.trq4_slope = b.colPivHouseholderQr().solve(z)(1);
    return rep;
}

double Bump::operator()(double e) const {
    const double u = (e - center) / half_width;
    if (std::abs(u) >= 1) return 0;
    return std::exp(1 - 1 / (1 - u * u));
}

double Bump::derivative(double e) const {
    const double u = (e - center) / half_width;
    if (std::abs(u) >= 1) return 0;
    const double d = 1 - u * u;
    return (*this)(e) * (-2 * u / (d * d)) / half_width;
}

LatticeTrace lattice_trace(const Potential& pot, const Bump& f, double box, double spacing) {
    LatticeTrace out;
    const int n = int(std::lround(box / spacing));
    if (n < 4) throw BoxTooSmall("fewer than 4 lattice points per side");
    const double h = box / n;
    out.points_per_side = n;
    out.spacing = h;
    const long size = long(n) * n * n;
    if (size > 5000) throw ResolutionTooLarge("lattice of " + std::to_string(size) + " points exceeds the dense budget");
    // free spectrum: sum over axes of (4/h^2) sin^2(pi m/n)
    std::vector<double> e1d(n);
    for (int m = 0; m < n; ++m) e1d[m] = 4 / (h * h) * std::pow(std::sin(pi * m / n), 2);
    double free_sum = 0;
    long free_in = 0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) {
                const double e = e1d[a] + e1d[b] + e1d[c];
                free_sum += f(e);
                if (e > f.lo() && e < f.hi()) ++free_in;
            }
    if (free_in < 10) throw BoxTooSmall("only " + std::to_string(free_in) + " free lattice levels inside the support of f");
    if (pot.is_zero()) return out;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(size, size);
    auto idx = [n](int i, int j, int k) { return (long(k) * n + j) * n + i; };
    const double d = 1 / (h * h);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const long p = idx(i, j, k);
                const Eigen::Vector3d x = pot.center + Eigen::Vector3d(i - n / 2, j - n / 2, k - n / 2) * h;
                H(p, p) = 6 * d + evaluate(pot, x);
                H(p, idx((i + 1) % n, j, k)) -= d;
                H(p, idx((i + n - 1) % n, j, k)) -= d;
                H(p, idx(i, (j + 1) % n, k)) -= d;
                H(p, idx(i, (j + n - 1) % n, k)) -= d;
                H(p, idx(i, j, (k + 1) % n)) -= d;
                H(p, idx(i, j, (k + n - 1) % n)) -= d;
            }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw EigenSolveFailed("lattice Hamiltonian");
    double sum = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
        const double e = es.eigenvalues()(i);
        sum += f(e);
        if (e > f.lo() && e < f.hi()) ++out.interacting_states;
    }
    out.value = sum - free_sum;
    return out;
}

} // namespace detscope
