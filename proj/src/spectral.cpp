#include "detscope/spectral.hpp"

#include "detscope/errors.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <numbers>
#include <thread>

namespace detscope {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double two_pi = 2 * std::numbers::pi;

double wrap(double d) { return d - two_pi * std::round(d / two_pi); }

std::string fmt_k(cd k) { return std::to_string(k.real()) + (k.imag() < 0 ? "" : "+") + std::to_string(k.imag()) + "i"; }

// Memoized log f_l for one channel; one owner thread.
class ChannelLog {
public:
    ChannelLog(const DetEngine& e, int ell) : e_(e), ell_(ell) {}
    cd operator()(cd k) {
        const auto key = std::make_pair(k.real(), k.imag());
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
        const cd v = e_.channel_log(ell_, k);
        memo_.emplace(key, v);
        return v;
    }
    cd derivative(cd k) const { return e_.channel_log_derivative(ell_, k); }
    int ell() const { return ell_; }

private:
    const DetEngine& e_;
    int ell_;
    std::map<std::pair<double, double>, cd> memo_;
};

double segment_winding(ChannelLog& f, cd a, cd la, cd b, cd lb, double max_step, double min_len) {
    if (!std::isfinite(la.real()) || !std::isfinite(lb.real())) throw BoundaryNearZero("f vanishes on the contour near " + fmt_k(a));
    const double d = wrap(lb.imag() - la.imag());
    if (std::abs(d) <= max_step) return d;
    if (std::abs(b - a) < min_len) throw BoundaryNearZero("unresolved phase jump near " + fmt_k(a));
    const cd m = (a + b) / 2.0;
    const cd lm = f(m);
    return segment_winding(f, a, la, m, lm, max_step, min_len) + segment_winding(f, m, lm, b, lb, max_step, min_len);
}

int rect_winding(ChannelLog& f, const Rect& r, const CountOptions& opt) {
    const cd c[4] = {{r.re_lo, r.im_lo}, {r.re_hi, r.im_lo}, {r.re_hi, r.im_hi}, {r.re_lo, r.im_hi}};
    const double size = std::max(r.re_hi - r.re_lo, r.im_hi - r.im_lo);
    double total = 0;
    for (int e = 0; e < 4; ++e) {
        const cd a = c[e], b = c[(e + 1) % 4];
        const int n = opt.edge_samples;
        cd prev = a, lprev = f(a);
        for (int i = 1; i <= n; ++i) {
            const cd p = a + (b - a) * (double(i) / n);
            const cd lp = f(p);
            total += segment_winding(f, prev, lprev, p, lp, opt.max_arg_step, 1e-9 * size);
            prev = p;
            lprev = lp;
        }
    }
    return static_cast<int>(std::lround(total / two_pi));
}

Rect grown(const Rect& r, double d) { return {r.re_lo - d, r.re_hi + d, r.im_lo - d, r.im_hi + d}; }

// Count on the region, nudging its edges outward if a zero sits on the contour.
std::pair<int, Rect> robust_count(ChannelLog& f, const Rect& r, const CountOptions& opt) {
    const double size = std::min(r.re_hi - r.re_lo, r.im_hi - r.im_lo);
    for (int j = 0; j <= opt.max_nudges; ++j) {
        const Rect g = grown(r, j * 1.7e-3 * size);
        try {
            return {rect_winding(f, g, opt), g};
        } catch (const BoundaryNearZero&) {
            if (j == opt.max_nudges) throw;
        }
    }
    return {0, r};
}

double boundary_max_log_abs(ChannelLog& f, const Rect& r) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : {0.0, 0.5, 1.0})
        for (double y : {0.0, 0.5, 1.0}) {
            if (x == 0.5 && y == 0.5) continue;
            m = std::max(m, f(cd(r.re_lo + x * (r.re_hi - r.re_lo), r.im_lo + y * (r.im_hi - r.im_lo))).real());
        }
    return m;
}

struct CellSearch {
    ChannelLog& f;
    const ResonanceOptions& opt;
    int multiplicity;
    std::vector<Zero> found;

    // Split `r` into four with inner lines nudged until every child count resolves.
    std::vector<std::pair<Rect, int>> split(const Rect& r) {
        static constexpr double offsets[] = {0.5, 0.537, 0.461, 0.583, 0.419, 0.611};
        for (double fx : offsets) {
            const double xm = r.re_lo + fx * (r.re_hi - r.re_lo);
            const double ym = r.im_lo + (1 - fx) * (r.im_hi - r.im_lo);
            const Rect kids[4] = {{r.re_lo, xm, r.im_lo, ym}, {xm, r.re_hi, r.im_lo, ym},
                                  {r.re_lo, xm, ym, r.im_hi}, {xm, r.re_hi, ym, r.im_hi}};
            try {
                std::vector<std::pair<Rect, int>> out;
                for (const Rect& k : kids) out.emplace_back(k, rect_winding(f, k, opt.count));
                return out;
            } catch (const BoundaryNearZero&) {
            }
        }
        throw BoundaryNearZero("no clean subdivision of a cell");
    }

    bool newton(const Rect& r, int n, cd& k) {
        k = cd((r.re_lo + r.re_hi) / 2, (r.im_lo + r.im_hi) / 2);
        const Rect box = grown(r, 0.1 * std::max(r.re_hi - r.re_lo, r.im_hi - r.im_lo));
        for (int it = 0; it < opt.newton_iterations; ++it) {
            const cd psi = f.derivative(k);
            if (!std::isfinite(std::abs(psi))) return true;
            const cd dk = double(n) / psi;
            k -= dk;
            if (!box.contains(k)) return false;
            if (std::abs(dk) < opt.newton_tolerance * (1 + std::abs(k))) return true;
        }
        return false;
    }

    void accept(const Rect& r, int n, cd k) {
        const double lf = f(k).real();
        const double res = std::isfinite(lf) ? std::exp(lf - boundary_max_log_abs(f, r)) : 0.0;
        found.push_back({k, n * multiplicity, res, f.ell()});
    }

    void run(const Rect& r, int n, int depth) {
        if (n <= 0) return;
        if (n == 1 || depth >= opt.max_depth + opt.extra_levels) {
            cd k;
            if (newton(r, n, k) || depth >= opt.max_depth + opt.extra_levels) {
                accept(r, n, k);
                return;
            }
        }
        auto kids = split(r);
        int sum = 0;
        for (auto& [c, m] : kids) sum += m;
        if (sum != n) {
            // inconsistent counts: trust the parent and refine the children that carry zeros
            if (depth >= opt.max_depth + opt.extra_levels) {
                cd k;
                newton(r, n, k);
                accept(r, n, k);
                return;
            }
        }
        for (auto& [c, m] : kids) run(c, m, depth + 1);
    }
};

template <typename F>
void for_each_channel(int channels, int workers, F&& body) {
    std::vector<std::exception_ptr> errors(channels);
    std::atomic<int> next{0};
    auto work = [&] {
        for (int l = next++; l < channels; l = next++) {
            try {
                body(l);
            } catch (...) {
                errors[l] = std::current_exception();
            }
        }
    };
    const int w = std::clamp(workers, 1, std::max(1, channels));
    std::vector<std::thread> pool;
    for (int i = 1; i < w; ++i) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

bool by_modulus(const Zero& a, const Zero& b) {
    const double ma = std::abs(a.k), mb = std::abs(b.k);
    if (std::abs(ma - mb) > 1e-9 * (1 + ma)) return ma < mb;
    return a.k.real() < b.k.real();
}

std::vector<Zero> merge_coincident(std::vector<Zero> zs) {
    std::sort(zs.begin(), zs.end(), by_modulus);
    std::vector<Zero> out;
    for (const Zero& z : zs) {
        auto it = std::find_if(out.begin(), out.end(), [&](const Zero& o) { return std::abs(o.k - z.k) < 1e-8 * (1 + std::abs(z.k)); });
        if (it == out.end()) {
            out.push_back(z);
        } else {
            it->multiplicity += z.multiplicity;
            it->residual = std::max(it->residual, z.residual);
        }
    }
    return out;
}

} // namespace

std::vector<double> SpectralCatalog::kappas() const {
    std::vector<double> out;
    for (const Zero& z : bound_states)
        for (int m = 0; m < z.multiplicity; ++m) out.push_back(z.k.imag());
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

int SpectralCatalog::bound_count() const {
    int n = 0;
    for (const Zero& z : bound_states) n += z.multiplicity;
    return n;
}

std::vector<Zero> find_bound_states(const DetEngine& engine, const BoundStateOptions& opt) {
    const Potential& pot = engine.potential();
    std::vector<Zero> out;
    if (pot.is_zero()) return out;
    const double vmax = pot.max_abs();
    const double tau_hi = opt.tau_hi > 0 ? opt.tau_hi : std::sqrt(vmax);
    // the centrifugal barrier l(l+1)/r^2 exceeds |V| everywhere beyond this channel
    const int l_bind = std::min(engine.channel_limit(0), static_cast<int>(std::ceil(pot.r_eff * std::sqrt(vmax))) + 1);
    const int channels = l_bind + 1;
    for (int ell = 0; ell < channels; ++ell) {
        auto sign = [&](double tau) { return std::cos(engine.channel_log(ell, cd(0, tau)).imag()) < 0 ? -1 : 1; };
        double a = opt.tau_lo;
        int sa = sign(a);
        for (int i = 1; i <= opt.samples; ++i) {
            const double b = opt.tau_lo + (tau_hi - opt.tau_lo) * i / opt.samples;
            const int sb = sign(b);
            if (sa != sb) {
                double lo = a, hi = b;
                const int slo = sa;
                while (hi - lo > 1e-9 * hi) {
                    const double m = (lo + hi) / 2;
                    (sign(m) == slo ? lo : hi) = m;
                }
                cd k(0, (lo + hi) / 2);
                for (int it = 0; it < 20; ++it) {
                    const cd psi = engine.channel_log_derivative(ell, k);
                    if (!std::isfinite(std::abs(psi))) break;
                    const cd dk = 1.0 / psi;
                    if (std::abs(dk) > (hi - lo) * 4) break;
                    k = cd(0, (k - dk).imag());
                    if (std::abs(dk) < 1e-14 * std::abs(k)) break;
                }
                const int mult = engine.channel_multiplicity(ell);
                out.push_back({k, mult, std::exp(engine.channel_log(ell, k).real()), ell});
            }
            a = b;
            sa = sb;
        }
    }
    std::sort(out.begin(), out.end(), [](const Zero& x, const Zero& y) { return x.k.imag() > y.k.imag(); });
    return out;
}

double birman_schwinger_gap(const DetEngine& engine, int channel, cd k) {
    const auto* pw = dynamic_cast<const PartialWaveEngine*>(&engine);
    Eigen::MatrixXcd m;
    if (pw) {
        const Potential& pot = engine.potential();
        m = collocation_block(pot, channel, k, collocation_order(pot, k, pw->options())).m;
    } else {
        const auto* ny = dynamic_cast<const NystromEngine*>(&engine);
        if (!ny) throw Error("unknown engine");
        m = assemble_q0(ny->grid(), engine.potential(), k).entries;
    }
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m, false);
    if (es.info() != Eigen::Success) throw EigenSolveFailed("Birman-Schwinger spectrum");
    return (es.eigenvalues().array() + 1.0).abs().minCoeff();
}

int count_zeros_channel(const DetEngine& engine, int channel, const Rect& region, const CountOptions& opt) {
    if (engine.potential().is_zero()) return 0;
    if (region.im_lo < -engine.depth_limit())
        throw DepthLimitExceeded("region depth " + std::to_string(-region.im_lo) + " exceeds " + std::to_string(engine.depth_limit()));
    ChannelLog f(engine, channel);
    return robust_count(f, region, opt).first;
}

int count_zeros(const DetEngine& engine, const Rect& region, const CountOptions& opt) {
    if (engine.potential().is_zero()) return 0;
    if (region.im_lo < -engine.depth_limit())
        throw DepthLimitExceeded("region depth " + std::to_string(-region.im_lo) + " exceeds " + std::to_string(engine.depth_limit()));
    const double radius = std::max({std::abs(cd(region.re_lo, region.im_lo)), std::abs(cd(region.re_hi, region.im_lo)),
                                    std::abs(cd(region.re_lo, region.im_hi)), std::abs(cd(region.re_hi, region.im_hi))});
    const int channels = engine.channel_limit(radius) + 1;
    std::vector<int> counts(channels, 0);
    for_each_channel(channels, opt.workers, [&](int l) {
        ChannelLog f(engine, l);
        counts[l] = robust_count(f, region, opt).first * engine.channel_multiplicity(l);
    });
    int total = 0;
    for (int c : counts) total += c;
    return total;
}

SpectralCatalog find_resonances(const DetEngine& engine, const Rect& region, const ResonanceOptions& opt) {
    SpectralCatalog cat;
    cat.region = region;
    if (engine.potential().is_zero()) return cat;
    if (region.im_lo < -engine.depth_limit())
        throw DepthLimitExceeded("region depth " + std::to_string(-region.im_lo) + " exceeds " + std::to_string(engine.depth_limit()));
    const double radius = std::max({std::abs(cd(region.re_lo, region.im_lo)), std::abs(cd(region.re_hi, region.im_lo)),
                                    std::abs(cd(region.re_lo, region.im_hi)), std::abs(cd(region.re_hi, region.im_hi))});
    const int channels = engine.channel_limit(radius) + 1;
    std::vector<std::vector<Zero>> per(channels);
    std::vector<int> counts(channels, 0);
    for_each_channel(channels, opt.count.workers, [&](int l) {
        ChannelLog f(engine, l);
        const auto [n, r] = robust_count(f, region, opt.count);
        counts[l] = n * engine.channel_multiplicity(l);
        CellSearch s{f, opt, engine.channel_multiplicity(l), {}};
        s.run(r, n, 0);
        per[l] = std::move(s.found);
    });
    std::vector<Zero> all;
    for (int l = 0; l < channels; ++l) {
        cat.completeness_count += counts[l];
        all.insert(all.end(), per[l].begin(), per[l].end());
    }
    for (const Zero& z : merge_coincident(all)) (z.k.imag() > 0 ? cat.bound_states : cat.resonances).push_back(z);
    return cat;
}

HadamardData hadamard_fit(const DetEngine& engine, const DetValue& near_zero, double scale) {
    HadamardData h;
    h.scale = scale;
    if (engine.potential().is_zero()) return h;
    const double h0 = 0.005 * scale;
    // stencil nodes j*h0, j in {8,4,2,1,0,-1,-2,-4,-8}
    const int js[] = {8, 4, 2, 1, 0, -1, -2, -4, -8};
    std::map<int, cd> g;
    DetValue cur = near_zero;
    for (int j : js) {
        cur = continue_from(cur, cd(j * h0, 0), engine);
        g[j] = cur.log_d;
    }
    if (g[0].real() < std::log(1e-12)) throw ZeroAtOrigin("D(0) vanishes");
    h.log_d0 = g[0];
    auto d1 = [&](int s) { return (-g[2 * s] + 8.0 * g[s] - 8.0 * g[-s] + g[-2 * s]) / (12.0 * s * h0); };
    auto d2 = [&](int s) { return (-g[2 * s] + 16.0 * g[s] - 30.0 * g[0] + 16.0 * g[-s] - g[-2 * s]) / (12.0 * std::pow(s * h0, 2)); };
    auto d3 = [&](int s) { return (g[2 * s] - 2.0 * g[s] + 2.0 * g[-s] - g[-2 * s]) / (2.0 * std::pow(s * h0, 3)); };
    // steps 4h0, 2h0, h0 = {0.02, 0.01, 0.005} * scale
    auto rich = [](cd a, cd b, cd c, double p) {
        const double f1 = std::pow(2.0, p), f2 = std::pow(2.0, p + 2);
        const cd r1 = (f1 * b - a) / (f1 - 1), r2 = (f1 * c - b) / (f1 - 1);
        return (f2 * r2 - r1) / (f2 - 1);
    };
    h.c1 = rich(d1(4), d1(2), d1(1), 4);
    h.c2 = rich(d2(4), d2(2), d2(1), 4) / 2.0;
    h.c3 = rich(d3(4), d3(2), d3(1), 2) / 6.0;
    return h;
}

std::vector<Zero> zeros_within(const SpectralCatalog& catalog, double radius) {
    std::vector<Zero> out;
    for (const auto* list : {&catalog.bound_states, &catalog.resonances})
        for (const Zero& z : *list)
            if (std::abs(z.k) <= radius) out.push_back(z);
    return out;
}

cd hadamard_log(const HadamardData& h, const std::vector<Zero>& zeros, cd k) {
    cd s = h.log_d0 + h.p(k);
    for (const Zero& z : zeros) {
        const cd q = k / z.k;
        s += double(z.multiplicity) * (std::log(1.0 - q) + q + q * q / 2.0 + q * q * q / 3.0);
    }
    return s;
}

double breit_wigner_phi_prime(double t, const HadamardData& h, const std::vector<Zero>& zeros) {
    cd s = h.p_prime(t);
    const double t3 = t * t * t;
    for (const Zero& z : zeros) s += double(z.multiplicity) * t3 / (z.k * z.k * z.k * (t - z.k));
    return s.imag();
}

} // namespace detscope
