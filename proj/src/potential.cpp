#include "detscope/potential.hpp"

#include "detscope/errors.hpp"
#include "detscope/quadrature.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

namespace detscope {

namespace {

constexpr double pi = std::numbers::pi;

double gaussian_reff(double sigma) { return sigma * std::sqrt(-std::log(support_cutoff)); }

Eigen::Vector3d grid_center(const GridData& g) {
    return g.origin + 0.5 * g.spacing.cwiseProduct(Eigen::Vector3d(g.n[0] - 1.0, g.n[1] - 1.0, g.n[2] - 1.0));
}

double trilinear(const GridData& g, const Eigen::Vector3d& x) {
    Eigen::Vector3d u = (x - g.origin).cwiseQuotient(g.spacing);
    std::array<std::uint32_t, 3> i0{};
    std::array<double, 3> f{};
    for (int d = 0; d < 3; ++d) {
        const double hi = g.n[d] - 1.0;
        if (!(u[d] >= 0.0 && u[d] <= hi)) return 0.0;
        if (g.n[d] == 1) {
            i0[d] = 0;
            f[d] = 0;
            continue;
        }
        double c = std::min(std::floor(u[d]), hi - 1.0);
        i0[d] = static_cast<std::uint32_t>(c);
        f[d] = u[d] - c;
    }
    double acc = 0;
    for (int c = 0; c < 8; ++c) {
        std::array<std::uint32_t, 3> id{};
        double w = 1;
        for (int d = 0; d < 3; ++d) {
            const int bit = (c >> d) & 1;
            if (bit && g.n[d] == 1) {
                w = 0;
                break;
            }
            id[d] = i0[d] + bit;
            w *= bit ? f[d] : 1 - f[d];
        }
        if (w != 0) acc += w * g.at(id[0], id[1], id[2]);
    }
    return acc;
}

} // namespace

const char* to_string(PotentialKind kind) {
    switch (kind) {
    case PotentialKind::zero: return "zero";
    case PotentialKind::gaussian_well: return "gaussian-well";
    case PotentialKind::polynomial_bump: return "polynomial-bump";
    case PotentialKind::square_well: return "square-well";
    case PotentialKind::grid_sampled: return "grid-sampled";
    }
    return "?";
}

PotentialKind potential_kind_from_string(const std::string& name) {
    for (auto k : {PotentialKind::zero, PotentialKind::gaussian_well, PotentialKind::polynomial_bump,
                   PotentialKind::square_well, PotentialKind::grid_sampled})
        if (name == to_string(k)) return k;
    throw ConfigError("unknown potential kind '" + name + "'");
}

Potential Potential::zero() { return Potential{}; }

Potential Potential::gaussian_well(double depth, double sigma, Eigen::Vector3d center) {
    Potential p;
    p.kind = PotentialKind::gaussian_well;
    p.depth = depth;
    p.width = sigma;
    p.center = center;
    p.r_eff = gaussian_reff(sigma);
    return p;
}

Potential Potential::polynomial_bump(double depth, double a, Eigen::Vector3d center) {
    Potential p;
    p.kind = PotentialKind::polynomial_bump;
    p.depth = depth;
    p.width = a;
    p.center = center;
    p.r_eff = a;
    return p;
}

Potential Potential::square_well(double depth, double a, Eigen::Vector3d center) {
    Potential p;
    p.kind = PotentialKind::square_well;
    p.depth = depth;
    p.width = a;
    p.center = center;
    p.r_eff = a;
    p.smooth = false;
    return p;
}

Potential Potential::grid_sampled(GridData data) {
    const std::size_t count = static_cast<std::size_t>(data.n[0]) * data.n[1] * data.n[2];
    if (count == 0 || data.values.size() != count) throw GridFileError("value count does not match grid shape");
    for (double v : data.values)
        if (!std::isfinite(v)) throw GridFileError("non-finite sample");
    Potential p;
    p.kind = PotentialKind::grid_sampled;
    p.center = grid_center(data);
    double vmax = 0;
    for (double v : data.values) vmax = std::max(vmax, std::abs(v));
    p.depth = vmax;
    double r = 0;
    for (std::uint32_t k = 0; k < data.n[2]; ++k)
        for (std::uint32_t j = 0; j < data.n[1]; ++j)
            for (std::uint32_t i = 0; i < data.n[0]; ++i)
                if (std::abs(data.at(i, j, k)) > support_cutoff * vmax)
                    r = std::max(r, (data.node(i, j, k) - p.center).norm());
    // one cell of slack for the interpolant
    p.r_eff = std::max(r + data.spacing.norm(), data.spacing.maxCoeff());
    p.grid = std::make_shared<const GridData>(std::move(data));
    return p;
}

double Potential::max_abs() const {
    if (kind == PotentialKind::zero) return 0;
    return std::abs(depth);
}

double Potential::profile(double r) const {
    switch (kind) {
    case PotentialKind::zero: return 0;
    case PotentialKind::gaussian_well: return -depth * std::exp(-(r * r) / (width * width));
    case PotentialKind::polynomial_bump: {
        if (r >= width) return 0;
        const double s = 1 - (r * r) / (width * width);
        return -depth * s * s * s;
    }
    case PotentialKind::square_well: return r < width ? -depth : 0.0;
    case PotentialKind::grid_sampled: break;
    }
    throw Error("profile: grid-sampled potential is not radial");
}

double Potential::profile_derivative(double r) const {
    switch (kind) {
    case PotentialKind::zero: return 0;
    case PotentialKind::gaussian_well:
        return 2 * r / (width * width) * depth * std::exp(-(r * r) / (width * width));
    case PotentialKind::polynomial_bump: {
        if (r >= width) return 0;
        const double s = 1 - (r * r) / (width * width);
        return 6 * depth * r / (width * width) * s * s;
    }
    case PotentialKind::square_well: throw NotDifferentiable("square-well is not C^2");
    case PotentialKind::grid_sampled: break;
    }
    throw Error("profile_derivative: grid-sampled potential is not radial");
}

std::string Potential::fingerprint() const {
    std::ostringstream os;
    os.precision(17);
    os << to_string(kind) << ';' << depth << ';' << width << ';' << center.x() << ',' << center.y() << ','
       << center.z();
    if (grid) {
        os << ";grid:" << grid->n[0] << 'x' << grid->n[1] << 'x' << grid->n[2] << ';' << grid->origin.transpose()
           << ';' << grid->spacing.transpose() << ';';
        // values enter the cache key through a cheap positional checksum
        double s1 = 0, s2 = 0;
        for (std::size_t i = 0; i < grid->values.size(); ++i) {
            s1 += grid->values[i];
            s2 += grid->values[i] * static_cast<double>(i % 1009 + 1);
        }
        os << s1 << ';' << s2;
    }
    return os.str();
}

double evaluate(const Potential& pot, const Eigen::Vector3d& x) {
    if (pot.kind == PotentialKind::grid_sampled) return trilinear(*pot.grid, x);
    return pot.profile((x - pot.center).norm());
}

Eigen::Vector3d gradient(const Potential& pot, const Eigen::Vector3d& x) {
    if (!pot.smooth) throw NotDifferentiable(std::string(to_string(pot.kind)) + " is not C^2");
    if (pot.kind == PotentialKind::grid_sampled) {
        Eigen::Vector3d g;
        for (int d = 0; d < 3; ++d) {
            const double h = pot.grid->spacing[d] / 2;
            Eigen::Vector3d e = Eigen::Vector3d::Zero();
            e[d] = h;
            g[d] = (trilinear(*pot.grid, x + e) - trilinear(*pot.grid, x - e)) / (2 * h);
        }
        return g;
    }
    const Eigen::Vector3d y = x - pot.center;
    const double r = y.norm();
    if (r == 0) return Eigen::Vector3d::Zero();
    return pot.profile_derivative(r) / r * y;
}

std::pair<double, double> split_weights(double v) {
    if (v == 0) return {0.0, 0.0};
    const double s = std::sqrt(std::abs(v));
    return {s, v / s};
}

namespace {

struct RawIntegrals {
    double v = 0, v2 = 0, g2 = 0, v3 = 0;
};

RawIntegrals radial_integrals(const Potential& pot, int panels, bool grad) {
    RawIntegrals out;
    auto [r, w] = composite_gauss_legendre(12, panels, 0.0, pot.r_eff);
    for (int i = 0; i < r.size(); ++i) {
        const double v = pot.profile(r(i));
        const double dv = grad ? pot.profile_derivative(r(i)) : 0.0;
        const double m = 4 * pi * r(i) * r(i) * w(i);
        out.v += m * v;
        out.v2 += m * v * v;
        out.v3 += m * v * v * v;
        out.g2 += m * dv * dv;
    }
    return out;
}

// Cellwise tensor Gauss rule over the grid box; exact for the trilinear moments at order >= 2.
RawIntegrals grid_integrals(const Potential& pot, int order, bool grad) {
    const GridData& g = *pot.grid;
    RawIntegrals out;
    auto [x0, w0] = gauss_legendre<double>(order);
    std::array<std::uint32_t, 3> cells{};
    for (int d = 0; d < 3; ++d) cells[d] = g.n[d] > 1 ? g.n[d] - 1 : 0;
    if (cells[0] == 0 || cells[1] == 0 || cells[2] == 0) return out; // degenerate box has no volume
    for (std::uint32_t ck = 0; ck < cells[2]; ++ck)
        for (std::uint32_t cj = 0; cj < cells[1]; ++cj)
            for (std::uint32_t ci = 0; ci < cells[0]; ++ci) {
                const Eigen::Vector3d lo = g.node(ci, cj, ck);
                for (int a = 0; a < order; ++a)
                    for (int b = 0; b < order; ++b)
                        for (int c = 0; c < order; ++c) {
                            Eigen::Vector3d x = lo + 0.5 * g.spacing.cwiseProduct(
                                                             Eigen::Vector3d(x0(a) + 1, x0(b) + 1, x0(c) + 1));
                            const double m = w0(a) * w0(b) * w0(c) * g.spacing.prod() / 8;
                            const double v = trilinear(g, x);
                            out.v += m * v;
                            out.v2 += m * v * v;
                            out.v3 += m * v * v * v;
                            if (grad) out.g2 += m * gradient(pot, x).squaredNorm();
                        }
            }
    return out;
}

} // namespace

Moments moments(const Potential& pot, const MomentOptions& opt) {
    Moments m;
    if (pot.kind == PotentialKind::zero) {
        m.has_alpha_1 = opt.want_alpha_1;
        return m;
    }
    const bool grad = opt.want_alpha_1;
    if (grad && !pot.smooth) throw NotDifferentiable("alpha_1 requires a C^2 potential");

    auto run = [&](int level) {
        return pot.radial() ? radial_integrals(pot, 4 << level, grad) : grid_integrals(pot, 2 + level, grad);
    };
    RawIntegrals prev = run(0), cur{};
    bool converged = false;
    const int levels = pot.radial() ? opt.max_refinements : std::min(opt.max_refinements, 3);
    for (int level = 1; level <= levels; ++level) {
        cur = run(level);
        const double scale = std::max({std::abs(cur.v), cur.v2, std::abs(cur.v3) + cur.g2, 1e-300});
        const double change = std::max({std::abs(cur.v - prev.v), std::abs(cur.v2 - prev.v2),
                                        std::abs(cur.v3 - prev.v3) + std::abs(cur.g2 - prev.g2)});
        m.error = Eigen::Vector3d(std::abs(cur.v - prev.v) / (4 * pi), std::abs(cur.v2 - prev.v2) / (16 * pi),
                                  (std::abs(cur.g2 - prev.g2) + 2 * std::abs(cur.v3 - prev.v3)) / (192 * pi));
        prev = cur;
        if (change <= opt.tolerance * scale) {
            converged = true;
            break;
        }
    }
    // Trilinear data carries kinks: the gradient moment converges algebraically, so only the
    // smooth-data moments are held to the tolerance.
    if (!converged && pot.radial())
        throw QuadratureNotConverged("moment quadrature did not settle within tolerance");
    m.alpha_m1 = cur.v / (4 * pi);
    m.alpha_0 = cur.v2 / (16 * pi);
    m.int_v2 = cur.v2;
    m.int_v3 = cur.v3;
    m.int_grad2 = cur.g2;
    m.has_alpha_1 = grad;
    if (grad) m.alpha_1 = (cur.g2 + 2 * cur.v3) / (192 * pi);
    return m;
}

GridData sample_to_grid(const Potential& pot, std::array<std::uint32_t, 3> n, const Eigen::Vector3d& origin,
                        const Eigen::Vector3d& spacing) {
    GridData g;
    g.n = n;
    g.origin = origin;
    g.spacing = spacing;
    g.values.resize(static_cast<std::size_t>(n[0]) * n[1] * n[2]);
    std::size_t idx = 0;
    for (std::uint32_t k = 0; k < n[2]; ++k)
        for (std::uint32_t j = 0; j < n[1]; ++j)
            for (std::uint32_t i = 0; i < n[0]; ++i) g.values[idx++] = evaluate(pot, g.node(i, j, k));
    return g;
}

namespace {

template <typename T> void put_le(std::ostream& os, T value) {
    static_assert(std::endian::native == std::endian::little, "little-endian host assumed");
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T> T get_le(std::istream& is) {
    T value{};
    is.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!is) throw GridFileError("truncated header");
    return value;
}

constexpr std::uint32_t grid_file_version = 1;

} // namespace

void write_grid_file(const std::string& path, const GridData& data) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw GridFileError("cannot open " + path + " for writing");
    os.write("DSCP", 4);
    put_le<std::uint32_t>(os, grid_file_version);
    for (auto v : data.n) put_le<std::uint32_t>(os, v);
    for (int d = 0; d < 3; ++d) put_le<double>(os, data.origin[d]);
    for (int d = 0; d < 3; ++d) put_le<double>(os, data.spacing[d]);
    os.write(reinterpret_cast<const char*>(data.values.data()),
             static_cast<std::streamsize>(data.values.size() * sizeof(double)));
    if (!os) throw GridFileError("write failed for " + path);
}

GridData read_grid_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw GridFileError("cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "DSCP", 4) != 0) throw GridFileError("bad magic in " + path);
    const auto version = get_le<std::uint32_t>(is);
    if (version != grid_file_version) throw GridFileError("unsupported version " + std::to_string(version));
    GridData g;
    for (auto& v : g.n) v = get_le<std::uint32_t>(is);
    for (int d = 0; d < 3; ++d) g.origin[d] = get_le<double>(is);
    for (int d = 0; d < 3; ++d) g.spacing[d] = get_le<double>(is);
    if ((g.spacing.array() <= 0).any()) throw GridFileError("non-positive spacing");
    g.values.resize(static_cast<std::size_t>(g.n[0]) * g.n[1] * g.n[2]);
    is.read(reinterpret_cast<char*>(g.values.data()), static_cast<std::streamsize>(g.values.size() * sizeof(double)));
    if (!is) throw GridFileError("truncated payload in " + path);
    return g;
}

} // namespace detscope
