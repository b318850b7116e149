#include "detscope/commands.hpp"

#include "detscope/errors.hpp"
#include "detscope/spectral.hpp"
#include "detscope/traceform.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace detscope {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        out << text;
        if (!out) throw Error("cannot write " + path.string());
    }
    fs::rename(tmp, path);
}

std::string csv_row(std::initializer_list<double> xs) {
    std::string s;
    for (double x : xs) {
        if (!s.empty()) s += ',';
        s += fmt17(x);
    }
    return s + '\n';
}

// Everything downstream of the engine, with the expensive pieces behind the cache.
struct Session {
    const RunConfig& cfg;
    DiskCache& cache;
    std::unique_ptr<DetEngine> engine;
    std::string fp;

    Session(const RunConfig& c, DiskCache& k) : cfg(c), cache(k), engine(make_engine(c.potential, c.resolution)) {
        fp = engine->fingerprint();
    }

    Moments moments_all() const {
        MomentOptions mo;
        mo.tolerance = cfg.quadrature_tol;
        mo.want_alpha_1 = cfg.potential.smooth;
        return moments(cfg.potential, mo);
    }

    std::vector<Zero> bound_states() {
        const json j = cache.record("bound|" + fp, [&] {
            json out = json::array();
            for (const Zero& z : find_bound_states(*engine))
                out.push_back({{"re", z.k.real()}, {"im", z.k.imag()}, {"multiplicity", z.multiplicity},
                               {"residual", z.residual}, {"channel", z.channel}});
            return out;
        });
        std::vector<Zero> zs;
        for (const auto& e : j)
            zs.push_back({cd(e.at("re").get<double>(), e.at("im").get<double>()), e.at("multiplicity").get<int>(),
                          e.at("residual").get<double>(), e.at("channel").get<int>()});
        return zs;
    }

    std::vector<double> kappas() {
        SpectralCatalog c;
        c.bound_states = bound_states();
        return c.kappas();
    }

    json catalog_json() {
        const Rect& r = cfg.region;
        std::ostringstream key;
        key << "catalog|" << fp << '|' << fmt17(r.re_lo) << ',' << fmt17(r.re_hi) << ',' << fmt17(r.im_lo) << ','
            << fmt17(r.im_hi) << '|' << fmt17(cfg.newton_tol);
        const auto bound = bound_states();
        return cache.record(key.str(), [&] {
            ResonanceOptions ro;
            ro.newton_tolerance = cfg.newton_tol;
            ro.count.workers = cfg.workers;
            const SpectralCatalog cat = find_resonances(*engine, r, ro);
            auto list = [&](const std::vector<Zero>& zs) {
                json a = json::array();
                for (const Zero& z : zs)
                    a.push_back({{"re", z.k.real()}, {"im", z.k.imag()}, {"multiplicity", z.multiplicity},
                                 {"residual", z.residual}, {"channel", z.channel},
                                 {"converged", z.residual < cfg.zero_residual_tol}});
                return a;
            };
            int n = 0;
            for (const Zero& z : bound) n += z.multiplicity;
            return json{{"schema_version", config_schema_version},
                        {"region", {{"re", {r.re_lo, r.re_hi}}, {"im", {r.im_lo, r.im_hi}}}},
                        {"completeness_count", cat.completeness_count},
                        {"bound_count", n},
                        {"bound_states", list(bound)},
                        {"resonances", list(cat.resonances)}};
        });
    }

    SpectralCatalog catalog() {
        const json j = catalog_json();
        SpectralCatalog c;
        c.region = cfg.region;
        c.completeness_count = j.at("completeness_count").get<int>();
        auto read = [](const json& a) {
            std::vector<Zero> zs;
            for (const auto& e : a)
                zs.push_back({cd(e.at("re").get<double>(), e.at("im").get<double>()), e.at("multiplicity").get<int>(),
                              e.at("residual").get<double>(), e.at("channel").get<int>()});
            return zs;
        };
        c.bound_states = read(j.at("bound_states"));
        c.resonances = read(j.at("resonances"));
        return c;
    }

    RealAxisScan scan(double t_max, double step) {
        ScanOptions so;
        so.t_max = t_max;
        so.step = step;
        so.workers = cfg.workers;
        return real_axis_scan(*engine, kappas(), moments_all().alpha_m1, so, &cache);
    }

    HadamardData hadamard(const RealAxisScan& s) {
        const json j = cache.record("hadamard|" + fp, [&] {
            const HadamardData h = hadamard_fit(*engine, s.plus(1).value);
            return json{{"c1", {h.c1.real(), h.c1.imag()}}, {"c2", {h.c2.real(), h.c2.imag()}},
                        {"c3", {h.c3.real(), h.c3.imag()}}, {"log_d0", {h.log_d0.real(), h.log_d0.imag()}}};
        });
        auto z = [&](const char* k) { return cd(j.at(k).at(0).get<double>(), j.at(k).at(1).get<double>()); };
        HadamardData h;
        h.c1 = z("c1");
        h.c2 = z("c2");
        h.c3 = z("c3");
        h.log_d0 = z("log_d0");
        return h;
    }

    DirichletRecord dirichlet(const RealAxisScan& s, const BlaschkeData& b, const Moments& m) {
        const json j = cache.record("dirichlet|" + fp + "|" + fmt17(s.t_max) + "|" + fmt17(s.step), [&] {
            DirichletOptions o;
            o.workers = cfg.workers;
            const DirichletRecord d = dirichlet_identity(*engine, s, b, m, o);
            return json{{"lhs_area", d.lhs_area}, {"lhs_boundary", d.lhs_boundary}, {"m_b", d.m_b}, {"s0", d.s0},
                        {"rhs", d.rhs}, {"tail_estimate", d.tail_estimate}, {"rel_err", d.rel_err}};
        });
        DirichletRecord d;
        d.lhs_area = j.at("lhs_area");
        d.lhs_boundary = j.at("lhs_boundary");
        d.m_b = j.at("m_b");
        d.s0 = j.at("s0");
        d.rhs = j.at("rhs");
        d.tail_estimate = j.at("tail_estimate");
        d.rel_err = j.at("rel_err");
        return d;
    }

    // phi'(t) = Im D'/D on the real axis
    std::vector<double> phi_prime(const std::vector<double>& ts) {
        std::vector<double> out;
        for (double t : ts) {
            const json j = cache.record("phiprime|" + fp + "|" + fmt17(t), [&] { return json(engine->log_derivative(cd(t, 0)).imag()); });
            out.push_back(j.get<double>());
        }
        return out;
    }

    std::optional<double> lattice() {
        if (!cfg.lattice) return std::nullopt;
        const json j = cache.record("lattice|" + fp + "|" + fmt17(cfg.lattice_box) + "|" + fmt17(cfg.lattice_spacing) + "|" +
                                        fmt17(cfg.krein.center) + "|" + fmt17(cfg.krein.half_width),
                                    [&] { return json(lattice_trace(cfg.potential, cfg.krein, cfg.lattice_box, cfg.lattice_spacing).value); });
        return j.get<double>();
    }
};

json record_json(const TraceRecord& r) {
    return {{"name", r.name}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"abs_err", r.abs_err}, {"rel_err", r.rel_err},
            {"tail_estimate", r.tail_estimate}, {"tail_converged", r.tail_converged}};
}

std::vector<double> bw_grid() {
    std::vector<double> ts;
    for (int i = 0; i <= 10; ++i) ts.push_back(0.5 + 0.25 * i);
    return ts;
}

void write_effective_config(const RunConfig& cfg) {
    write_text(fs::path(cfg.out_dir) / "effective_config.json", dump17(effective_config(cfg)) + "\n");
}

} // namespace

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const GridFileError*>(&e)) return 2;
    if (dynamic_cast<const NotDifferentiable*>(&e)) return 3;
    if (dynamic_cast<const BranchJumpDetected*>(&e)) return 4;
    if (dynamic_cast<const DepthLimitExceeded*>(&e)) return 5;
    if (dynamic_cast<const TailNotConverged*>(&e)) return 6;
    return 1;
}

void cmd_moments(const RunConfig& cfg, DiskCache&, CommandStats&) {
    MomentOptions mo;
    mo.tolerance = cfg.quadrature_tol;
    mo.want_alpha_1 = cfg.want_alpha_1;
    const Moments m = moments(cfg.potential, mo);
    json out{{"schema_version", config_schema_version},
             {"alpha_m1", m.alpha_m1},
             {"alpha_0", m.alpha_0},
             {"alpha_1", m.has_alpha_1 ? json(m.alpha_1) : json(nullptr)},
             {"error", {m.error(0), m.error(1), m.error(2)}},
             {"int_v2", m.int_v2},
             {"int_grad2", m.has_alpha_1 ? json(m.int_grad2) : json(nullptr)},
             {"int_v3", m.int_v3}};
    write_effective_config(cfg);
    write_text(fs::path(cfg.out_dir) / "moments.json", dump17(out) + "\n");
}

void cmd_scan(const RunConfig& cfg, DiskCache& cache, CommandStats& stats) {
    Session s(cfg, cache);
    const RealAxisScan scan = s.scan(cfg.t_max, cfg.scan_step);
    std::string csv = "t,ReD,ImD,rho,phi,phi_sc,phi_B,rho_B,dphiB_dt\n";
    for (const ScanRow& r : scan.rows)
        csv += csv_row({r.t, r.value.d.real(), r.value.d.imag(), r.value.rho, r.value.phi, r.phi_sc, r.phi_b, r.rho_b, r.dphi_b});
    stats.rows = static_cast<long>(scan.rows.size());
    write_effective_config(cfg);
    write_text(fs::path(cfg.out_dir) / "scan.csv", csv);
}

void cmd_spectrum(const RunConfig& cfg, DiskCache& cache, CommandStats&) {
    Session s(cfg, cache);
    const json cat = s.catalog_json();
    write_effective_config(cfg);
    write_text(fs::path(cfg.out_dir) / "catalog.json", dump17(cat) + "\n");
}

void cmd_trace_check(const RunConfig& cfg, DiskCache& cache, CommandStats& stats) {
    Session s(cfg, cache);
    const Moments m = s.moments_all();
    const RealAxisScan scan = s.scan(cfg.t_max, cfg.scan_step);
    stats.rows = static_cast<long>(scan.rows.size());
    const BlaschkeData b = beta_gamma(scan.kappas, m);
    TraceOptions to;
    to.throw_on_tail = false;
    const TraceReport rep = trace_formula_suite(scan, b, m, to);
    const HilbertRecord hil = hilbert_identity(scan);
    const DirichletRecord dir = s.dirichlet(scan, b, m);
    const SpectralCatalog cat = s.catalog();
    const HadamardData had = s.hadamard(scan);
    std::vector<double> lambdas;
    for (double k : scan.kappas) lambdas.push_back(k * k);
    KreinRecord kr = krein_trace(cfg.krein, scan, zeros_within(cat, std::numeric_limits<double>::infinity()), had, m, lambdas);
    kr.lattice_side = s.lattice();

    json records = json::array();
    std::string csv = "name,lhs,rhs,abs_err,rel_err,tail_estimate\n";
    auto add = [&](const std::string& name, double lhs, double rhs, double rel, double tail) {
        csv += name + ',' + fmt17(lhs) + ',' + fmt17(rhs) + ',' + fmt17(std::abs(lhs - rhs)) + ',' + fmt17(rel) + ',' + fmt17(tail) + '\n';
    };
    for (const TraceRecord& r : rep.records) {
        records.push_back(record_json(r));
        add(r.name, r.lhs, r.rhs, r.rel_err, r.tail_estimate);
    }
    add("hilbert", hil.lhs, hil.rhs, hil.rel_err, hil.tail_estimate);
    add("dirichlet", dir.lhs_area + dir.s0, dir.rhs, dir.rel_err, dir.tail_estimate);
    const double krein_scale = std::max(std::abs(kr.ssf_side), std::abs(kr.resonance_side));
    add("krein", kr.ssf_side, kr.resonance_side, krein_scale > 0 ? std::abs(kr.ssf_side - kr.resonance_side) / krein_scale : 0.0, 0.0);

    json out{{"schema_version", config_schema_version},
             {"bound_count", rep.bound_count},
             {"formulas", records},
             {"levinson_phi_sc", rep.levinson_phi},
             {"log_abs_d0", rep.log_abs_d0},
             {"unitarity_defect", rep.unitarity_defect},
             {"oddness_defect", rep.oddness_defect},
             {"evenness_defect", rep.evenness_defect},
             {"hilbert", {{"lhs", hil.lhs}, {"rhs", hil.rhs}, {"abs_err", hil.abs_err}, {"rel_err", hil.rel_err}, {"tail_estimate", hil.tail_estimate}}},
             {"dirichlet",
              {{"lhs_area", dir.lhs_area}, {"lhs_boundary", dir.lhs_boundary}, {"m_b", dir.m_b}, {"s0", dir.s0},
               {"rhs", dir.rhs}, {"rel_err", dir.rel_err}, {"tail_estimate", dir.tail_estimate}}},
             {"krein",
              {{"center", cfg.krein.center}, {"half_width", cfg.krein.half_width}, {"ssf_side", kr.ssf_side},
               {"resonance_side", kr.resonance_side},
               {"lattice_side", kr.lattice_side ? json(*kr.lattice_side) : json(nullptr)}}}};
    write_effective_config(cfg);
    write_text(fs::path(cfg.out_dir) / "trace_report.json", dump17(out) + "\n");
    write_text(fs::path(cfg.out_dir) / "trace_report.csv", csv);
    for (const TraceRecord& r : rep.records)
        if (!r.tail_converged) throw TailNotConverged(r.name + ": fitted tail unstable (partial report written)");
}

void cmd_report(const RunConfig& cfg, DiskCache& cache, CommandStats& stats) {
    Session s(cfg, cache);
    const fs::path dir = fs::path(cfg.out_dir) / "plotdata";
    const Moments m = s.moments_all();

    const RealAxisScan scan = s.scan(cfg.t_max, cfg.scan_step);
    stats.rows = static_cast<long>(scan.rows.size());
    std::string axis = "t,rho,phi\n";
    for (const ScanRow& r : scan.rows) axis += csv_row({r.t, r.value.rho, r.value.phi});

    const SpectralCatalog cat = s.catalog();
    std::string scatter = "re,im,multiplicity,residual\n";
    for (const Zero& z : cat.resonances) scatter += csv_row({z.k.real(), z.k.imag(), double(z.multiplicity), z.residual});

    const HadamardData had = s.hadamard(scan);
    const auto ts = bw_grid();
    const auto direct = s.phi_prime(ts);
    std::string bw = "radius,t,phi_prime,phi_prime_bw,deviation\n";
    for (double radius : cfg.radii) {
        const auto zs = zeros_within(cat, radius);
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const double p = breit_wigner_phi_prime(ts[i], had, zs);
            bw += csv_row({radius, ts[i], direct[i], p, std::abs(direct[i] - p)});
        }
    }

    std::string levels = "level,t_max,step,name,rel_err\n";
    for (std::size_t l = 0; l < cfg.levels.size(); ++l) {
        const RealAxisScan sc = s.scan(cfg.levels[l].t_max, cfg.levels[l].step);
        TraceOptions to;
        to.throw_on_tail = false;
        const TraceReport rep = trace_formula_suite(sc, beta_gamma(sc.kappas, m), m, to);
        for (const TraceRecord& r : rep.records)
            levels += std::to_string(l) + ',' + fmt17(sc.t_max) + ',' + fmt17(sc.step) + ',' + r.name + ',' + fmt17(r.rel_err) + '\n';
    }
    write_effective_config(cfg);
    write_text(dir / "real_axis.csv", axis);
    write_text(dir / "resonances.csv", scatter);
    write_text(dir / "breit_wigner.csv", bw);
    write_text(dir / "trace_residuals.csv", levels);
}

CommandStats run_command(const std::string& name, const RunConfig& cfg) {
    static const std::map<std::string, void (*)(const RunConfig&, DiskCache&, CommandStats&)> table = {
        {"moments", cmd_moments}, {"scan", cmd_scan}, {"spectrum", cmd_spectrum},
        {"trace-check", cmd_trace_check}, {"report", cmd_report}};
    CommandStats stats;
    const std::uint64_t before = assembly_count();
    try {
        auto it = table.find(name);
        if (it == table.end()) throw ConfigError("unknown command '" + name + "'");
        DiskCache cache(cfg.cache_dir);
        try {
            it->second(cfg, cache, stats);
        } catch (...) {
            stats.cache_hits = cache.hits();
            stats.cache_misses = cache.misses();
            throw;
        }
        stats.cache_hits = cache.hits();
        stats.cache_misses = cache.misses();
    } catch (const std::exception& e) {
        stats.exit_code = exit_code_for(e);
        stats.message = e.what();
    }
    stats.assemblies = assembly_count() - before;
    return stats;
}

} // namespace detscope
