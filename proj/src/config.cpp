#include "detscope/config.hpp"

#include "detscope/discretize.hpp"
#include "detscope/errors.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace detscope {

namespace {

using nlohmann::json;

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

void require_positive(double x, const char* what) {
    if (!(x > 0) || !std::isfinite(x)) throw ConfigError(std::string(what) + " must be positive");
}

Potential parse_potential(const json& p, const std::string& base_dir, std::string& grid_file) {
    if (!p.is_object()) throw ConfigError("'potential' must be an object");
    const std::string kind_name = get_or<std::string>(p, "kind", "");
    const PotentialKind kind = potential_kind_from_string(kind_name);
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    if (p.contains("center")) {
        const auto v = get_or<std::vector<double>>(p, "center", {});
        if (v.size() != 3) throw ConfigError("'center' needs three numbers");
        c = Eigen::Vector3d(v[0], v[1], v[2]);
    }
    switch (kind) {
    case PotentialKind::zero:
        return Potential::zero();
    case PotentialKind::grid_sampled: {
        grid_file = get_or<std::string>(p, "grid_file", "");
        if (grid_file.empty()) throw ConfigError("grid-sampled potential needs 'grid_file'");
        std::filesystem::path path(grid_file);
        if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
        try {
            return Potential::grid_sampled(read_grid_file(path.string()));
        } catch (const GridFileError& e) {
            throw ConfigError(e.what());
        }
    }
    default:
        break;
    }
    const double depth = get_or<double>(p, "depth", 0.0);
    const double width = get_or<double>(p, "width", 1.0);
    require_positive(width, "potential width");
    if (!std::isfinite(depth)) throw ConfigError("potential depth must be finite");
    switch (kind) {
    case PotentialKind::gaussian_well:
        return Potential::gaussian_well(depth, width, c);
    case PotentialKind::polynomial_bump:
        return Potential::polynomial_bump(depth, width, c);
    case PotentialKind::square_well:
        return Potential::square_well(depth, width, c);
    default:
        throw ConfigError("unsupported potential kind");
    }
}

void dump_value(std::ostringstream& os, const json& j, int indent, int level) {
    const std::string pad(indent > 0 ? indent * (level + 1) : 0, ' ');
    const std::string close(indent > 0 ? indent * level : 0, ' ');
    const char* nl = indent > 0 ? "\n" : "";
    switch (j.type()) {
    case json::value_t::object: {
        if (j.empty()) {
            os << "{}";
            return;
        }
        os << '{' << nl;
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) os << ',' << nl;
            first = false;
            os << pad << json(it.key()).dump() << (indent > 0 ? ": " : ":");
            dump_value(os, it.value(), indent, level + 1);
        }
        os << nl << close << '}';
        return;
    }
    case json::value_t::array: {
        if (j.empty()) {
            os << "[]";
            return;
        }
        os << '[' << nl;
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i) os << ',' << nl;
            os << pad;
            dump_value(os, j[i], indent, level + 1);
        }
        os << nl << close << ']';
        return;
    }
    case json::value_t::number_float: {
        const double x = j.get<double>();
        os << (std::isfinite(x) ? fmt17(x) : "null");
        return;
    }
    default:
        os << j.dump();
    }
}

} // namespace

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    std::string s(buf);
    // keep floats recognizable as floats on re-parse
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

std::string dump17(const nlohmann::json& j, int indent) {
    std::ostringstream os;
    dump_value(os, j, indent, 0);
    return os.str();
}

RunConfig parse_config(const json& doc, const std::string& base_dir) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    if (!doc.contains("schema_version")) throw ConfigError("missing 'schema_version'");
    RunConfig cfg;
    cfg.schema_version = get_or<int>(doc, "schema_version", 0);
    if (cfg.schema_version != config_schema_version)
        throw ConfigError("unsupported schema_version " + std::to_string(cfg.schema_version));
    if (!doc.contains("potential")) throw ConfigError("missing 'potential'");
    cfg.potential_spec = doc.at("potential");
    cfg.potential = parse_potential(cfg.potential_spec, base_dir, cfg.grid_file);

    cfg.resolution = get_or<int>(doc, "resolution", cfg.resolution);
    if (cfg.resolution < 2) throw ConfigError("resolution must be at least 2");
    if (!cfg.potential.radial()) {
        try {
            build_grid(cfg.potential, cfg.resolution);
        } catch (const ResolutionTooLarge& e) {
            throw ConfigError(e.what());
        }
    }
    if (doc.contains("scan")) {
        const json& s = doc.at("scan");
        cfg.t_max = get_or<double>(s, "t_max", cfg.t_max);
        cfg.scan_step = get_or<double>(s, "step", cfg.scan_step);
    }
    require_positive(cfg.t_max, "scan.t_max");
    require_positive(cfg.scan_step, "scan.step");
    // the tail fits need a handful of nodes in [3T/4, T]
    if (cfg.scan_step * 16 > cfg.t_max) throw ConfigError("scan.step must be at most scan.t_max / 16");
    if (doc.contains("search_region")) {
        const json& r = doc.at("search_region");
        const auto re = get_or<std::vector<double>>(r, "re", {cfg.region.re_lo, cfg.region.re_hi});
        const auto im = get_or<std::vector<double>>(r, "im", {cfg.region.im_lo, cfg.region.im_hi});
        if (re.size() != 2 || im.size() != 2 || !(re[0] < re[1]) || !(im[0] < im[1]))
            throw ConfigError("search_region needs increasing 're' and 'im' pairs");
        cfg.region = {re[0], re[1], im[0], im[1]};
    }
    if (cfg.region.im_lo < -kappa_max(cfg.potential.r_eff))
        throw ConfigError("search_region depth exceeds the conditioning limit " + std::to_string(kappa_max(cfg.potential.r_eff)));
    if (doc.contains("tolerances")) {
        const json& t = doc.at("tolerances");
        cfg.quadrature_tol = get_or<double>(t, "quadrature", cfg.quadrature_tol);
        cfg.newton_tol = get_or<double>(t, "newton", cfg.newton_tol);
        cfg.zero_residual_tol = get_or<double>(t, "zero_residual", cfg.zero_residual_tol);
    }
    require_positive(cfg.quadrature_tol, "tolerances.quadrature");
    require_positive(cfg.newton_tol, "tolerances.newton");
    require_positive(cfg.zero_residual_tol, "tolerances.zero_residual");
    if (doc.contains("moments")) cfg.want_alpha_1 = get_or<bool>(doc.at("moments"), "alpha_1", cfg.want_alpha_1);
    if (doc.contains("krein")) {
        const json& k = doc.at("krein");
        cfg.krein.center = get_or<double>(k, "center", cfg.krein.center);
        cfg.krein.half_width = get_or<double>(k, "half_width", cfg.krein.half_width);
        require_positive(cfg.krein.half_width, "krein.half_width");
        cfg.lattice = get_or<bool>(k, "lattice", cfg.lattice);
        cfg.lattice_box = get_or<double>(k, "lattice_box", cfg.lattice_box);
        cfg.lattice_spacing = get_or<double>(k, "lattice_spacing", cfg.lattice_spacing);
    }
    if (doc.contains("report")) {
        const json& r = doc.at("report");
        cfg.radii = get_or<std::vector<double>>(r, "radii", cfg.radii);
        if (r.contains("levels")) {
            cfg.levels.clear();
            for (const auto& l : r.at("levels")) {
                if (!l.is_array() || l.size() != 2) throw ConfigError("report.levels entries are [t_max, step]");
                cfg.levels.push_back({l[0].get<double>(), l[1].get<double>()});
            }
        }
        for (double x : cfg.radii) require_positive(x, "report.radii");
        for (const auto& l : cfg.levels) {
            require_positive(l.t_max, "report level t_max");
            require_positive(l.step, "report level step");
        }
    }
    cfg.workers = get_or<int>(doc, "workers", cfg.workers);
    if (cfg.workers < 1) throw ConfigError("workers must be at least 1");
    cfg.cache_dir = get_or<std::string>(doc, "cache_dir", cfg.cache_dir);
    cfg.out_dir = get_or<std::string>(doc, "out_dir", cfg.out_dir);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(doc, std::filesystem::path(path).parent_path().string());
}

nlohmann::json effective_config(const RunConfig& c) {
    json levels = json::array();
    for (const auto& l : c.levels) levels.push_back({l.t_max, l.step});
    return {
        {"schema_version", c.schema_version},
        {"potential", c.potential_spec},
        {"resolution", c.resolution},
        {"scan", {{"t_max", c.t_max}, {"step", c.scan_step}}},
        {"search_region", {{"re", {c.region.re_lo, c.region.re_hi}}, {"im", {c.region.im_lo, c.region.im_hi}}}},
        {"tolerances", {{"quadrature", c.quadrature_tol}, {"newton", c.newton_tol}, {"zero_residual", c.zero_residual_tol}}},
        {"moments", {{"alpha_1", c.want_alpha_1}}},
        {"krein",
         {{"center", c.krein.center},
          {"half_width", c.krein.half_width},
          {"lattice", c.lattice},
          {"lattice_box", c.lattice_box},
          {"lattice_spacing", c.lattice_spacing}}},
        {"report", {{"radii", c.radii}, {"levels", levels}}},
        {"workers", c.workers},
        {"cache_dir", c.cache_dir},
        {"out_dir", c.out_dir},
    };
}

} // namespace detscope
