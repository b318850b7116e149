#pragma once

#include "detscope/potential.hpp"
#include "detscope/reference.hpp"

#include <string>
#include <vector>

#include "json.hpp"

namespace detscope {

inline constexpr int config_schema_version = 1;

struct RefinementLevel {
    double t_max = 0;
    double step = 0;
};

struct RunConfig {
    int schema_version = config_schema_version;
    nlohmann::json potential_spec; // as given, for the effective-config echo
    Potential potential;
    std::string grid_file;
    int resolution = 12;
    double t_max = 12;
    double scan_step = 0.05;
    Rect region{-6, 6, -2, 0};
    double quadrature_tol = 1e-9;
    double newton_tol = 1e-12;
    double zero_residual_tol = 1e-8;
    bool want_alpha_1 = true;
    Bump krein{2.125, 1.875};
    std::vector<double> radii{3, 4, 5, 6};
    std::vector<RefinementLevel> levels{{6, 0.2}, {9, 0.1}, {12, 0.05}};
    bool lattice = false;
    double lattice_box = 8;
    double lattice_spacing = 0.5;
    int workers = 1;
    std::string cache_dir = ".detscope-cache";
    std::string out_dir = ".";
};

// Parse and validate; throws ConfigError.
RunConfig parse_config(const nlohmann::json& doc, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);
nlohmann::json effective_config(const RunConfig& cfg);

// JSON text with every floating-point number printed to 17 significant digits.
std::string dump17(const nlohmann::json& j, int indent = 2);
std::string fmt17(double x);

} // namespace detscope
