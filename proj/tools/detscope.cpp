#include "detscope/commands.hpp"
#include "detscope/errors.hpp"

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"

int main(int argc, char** argv) {
    CLI::App app{"detscope: modified Fredholm determinants, resonances and trace formulas for -Laplacian + V in 3D"};
    app.require_subcommand(1, 1);
    std::string config_path, cache_dir, out_dir;
    int workers = 0;
    for (const char* name : {"moments", "scan", "spectrum", "trace-check", "report"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--cache", cache_dir, "cache directory");
        sub->add_option("--out", out_dir, "output directory");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    detscope::RunConfig cfg;
    try {
        cfg = detscope::load_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << "detscope: " << e.what() << '\n';
        return detscope::exit_code_for(e);
    }
    if (const char* env = std::getenv("DETSCOPE_CACHE"); env && *env) cfg.cache_dir = env;
    if (!cache_dir.empty()) cfg.cache_dir = cache_dir;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (workers > 0) cfg.workers = workers;

    const auto stats = detscope::run_command(command, cfg);
    if (stats.exit_code != 0) std::cerr << "detscope: " << stats.message << '\n';
    std::cerr << "detscope " << command << ": rows " << stats.rows << ", cache hits " << stats.cache_hits << ", misses "
              << stats.cache_misses << ", matrix assemblies " << stats.assemblies << '\n';
    return stats.exit_code;
}
