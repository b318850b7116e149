#pragma once

#include "detscope/cache.hpp"
#include "detscope/config.hpp"

#include <cstdint>
#include <exception>
#include <string>

namespace detscope {

struct CommandStats {
    int exit_code = 0;
    std::string message;
    long cache_hits = 0;      // scan-row hits
    long cache_misses = 0;
    std::uint64_t assemblies = 0;
    long rows = 0;            // scan rows written
};

// Exit code for an error raised by a command: 2 config, 3 not differentiable, 4 branch jump,
// 5 depth limit, 6 tail not converged, 1 anything else.
int exit_code_for(const std::exception& e);

void cmd_moments(const RunConfig& cfg, DiskCache& cache, CommandStats& stats);
void cmd_scan(const RunConfig& cfg, DiskCache& cache, CommandStats& stats);
void cmd_spectrum(const RunConfig& cfg, DiskCache& cache, CommandStats& stats);
void cmd_trace_check(const RunConfig& cfg, DiskCache& cache, CommandStats& stats);
void cmd_report(const RunConfig& cfg, DiskCache& cache, CommandStats& stats);

// Dispatch by name with error-to-exit-code mapping; never throws.
CommandStats run_command(const std::string& name, const RunConfig& cfg);

} // namespace detscope
