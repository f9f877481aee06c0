#pragma once

#include <iosfwd>
#include <string>

namespace npsh {

enum ExitCode : int {
    kExitOk = 0,
    kExitSolverFailure = 1,
    kExitCheckFailure = 2,
    kExitConfigError = 64,
};

struct RunOptions {
    bool quiet = false;
    int threads = 0;  ///< 0 keeps the OpenMP default
};

/// Executes the configured command and writes its outputs under output_dir (OUTPUT_DIR in the
/// environment takes precedence):
///
///   u_mean.field, u_sup.field   solution in the mean-zero and sup-zero gauges
///   u_slice.csv                 u_sup on the (x^1, y^1) or (x^1, x^2) plane
///   result.json                 b, residuals, bounds, timings
///   diagnostics.csv             one row per accepted continuation step
///   checks.jsonl                one CheckReport per line
///   failure.json                written instead of the fields when the solver fails
int run(const std::string& config_path, const RunOptions& options, std::ostream& log);

}  // namespace npsh
