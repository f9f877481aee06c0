#pragma once

// YAML run configuration. Example:
//
//   command: manufacture          # solve | manufacture | verify
//   n: 2
//   N: 16
//   g: {real: [[1, 0], [0, 1]]}
//   h: {kind: conformal-mode, amplitude: 0.1, wavevector: [1, 0, 0, 1]}
//   F: {kind: zero}
//   u_star: {modes: [{amplitude: 0.05, wavevector: [1, 0, 0, 0]}]}
//   schedule: {steps: 8}
//   tolerances: {outer: 1.0e-10, inner: 1.0e-3}
//   output_dir: out
//   seed: 0

#include "npsh/ma_solver.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace npsh {

enum class Command { Solve, Manufacture, Verify };

/// a * cos(2 pi k.x + phase) with k indexed by real axis.
struct FourierMode {
    double amplitude = 0.0;
    std::vector<int> wavevector;
    double phase = 0.0;
};

struct MetricFieldSpec {
    enum class Kind { Constant, ConformalMode, File } kind = Kind::Constant;
    std::optional<HermitianMatrix> matrix;  ///< Constant; defaults to g
    FourierMode mode;                       ///< ConformalMode: (1 + mode) g
    std::string path;
};

struct ScalarFieldSpec {
    enum class Kind { Zero, FourierModes, File } kind = Kind::Zero;
    std::vector<FourierMode> modes;
    std::string path;
};

struct RunConfig {
    Command command = Command::Solve;
    bool has_problem = false;  ///< false only for verify without problem data
    int n = 2;
    int N = 16;
    int active = -1;
    HermitianMatrix g;
    MetricFieldSpec h;
    ScalarFieldSpec F;
    std::optional<ScalarFieldSpec> u_star;
    double margin_min = 0.1;
    std::vector<double> schedule;
    SolverOptions solver;
    std::vector<int> verify_dims{2, 3, 4};
    int verify_trials = 1000;
    bool uniqueness = false;
    std::string output_dir = "npsh_out";
    std::uint64_t seed = 0;
};

/// Throws ConfigError naming the offending field and line.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& origin = "<string>");

ScalarField make_scalar_field(const TorusGrid& grid, const ScalarFieldSpec& spec);

/// Builds and validates the problem; for `manufacture`, F is generated from u_star.
/// ProblemSpec and cone violations are rethrown as ConfigError.
ProblemSpec build_problem(const RunConfig& config);

}  // namespace npsh
