#include "npsh/run.hpp"

#include "npsh/config.hpp"
#include "npsh/errors.hpp"
#include "npsh/verifier.hpp"

#include "json.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace npsh {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FieldIoError(path.string(), "cannot open for writing");
    out << text;
    if (!out) throw FieldIoError(path.string(), "write failed");
}

void write_reports(const fs::path& path, const std::vector<CheckReport>& reports)
{
    std::string text;
    for (const CheckReport& r : reports) text += to_json_line(r) + "\n";
    write_text(path, text);
}

void write_steps(const fs::path& path, const std::vector<StepRecord>& steps)
{
    std::ostringstream os;
    write_diagnostics_csv(os, steps);
    write_text(path, os.str());
}

void write_slice(const fs::path& path, const ScalarField& u)
{
    const TorusGrid& grid = u.grid();
    const int a = 0;
    const int b = grid.active() >= 2 ? 2 : 1;
    std::ostringstream os;
    os << std::setprecision(17);
    os << (b == 2 ? "x1,x2,u\n" : "x1,y1,u\n");
    for (std::size_t p = 0; p < grid.size(); ++p) {
        bool on_plane = true;
        for (int axis = 0; axis < grid.real_axes() && on_plane; ++axis) {
            if (axis != a && axis != b && grid.index(p, axis) != 0) on_plane = false;
        }
        if (on_plane) os << grid.coordinate(p, a) << ',' << grid.coordinate(p, b) << ',' << u[p] << '\n';
    }
    write_text(path, os.str());
}

bool all_hard_pass(const std::vector<CheckReport>& reports)
{
    for (const CheckReport& r : reports)
        if (r.hard && !r.pass) return false;
    return true;
}

fs::path output_dir(const RunConfig& config)
{
    if (const char* env = std::getenv("OUTPUT_DIR"); env && *env) return fs::path(env);
    return fs::path(config.output_dir);
}

int solve_and_report(const RunConfig& config, const ProblemSpec& spec, const fs::path& out, std::ostream& log,
                     bool quiet, std::vector<CheckReport>& reports, Json& result)
{
    std::vector<StepRecord> steps;
    const auto start = std::chrono::steady_clock::now();
    const DiagnosticSink sink = [&](const StepRecord& s) {
        steps.push_back(s);
        if (!quiet) {
            log << std::setprecision(6) << "  t=" << s.t << " newton=" << s.newton_iters << " residual=" << s.residual_inf
                << " margin=" << s.cone_margin << " b=" << s.b << '\n';
        }
    };

    const double tail = spectral_tail_ratio(spec.F);
    result["F_tail_ratio"] = tail;
    if (tail > 1e-10 && !quiet) log << "warning: F is not band-limited on this grid (tail ratio " << tail << ")\n";

    std::optional<SolveResult> solved;
    try {
        solved.emplace(continuity_solve(spec, config.schedule, config.solver, sink));
    } catch (const Error& e) {
        Json failure;
        failure["error"] = e.what();
        failure["steps_accepted"] = steps.size();
        if (!steps.empty()) {
            failure["last_t"] = steps.back().t;
            failure["last_b"] = steps.back().b;
            failure["last_residual_inf"] = steps.back().residual_inf;
            failure["last_cone_margin"] = steps.back().cone_margin;
        }
        write_text(out / "failure.json", failure.dump(2) + "\n");
        write_steps(out / "diagnostics.csv", steps);
        log << "solver failed: " << e.what() << '\n';
        return kExitSolverFailure;
    }
    const SolveResult& res = *solved;
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    write_field((out / "u_mean.field").string(), res.state.u);
    write_field((out / "u_sup.field").string(), res.u_sup);
    write_slice(out / "u_slice.csv", res.u_sup);
    write_steps(out / "diagnostics.csv", res.steps);

    const BBounds bounds = estimate_b_bounds(spec);
    result["b"] = res.state.b;
    result["residual_inf"] = res.state.residual_inf;
    result["min_cone_margin"] = res.min_accepted_margin;
    result["b_lo"] = bounds.lo;
    result["b_hi"] = bounds.hi;
    result["krylov_iterations"] = res.krylov_iterations;
    result["bisections"] = res.bisections;
    result["quadratic_constant"] = res.quadratic_constant();
    result["solve_seconds"] = elapsed;

    if (!quiet) log << std::setprecision(10) << "b = " << res.state.b << ", residual = " << res.state.residual_inf << '\n';

    if (config.command == Command::Manufacture) {
        const ScalarField u_star = make_scalar_field(spec.grid(), *config.u_star);
        const double err = sup_norm(sup_normalize(u_star) - res.u_sup);
        result["recovered_u_error"] = err;
        log << std::setprecision(6) << "recovered-u error " << err << '\n';
    }

    auto checks = verify_solution(spec, res.state.u, res.state.b, config.seed);
    reports.insert(reports.end(), checks.begin(), checks.end());
    if (config.uniqueness) reports.push_back(check_comparison_uniqueness(spec, config.solver, config.seed));
    return kExitOk;
}

}  // namespace

int run(const std::string& config_path, const RunOptions& options, std::ostream& log)
{
    RunConfig config;
    std::optional<ProblemSpec> spec;
    try {
        config = load_config(config_path);
        if (config.has_problem) spec.emplace(build_problem(config));
    } catch (const Error& e) {
        log << "config error: " << e.what() << '\n';
        return kExitConfigError;
    }

#ifdef _OPENMP
    if (options.threads > 0) omp_set_num_threads(options.threads);
#endif

    const fs::path out = output_dir(config);
    try {
        fs::create_directories(out);
    } catch (const fs::filesystem_error& e) {
        log << "config error: output_dir: " << e.what() << '\n';
        return kExitConfigError;
    }

    std::vector<CheckReport> reports;
    Json result;
    result["command"] = config.command == Command::Solve ? "solve"
                        : config.command == Command::Manufacture ? "manufacture"
                                                                  : "verify";
    result["seed"] = config.seed;

    try {
        if (config.command == Command::Verify) {
            reports = identity_suite(config.verify_dims, config.verify_trials, config.seed);
        }
        if (spec) {
            const int code = solve_and_report(config, *spec, out, log, options.quiet, reports, result);
            if (code != kExitOk) return code;
        }
    } catch (const ContinuationError& e) {
        log << "solver failed: " << e.what() << '\n';
        return kExitSolverFailure;
    } catch (const Error& e) {
        log << "error: " << e.what() << '\n';
        return kExitSolverFailure;
    }

    const bool ok = all_hard_pass(reports);
    result["checks_passed"] = ok;
    write_reports(out / "checks.jsonl", reports);
    write_text(out / "result.json", result.dump(2) + "\n");
    if (!options.quiet) log << summary_table(reports);
    return ok ? kExitOk : kExitCheckFailure;
}

}  // namespace npsh
