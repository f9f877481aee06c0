#pragma once

// Randomized and solution-based certification of the exact identities behind the equation,
// plus report-only diagnostics for the estimates whose constants are not computable.

#include "npsh/form_algebra.hpp"
#include "npsh/ma_solver.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace npsh {

struct CheckReport {
    explicit CheckReport(std::string name = {}) : check_name(std::move(name)) {}

    std::string check_name;
    std::size_t instances = 0;
    double max_residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    bool hard = true;  ///< false for report-only diagnostics
    std::string notes;
    std::map<std::string, double> values;

    /// Sets pass from max_residual and tolerance (NaN fails).
    void finalize();
};

/// One JSON object per line; keys check_name, instances, max_residual, tolerance, pass, hard,
/// notes, values.
std::string to_json_line(const CheckReport& report);
std::string summary_table(std::span<const CheckReport> reports);

/// Deterministic generator for check `name` under `seed`.
std::mt19937_64 check_rng(std::uint64_t seed, const std::string& name);

/// B + B^* with entries of B uniform in the complex unit square.
HermitianMatrix random_hermitian(std::mt19937_64& rng, int n);
/// random_hermitian shifted by (|lambda_min| + 1) I.
HermitianMatrix random_metric(std::mt19937_64& rng, int n);

// Randomized identity checks, relative residuals.
CheckReport check_magic_identity(int n, int trials, std::uint64_t seed = 0);
CheckReport check_star_involution(int n, int trials, std::uint64_t seed = 0);
CheckReport check_det_convention(int n, int trials, std::uint64_t seed = 0);
CheckReport check_correspondence(int n, int trials, std::uint64_t seed = 0);
CheckReport check_eta_relations(int n, int trials, std::uint64_t seed = 0);

/// All five randomized checks for every n in `dims`.
std::vector<CheckReport> identity_suite(std::span<const int> dims, int trials, std::uint64_t seed = 0);

// Checks on a (possibly solved) field u.
CheckReport check_ma1_fww_equivalence(const ProblemSpec& spec, const ScalarField& u);
/// Requires (u, b) to solve the equation; compares the root form's volume with e^{(F+b)/(n-1)}.
CheckReport check_corollary_root(const ProblemSpec& spec, const ScalarField& u, double b);
/// Diagnostic; hard part is the exact intermediate bound and the eigenvalue tail inequality.
CheckReport check_lemma32_pointwise(const ProblemSpec& spec, const ScalarField& u, std::uint64_t seed = 0);
/// Diagnostic; hard part is the chain-rule sub-identity.
CheckReport check_cherrier(const ProblemSpec& spec, const ScalarField& u, std::span<const double> p_list = {});
/// Diagnostic; hard part is the trace identity and the eta relations at every grid point.
CheckReport check_second_order_quantities(const ProblemSpec& spec, const ScalarField& u);
/// Solves `spec` with K = 4 and K = 16 uniform schedules and from a perturbed warm start.
CheckReport check_comparison_uniqueness(const ProblemSpec& spec, const SolverOptions& opts = {},
                                        std::uint64_t seed = 0);
/// b of a converged run against estimate_b_bounds with 1e-9 slack.
CheckReport check_b_bounds(const ProblemSpec& spec, double b);

/// Every solution-based check except uniqueness.
std::vector<CheckReport> verify_solution(const ProblemSpec& spec, const ScalarField& u, double b,
                                         std::uint64_t seed = 0);

}  // namespace npsh
