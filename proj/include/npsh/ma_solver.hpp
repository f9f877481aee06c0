#pragma once

// Newton-continuity solver for
//
//   (omega_h + ((Delta u) omega - i ddbar u)/(n-1))^n = e^{F+b} omega^n,   omega_h + ... > 0,
//
// on the flat torus. Internally u is kept mean-zero; the sup-zero normalization is applied only
// to reported output (b is unaffected by the gauge).

#include "npsh/form_algebra.hpp"
#include "npsh/torus_field.hpp"

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace npsh {

struct ProblemSpec {
    HermitianMatrix g;  ///< constant Kaehler metric
    MatrixField h;      ///< Hermitian metric omega_h
    ScalarField F;

    const TorusGrid& grid() const { return F.grid(); }
    int n() const { return g.dim(); }

    /// Throws std::invalid_argument on shape mismatches, SingularMetricError for g and
    /// ConeError when h is not pointwise positive definite.
    void validate() const;
};

/// Largest Fourier coefficient in the top third of the spectrum relative to the largest overall.
/// Smooth band-limited data sits below 1e-10.
double spectral_tail_ratio(const ScalarField& f);

struct SolverOptions {
    double tol = 1e-10;          ///< sup norm of the residual at every accepted t
    double inner_rtol = 1e-3;    ///< relative 2-norm tolerance of the Krylov solve
    int max_krylov = 500;
    int gmres_restart = 50;
    int max_newton = 40;
    int max_halvings = 30;
    double min_dt = 1e-4;
    double cone_floor = 1e-8;
    double cone_shrink = 0.01;   ///< accepted margin must exceed this fraction of the previous one
};

struct SolverState {
    ScalarField u;  ///< mean-zero gauge
    double b = 0.0;
    double t = 0.0;
    double residual_inf = 0.0;
    double cone_margin_min = 0.0;
    int newton_iters = 0;
};

struct StepRecord {
    int step = 0;
    double t = 0.0;
    int newton_iters = 0;
    double residual_inf = 0.0;
    double cone_margin = 0.0;
    double b = 0.0;
};

struct SolveResult {
    SolverState state;
    ScalarField u_sup;                  ///< u - sup u
    std::vector<StepRecord> steps;
    std::vector<double> final_residuals;  ///< Newton residual history of the last t-step
    double min_accepted_margin = 0.0;   ///< over every accepted Newton iterate
    int krylov_iterations = 0;
    int bisections = 0;

    /// max r_{k+1} / r_k^2 over the last three Newton residuals (0 if fewer are available).
    double quadratic_constant() const;
};

using DiagnosticSink = std::function<void(const StepRecord&)>;

struct LinearSolution {
    ScalarField v;
    double db = 0.0;
    int iterations = 0;
    double relative_residual = 0.0;
};

struct BBounds {
    double lo = 0.0;
    double hi = 0.0;
};

/// gtilde = h + ((Delta u) g - u_{i\bar j})/(n-1) pointwise.
MatrixField gtilde_field(const ProblemSpec& spec, const ScalarField& u);

/// r = log det gtilde - log det h - t (F + log(det g / det h)) - b.
/// Throws ConeError when gtilde leaves the positive cone.
ScalarField residual(const ProblemSpec& spec, const ScalarField& u, double b, double t);

/// Theta^{i\bar j} v_{i\bar j} - db, the derivative of `residual` at (state.u, state.b).
ScalarField linearized_apply(const ProblemSpec& spec, const SolverState& state, const ScalarField& v, double db);

/// Solves linearized_apply(v, db) = -rhs by right-preconditioned restarted GMRES; v is mean-zero.
/// Throws LinearSolveError("linear solve stagnated") past opts.max_krylov iterations.
LinearSolution newton_solve_linear(const ProblemSpec& spec, const SolverState& state, const ScalarField& rhs,
                                   const SolverOptions& opts = {});

/// Uniform schedule 0, 1/K, ..., 1.
std::vector<double> uniform_schedule(int steps);

/// Follows t along `schedule` (0 = t_0 < ... < t_K = 1), bisecting failed steps.
/// Throws ContinuationError when a step would fall below opts.min_dt.
SolveResult continuity_solve(const ProblemSpec& spec, std::span<const double> schedule, const SolverOptions& opts = {},
                             const DiagnosticSink& sink = {});

/// Damped Newton at fixed `initial.t` from an arbitrary admissible starting point.
SolveResult newton_solve(const ProblemSpec& spec, const SolverState& initial, const SolverOptions& opts = {},
                         const DiagnosticSink& sink = {});

/// F := log det gtilde(u_star) - log det g, so that (u_star, 0) solves the discrete equation.
/// Throws ConeError("scale down u_star") when the cone margin of gtilde(u_star) is below
/// `margin_min` anywhere.
ProblemSpec manufacture(const HermitianMatrix& g, const MatrixField& h, const ScalarField& u_star,
                        double margin_min = 0.1);

/// inf and sup of log det h - log det g - F: the maximum principle confines b to this interval.
BBounds estimate_b_bounds(const ProblemSpec& spec);

/// CSV with columns step,t,newton_iters,residual_inf,cone_margin,b.
void write_diagnostics_csv(std::ostream& os, std::span<const StepRecord> steps);

}  // namespace npsh
