#include "npsh/ma_solver.hpp"

#include "npsh/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace npsh {

namespace {

double log_det(const HermitianMatrix& m)
{
    Eigen::LLT<ComplexMatrix> llt(m.matrix());
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::quiet_NaN();
    const ComplexMatrix l = llt.matrixL();
    double s = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) s += std::log(std::norm(l(i, i)));
    return s;
}

double dot(std::span<const double> a, std::span<const double> b)
{
    std::vector<double> prod(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) prod[i] = a[i] * b[i];
    return pairwise_sum(prod);
}

double norm2(std::span<const double> a)
{
    return std::sqrt(dot(a, a));
}

struct Evaluation {
    ScalarField residual;
    MatrixField gtilde;
    double residual_inf = 0.0;
    double margin_min = 0.0;
    bool admissible = false;
};

// Per-problem cache of everything that does not depend on u.
class Workspace {
public:
    explicit Workspace(const ProblemSpec& spec)
        : spec_(spec), metric_(spec.g), ops_(spec.grid()), log_det_h_(spec.grid()), fhat_(spec.grid())
    {
        spec.validate();
        const double log_det_g = std::log(metric_.determinant());
        for (std::size_t p = 0; p < spec.grid().size(); ++p) {
            log_det_h_[p] = log_det(spec.h.at(p));
            fhat_[p] = spec.F[p] + log_det_g - log_det_h_[p];
        }
    }

    const ProblemSpec& spec() const { return spec_; }
    const Metric& metric() const { return metric_; }
    const Spectral& ops() const { return ops_; }
    const TorusGrid& grid() const { return spec_.grid(); }

    MatrixField gtilde(const ScalarField& u) const
    {
        const MatrixField hess = spectral_hessian(ops_, u);
        MatrixField out(grid());
        const std::size_t size = grid().size();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (std::size_t p = 0; p < size; ++p) out.set(p, p_operator(metric_, spec_.h.at(p), hess.at(p)));
        return out;
    }

    Evaluation evaluate(const ScalarField& u, double b, double t) const
    {
        Evaluation ev{ScalarField(grid()), gtilde(u)};
        const std::size_t size = grid().size();
        std::vector<double> margins(size);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (std::size_t p = 0; p < size; ++p) {
            const HermitianMatrix gt = ev.gtilde.at(p);
            margins[p] = cone_margin(metric_, gt);
            ev.residual[p] = margins[p] > 0.0 ? log_det(gt) - log_det_h_[p] - t * fhat_[p] - b
                                              : std::numeric_limits<double>::quiet_NaN();
        }
        ev.margin_min = *std::min_element(margins.begin(), margins.end());
        ev.admissible = ev.margin_min > 0.0;
        if (ev.admissible) {
            ev.residual_inf = sup_norm(ev.residual);
            if (!std::isfinite(ev.residual_inf)) ev.admissible = false;
        } else {
            ev.residual_inf = std::numeric_limits<double>::infinity();
        }
        return ev;
    }

    /// Packed real coefficients C with Theta^{i\bar j} v_{i\bar j} = sum_ab C_ab d_a d_b v.
    std::vector<double> coefficients(const ComplexMatrix& theta) const
    {
        const int axes = grid().real_axes();
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(axes, axes);
        for (int i = 0; i < grid().active(); ++i) {
            for (int j = 0; j < grid().active(); ++j) {
                const double re = 0.25 * theta(i, j).real();
                const double im = 0.25 * theta(i, j).imag();
                c(2 * i, 2 * j) += re;
                c(2 * i + 1, 2 * j + 1) += re;
                c(2 * i, 2 * j + 1) += im;
                c(2 * i + 1, 2 * j) -= im;
            }
        }
        std::vector<double> packed(static_cast<std::size_t>(ops_.pair_count()));
        for (int a = 0; a < axes; ++a)
            for (int b = a; b < axes; ++b) packed[static_cast<std::size_t>(ops_.pair_index(a, b))] = 0.5 * (c(a, b) + c(b, a));
        return packed;
    }

private:
    const ProblemSpec& spec_;
    Metric metric_;
    Spectral ops_;
    ScalarField log_det_h_;
    ScalarField fhat_;
};

// The linearization at one state: variable coefficients plus the constant-coefficient
// preconditioner built from the grid mean of gtilde.
class Linearization {
public:
    Linearization(const Workspace& ws, const MatrixField& gtilde) : ws_(ws)
    {
        const std::size_t size = ws.grid().size();
        const int act = ws.grid().active();
        const auto P = static_cast<std::size_t>(act * act);
        weights_.resize(size * P);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (std::size_t p = 0; p < size; ++p) {
            const ComplexMatrix theta = theta_matrix(ws.metric(), gtilde.at(p));
            // tr(Theta V) over the parts returned by Spectral::complex_hessian_parts
            double* w = weights_.data() + p * P;
            for (int i = 0; i < act; ++i) {
                for (int j = i; j < act; ++j) {
                    if (j == i) {
                        *w++ = theta(i, i).real();
                    } else {
                        *w++ = 2.0 * theta(i, j).real();
                        *w++ = 2.0 * theta(i, j).imag();
                    }
                }
            }
        }
        const int n = ws.grid().n();
        ComplexMatrix mean_gt(n, n);
        std::vector<double> re(size), im(size);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                for (std::size_t p = 0; p < size; ++p) {
                    const Complex z = gtilde.data()[p * static_cast<std::size_t>(n * n) + static_cast<std::size_t>(i * n + j)];
                    re[p] = z.real();
                    im[p] = z.imag();
                }
                mean_gt(i, j) = Complex(pairwise_sum(re), pairwise_sum(im)) / static_cast<double>(size);
            }
        }
        precond_ = ws.coefficients(theta_matrix(ws.metric(), HermitianMatrix::from_raw(mean_gt)));
    }

    ScalarField apply(const ScalarField& v, double db) const
    {
        const auto parts = ws_.ops().complex_hessian_parts(v);
        const std::size_t P = parts.size();
        ScalarField out(v.grid());
        const std::size_t size = v.size();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (std::size_t p = 0; p < size; ++p) {
            double s = -db;
            for (std::size_t c = 0; c < P; ++c) s += weights_[p * P + c] * parts[c][p];
            out[p] = s;
        }
        return out;
    }

    // (v, db) = P^{-1} w
    std::pair<ScalarField, double> precondition(const ScalarField& w) const
    {
        const double wbar = mean(w);
        return {ws_.ops().solve_constant(w, precond_), -wbar};
    }

private:
    const Workspace& ws_;
    std::vector<double> weights_;
    std::vector<double> precond_;
};

LinearSolution gmres(const Linearization& lin, const ScalarField& rhs, const SolverOptions& opts)
{
    const TorusGrid& grid = rhs.grid();
    const std::size_t size = grid.size();
    // Solve (A P^{-1}) w = -rhs.
    std::vector<double> target(size);
    for (std::size_t p = 0; p < size; ++p) target[p] = -rhs[p];
    const double target_norm = norm2(target);

    LinearSolution result{ScalarField(grid), 0.0, 0, 0.0};
    if (target_norm == 0.0) return result;

    auto op = [&](std::span<const double> w) {
        ScalarField wf(grid, std::vector<double>(w.begin(), w.end()));
        auto [v, db] = lin.precondition(wf);
        return lin.apply(v, db);
    };

    const double goal = opts.inner_rtol * target_norm;
    const int m = std::max(1, opts.gmres_restart);
    std::vector<double> w(size, 0.0);
    std::vector<double> r = target;
    double beta = target_norm;
    int total = 0;

    while (true) {
        std::vector<std::vector<double>> basis;
        basis.reserve(static_cast<std::size_t>(m + 1));
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
        std::vector<double> cs(static_cast<std::size_t>(m)), sn(static_cast<std::size_t>(m));
        Eigen::VectorXd gvec = Eigen::VectorXd::Zero(m + 1);
        gvec(0) = beta;
        basis.emplace_back(size);
        for (std::size_t p = 0; p < size; ++p) basis[0][p] = r[p] / beta;

        int k = 0;
        double resid = beta;
        for (; k < m; ++k) {
            ScalarField av = op(basis[static_cast<std::size_t>(k)]);
            std::vector<double> vec(av.values().begin(), av.values().end());
            for (int i = 0; i <= k; ++i) {
                const double hij = dot(vec, basis[static_cast<std::size_t>(i)]);
                H(i, k) = hij;
                for (std::size_t p = 0; p < size; ++p) vec[p] -= hij * basis[static_cast<std::size_t>(i)][p];
            }
            const double hnext = norm2(vec);
            H(k + 1, k) = hnext;
            for (int i = 0; i < k; ++i) {
                const double a = H(i, k), b = H(i + 1, k);
                H(i, k) = cs[static_cast<std::size_t>(i)] * a + sn[static_cast<std::size_t>(i)] * b;
                H(i + 1, k) = -sn[static_cast<std::size_t>(i)] * a + cs[static_cast<std::size_t>(i)] * b;
            }
            const double denom = std::hypot(H(k, k), H(k + 1, k));
            cs[static_cast<std::size_t>(k)] = H(k, k) / denom;
            sn[static_cast<std::size_t>(k)] = H(k + 1, k) / denom;
            H(k, k) = denom;
            H(k + 1, k) = 0.0;
            gvec(k + 1) = -sn[static_cast<std::size_t>(k)] * gvec(k);
            gvec(k) = cs[static_cast<std::size_t>(k)] * gvec(k);
            resid = std::abs(gvec(k + 1));
            ++total;
            if (resid <= goal || total >= opts.max_krylov || hnext == 0.0) {
                ++k;
                break;
            }
            basis.emplace_back(size);
            for (std::size_t p = 0; p < size; ++p) basis.back()[p] = vec[p] / hnext;
        }

        const Eigen::VectorXd y = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(gvec.head(k));
        for (int i = 0; i < k; ++i)
            for (std::size_t p = 0; p < size; ++p) w[p] += y(i) * basis[static_cast<std::size_t>(i)][p];

        ScalarField aw = op(w);
        for (std::size_t p = 0; p < size; ++p) r[p] = target[p] - aw[p];
        beta = norm2(r);
        if (beta <= goal) break;
        if (total >= opts.max_krylov) {
            throw LinearSolveError("linear solve stagnated");
        }
    }

    auto [v, db] = lin.precondition(ScalarField(grid, w));
    result.v = std::move(v);
    result.db = db;
    result.iterations = total;
    result.relative_residual = beta / target_norm;
    return result;
}

std::string describe(double t, const SolverState& s, const std::string& why)
{
    std::ostringstream os;
    os << std::setprecision(6) << "continuation failed at t=" << t << " (last accepted t=" << s.t
       << ", residual_inf=" << s.residual_inf << ", cone_margin=" << s.cone_margin_min << ", b=" << s.b << "): " << why;
    return os.str();
}

struct NewtonOutcome {
    explicit NewtonOutcome(SolverState s) : state(std::move(s)) {}

    bool ok = false;
    SolverState state;
    std::vector<double> history;
    double min_margin = std::numeric_limits<double>::infinity();
    int krylov = 0;
    std::string failure;
};

NewtonOutcome run_newton(const Workspace& ws, const SolverState& start, double t, const SolverOptions& opts)
{
    NewtonOutcome out(start);
    out.state.t = t;
    out.state.newton_iters = 0;
    Evaluation ev = ws.evaluate(out.state.u, out.state.b, t);
    if (!ev.admissible) {
        out.failure = "starting point outside the admissible cone";
        return out;
    }
    out.history.push_back(ev.residual_inf);
    out.min_margin = ev.margin_min;

    for (int it = 0; it <= opts.max_newton; ++it) {
        out.state.residual_inf = ev.residual_inf;
        out.state.cone_margin_min = ev.margin_min;
        if (ev.residual_inf <= opts.tol) {
            out.ok = true;
            return out;
        }
        if (it == opts.max_newton) break;

        std::optional<LinearSolution> solved;
        try {
            Linearization lin(ws, ev.gtilde);
            solved.emplace(gmres(lin, ev.residual, opts));
        } catch (const LinearSolveError& e) {
            out.failure = e.what();
            return out;
        }
        const LinearSolution& step = *solved;
        out.krylov += step.iterations;

        double alpha = 1.0;
        bool accepted = false;
        const double margin_floor = std::max(opts.cone_floor, opts.cone_shrink * ev.margin_min);
        for (int halving = 0; halving <= opts.max_halvings; ++halving, alpha *= 0.5) {
            ScalarField trial = out.state.u;
            for (std::size_t p = 0; p < trial.size(); ++p) trial[p] += alpha * step.v[p];
            const double trial_b = out.state.b + alpha * step.db;
            Evaluation trial_ev = ws.evaluate(trial, trial_b, t);
            if (trial_ev.admissible && trial_ev.margin_min > margin_floor && trial_ev.residual_inf < ev.residual_inf) {
                out.state.u = mean_normalize(trial);
                out.state.b = trial_b;
                ev = std::move(trial_ev);
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            out.failure = "damping exhausted without residual decrease inside the cone";
            return out;
        }
        ++out.state.newton_iters;
        out.history.push_back(ev.residual_inf);
        out.min_margin = std::min(out.min_margin, ev.margin_min);
    }
    out.failure = "Newton iteration cap reached";
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------------------------

void ProblemSpec::validate() const
{
    const Metric metric(g);
    if (g.dim() != F.grid().n()) throw std::invalid_argument("ProblemSpec: g dimension does not match grid");
    if (!(h.grid() == F.grid())) throw std::invalid_argument("ProblemSpec: h and F live on different grids");
    for (double v : F.values()) {
        if (!std::isfinite(v)) throw std::invalid_argument("ProblemSpec: F has non-finite values");
    }
    for (std::size_t p = 0; p < h.size(); ++p) {
        if (!(h.at(p).eigenvalues()(0) > 0.0)) {
            throw ConeError("ProblemSpec: h is not positive definite at grid point " + std::to_string(p));
        }
    }
}

double spectral_tail_ratio(const ScalarField& f)
{
    const Spectral ops(f.grid());
    const auto c = ops.forward(f.values());
    const int N = f.grid().N();
    double peak = 0.0, tail = 0.0;
    for (std::size_t m = 0; m < ops.modes(); ++m) {
        int kmax = 0;
        for (int a = 0; a < f.grid().real_axes(); ++a) kmax = std::max(kmax, std::abs(ops.wavenumber(m, a)));
        const double mag = std::abs(c[m]);
        peak = std::max(peak, mag);
        if (3 * kmax > N) tail = std::max(tail, mag);
    }
    return peak == 0.0 ? 0.0 : tail / peak;
}

double SolveResult::quadratic_constant() const
{
    const std::size_t k = final_residuals.size();
    double c = 0.0;
    for (std::size_t i = (k >= 3 ? k - 3 : 0); i + 1 < k; ++i) {
        const double prev = final_residuals[i];
        if (prev > 0.0) c = std::max(c, final_residuals[i + 1] / (prev * prev));
    }
    return c;
}

MatrixField gtilde_field(const ProblemSpec& spec, const ScalarField& u)
{
    const Workspace ws(spec);
    return ws.gtilde(u);
}

ScalarField residual(const ProblemSpec& spec, const ScalarField& u, double b, double t)
{
    const Workspace ws(spec);
    Evaluation ev = ws.evaluate(u, b, t);
    if (!ev.admissible) throw ConeError("left cone of (n-1)-PSH admissibility");
    return std::move(ev.residual);
}

ScalarField linearized_apply(const ProblemSpec& spec, const SolverState& state, const ScalarField& v, double db)
{
    const Workspace ws(spec);
    const Linearization lin(ws, ws.gtilde(state.u));
    return lin.apply(v, db);
}

LinearSolution newton_solve_linear(const ProblemSpec& spec, const SolverState& state, const ScalarField& rhs,
                                   const SolverOptions& opts)
{
    const Workspace ws(spec);
    const Evaluation ev = ws.evaluate(state.u, state.b, state.t);
    if (!ev.admissible) throw ConeError("left cone of (n-1)-PSH admissibility");
    const Linearization lin(ws, ev.gtilde);
    return gmres(lin, rhs, opts);
}

std::vector<double> uniform_schedule(int steps)
{
    if (steps < 1) throw std::invalid_argument("uniform_schedule: need at least one step");
    std::vector<double> s(static_cast<std::size_t>(steps) + 1);
    for (int k = 0; k <= steps; ++k) s[static_cast<std::size_t>(k)] = static_cast<double>(k) / steps;
    s.back() = 1.0;
    return s;
}

SolveResult continuity_solve(const ProblemSpec& spec, std::span<const double> schedule, const SolverOptions& opts,
                             const DiagnosticSink& sink)
{
    if (schedule.size() < 2 || schedule.front() != 0.0 || schedule.back() != 1.0) {
        throw std::invalid_argument("continuity_solve: schedule must run from 0 to 1");
    }
    for (std::size_t i = 1; i < schedule.size(); ++i) {
        if (!(schedule[i] > schedule[i - 1])) throw std::invalid_argument("continuity_solve: schedule must increase");
    }

    const Workspace ws(spec);
    SolveResult result{SolverState{ScalarField(spec.grid())}, ScalarField(spec.grid()), {}, {}};
    SolverState state{ScalarField(spec.grid()), 0.0, 0.0};

    // t = 0 is solved by (0, 0) by construction of the shifted right-hand side.
    const Evaluation start = ws.evaluate(state.u, 0.0, 0.0);
    if (!start.admissible) throw ConeError("left cone of (n-1)-PSH admissibility");
    state.residual_inf = start.residual_inf;
    state.cone_margin_min = start.margin_min;
    result.min_accepted_margin = start.margin_min;
    int step = 0;
    auto record = [&](const SolverState& s) {
        StepRecord rec{step++, s.t, s.newton_iters, s.residual_inf, s.cone_margin_min, s.b};
        result.steps.push_back(rec);
        if (sink) sink(rec);
    };
    record(state);

    std::vector<double> pending(schedule.rbegin(), schedule.rend() - 1);
    while (!pending.empty()) {
        const double target = pending.back();
        NewtonOutcome outcome = run_newton(ws, state, target, opts);
        result.krylov_iterations += outcome.krylov;
        if (outcome.ok) {
            pending.pop_back();
            state = std::move(outcome.state);
            result.min_accepted_margin = std::min(result.min_accepted_margin, outcome.min_margin);
            result.final_residuals = std::move(outcome.history);
            record(state);
            continue;
        }
        const double mid = 0.5 * (state.t + target);
        if (mid - state.t < opts.min_dt) throw ContinuationError(describe(target, state, outcome.failure));
        pending.push_back(mid);
        ++result.bisections;
    }

    result.state = state;
    result.u_sup = sup_normalize(state.u);
    return result;
}

SolveResult newton_solve(const ProblemSpec& spec, const SolverState& initial, const SolverOptions& opts,
                         const DiagnosticSink& sink)
{
    const Workspace ws(spec);
    SolverState start = initial;
    start.u = mean_normalize(initial.u);
    NewtonOutcome outcome = run_newton(ws, start, initial.t, opts);
    if (!outcome.ok) throw ContinuationError(describe(initial.t, start, outcome.failure));
    SolveResult result{outcome.state, sup_normalize(outcome.state.u), {}, {}};
    result.final_residuals = std::move(outcome.history);
    result.min_accepted_margin = outcome.min_margin;
    result.krylov_iterations = outcome.krylov;
    StepRecord rec{0, outcome.state.t, outcome.state.newton_iters, outcome.state.residual_inf,
                   outcome.state.cone_margin_min, outcome.state.b};
    result.steps.push_back(rec);
    if (sink) sink(rec);
    return result;
}

ProblemSpec manufacture(const HermitianMatrix& g, const MatrixField& h, const ScalarField& u_star, double margin_min)
{
    const Metric metric(g);
    const MatrixField hess = spectral_hessian(u_star);
    ScalarField F(u_star.grid());
    const double log_det_g = std::log(metric.determinant());
    for (std::size_t p = 0; p < F.size(); ++p) {
        const HermitianMatrix gt = p_operator(metric, h.at(p), hess.at(p));
        if (cone_margin(metric, gt) < margin_min) throw ConeError("scale down u_star");
        F[p] = log_det(gt) - log_det_g;
    }
    ProblemSpec spec{g, h, std::move(F)};
    spec.validate();
    return spec;
}

BBounds estimate_b_bounds(const ProblemSpec& spec)
{
    const Metric metric(spec.g);
    const double log_det_g = std::log(metric.determinant());
    BBounds bounds{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (std::size_t p = 0; p < spec.F.size(); ++p) {
        const double q = log_det(spec.h.at(p)) - log_det_g - spec.F[p];
        bounds.lo = std::min(bounds.lo, q);
        bounds.hi = std::max(bounds.hi, q);
    }
    return bounds;
}

void write_diagnostics_csv(std::ostream& os, std::span<const StepRecord> steps)
{
    os << "step,t,newton_iters,residual_inf,cone_margin,b\n";
    os << std::setprecision(17);
    for (const StepRecord& s : steps) {
        os << s.step << ',' << s.t << ',' << s.newton_iters << ',' << s.residual_inf << ',' << s.cone_margin << ','
           << s.b << '\n';
    }
}

}  // namespace npsh
