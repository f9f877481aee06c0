#include "npsh/verifier.hpp"

#include "npsh/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace npsh {

namespace {

constexpr double kIdentityTol = 1e-11;
constexpr double kSubIdentityTol = 1e-12;

double max_abs(const ComplexMatrix& m)
{
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

double rel_diff(const ComplexMatrix& a, const ComplexMatrix& b)
{
    return max_abs(a - b) / std::max(1.0, std::max(max_abs(a), max_abs(b)));
}

double rel_diff(double a, double b)
{
    return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

void track(CheckReport& r, double residual)
{
    if (std::isnan(residual) || residual > r.max_residual || std::isnan(r.max_residual)) r.max_residual = residual;
}

FormTopMinusOne scaled(const FormTopMinusOne& f, double s)
{
    return FormTopMinusOne(f.psi() * s);
}

// omega_0 with star(omega_0^{n-1})/(n-1)! = h.
HermitianMatrix omega_zero(const Metric& g, const HermitianMatrix& h)
{
    const int n = g.dim();
    return root_n_minus_one(g, scaled(hodge_star_11(g, h), factorial(n - 1)));
}

// omega_0^{n-1} + i ddbar u ^ omega^{n-2}
FormTopMinusOne fww_form(const Metric& g, const HermitianMatrix& h, const HermitianMatrix& hess)
{
    return wedge_power(omega_zero(g, h)) + wedge_with_metric_power(g, hess);
}

double gradient_norm2(const ComplexMatrix& g_inv, const Eigen::VectorXcd& d)
{
    return (d.adjoint() * g_inv * d)(0, 0).real();
}

}  // namespace

void CheckReport::finalize()
{
    pass = !std::isnan(max_residual) && max_residual <= tolerance;
}

std::string to_json_line(const CheckReport& r)
{
    nlohmann::ordered_json j;
    j["check_name"] = r.check_name;
    j["instances"] = r.instances;
    j["max_residual"] = r.max_residual;
    j["tolerance"] = r.tolerance;
    j["pass"] = r.pass;
    j["hard"] = r.hard;
    j["notes"] = r.notes;
    nlohmann::ordered_json values = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.values) values[k] = v;
    j["values"] = values;
    return j.dump();
}

std::string summary_table(std::span<const CheckReport> reports)
{
    std::ostringstream os;
    os << std::left << std::setw(34) << "check" << std::setw(10) << "instances" << std::setw(14) << "max_residual"
       << std::setw(12) << "tolerance" << "result\n";
    for (const CheckReport& r : reports) {
        os << std::left << std::setw(34) << r.check_name << std::setw(10) << r.instances << std::setw(14)
           << std::setprecision(3) << std::scientific << r.max_residual << std::setw(12) << r.tolerance
           << std::defaultfloat << (r.pass ? "pass" : "FAIL") << (r.hard ? "" : " (diagnostic)") << '\n';
    }
    return os.str();
}

std::mt19937_64 check_rng(std::uint64_t seed, const std::string& name)
{
    std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    for (unsigned char c : name) words.push_back(c);
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

HermitianMatrix random_hermitian(std::mt19937_64& rng, int n)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ComplexMatrix b(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) b(i, j) = Complex(unit(rng), unit(rng));
    return HermitianMatrix::from_raw(b + b.adjoint());
}

HermitianMatrix random_metric(std::mt19937_64& rng, int n)
{
    const HermitianMatrix a = random_hermitian(rng, n);
    const double shift = std::abs(a.eigenvalues()(0)) + 1.0;
    return a + HermitianMatrix::identity(n) * shift;
}

// ---------------------------------------------------------------------------------------------

CheckReport check_magic_identity(int n, int trials, std::uint64_t seed)
{
    CheckReport r{"magic_identity_n" + std::to_string(n)};
    r.tolerance = kIdentityTol;
    auto rng = check_rng(seed, r.check_name);
    for (int k = 0; k < trials; ++k) {
        const Metric g(random_metric(rng, n));
        const HermitianMatrix w0 = random_metric(rng, n);
        const HermitianMatrix wt = random_hermitian(rng, n);
        const HermitianMatrix h = hodge_star_n1(g, wedge_power(w0)) * (1.0 / factorial(n - 1));
        const double t1 = g.trace(wt) * g.trace(h);
        const double t2 = wedge11_invariant(g, wt, h);
        const double t3 = Metric(w0).trace(wt) * (w0.determinant() / g.determinant());
        track(r, std::abs(t1 - t2 - t3) / std::max({1.0, std::abs(t1), std::abs(t2), std::abs(t3)}));
        ++r.instances;
    }
    r.finalize();
    return r;
}

CheckReport check_star_involution(int n, int trials, std::uint64_t seed)
{
    CheckReport r{"star_involution_n" + std::to_string(n)};
    r.tolerance = kIdentityTol;
    auto rng = check_rng(seed, r.check_name);
    for (int k = 0; k < trials; ++k) {
        const Metric g(random_metric(rng, n));
        const HermitianMatrix a = random_hermitian(rng, n);
        track(r, rel_diff(hodge_star_n1(g, hodge_star_11(g, a)).matrix(), a.matrix()));
        const FormTopMinusOne psi(random_hermitian(rng, n));
        track(r, rel_diff(hodge_star_11(g, hodge_star_n1(g, psi)).matrix(), psi.matrix()));
        ++r.instances;
    }
    r.finalize();
    return r;
}

CheckReport check_det_convention(int n, int trials, std::uint64_t seed)
{
    CheckReport r{"det_convention_n" + std::to_string(n)};
    r.tolerance = kIdentityTol;
    auto rng = check_rng(seed, r.check_name);
    for (int k = 0; k < trials; ++k) {
        const Metric g(random_metric(rng, n));
        const double expected = std::pow(g.determinant(), n - 1);
        track(r, std::abs(det_form_top_minus_one(wedge_power(g.g())) - expected) / expected);

        const HermitianMatrix chi = random_metric(rng, n);
        const double lhs = chi.determinant() / g.determinant();
        const double rhs =
            det_form_top_minus_one(hodge_star_11(g, chi)) / det_form_top_minus_one(hodge_star_11(g, g.g()));
        track(r, std::abs(lhs - rhs) / std::abs(lhs));
        ++r.instances;
    }
    r.finalize();
    return r;
}

CheckReport check_correspondence(int n, int trials, std::uint64_t seed)
{
    CheckReport r{"correspondence_n" + std::to_string(n)};
    r.tolerance = kIdentityTol;
    auto rng = check_rng(seed, r.check_name);
    const double fact = factorial(n - 1);
    for (int k = 0; k < trials; ++k) {
        const Metric g(random_metric(rng, n));
        const HermitianMatrix w0 = random_metric(rng, n);
        const HermitianMatrix hess = random_hermitian(rng, n);
        const FormTopMinusOne power = wedge_power(w0);
        const HermitianMatrix h = hodge_star_n1(g, power) * (1.0 / fact);
        const HermitianMatrix lhs = hodge_star_n1(g, power + wedge_with_metric_power(g, hess)) * (1.0 / fact);
        track(r, rel_diff(lhs.matrix(), p_operator(g, h, hess).matrix()));
        track(r, rel_diff(root_n_minus_one(g, power).matrix(), w0.matrix()));
        track(r, rel_diff(omega_zero(g, h).matrix(), w0.matrix()));
        ++r.instances;
    }
    r.finalize();
    return r;
}

CheckReport check_eta_relations(int n, int trials, std::uint64_t seed)
{
    CheckReport r{"eta_relations_n" + std::to_string(n)};
    r.tolerance = kIdentityTol;
    auto rng = check_rng(seed, r.check_name);
    for (int k = 0; k < trials; ++k) {
        const Metric g(random_metric(rng, n));
        const HermitianMatrix gt = random_metric(rng, n);
        const Eigen::VectorXd lambda = g.relative_eigenvalues(gt);
        const Eigen::VectorXd eta = g.relative_eigenvalues(eta_tensor(g, gt));
        const double sum = lambda.sum();
        const double scale = std::max(1.0, lambda.cwiseAbs().sum());
        // eta eigenvalues ascending pair with lambda descending
        for (int i = 0; i < n; ++i) track(r, std::abs(eta(i) - (sum - (n - 1) * lambda(n - 1 - i))) / scale);
        const double tr = g.trace(gt);
        const double lam_n = lambda(n - 1);
        const double eta_max = eta(n - 1);
        const double chain[] = {tr / n - lam_n, lam_n - eta_max, eta_max - (n - 1) * lam_n, (n - 1) * lam_n - (n - 1) * tr};
        for (double c : chain) track(r, std::max(0.0, c) / scale);
        ++r.instances;
    }
    r.finalize();
    return r;
}

std::vector<CheckReport> identity_suite(std::span<const int> dims, int trials, std::uint64_t seed)
{
    std::vector<CheckReport> out;
    for (int n : dims) {
        out.push_back(check_magic_identity(n, trials, seed));
        out.push_back(check_star_involution(n, trials, seed));
        out.push_back(check_det_convention(n, trials, seed));
        out.push_back(check_correspondence(n, trials, seed));
        out.push_back(check_eta_relations(n, trials, seed));
    }
    return out;
}

// ---------------------------------------------------------------------------------------------

CheckReport check_ma1_fww_equivalence(const ProblemSpec& spec, const ScalarField& u)
{
    CheckReport r{"ma1_fww_equivalence"};
    r.tolerance = kIdentityTol;
    const Metric g(spec.g);
    const int n = spec.n();
    const MatrixField hess = spectral_hessian(u);
    const double det_g = g.determinant();
    for (std::size_t p = 0; p < u.size(); ++p) {
        const HermitianMatrix gt = p_operator(g, spec.h.at(p), hess.at(p));
        if (cone_margin(g, gt) <= 0.0) throw ConeError("left cone of (n-1)-PSH admissibility");
        const double lhs = gt.determinant() / det_g;
        const double rhs = det_form_top_minus_one(fww_form(g, spec.h.at(p), hess.at(p))) / std::pow(det_g, n - 1);
        track(r, std::abs(lhs - rhs) / std::abs(lhs));
        ++r.instances;
    }
    r.finalize();
    return r;
}

CheckReport check_corollary_root(const ProblemSpec& spec, const ScalarField& u, double b)
{
    CheckReport r{"corollary_root"};
    r.tolerance = 1e-9;
    const Metric g(spec.g);
    const int n = spec.n();
    const MatrixField hess = spectral_hessian(u);
    const double b_prime = b / (n - 1);
    for (std::size_t p = 0; p < u.size(); ++p) {
        const HermitianMatrix root = root_n_minus_one(g, fww_form(g, spec.h.at(p), hess.at(p)));
        const double volume = root.determinant() / g.determinant();
        const double expected = std::exp(spec.F[p] / (n - 1) + b_prime);
        track(r, std::abs(volume - expected) / expected);
        ++r.instances;
    }
    r.values["b_prime"] = b_prime;
    r.finalize();
    return r;
}

CheckReport check_lemma32_pointwise(const ProblemSpec& spec, const ScalarField& u, std::uint64_t seed)
{
    CheckReport r{"lemma32_pointwise"};
    r.hard = false;
    r.tolerance = kSubIdentityTol;
    const Metric g(spec.g);
    const int n = spec.n();
    const double nd = n;
    const MatrixField hess = spectral_hessian(u);
    const double fact_n = factorial(n);
    double sup_q = -std::numeric_limits<double>::infinity();
    double sup_c = -std::numeric_limits<double>::infinity();
    double gap = 0.0;
    for (std::size_t p = 0; p < u.size(); ++p) {
        const HermitianMatrix h = spec.h.at(p);
        const HermitianMatrix H = hess.at(p);
        const FormTopMinusOne psi = scaled(wedge_power(omega_zero(g, h)), 2.0) + wedge_with_metric_power(g, H);
        const double q = g.trace_product(H, hodge_star_n1(g, psi)) / fact_n;
        const HermitianMatrix gt = p_operator(g, h, H);
        const double tau = g.trace(gt);
        const double c_prime = ((nd - 2) / nd) * std::pow(g.trace(h), 2) - ((nd - 1) / nd) * wedge11_invariant(g, h, h);
        const double bound = c_prime - ((nd - 2) / nd) * tau * tau + ((nd - 1) / nd) * wedge11_invariant(g, gt, gt);
        const double scale = std::max({1.0, std::abs(q), tau * tau});
        track(r, std::max(0.0, q - bound) / scale);
        gap = std::max(gap, std::abs(q - bound) / scale);
        sup_q = std::max(sup_q, q);
        sup_c = std::max(sup_c, c_prime);
        ++r.instances;
    }

    auto rng = check_rng(seed, r.check_name);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int tail_samples = 0;
    for (int k = 0; k < 4000 && tail_samples < 1000; ++k) {
        const int m = 3 + static_cast<int>(k % 4);
        std::vector<double> lam(static_cast<std::size_t>(m));
        for (double& l : lam) l = unit(rng) + 1e-3;
        std::sort(lam.begin(), lam.end());
        if (!(lam[1] < lam[static_cast<std::size_t>(m - 1)] / 2)) continue;
        double spread = 0.0, tail_sum = 0.0, total = 0.0;
        for (int i = 1; i < m; ++i) {
            tail_sum += lam[static_cast<std::size_t>(i)];
            for (int j = i + 1; j < m; ++j) spread += std::pow(lam[static_cast<std::size_t>(i)] - lam[static_cast<std::size_t>(j)], 2);
        }
        total = tail_sum + lam[0];
        const double lhs = -spread + 2 * lam[0] * tail_sum;
        const double rhs = -0.25 * lam.back() * lam.back() + 2 * lam[0] * total;
        track(r, std::max(0.0, lhs - rhs));
        ++tail_samples;
    }
    r.values["sup_field"] = sup_q;
    r.values["sup_c_prime"] = sup_c;
    r.values["bound_gap"] = gap;
    r.values["tail_samples"] = tail_samples;
    r.notes = "sup of i ddbar u ^ (2 omega_0^{n-1} + i ddbar u ^ omega^{n-2}) / omega^n";
    r.finalize();
    return r;
}

CheckReport check_cherrier(const ProblemSpec& spec, const ScalarField& u, std::span<const double> p_list)
{
    static const double kDefaultP[] = {1, 2, 4, 8, 16};
    if (p_list.empty()) p_list = kDefaultP;
    CheckReport r{"cherrier"};
    r.hard = false;
    r.tolerance = kSubIdentityTol;
    const Metric g(spec.g);
    const int n = spec.n();
    const Spectral ops(u.grid());
    const ScalarField us = sup_normalize(u);
    const auto grad = complex_gradient(ops, us);
    const std::size_t size = u.size();

    std::vector<double> norm2(size);
    for (std::size_t p = 0; p < size; ++p) {
        Eigen::VectorXcd d(n);
        for (int j = 0; j < n; ++j) d(j) = grad[static_cast<std::size_t>(j)][p];
        norm2[p] = gradient_norm2(g.inverse(), d);
    }

    double max_ratio = 0.0;
    bool monotone = true;
    double prev = -1.0;
    for (double pw : p_list) {
        std::vector<double> num(size), den(size);
        for (std::size_t p = 0; p < size; ++p) {
            const double e_half = std::exp(-pw * us[p] / 2);
            Eigen::VectorXcd d(n);
            for (int j = 0; j < n; ++j) d(j) = -(pw / 2) * e_half * grad[static_cast<std::size_t>(j)][p];
            const double direct = gradient_norm2(g.inverse(), d);
            const double chain = (pw * pw / 4) * std::exp(-pw * us[p]) * norm2[p];
            track(r, std::abs(direct - chain) / std::max(1.0, std::abs(chain)));
            num[p] = direct;
            den[p] = e_half * e_half;
        }
        const double ratio = pairwise_sum(num) / (pw * pairwise_sum(den));
        std::ostringstream key;
        key << "R_p" << pw;
        r.values[key.str()] = ratio;
        if (!std::isfinite(ratio)) track(r, std::numeric_limits<double>::quiet_NaN());
        max_ratio = std::max(max_ratio, ratio);
        if (prev >= 0.0 && ratio < prev) monotone = false;
        prev = ratio;
        r.instances += size;
    }
    r.values["max_R"] = max_ratio;
    r.values["monotone_in_p"] = monotone ? 1.0 : 0.0;
    r.finalize();
    return r;
}

CheckReport check_second_order_quantities(const ProblemSpec& spec, const ScalarField& u)
{
    CheckReport r{"second_order_quantities"};
    r.hard = false;
    r.tolerance = kSubIdentityTol;
    const Metric g(spec.g);
    const int n = spec.n();
    const Spectral ops(u.grid());
    const MatrixField hess = spectral_hessian(ops, u);
    const auto grad = complex_gradient(ops, u);
    double sup_tr = -std::numeric_limits<double>::infinity();
    double sup_grad = 0.0;
    double eta_residual = 0.0;
    for (std::size_t p = 0; p < u.size(); ++p) {
        const HermitianMatrix h = spec.h.at(p);
        const HermitianMatrix H = hess.at(p);
        const HermitianMatrix gt = p_operator(g, h, H);
        const double tr = g.trace(gt);
        const double expected_tr = g.trace(h) + g.trace(H);
        track(r, rel_diff(tr, expected_tr));

        const HermitianMatrix eta = eta_tensor(g, gt);
        const HermitianMatrix eta_alt = H - h * (n - 1.0) + g.g() * g.trace(h);
        track(r, rel_diff(eta.matrix(), eta_alt.matrix()));

        const Eigen::VectorXd lambda = g.relative_eigenvalues(gt);
        const Eigen::VectorXd ev = g.relative_eigenvalues(eta);
        const double sum = lambda.sum();
        const double scale = std::max(1.0, lambda.cwiseAbs().sum());
        for (int i = 0; i < n; ++i) {
            const double e = std::abs(ev(i) - (sum - (n - 1) * lambda(n - 1 - i))) / scale;
            eta_residual = std::max(eta_residual, e);
        }
        const double lam_n = lambda(n - 1);
        const double chain[] = {tr / n - lam_n, lam_n - ev(n - 1), ev(n - 1) - (n - 1) * lam_n};
        for (double c : chain) eta_residual = std::max(eta_residual, std::max(0.0, c) / scale);

        Eigen::VectorXcd d(n);
        for (int j = 0; j < n; ++j) d(j) = grad[static_cast<std::size_t>(j)][p];
        sup_grad = std::max(sup_grad, gradient_norm2(g.inverse(), d));
        sup_tr = std::max(sup_tr, tr);
        ++r.instances;
    }
    r.values["sup_trace_gtilde"] = sup_tr;
    r.values["sup_grad_norm2"] = sup_grad;
    r.values["ratio"] = sup_tr / (sup_grad + 1.0);
    r.values["eta_residual"] = eta_residual;
    if (eta_residual > kIdentityTol) {
        track(r, std::numeric_limits<double>::infinity());
        r.notes = "eta relations violated";
    }
    r.finalize();
    return r;
}

CheckReport check_comparison_uniqueness(const ProblemSpec& spec, const SolverOptions& opts, std::uint64_t seed)
{
    CheckReport r{"comparison_uniqueness"};
    r.tolerance = 1e-8;
    const double b_tol = 1e-10;

    const auto coarse = uniform_schedule(4);
    const auto fine = uniform_schedule(16);
    const SolveResult a = continuity_solve(spec, coarse, opts);
    const SolveResult b = continuity_solve(spec, fine, opts);

    auto rng = check_rng(seed, r.check_name);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int axes = spec.grid().real_axes();
    std::vector<int> k(static_cast<std::size_t>(axes));
    for (int& ki : k) ki = static_cast<int>(unit(rng) * 3);
    k[0] = std::max(k[0], 1);
    const double phase = 2 * M_PI * unit(rng);
    const double eps = 1e-3;
    ScalarField noise = ScalarField::sample(spec.grid(), [&](std::span<const double> x) {
        double arg = phase;
        for (int i = 0; i < axes; ++i) arg += 2 * M_PI * k[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
        return eps * std::cos(arg);
    });
    SolverState warm = a.state;
    warm.u += noise;
    warm.b += eps;
    warm.t = 1.0;
    const SolveResult c = newton_solve(spec, warm, opts);

    const SolveResult* runs[] = {&a, &b, &c};
    double du = 0.0, db = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            du = std::max(du, sup_norm(mean_normalize(runs[i]->state.u) - mean_normalize(runs[j]->state.u)));
            db = std::max(db, std::abs(runs[i]->state.b - runs[j]->state.b));
        }
    }
    r.instances = 3;
    r.max_residual = du;
    r.values["max_du"] = du;
    r.values["max_db"] = db;
    r.values["b_tolerance"] = b_tol;
    r.finalize();
    if (!(db <= b_tol)) {
        r.pass = false;
        r.notes = "b disagreement";
    }
    return r;
}

CheckReport check_b_bounds(const ProblemSpec& spec, double b)
{
    CheckReport r{"b_bounds"};
    r.tolerance = 1e-9;
    const BBounds bounds = estimate_b_bounds(spec);
    r.instances = 1;
    r.max_residual = std::max({0.0, bounds.lo - b, b - bounds.hi});
    r.values["b"] = b;
    r.values["b_lo"] = bounds.lo;
    r.values["b_hi"] = bounds.hi;
    r.finalize();
    return r;
}

std::vector<CheckReport> verify_solution(const ProblemSpec& spec, const ScalarField& u, double b, std::uint64_t seed)
{
    std::vector<CheckReport> out;
    out.push_back(check_ma1_fww_equivalence(spec, u));
    out.push_back(check_corollary_root(spec, u, b));
    out.push_back(check_b_bounds(spec, b));
    out.push_back(check_lemma32_pointwise(spec, u, seed));
    out.push_back(check_cherrier(spec, u));
    out.push_back(check_second_order_quantities(spec, u));
    return out;
}

}  // namespace npsh
