#include "npsh/verifier.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace npsh;

namespace {

constexpr double kPi = std::numbers::pi;

ScalarField bump(const TorusGrid& grid, double amplitude)
{
    return ScalarField::sample(grid, [&](std::span<const double> x) {
        return amplitude * std::cos(2 * kPi * x[0]) * std::cos(2 * kPi * x[2]);
    });
}

ProblemSpec conformal_problem(const TorusGrid& grid, double amplitude)
{
    auto rng = check_rng(17, "verifier_problem");
    const auto g = random_metric(rng, grid.n());
    MatrixField h(grid);
    for (std::size_t p = 0; p < grid.size(); ++p) h.set(p, g * (1.0 + 0.1 * std::cos(2 * kPi * grid.coordinate(p, 1))));
    return manufacture(g, h, bump(grid, amplitude), 0.05);
}

}  // namespace

TEST(MagicIdentity, DiagonalExample)
{
    // omega = I, omega_0 = diag(1, 2, 3), gtilde = I: terms 33 - 22 - 11
    const Metric g(HermitianMatrix::identity(3));
    const std::vector<double> alpha{1, 2, 3};
    const auto w0 = HermitianMatrix::diagonal(alpha);
    const HermitianMatrix h = hodge_star_n1(g, wedge_power(w0)) * 0.5;
    const auto gt = HermitianMatrix::identity(3);
    const double t1 = g.trace(gt) * g.trace(h);
    const double t2 = wedge11_invariant(g, gt, h);
    const Metric m0(w0);
    const double t3 = m0.trace(gt) * w0.determinant() / g.determinant();
    EXPECT_NEAR(t1, 33.0, 1e-12);
    EXPECT_NEAR(t2, 22.0, 1e-12);
    EXPECT_NEAR(t3, 11.0, 1e-12);
}

TEST(IdentitySuite, PassesForSmallDimensions)
{
    const int dims[] = {2, 3, 4, 5, 6};
    const auto reports = identity_suite(dims, 100, 5);
    EXPECT_EQ(reports.size(), 25u);
    for (const auto& r : reports) {
        EXPECT_TRUE(r.pass) << r.check_name << " " << r.max_residual;
        EXPECT_TRUE(r.hard);
        EXPECT_EQ(r.instances, 100u);
        EXPECT_LE(r.tolerance, 1e-11);
    }
}

TEST(IdentitySuite, DeterministicPerSeed)
{
    const int dims[] = {3};
    const auto a = identity_suite(dims, 50, 11);
    const auto b = identity_suite(dims, 50, 11);
    const auto c = identity_suite(dims, 50, 12);
    ASSERT_EQ(a.size(), b.size());
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(to_json_line(a[i]), to_json_line(b[i]));
        any_diff = any_diff || to_json_line(a[i]) != to_json_line(c[i]);
    }
    EXPECT_TRUE(any_diff);
}

TEST(CheckReport, JsonLineAndTable)
{
    CheckReport r{"demo"};
    r.instances = 3;
    r.max_residual = 1e-13;
    r.tolerance = 1e-11;
    r.values["x"] = 2.5;
    r.finalize();
    EXPECT_TRUE(r.pass);
    const std::string line = to_json_line(r);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    for (const char* key : {"\"check_name\"", "\"instances\"", "\"max_residual\"", "\"tolerance\"", "\"pass\"",
                            "\"hard\"", "\"notes\"", "\"values\""}) {
        EXPECT_NE(line.find(key), std::string::npos) << key;
    }
    EXPECT_LT(line.find("check_name"), line.find("instances"));
    const std::vector<CheckReport> reports{r};
    EXPECT_NE(summary_table(reports).find("demo"), std::string::npos);

    CheckReport nan_report{"nan"};
    nan_report.max_residual = std::nan("");
    nan_report.tolerance = 1.0;
    nan_report.finalize();
    EXPECT_FALSE(nan_report.pass);
}

TEST(RandomMatrices, HermitianAndPositive)
{
    auto rng = check_rng(0, "random");
    for (int k = 0; k < 20; ++k) {
        const auto a = random_hermitian(rng, 4);
        EXPECT_EQ((a.matrix() - a.matrix().adjoint()).norm(), 0.0);
        EXPECT_GE(random_metric(rng, 4).eigenvalues()(0), 1.0 - 1e-12);
    }
}

TEST(SolutionChecks, TrivialSolution)
{
    const TorusGrid grid(3, 4, 2);
    auto rng = check_rng(1, "trivial");
    const auto g = random_metric(rng, 3);
    const ProblemSpec spec{g, MatrixField::constant(grid, g), ScalarField(grid)};
    const ScalarField u(grid);
    for (const auto& r : verify_solution(spec, u, 0.0, 0)) EXPECT_TRUE(r.pass) << r.check_name;

    const auto lemma = check_lemma32_pointwise(spec, u);
    EXPECT_NEAR(lemma.values.at("sup_field"), 0.0, 1e-12);
    const auto cherrier = check_cherrier(spec, u);
    EXPECT_EQ(cherrier.values.at("max_R"), 0.0);
    const auto second = check_second_order_quantities(spec, u);
    EXPECT_NEAR(second.values.at("sup_trace_gtilde"), 3.0, 1e-12);
    EXPECT_FALSE(second.hard);
}

TEST(SolutionChecks, ManufacturedSolution)
{
    const TorusGrid grid(2, 8);
    const ProblemSpec spec = conformal_problem(grid, 0.05);
    const SolveResult res = continuity_solve(spec, uniform_schedule(4));
    for (const auto& r : verify_solution(spec, res.state.u, res.state.b, 3)) {
        EXPECT_TRUE(r.pass) << r.check_name << " " << r.max_residual;
    }
    const auto cherrier = check_cherrier(spec, res.state.u);
    for (const auto& [k, v] : cherrier.values) EXPECT_TRUE(std::isfinite(v)) << k;
    EXPECT_GT(cherrier.values.at("max_R"), 0.0);
}

TEST(SolutionChecks, CorollaryDetectsWrongB)
{
    const TorusGrid grid(2, 8);
    const ProblemSpec spec = conformal_problem(grid, 0.05);
    EXPECT_TRUE(check_corollary_root(spec, bump(grid, 0.05), 0.0).pass);
    EXPECT_FALSE(check_corollary_root(spec, bump(grid, 0.05), 1e-6).pass);
    EXPECT_TRUE(check_b_bounds(spec, 0.0).pass);
    EXPECT_FALSE(check_b_bounds(spec, estimate_b_bounds(spec).hi + 1e-6).pass);
}

TEST(SolutionChecks, ShiftingFShiftsB)
{
    const TorusGrid grid(2, 8);
    const ProblemSpec spec = conformal_problem(grid, 0.05);
    ProblemSpec shifted = spec;
    const double c = 0.2;
    shifted.F += c * (spec.n() - 1);
    const SolveResult a = continuity_solve(spec, uniform_schedule(4));
    const SolveResult b = continuity_solve(shifted, uniform_schedule(4));
    EXPECT_NEAR(b.state.b / (spec.n() - 1) - a.state.b / (spec.n() - 1), -c, 1e-10);
    EXPECT_LT(sup_norm(a.state.u - b.state.u), 1e-9);
}

TEST(SolutionChecks, ComparisonUniqueness)
{
    const TorusGrid grid(2, 8);
    const ProblemSpec spec = conformal_problem(grid, 0.05);
    const auto r = check_comparison_uniqueness(spec, {}, 1);
    EXPECT_TRUE(r.pass) << r.values.at("max_du") << " " << r.values.at("max_db");
    EXPECT_EQ(r.instances, 3u);
}
