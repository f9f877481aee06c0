#include "npsh/errors.hpp"
#include "npsh/form_algebra.hpp"
#include "npsh/verifier.hpp"
#include "oracle/exterior_algebra.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace npsh;

namespace {

double max_diff(const ComplexMatrix& a, const ComplexMatrix& b)
{
    return (a - b).cwiseAbs().maxCoeff();
}

double rel_diff(const ComplexMatrix& a, const ComplexMatrix& b)
{
    return max_diff(a, b) / std::max(1.0, b.cwiseAbs().maxCoeff());
}

HermitianMatrix diag(std::initializer_list<double> d)
{
    std::vector<double> v(d);
    return HermitianMatrix::diagonal(v);
}

std::mt19937_64 rng_for(const char* name)
{
    return check_rng(2024, name);
}

}  // namespace

TEST(HermitianMatrix, SymmetrizesAndRejects)
{
    ComplexMatrix m(2, 2);
    m << 1.0, Complex(2, 1), Complex(2, -1 + 1e-15), 3.0;
    const HermitianMatrix h(m);
    EXPECT_EQ(h(0, 1), std::conj(h(1, 0)));
    m(1, 0) = 5.0;
    EXPECT_THROW(HermitianMatrix{m}, std::invalid_argument);
    EXPECT_THROW(HermitianMatrix{ComplexMatrix(2, 3)}, std::invalid_argument);
}

TEST(Metric, SingularMetricMessage)
{
    try {
        Metric m(diag({1.0, 0.0}));
        FAIL();
    } catch (const SingularMetricError& e) {
        EXPECT_STREQ(e.what(), "metric not invertible");
    }
    EXPECT_THROW(trace_pair(diag({1.0, -1.0}), diag({1.0, 1.0})), SingularMetricError);
}

TEST(TracePair, Examples)
{
    for (int n = 2; n <= 6; ++n) {
        EXPECT_DOUBLE_EQ(trace_pair(HermitianMatrix::identity(n), HermitianMatrix::identity(n)), n);
    }
    EXPECT_NEAR(trace_pair(diag({1, 2, 3}), diag({1, 2, 3})), 3.0, 1e-14);
    EXPECT_NEAR(trace_pair(HermitianMatrix::identity(3), diag({1, 2, 3})), 6.0, 1e-14);
}

TEST(Wedge11Invariant, Examples)
{
    for (int n = 2; n <= 6; ++n) {
        const auto g = HermitianMatrix::identity(n);
        EXPECT_NEAR(wedge11_invariant(g, g, g), n * (n - 1.0), 1e-12);
    }
    EXPECT_NEAR(wedge11_invariant(HermitianMatrix::identity(3), diag({1, 2, 3}), diag({4, 5, 6})), 58.0, 1e-12);

    // a = sum lambda_i e_i, b = c sum (1/alpha_j) e_j gives c sum_{k != l} lambda_k / alpha_l
    const std::vector<double> lambda{0.5, 2.0, -1.0, 3.0};
    const std::vector<double> alpha{1.0, 4.0, 2.5, 0.2};
    const double c = 1.7;
    std::vector<double> binv;
    for (double a : alpha) binv.push_back(c / a);
    double expected = 0.0;
    for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t l = 0; l < 4; ++l)
            if (k != l) expected += c * lambda[k] / alpha[l];
    EXPECT_NEAR(wedge11_invariant(HermitianMatrix::identity(4), HermitianMatrix::diagonal(lambda),
                                  HermitianMatrix::diagonal(binv)),
                expected, 1e-12);
}

TEST(Wedge11Invariant, MatchesExteriorAlgebra)
{
    auto rng = rng_for("wedge11");
    for (int n = 2; n <= 4; ++n) {
        for (int k = 0; k < 20; ++k) {
            const auto g = random_metric(rng, n);
            const auto a = random_hermitian(rng, n);
            const auto b = random_hermitian(rng, n);
            const auto og = oracle::form11(g.matrix());
            const auto lhs = oracle::wedge(oracle::wedge(oracle::form11(a.matrix()), oracle::form11(b.matrix())),
                                           oracle::power(og, n - 2));
            const double expected =
                n * (n - 1.0) * (oracle::top(lhs, n) / oracle::top(oracle::power(og, n), n)).real();
            EXPECT_NEAR(wedge11_invariant(g, a, b), expected, 1e-11 * std::max(1.0, std::abs(expected)));
        }
    }
}

TEST(HodgeStar, DiagonalUnitMatchesComplementaryWedge)
{
    for (int n = 2; n <= 5; ++n) {
        for (int i = 0; i < n; ++i) {
            std::vector<double> d(static_cast<std::size_t>(n), 0.0);
            d[static_cast<std::size_t>(i)] = 1.0;
            oracle::Form f{{0u, oracle::Complex(1.0)}};
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                oracle::Matrix e = oracle::Matrix::Zero(n, n);
                e(j, j) = 1.0;
                f = oracle::wedge(f, oracle::form11(e));
            }
            const auto psi = hodge_star_11(HermitianMatrix::identity(n), HermitianMatrix::diagonal(d));
            EXPECT_LT(max_diff(psi.matrix(), oracle::psi_of(f, n)), 1e-14) << "n=" << n << " i=" << i;
        }
    }
}

TEST(HodgeStar, RoundTrip)
{
    auto rng = rng_for("star_roundtrip");
    for (int n = 2; n <= 6; ++n) {
        for (int k = 0; k < 50; ++k) {
            const Metric g(random_metric(rng, n));
            const auto a = random_hermitian(rng, n);
            EXPECT_LT(rel_diff(hodge_star_n1(g, hodge_star_11(g, a)).matrix(), a.matrix()), 1e-12);
        }
    }
}

TEST(HodgeStar, DiagonalPowerExample)
{
    const auto w0 = diag({1, 2, 3});
    const auto psi = wedge_power(w0);
    const auto h = hodge_star_n1(HermitianMatrix::identity(3), psi) * 0.5;
    EXPECT_LT(max_diff(h.matrix(), diag({6, 3, 2}).matrix()), 1e-14);
}

TEST(HodgeStar, MatchesPropertyOneOracle)
{
    auto rng = rng_for("star_oracle");
    for (int n = 2; n <= 4; ++n) {
        for (int k = 0; k < 10; ++k) {
            const auto g = random_metric(rng, n);
            const auto a = random_hermitian(rng, n);
            const auto fast = hodge_star_11(g, a);
            EXPECT_LT(rel_diff(fast.matrix(), oracle::star11(g.matrix(), a.matrix())), 1e-11);
            const auto psi = random_hermitian(rng, n);
            EXPECT_LT(rel_diff(hodge_star_n1(g, FormTopMinusOne(psi)).matrix(), oracle::star_n1(g.matrix(), psi.matrix())),
                      1e-11);
        }
        // star omega = omega^{n-1}/(n-1)!
        const auto g = random_metric(rng, n);
        const oracle::Matrix expected = oracle::psi_of(oracle::power(oracle::form11(g.matrix()), n - 1), n) / oracle::fact(n - 1);
        EXPECT_LT(rel_diff(hodge_star_11(g, g).matrix(), expected), 1e-12);
    }
}

TEST(DetFormTopMinusOne, Examples)
{
    for (int n = 2; n <= 6; ++n) {
        EXPECT_NEAR(det_form_top_minus_one(wedge_power(HermitianMatrix::identity(n))), 1.0, 1e-14);
    }
    EXPECT_NEAR(det_form_top_minus_one(wedge_power(diag({1, 2, 3}))), 36.0, 1e-12);
}

TEST(DetFormTopMinusOne, MatchesOracleAndConvention)
{
    auto rng = rng_for("det_oracle");
    for (int n = 2; n <= 5; ++n) {
        for (int k = 0; k < 10; ++k) {
            const auto g = random_metric(rng, n);
            const oracle::Matrix psi = oracle::psi_of(oracle::power(oracle::form11(g.matrix()), n - 1), n);
            const double expected = std::pow(g.determinant(), n - 1);
            EXPECT_NEAR(oracle::leibniz_det(psi).real() / expected, 1.0, 1e-12);
            EXPECT_NEAR(det_form_top_minus_one(FormTopMinusOne(HermitianMatrix::from_raw(psi))) / expected, 1.0, 1e-12);
        }
    }
}

TEST(DetFormTopMinusOne, VolumeRatioConsistency)
{
    auto rng = rng_for("det_ratio");
    for (int n = 2; n <= 5; ++n) {
        for (int k = 0; k < 20; ++k) {
            const Metric g(random_metric(rng, n));
            const auto chi = random_metric(rng, n);
            const double lhs = chi.determinant() / g.determinant();
            const double rhs =
                det_form_top_minus_one(hodge_star_11(g, chi)) / det_form_top_minus_one(hodge_star_11(g, g.g()));
            EXPECT_NEAR(rhs / lhs, 1.0, 1e-12);
        }
    }
}

TEST(WedgePower, MatchesOracle)
{
    auto rng = rng_for("wedge_power");
    for (int n = 2; n <= 4; ++n) {
        for (int k = 0; k < 20; ++k) {
            const auto a = random_hermitian(rng, n);
            const auto expected = oracle::psi_of(oracle::power(oracle::form11(a.matrix()), n - 1), n);
            EXPECT_LT(rel_diff(wedge_power(a).matrix(), expected), 1e-12);

            const auto g = random_metric(rng, n);
            const auto mixed = oracle::psi_of(
                oracle::wedge(oracle::form11(a.matrix()), oracle::power(oracle::form11(g.matrix()), n - 2)), n);
            EXPECT_LT(rel_diff(wedge_with_metric_power(Metric(g), a).matrix(), mixed), 1e-12);
        }
    }
}

TEST(RootNMinusOne, Examples)
{
    for (int n = 2; n <= 6; ++n) {
        const auto g = HermitianMatrix::identity(n) * 1.5;
        EXPECT_LT(max_diff(root_n_minus_one(g, wedge_power(g)).matrix(), g.matrix()), 1e-13);
    }
    const auto s = root_n_minus_one(HermitianMatrix::identity(3), wedge_power(diag({1, 2, 3})));
    EXPECT_LT(max_diff(s.matrix(), diag({1, 2, 3}).matrix()), 1e-13);
}

TEST(RootNMinusOne, RoundTripAndConeError)
{
    auto rng = rng_for("root");
    for (int n = 2; n <= 6; ++n) {
        for (int k = 0; k < 30; ++k) {
            const Metric g(random_metric(rng, n));
            const auto s = random_metric(rng, n);
            const auto root = root_n_minus_one(g, wedge_power(s));
            EXPECT_LT(rel_diff(root.matrix(), s.matrix()), 1e-11);
            EXPECT_LT(rel_diff(wedge_power(root).matrix(), wedge_power(s).matrix()), 1e-11);
        }
    }
    try {
        root_n_minus_one(HermitianMatrix::identity(3), FormTopMinusOne(diag({1, -1, 1})));
        FAIL();
    } catch (const ConeError& e) {
        EXPECT_STREQ(e.what(), "form not in positive cone");
    }
}

TEST(POperator, Examples)
{
    const auto g = HermitianMatrix::identity(3);
    const auto h = diag({1, 2, 3});
    EXPECT_LT(max_diff(p_operator(g, h, HermitianMatrix::zero(3)).matrix(), h.matrix()), 1e-15);

    const double a = 0.3, d = -0.2;
    const auto gt = p_operator(HermitianMatrix::identity(2), HermitianMatrix::identity(2), diag({a, d}));
    EXPECT_LT(max_diff(gt.matrix(), diag({1 + d, 1 + a}).matrix()), 1e-15);
    EXPECT_NEAR(gt.determinant(), (HermitianMatrix::identity(2) + diag({a, d})).determinant(), 1e-15);
}

TEST(POperator, TraceIdentity)
{
    auto rng = rng_for("p_trace");
    for (int n = 2; n <= 6; ++n) {
        for (int k = 0; k < 50; ++k) {
            const Metric g(random_metric(rng, n));
            const auto h = random_metric(rng, n);
            const auto hess = random_hermitian(rng, n);
            const double lhs = g.trace(p_operator(g, h, hess));
            EXPECT_NEAR(lhs, g.trace(h) + g.trace(hess), 1e-13 * std::max(1.0, std::abs(lhs)));
        }
    }
}

TEST(POperator, TwoDimensionalReduction)
{
    auto rng = rng_for("p_n2");
    for (int k = 0; k < 50; ++k) {
        const Metric g(random_metric(rng, 2));
        const auto h = random_metric(rng, 2);
        const auto hess = random_hermitian(rng, 2);
        const double lhs = p_operator(g, h, hess).determinant();
        EXPECT_NEAR(lhs, (trace_reversal(g, h) + hess).determinant(), 1e-12 * std::max(1.0, std::abs(lhs)));
    }
}

TEST(IsNMinusOnePsh, ExamplesAndEnumeration)
{
    EXPECT_TRUE(is_n_minus_one_psh(diag({-1, 1, 1}), 1e-12));
    EXPECT_FALSE(is_n_minus_one_psh(diag({-2, 1, 1}), 1e-12));
    EXPECT_TRUE(is_n_minus_one_psh(diag({0, 0.5, 2})));

    auto rng = rng_for("psh_enum");
    for (int n = 2; n <= 5; ++n) {
        for (int k = 0; k < 200; ++k) {
            auto a = random_hermitian(rng, n);
            a = a - HermitianMatrix::identity(n) * (a.trace() / (n - 1.0) * 0.9);
            const Eigen::VectorXd ev = a.eigenvalues();
            double min_sum = std::numeric_limits<double>::infinity();
            for (int skip = 0; skip < n; ++skip) min_sum = std::min(min_sum, ev.sum() - ev(skip));
            if (std::abs(min_sum) < 1e-9) continue;
            EXPECT_EQ(is_n_minus_one_psh(a, 1e-12), min_sum >= 0.0);
        }
    }
}

TEST(ConeMargin, Examples)
{
    auto rng = rng_for("cone_margin");
    const auto g = random_metric(rng, 3);
    EXPECT_NEAR(cone_margin(g, g), 1.0, 1e-13);
    EXPECT_NEAR(cone_margin(g, g * 2.0), 2.0, 1e-13);
    EXPECT_NEAR(cone_margin(HermitianMatrix::identity(2), diag({3, 0.5})), 0.5, 1e-15);
}

TEST(Correspondence, MatchesExteriorAlgebra)
{
    auto rng = rng_for("correspondence");
    for (int n = 2; n <= 4; ++n) {
        for (int k = 0; k < 10; ++k) {
            const auto g = random_metric(rng, n);
            const auto w0 = random_metric(rng, n);
            const auto hess = random_hermitian(rng, n);
            const auto og = oracle::form11(g.matrix());
            const auto form = oracle::power(oracle::form11(w0.matrix()), n - 1);
            const auto with_hess = oracle::wedge(oracle::form11(hess.matrix()), oracle::power(og, n - 2));
            oracle::Form sum = form;
            for (const auto& [m, c] : with_hess) sum[m] += c;
            const double f = oracle::fact(n - 1);
            const oracle::Matrix lhs = oracle::star_n1(g.matrix(), oracle::psi_of(sum, n)) / f;
            const oracle::Matrix h = oracle::star_n1(g.matrix(), oracle::psi_of(form, n)) / f;
            EXPECT_LT(rel_diff(p_operator(g, HermitianMatrix::from_raw(h), hess).matrix(), lhs), 1e-11);
        }
    }
}

TEST(EtaTensor, EigenvalueRelation)
{
    auto rng = rng_for("eta");
    for (int n = 2; n <= 6; ++n) {
        for (int k = 0; k < 50; ++k) {
            const Metric g(random_metric(rng, n));
            const auto gt = random_metric(rng, n);
            const Eigen::VectorXd lambda = g.relative_eigenvalues(gt);
            const Eigen::VectorXd eta = g.relative_eigenvalues(eta_tensor(g, gt));
            for (int i = 0; i < n; ++i) {
                EXPECT_NEAR(eta(i), lambda.sum() - (n - 1) * lambda(n - 1 - i), 1e-11 * lambda.sum());
            }
        }
    }
}

TEST(ThetaMatrix, IsDerivativeOfLogDet)
{
    auto rng = rng_for("theta");
    for (int n = 2; n <= 5; ++n) {
        const Metric g(random_metric(rng, n));
        const auto h = random_metric(rng, n);
        const auto hess = random_hermitian(rng, n) * 0.1;
        const auto v = random_hermitian(rng, n);
        const auto theta = theta_matrix(g, p_operator(g, h, hess));
        const double analytic = (theta * v.matrix()).trace().real();
        const double eps = 1e-6;
        const double fd = (std::log(p_operator(g, h, hess + v * eps).determinant()) -
                           std::log(p_operator(g, h, hess - v * eps).determinant())) /
                          (2 * eps);
        EXPECT_NEAR(analytic, fd, 1e-7);
    }
}

TEST(FormAlgebra, DimensionRange)
{
    EXPECT_THROW(wedge_power(HermitianMatrix::identity(1)), std::invalid_argument);
    EXPECT_THROW(wedge_power(HermitianMatrix::identity(9)), std::invalid_argument);
}
