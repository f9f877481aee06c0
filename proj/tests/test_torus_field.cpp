#include "npsh/errors.hpp"
#include "npsh/torus_field.hpp"
#include "npsh/verifier.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace npsh;

namespace {

constexpr double kPi = std::numbers::pi;

// cos(2 pi k.x) with k indexed by real axis
ScalarField cosine(const TorusGrid& grid, const std::vector<int>& k, double amplitude = 1.0)
{
    return ScalarField::sample(grid, [&](std::span<const double> x) {
        double phase = 0.0;
        for (std::size_t a = 0; a < x.size(); ++a) phase += k[a] * x[a];
        return amplitude * std::cos(2 * kPi * phase);
    });
}

double phase_at(const TorusGrid& grid, std::size_t p, const std::vector<int>& k)
{
    double phase = 0.0;
    for (int a = 0; a < grid.real_axes(); ++a) phase += k[static_cast<std::size_t>(a)] * grid.coordinate(p, a);
    return 2 * kPi * phase;
}

std::string temp_path(const std::string& name)
{
    return (std::filesystem::temp_directory_path() / ("npsh_test_" + name)).string();
}

}  // namespace

TEST(TorusGrid, Validation)
{
    EXPECT_NO_THROW(TorusGrid(2, 4));
    EXPECT_THROW(TorusGrid(1, 8), std::invalid_argument);
    EXPECT_THROW(TorusGrid(9, 8), std::invalid_argument);
    EXPECT_THROW(TorusGrid(2, 12), std::invalid_argument);
    EXPECT_THROW(TorusGrid(2, 2), std::invalid_argument);
    EXPECT_THROW(TorusGrid(2, 128), std::invalid_argument);
    EXPECT_THROW(TorusGrid(3, 8, 4), std::invalid_argument);
    EXPECT_THROW(TorusGrid(3, 8, 0), std::invalid_argument);
}

TEST(TorusGrid, LayoutIsRowMajorFirstAxisSlowest)
{
    const TorusGrid grid(3, 4, 1);
    EXPECT_EQ(grid.real_axes(), 2);
    EXPECT_EQ(grid.size(), 16u);
    EXPECT_EQ(grid.index(1, 1), 1);
    EXPECT_EQ(grid.index(1, 0), 0);
    EXPECT_EQ(grid.index(5, 0), 1);
    EXPECT_DOUBLE_EQ(grid.coordinate(6, 0), 0.25);
    EXPECT_DOUBLE_EQ(grid.coordinate(6, 1), 0.5);
}

TEST(Reductions, PairwiseSumIsAccurate)
{
    std::vector<double> x(1 << 16, 0.1);
    EXPECT_NEAR(pairwise_sum(x), 6553.6, 1e-10);
    x.assign(1000, 0.0);
    x[0] = 1e16;
    x[999] = 1.0;
    EXPECT_EQ(pairwise_sum(x), 1e16 + 1.0);
    EXPECT_EQ(pairwise_sum(std::span<const double>{}), 0.0);
}

TEST(Reductions, Normalizations)
{
    const TorusGrid grid(2, 8);
    const ScalarField f = cosine(grid, {1, 0, 2, 1}, 0.3) + ScalarField(grid, 2.0);
    EXPECT_NEAR(mean(f), 2.0, 1e-14);
    EXPECT_EQ(sup(sup_normalize(f)), 0.0);
    EXPECT_NEAR(mean(mean_normalize(f)), 0.0, 1e-15);
    EXPECT_NEAR(sup_norm(f), 2.3, 1e-14);
    EXPECT_NEAR(inf(f), 1.7, 1e-14);
}

TEST(Spectral, ComplexHessianOfCosine)
{
    const TorusGrid grid(2, 8);
    const std::vector<int> k{1, -2, 3, 1};
    const ScalarField u = cosine(grid, k);
    const MatrixField H = spectral_hessian(u);
    double err = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p) {
        const double c = std::cos(phase_at(grid, p, k));
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                const double xi = k[2 * i], yi = k[2 * i + 1], xj = k[2 * j], yj = k[2 * j + 1];
                const Complex expected = -kPi * kPi * c * Complex(xi * xj + yi * yj, xi * yj - yi * xj);
                err = std::max(err, std::abs(H.at(p)(i, j) - expected));
            }
        }
    }
    EXPECT_LT(err, 1e-11);
}

TEST(Spectral, InactiveCoordinatesHaveZeroDerivatives)
{
    const TorusGrid grid(3, 8, 1);
    const ScalarField u = cosine(grid, {2, 1});
    const MatrixField H = spectral_hessian(u);
    for (std::size_t p = 0; p < grid.size(); ++p) {
        const auto m = H.at(p);
        EXPECT_NEAR(m(0, 0).real(), -kPi * kPi * 5 * u[p], 1e-10);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (i > 0 || j > 0) EXPECT_EQ(m(i, j), Complex(0.0));
    }
}

TEST(Spectral, LaplacianWithMetric)
{
    const TorusGrid grid(2, 8);
    auto rng = check_rng(7, "laplacian");
    const auto g = random_metric(rng, 2);
    const ScalarField u = cosine(grid, {1, 0, 0, 2}) + cosine(grid, {0, 1, 1, 1}, 0.5);
    const ScalarField lap = laplacian(g, u);
    const MatrixField H = spectral_hessian(u);
    const Metric metric(g);
    for (std::size_t p = 0; p < grid.size(); ++p) EXPECT_NEAR(lap[p], metric.trace(H.at(p)), 1e-11);
}

TEST(Spectral, ComplexGradient)
{
    const TorusGrid grid(2, 8);
    const std::vector<int> k{1, 2, -1, 0};
    const Spectral ops(grid);
    const auto d = complex_gradient(ops, cosine(grid, k));
    for (std::size_t p = 0; p < grid.size(); ++p) {
        const double s = std::sin(phase_at(grid, p, k));
        for (int j = 0; j < 2; ++j) {
            const Complex expected = -kPi * s * Complex(k[2 * j], -k[2 * j + 1]);
            EXPECT_LT(std::abs(d[static_cast<std::size_t>(j)][p] - expected), 1e-11);
        }
    }
}

TEST(Spectral, ContractAndConstantSolve)
{
    const TorusGrid grid(2, 8);
    const Spectral ops(grid);
    std::vector<double> coeffs(static_cast<std::size_t>(ops.pair_count()), 0.0);
    for (int a = 0; a < 4; ++a) coeffs[static_cast<std::size_t>(ops.pair_index(a, a))] = 1.0 + 0.25 * a;
    coeffs[static_cast<std::size_t>(ops.pair_index(0, 2))] = 0.3;
    coeffs[static_cast<std::size_t>(ops.pair_index(1, 3))] = -0.2;

    const ScalarField u = mean_normalize(cosine(grid, {1, 2, 0, 1}) + cosine(grid, {3, 0, 1, 1}, 0.4));
    const ScalarField Lu = ops.apply_constant(u, coeffs);

    std::vector<double> per_point;
    for (std::size_t p = 0; p < grid.size(); ++p) per_point.insert(per_point.end(), coeffs.begin(), coeffs.end());
    EXPECT_LT(sup_norm(ops.contract(u, per_point) - Lu), 1e-10);

    const auto hess = ops.real_hessian(u);
    ScalarField direct(grid);
    for (int a = 0; a < 4; ++a) {
        for (int b = a; b < 4; ++b) {
            const double w = (a == b ? 1.0 : 2.0) * coeffs[static_cast<std::size_t>(ops.pair_index(a, b))];
            for (std::size_t p = 0; p < grid.size(); ++p)
                direct[p] += w * hess[static_cast<std::size_t>(ops.pair_index(a, b))][p];
        }
    }
    EXPECT_LT(sup_norm(direct - Lu), 1e-10);
    EXPECT_LT(sup_norm(ops.solve_constant(Lu, coeffs) - u), 1e-12);
}

TEST(Spectral, SecondSymbolDropsNyquistInMixedTerms)
{
    const TorusGrid grid(2, 4);
    const Spectral ops(grid);
    for (std::size_t m = 0; m < ops.modes(); ++m) {
        const int k0 = ops.wavenumber(m, 0), k1 = ops.wavenumber(m, 1);
        EXPECT_DOUBLE_EQ(ops.second_symbol(m, 0, 0), -4 * kPi * kPi * k0 * k0);
        const double mixed = (std::abs(k0) == 2 || std::abs(k1) == 2) ? 0.0 : -4 * kPi * kPi * k0 * k1;
        EXPECT_DOUBLE_EQ(ops.second_symbol(m, 0, 1), mixed);
    }
}

TEST(FieldIo, ScalarRoundTrip)
{
    const TorusGrid grid(3, 4, 2);
    const ScalarField f = cosine(grid, {1, 0, 2, 1}, 0.7);
    const std::string path = temp_path("scalar.field");
    write_field(path, f);
    const ScalarField g = read_scalar_field(path);
    EXPECT_TRUE(g.grid() == grid);
    for (std::size_t p = 0; p < grid.size(); ++p) EXPECT_EQ(f[p], g[p]);
    std::filesystem::remove(path);
}

TEST(FieldIo, MatrixRoundTrip)
{
    const TorusGrid grid(2, 4);
    auto rng = check_rng(3, "matrix_io");
    MatrixField m(grid);
    for (std::size_t p = 0; p < grid.size(); ++p) m.set(p, random_metric(rng, 2));
    const std::string path = temp_path("matrix.field");
    write_field(path, m);
    const MatrixField r = read_matrix_field(path);
    for (std::size_t p = 0; p < grid.size(); ++p) EXPECT_EQ(m.at(p).matrix(), r.at(p).matrix());
    EXPECT_THROW(read_scalar_field(path), FieldIoError);
    std::filesystem::remove(path);
}

TEST(FieldIo, RejectsCorruptFiles)
{
    const TorusGrid grid(2, 4);
    const std::string path = temp_path("corrupt.field");
    write_field(path, ScalarField(grid, 1.0));
    const auto full = std::filesystem::file_size(path);

    std::filesystem::resize_file(path, full - 8);
    try {
        read_scalar_field(path);
        FAIL();
    } catch (const FieldIoError& e) {
        EXPECT_EQ(e.path(), path);
        EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
    }

    write_field(path, ScalarField(grid, 1.0));
    {
        std::ofstream os(path, std::ios::binary | std::ios::app);
        os << "x";
    }
    EXPECT_THROW(read_scalar_field(path), FieldIoError);

    {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        os << "{\"format\": \"npsh-field\", \"kind\": \"scalar\"\n";
    }
    EXPECT_THROW(read_scalar_field(path), FieldIoError);

    ScalarField bad(grid, 0.0);
    bad[3] = std::numeric_limits<double>::quiet_NaN();
    write_field(path, bad);
    EXPECT_THROW(read_scalar_field(path), FieldIoError);

    EXPECT_THROW(read_scalar_field(temp_path("does_not_exist.field")), FieldIoError);
    std::filesystem::remove(path);
}
