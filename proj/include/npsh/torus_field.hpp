#pragma once

// Periodic fields on the flat torus C^n / (Z^n + i Z^n).
//
// Complex coordinates are z^j = x^j + i y^j with every real coordinate in [0, 1). A grid samples
// the first `active` complex coordinates with N points per real axis; fields are constant along
// the remaining n - active coordinates. Real axes are ordered (x^1, y^1, x^2, y^2, ...) and points
// are stored row-major with the first axis slowest.

#include "npsh/form_algebra.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace npsh {

class TorusGrid {
public:
    /// `active` < 0 means every coordinate is active. Throws std::invalid_argument for
    /// 2 <= n <= 8, N a power of two in [4, 64], 1 <= active <= n violations.
    TorusGrid(int n, int N, int active = -1);

    int n() const { return n_; }
    int N() const { return N_; }
    int active() const { return active_; }
    int real_axes() const { return 2 * active_; }
    std::size_t size() const { return size_; }

    /// Real coordinate of point `p` along real axis `axis` (0 <= axis < real_axes()).
    double coordinate(std::size_t p, int axis) const;
    /// Integer index of point `p` along `axis`.
    int index(std::size_t p, int axis) const;

    bool operator==(const TorusGrid& o) const = default;

private:
    int n_;
    int N_;
    int active_;
    std::size_t size_;
};

class ScalarField {
public:
    explicit ScalarField(TorusGrid grid, double value = 0.0);
    ScalarField(TorusGrid grid, std::vector<double> values);

    /// f evaluated at every grid point; receives the real coordinates of the active axes.
    static ScalarField sample(const TorusGrid& grid, const std::function<double(std::span<const double>)>& f);

    const TorusGrid& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    double operator[](std::size_t p) const { return values_[p]; }
    double& operator[](std::size_t p) { return values_[p]; }

    ScalarField& operator+=(const ScalarField& o);
    ScalarField& operator-=(const ScalarField& o);
    ScalarField& operator*=(double s);
    ScalarField& operator+=(double c);
    friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
    friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
    friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

private:
    TorusGrid grid_;
    std::vector<double> values_;
};

/// Hermitian n x n matrix per grid point, stored contiguously (row-major per point).
class MatrixField {
public:
    explicit MatrixField(TorusGrid grid);
    MatrixField(TorusGrid grid, std::vector<Complex> data);
    static MatrixField constant(const TorusGrid& grid, const HermitianMatrix& m);

    const TorusGrid& grid() const { return grid_; }
    std::size_t size() const { return grid_.size(); }
    int dim() const { return grid_.n(); }

    HermitianMatrix at(std::size_t p) const;
    void set(std::size_t p, const HermitianMatrix& m);

    std::span<const Complex> data() const { return data_; }

private:
    TorusGrid grid_;
    std::vector<Complex> data_;
};

/// Sum in a fixed pairwise tree order; the result does not depend on threading.
double pairwise_sum(std::span<const double> x);

double mean(const ScalarField& f);
double sup(const ScalarField& f);
double inf(const ScalarField& f);
double sup_norm(const ScalarField& f);
/// f - sup(f); the result has sup exactly 0.
ScalarField sup_normalize(const ScalarField& f);
/// f - mean(f).
ScalarField mean_normalize(const ScalarField& f);

/// Fourier differentiation on one grid. Plans are created once and shared; all const members
/// are safe to call concurrently.
class Spectral {
public:
    explicit Spectral(const TorusGrid& grid);
    ~Spectral();
    Spectral(const Spectral&) = delete;
    Spectral& operator=(const Spectral&) = delete;

    const TorusGrid& grid() const { return grid_; }
    std::size_t modes() const { return modes_; }

    std::vector<Complex> forward(std::span<const double> values) const;
    /// Inverse transform including the 1/size normalization. `coeffs` is consumed.
    void backward(std::vector<Complex>& coeffs, std::span<double> out) const;

    /// Signed wavenumber of mode `m` along real axis `axis`.
    int wavenumber(std::size_t m, int axis) const { return k_[m * static_cast<std::size_t>(axes_) + axis]; }
    /// Symbol of d^2/(dx_a dx_b). Mixed derivatives drop the Nyquist mode.
    double second_symbol(std::size_t m, int a, int b) const;

    /// All real second derivatives d_a d_b u, a <= b, packed upper triangular.
    std::vector<std::vector<double>> real_hessian(const ScalarField& u) const;
    /// Parts of the complex Hessian u_{i\bar j} over the active block, act^2 real fields: for each
    /// i <= j in row-major order the real part, followed by the imaginary part when i < j.
    std::vector<std::vector<double>> complex_hessian_parts(const ScalarField& u) const;
    /// Real first derivatives d_a u (Nyquist dropped).
    std::vector<std::vector<double>> real_gradient(const ScalarField& u) const;

    /// Sum_{a,b} C_ab(x) d_a d_b u(x) with C symmetric, given packed per point as
    /// coeffs[p * T + t] over the upper triangle (T = axes (axes+1)/2).
    ScalarField contract(const ScalarField& u, std::span<const double> coeffs) const;

    /// Solves Sum_ab C_ab d_a d_b v = f for constant C (packed upper triangle). The mean of f
    /// is ignored and v has mean zero.
    ScalarField solve_constant(const ScalarField& f, std::span<const double> coeffs) const;
    ScalarField apply_constant(const ScalarField& u, std::span<const double> coeffs) const;

    /// Packed index of pair (a, b), a <= b.
    int pair_index(int a, int b) const;
    int pair_count() const { return axes_ * (axes_ + 1) / 2; }

private:
    struct Plans;

    TorusGrid grid_;
    int axes_;
    std::size_t modes_;
    std::vector<int> k_;
    std::unique_ptr<Plans> plans_;
};

/// Complex Hessian u_{i\bar j} = d_i d_{\bar j} u with d_j = (d_x - i d_y)/2.
MatrixField spectral_hessian(const ScalarField& u);
MatrixField spectral_hessian(const Spectral& ops, const ScalarField& u);

/// Delta u = g^{i\bar j} u_{i\bar j} for a constant metric.
ScalarField laplacian(const HermitianMatrix& g, const ScalarField& u);

/// d_j u for each complex coordinate (zero along inactive ones): result[j][p].
std::vector<std::vector<Complex>> complex_gradient(const Spectral& ops, const ScalarField& u);

/// Binary field files: one JSON header line, then little-endian float64 values.
void write_field(const std::string& path, const ScalarField& f);
void write_field(const std::string& path, const MatrixField& f);
ScalarField read_scalar_field(const std::string& path);
MatrixField read_matrix_field(const std::string& path);

}  // namespace npsh
