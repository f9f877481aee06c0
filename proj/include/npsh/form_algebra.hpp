#pragma once

// Pointwise algebra of real (1,1) and (n-1,n-1) forms on C^n.
//
// A real (1,1) form  a = i a_{k\bar l} dz^k ^ dz^{\bar l}  is stored as the Hermitian matrix
// A[k][l] = a_{k\bar l}. A real (n-1,n-1) form is stored as its coefficient matrix Psi in the
// basis
//
//   psi = i^{n-1} (n-1)! sum_{i,j} sgn(i,j) Psi_{i\bar j}
//         dz^1 ^ dz^{\bar 1} ^ ... ^ (omit dz^i) ... ^ (omit dz^{\bar j}) ^ ... ^ dz^n ^ dz^{\bar n},
//
// sgn(i,j) = -1 for i > j and +1 otherwise. In this convention the (n-1)th wedge power of a
// (1,1) form is  Psi(a^{n-1}) = det(a) a^{-T},  so det(omega^{n-1}) = (det g)^{n-1}.

#include <Eigen/Dense>

#include <complex>
#include <span>

namespace npsh {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

inline constexpr int kMaxDimension = 8;

/// Dense Hermitian matrix. Inputs are symmetrized as (A + A^*)/2 on construction.
class HermitianMatrix {
public:
    HermitianMatrix() = default;

    /// Throws std::invalid_argument if `m` is not square or is visibly non-Hermitian
    /// (asymmetry above 1e-8 relative to its largest entry).
    explicit HermitianMatrix(const ComplexMatrix& m);

    static HermitianMatrix identity(int n);
    static HermitianMatrix zero(int n);
    static HermitianMatrix diagonal(std::span<const double> d);
    /// Skips the asymmetry check; still symmetrizes.
    static HermitianMatrix from_raw(const ComplexMatrix& m);

    int dim() const { return static_cast<int>(m_.rows()); }
    const ComplexMatrix& matrix() const { return m_; }
    Complex operator()(int i, int j) const { return m_(i, j); }

    double trace() const { return m_.trace().real(); }
    double determinant() const;
    /// Ascending.
    Eigen::VectorXd eigenvalues() const;

    HermitianMatrix& operator+=(const HermitianMatrix& o);
    HermitianMatrix& operator-=(const HermitianMatrix& o);
    HermitianMatrix& operator*=(double s);

    friend HermitianMatrix operator+(HermitianMatrix a, const HermitianMatrix& b) { return a += b; }
    friend HermitianMatrix operator-(HermitianMatrix a, const HermitianMatrix& b) { return a -= b; }
    friend HermitianMatrix operator*(HermitianMatrix a, double s) { return a *= s; }
    friend HermitianMatrix operator*(double s, HermitianMatrix a) { return a *= s; }

private:
    ComplexMatrix m_;
};

/// Coefficient matrix Psi of a real (n-1,n-1) form (see the header comment for the basis).
class FormTopMinusOne {
public:
    FormTopMinusOne() = default;
    explicit FormTopMinusOne(HermitianMatrix psi) : psi_(std::move(psi)) {}

    int dim() const { return psi_.dim(); }
    const HermitianMatrix& psi() const { return psi_; }
    const ComplexMatrix& matrix() const { return psi_.matrix(); }

    FormTopMinusOne& operator+=(const FormTopMinusOne& o)
    {
        psi_ += o.psi_;
        return *this;
    }
    friend FormTopMinusOne operator+(FormTopMinusOne a, const FormTopMinusOne& b) { return a += b; }

private:
    HermitianMatrix psi_;
};

/// A positive definite Hermitian matrix with its factorization cached. Used as the reference
/// Kaehler metric g by everything that raises indices.
class Metric {
public:
    /// Throws SingularMetricError unless `g` is positive definite.
    explicit Metric(HermitianMatrix g);

    int dim() const { return g_.dim(); }
    const HermitianMatrix& g() const { return g_; }
    const ComplexMatrix& inverse() const { return inverse_; }
    double determinant() const { return det_; }

    /// tr_g a = g^{i\bar j} a_{i\bar j} = tr(g^{-1} a).
    double trace(const HermitianMatrix& a) const;
    /// tr(g^{-1} a g^{-1} b).
    double trace_product(const HermitianMatrix& a, const HermitianMatrix& b) const;
    /// Eigenvalues of a relative to g (ascending), by Cholesky congruence.
    Eigen::VectorXd relative_eigenvalues(const HermitianMatrix& a) const;

private:
    HermitianMatrix g_;
    ComplexMatrix inverse_;
    ComplexMatrix chol_inverse_;  // L^{-1} with g = L L^*
    double det_ = 0.0;
};

double factorial(int k);

double trace_pair(const HermitianMatrix& g, const HermitianMatrix& a);

/// n(n-1) (a ^ b ^ omega^{n-2}) / omega^n = (tr_g a)(tr_g b) - tr(g^{-1} a g^{-1} b).
double wedge11_invariant(const HermitianMatrix& g, const HermitianMatrix& a, const HermitianMatrix& b);
double wedge11_invariant(const Metric& g, const HermitianMatrix& a, const HermitianMatrix& b);

FormTopMinusOne hodge_star_11(const HermitianMatrix& g, const HermitianMatrix& a);
FormTopMinusOne hodge_star_11(const Metric& g, const HermitianMatrix& a);
HermitianMatrix hodge_star_n1(const HermitianMatrix& g, const FormTopMinusOne& psi);
HermitianMatrix hodge_star_n1(const Metric& g, const FormTopMinusOne& psi);

double det_form_top_minus_one(const FormTopMinusOne& psi);

/// a^{n-1}. Uses the adjugate, so singular `a` is fine.
FormTopMinusOne wedge_power(const HermitianMatrix& a);
/// chi ^ omega^{n-2}; for n = 2 this is chi itself viewed as a (1,1) = (n-1,n-1) form.
FormTopMinusOne wedge_with_metric_power(const Metric& g, const HermitianMatrix& chi);

/// The unique metric S with S^{n-1} = psi. Throws ConeError when star(psi)/(n-1)! is not
/// positive definite.
HermitianMatrix root_n_minus_one(const HermitianMatrix& g, const FormTopMinusOne& psi);
HermitianMatrix root_n_minus_one(const Metric& g, const FormTopMinusOne& psi);

/// (tr_g a) g - a.
HermitianMatrix trace_reversal(const Metric& g, const HermitianMatrix& a);

/// gtilde = h + ((Delta u) g - hess)/(n-1), with Delta u = tr_g hess.
HermitianMatrix p_operator(const HermitianMatrix& g, const HermitianMatrix& h, const HermitianMatrix& hess);
HermitianMatrix p_operator(const Metric& g, const HermitianMatrix& h, const HermitianMatrix& hess);

/// Every sum of n-1 eigenvalues of `hess` is >= -tol, tested through (tr hess) I - hess.
bool is_n_minus_one_psh(const HermitianMatrix& hess, double tol = 1e-10);

/// Smallest eigenvalue of gtilde relative to g; positive iff gtilde > 0.
double cone_margin(const HermitianMatrix& g, const HermitianMatrix& gtilde);
double cone_margin(const Metric& g, const HermitianMatrix& gtilde);

/// eta = (tr_g gtilde) g - (n-1) gtilde.
HermitianMatrix eta_tensor(const Metric& g, const HermitianMatrix& gtilde);

/// Matrix T with  Theta^{i\bar j} v_{i\bar j} = tr(T V)  for V = (v_{i\bar j}):
/// T = ((tr_gtilde g) g^{-1} - gtilde^{-1}) / (n-1).
ComplexMatrix theta_matrix(const Metric& g, const HermitianMatrix& gtilde);

}  // namespace npsh
