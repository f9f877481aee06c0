#include "npsh/form_algebra.hpp"

#include "npsh/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace npsh {

namespace {

void require_form_dimension(int n)
{
    if (n < 2 || n > kMaxDimension) {
        throw std::invalid_argument("form dimension must lie in [2, 8], got " + std::to_string(n));
    }
}

ComplexMatrix hermitian_part(const ComplexMatrix& m)
{
    return 0.5 * (m + m.adjoint());
}

ComplexMatrix cofactor_matrix(const ComplexMatrix& a)
{
    const Eigen::Index n = a.rows();
    ComplexMatrix cof(n, n);
    if (n == 1) {
        cof(0, 0) = 1.0;
        return cof;
    }
    ComplexMatrix minor(n - 1, n - 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index r = 0, mr = 0; r < n; ++r) {
                if (r == i) continue;
                for (Eigen::Index c = 0, mc = 0; c < n; ++c) {
                    if (c == j) continue;
                    minor(mr, mc++) = a(r, c);
                }
                ++mr;
            }
            const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
            cof(i, j) = sign * minor.determinant();
        }
    }
    return cof;
}

}  // namespace

HermitianMatrix::HermitianMatrix(const ComplexMatrix& m)
{
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw std::invalid_argument("HermitianMatrix: expected a non-empty square matrix");
    }
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
        throw std::invalid_argument("HermitianMatrix: input is not Hermitian");
    }
    m_ = hermitian_part(m);
}

HermitianMatrix HermitianMatrix::from_raw(const ComplexMatrix& m)
{
    HermitianMatrix h;
    h.m_ = hermitian_part(m);
    return h;
}

HermitianMatrix HermitianMatrix::identity(int n)
{
    return from_raw(ComplexMatrix::Identity(n, n));
}

HermitianMatrix HermitianMatrix::zero(int n)
{
    return from_raw(ComplexMatrix::Zero(n, n));
}

HermitianMatrix HermitianMatrix::diagonal(std::span<const double> d)
{
    ComplexMatrix m = ComplexMatrix::Zero(static_cast<Eigen::Index>(d.size()), static_cast<Eigen::Index>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = d[i];
    return from_raw(m);
}

double HermitianMatrix::determinant() const
{
    return m_.determinant().real();
}

Eigen::VectorXd HermitianMatrix::eigenvalues() const
{
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

HermitianMatrix& HermitianMatrix::operator+=(const HermitianMatrix& o)
{
    m_ += o.m_;
    return *this;
}

HermitianMatrix& HermitianMatrix::operator-=(const HermitianMatrix& o)
{
    m_ -= o.m_;
    return *this;
}

HermitianMatrix& HermitianMatrix::operator*=(double s)
{
    m_ *= s;
    return *this;
}

Metric::Metric(HermitianMatrix g) : g_(std::move(g))
{
    Eigen::LLT<ComplexMatrix> llt(g_.matrix());
    if (llt.info() != Eigen::Success) throw SingularMetricError();
    const ComplexMatrix l = llt.matrixL();
    det_ = 1.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) det_ *= std::norm(l(i, i));
    if (!(det_ > 0.0) || !std::isfinite(det_)) throw SingularMetricError();
    const Eigen::Index n = l.rows();
    chol_inverse_ = l.triangularView<Eigen::Lower>().solve(ComplexMatrix::Identity(n, n));
    inverse_ = chol_inverse_.adjoint() * chol_inverse_;
}

double Metric::trace(const HermitianMatrix& a) const
{
    return (inverse_ * a.matrix()).trace().real();
}

double Metric::trace_product(const HermitianMatrix& a, const HermitianMatrix& b) const
{
    return (inverse_ * a.matrix() * inverse_ * b.matrix()).trace().real();
}

Eigen::VectorXd Metric::relative_eigenvalues(const HermitianMatrix& a) const
{
    const ComplexMatrix c = chol_inverse_ * a.matrix() * chol_inverse_.adjoint();
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(c), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

double factorial(int k)
{
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

double trace_pair(const HermitianMatrix& g, const HermitianMatrix& a)
{
    return Metric(g).trace(a);
}

double wedge11_invariant(const Metric& g, const HermitianMatrix& a, const HermitianMatrix& b)
{
    require_form_dimension(g.dim());
    return g.trace(a) * g.trace(b) - g.trace_product(a, b);
}

double wedge11_invariant(const HermitianMatrix& g, const HermitianMatrix& a, const HermitianMatrix& b)
{
    return wedge11_invariant(Metric(g), a, b);
}

FormTopMinusOne hodge_star_11(const Metric& g, const HermitianMatrix& a)
{
    const int n = g.dim();
    require_form_dimension(n);
    const ComplexMatrix& gi = g.inverse();
    const ComplexMatrix psi = (g.determinant() / factorial(n - 1)) * (gi * a.matrix() * gi).transpose();
    return FormTopMinusOne(HermitianMatrix::from_raw(psi));
}

FormTopMinusOne hodge_star_11(const HermitianMatrix& g, const HermitianMatrix& a)
{
    return hodge_star_11(Metric(g), a);
}

HermitianMatrix hodge_star_n1(const Metric& g, const FormTopMinusOne& psi)
{
    const int n = g.dim();
    require_form_dimension(n);
    const ComplexMatrix& gm = g.g().matrix();
    const ComplexMatrix a = (factorial(n - 1) / g.determinant()) * (gm * psi.matrix().transpose() * gm);
    return HermitianMatrix::from_raw(a);
}

HermitianMatrix hodge_star_n1(const HermitianMatrix& g, const FormTopMinusOne& psi)
{
    return hodge_star_n1(Metric(g), psi);
}

double det_form_top_minus_one(const FormTopMinusOne& psi)
{
    return psi.matrix().determinant().real();
}

FormTopMinusOne wedge_power(const HermitianMatrix& a)
{
    require_form_dimension(a.dim());
    return FormTopMinusOne(HermitianMatrix::from_raw(cofactor_matrix(a.matrix())));
}

FormTopMinusOne wedge_with_metric_power(const Metric& g, const HermitianMatrix& chi)
{
    const int n = g.dim();
    require_form_dimension(n);
    const ComplexMatrix& gi = g.inverse();
    const ComplexMatrix inner = g.trace(chi) * gi - gi * chi.matrix() * gi;
    const ComplexMatrix psi = (g.determinant() / (n - 1)) * inner.transpose();
    return FormTopMinusOne(HermitianMatrix::from_raw(psi));
}

HermitianMatrix root_n_minus_one(const Metric& g, const FormTopMinusOne& psi)
{
    const int n = g.dim();
    require_form_dimension(n);
    const HermitianMatrix h = hodge_star_n1(g, psi) * (1.0 / factorial(n - 1));
    Eigen::LLT<ComplexMatrix> llt(h.matrix());
    if (llt.info() != Eigen::Success || h.eigenvalues()(0) <= 0.0) {
        throw ConeError("form not in positive cone");
    }
    const double det_psi = det_form_top_minus_one(psi);
    const double scale = std::pow(det_psi, 1.0 / (n - 1));
    const ComplexMatrix s = scale * psi.matrix().inverse().transpose();
    return HermitianMatrix::from_raw(s);
}

HermitianMatrix root_n_minus_one(const HermitianMatrix& g, const FormTopMinusOne& psi)
{
    return root_n_minus_one(Metric(g), psi);
}

HermitianMatrix trace_reversal(const Metric& g, const HermitianMatrix& a)
{
    return g.trace(a) * g.g() - a;
}

HermitianMatrix p_operator(const Metric& g, const HermitianMatrix& h, const HermitianMatrix& hess)
{
    const int n = g.dim();
    require_form_dimension(n);
    return h + trace_reversal(g, hess) * (1.0 / (n - 1));
}

HermitianMatrix p_operator(const HermitianMatrix& g, const HermitianMatrix& h, const HermitianMatrix& hess)
{
    return p_operator(Metric(g), h, hess);
}

bool is_n_minus_one_psh(const HermitianMatrix& hess, double tol)
{
    const int n = hess.dim();
    const HermitianMatrix reversed = hess.trace() * HermitianMatrix::identity(n) - hess;
    return reversed.eigenvalues()(0) >= -tol;
}

double cone_margin(const Metric& g, const HermitianMatrix& gtilde)
{
    return g.relative_eigenvalues(gtilde)(0);
}

double cone_margin(const HermitianMatrix& g, const HermitianMatrix& gtilde)
{
    return cone_margin(Metric(g), gtilde);
}

HermitianMatrix eta_tensor(const Metric& g, const HermitianMatrix& gtilde)
{
    const int n = g.dim();
    return g.trace(gtilde) * g.g() - (n - 1.0) * gtilde;
}

ComplexMatrix theta_matrix(const Metric& g, const HermitianMatrix& gtilde)
{
    const int n = g.dim();
    require_form_dimension(n);
    const ComplexMatrix gt_inv = gtilde.matrix().inverse();
    const double tr = (gt_inv * g.g().matrix()).trace().real();
    return (tr * g.inverse() - gt_inv) / static_cast<double>(n - 1);
}

}  // namespace npsh
