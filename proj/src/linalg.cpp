#include "seld/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "seld/errors.hpp"

namespace seld {

CMat CMat::identity(int n) {
  CMat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

CMat CMat::adjoint() const {
  CMat r(cols_, rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) r(j, i) = std::conj((*this)(i, j));
  return r;
}

cdouble CMat::trace() const {
  cdouble t = 0.0;
  for (int i = 0; i < std::min(rows_, cols_); ++i) t += (*this)(i, i);
  return t;
}

double CMat::frobenius_norm() const {
  double s = 0.0;
  for (const cdouble& v : data_) s += std::norm(v);
  return std::sqrt(s);
}

void CMat::set_zero() { std::fill(data_.begin(), data_.end(), cdouble(0.0)); }

void CMat::add_outer(std::span<const cdouble> x, double w) {
  for (int i = 0; i < rows_; ++i) {
    const cdouble xi = x[i] * w;
    for (int j = 0; j < cols_; ++j) (*this)(i, j) += xi * std::conj(x[j]);
  }
}

void CMat::add_diagonal(double eps) {
  for (int i = 0; i < std::min(rows_, cols_); ++i) (*this)(i, i) += eps;
}

void CMat::scale(double s) {
  for (cdouble& v : data_) v *= s;
}

double CMat::hermitian_defect() const {
  double d = 0.0;
  for (int i = 0; i < rows_; ++i)
    for (int j = i; j < cols_; ++j)
      d = std::max(d, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
  return d;
}

void CMat::hermitize() {
  for (int i = 0; i < rows_; ++i) {
    (*this)(i, i) = cdouble((*this)(i, i).real(), 0.0);
    for (int j = i + 1; j < cols_; ++j) {
      const cdouble avg = 0.5 * ((*this)(i, j) + std::conj((*this)(j, i)));
      (*this)(i, j) = avg;
      (*this)(j, i) = std::conj(avg);
    }
  }
}

CMat CMat::operator*(const CMat& rhs) const {
  CMat r(rows_, rhs.cols_);
  for (int i = 0; i < rows_; ++i)
    for (int k = 0; k < cols_; ++k) {
      const cdouble a = (*this)(i, k);
      if (a == cdouble(0.0)) continue;
      for (int j = 0; j < rhs.cols_; ++j) r(i, j) += a * rhs(k, j);
    }
  return r;
}

CMat CMat::operator+(const CMat& rhs) const {
  CMat r = *this;
  for (int i = 0; i < rows_ * cols_; ++i) r.data_[i] += rhs.data_[i];
  return r;
}

CMat CMat::operator-(const CMat& rhs) const {
  CMat r = *this;
  for (int i = 0; i < rows_ * cols_; ++i) r.data_[i] -= rhs.data_[i];
  return r;
}

CVec matvec(const CMat& a, std::span<const cdouble> x) {
  CVec y(a.rows());
  for (int i = 0; i < a.rows(); ++i) {
    cdouble s = 0.0;
    for (int j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

cdouble quad_form(const CMat& a, std::span<const cdouble> x) {
  cdouble s = 0.0;
  for (int i = 0; i < a.rows(); ++i) {
    cdouble row = 0.0;
    for (int j = 0; j < a.cols(); ++j) row += a(i, j) * x[j];
    s += std::conj(x[i]) * row;
  }
  return s;
}

double quad_form_real(const CMat& a, std::span<const cdouble> x) {
  return quad_form(a, x).real();
}

cdouble dot_conj(std::span<const cdouble> a, std::span<const cdouble> b) {
  cdouble s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

double norm2(std::span<const cdouble> x) {
  double s = 0.0;
  for (const cdouble& v : x) s += std::norm(v);
  return std::sqrt(s);
}

namespace {

// One complex Jacobi rotation annihilating A(p,q). The phase of A(p,q) is
// absorbed first so the 2x2 block becomes real symmetric, then the classic
// rotation angle:  tau = (a_qq - a_pp) / 2|a_pq|,  t = sgn(tau)/(|tau|+sqrt(1+tau^2)).
// A <- R^H A R and U <- U R with
//   R(p,p) = c, R(p,q) = s, R(q,p) = -s e^{-i phi}, R(q,q) = c e^{-i phi}.
void jacobi_rotate(CMat& a, CMat& u, int p, int q) {
  const cdouble apq = a(p, q);
  const double r = std::abs(apq);
  if (r == 0.0) return;
  const cdouble phase = apq / r;  // e^{i phi}

  const double app = a(p, p).real();
  const double aqq = a(q, q).real();
  const double tau = (aqq - app) / (2.0 * r);
  double t;
  if (tau >= 0.0)
    t = 1.0 / (tau + std::sqrt(1.0 + tau * tau));
  else
    t = -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
  const double c = 1.0 / std::sqrt(1.0 + t * t);
  const double s = t * c;

  const int n = a.rows();
  const cdouble rpp = c;
  const cdouble rpq = s;
  const cdouble rqp = -s * std::conj(phase);
  const cdouble rqq = c * std::conj(phase);

  // A <- A R (columns p and q change).
  for (int i = 0; i < n; ++i) {
    const cdouble aip = a(i, p), aiq = a(i, q);
    a(i, p) = aip * rpp + aiq * rqp;
    a(i, q) = aip * rpq + aiq * rqq;
  }
  // A <- R^H A (rows p and q change).
  for (int j = 0; j < n; ++j) {
    const cdouble apj = a(p, j), aqj = a(q, j);
    a(p, j) = std::conj(rpp) * apj + std::conj(rqp) * aqj;
    a(q, j) = std::conj(rpq) * apj + std::conj(rqq) * aqj;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;
  a(p, p) = cdouble(a(p, p).real(), 0.0);
  a(q, q) = cdouble(a(q, q).real(), 0.0);

  for (int i = 0; i < n; ++i) {
    const cdouble uip = u(i, p), uiq = u(i, q);
    u(i, p) = uip * rpp + uiq * rqp;
    u(i, q) = uip * rpq + uiq * rqq;
  }
}

double offdiag_norm(const CMat& a) {
  double s = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (i != j) s += std::norm(a(i, j));
  return std::sqrt(s);
}

}  // namespace

EigenDecomposition eigh(const CMat& m) {
  if (m.rows() != m.cols())
    throw NotHermitian("eigh: matrix is not square");
  const int n = m.rows();
  const double scale = std::max(1.0, m.frobenius_norm());
  if (m.hermitian_defect() > 1e-12 * scale)
    throw NotHermitian("eigh: asymmetry defect exceeds 1e-12 relative");

  CMat a = m;
  a.hermitize();
  CMat u = CMat::identity(n);

  constexpr int kMaxSweeps = 64;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (offdiag_norm(a) <= 1e-15 * scale * n) break;
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) jacobi_rotate(a, u, p, q);
  }

  EigenDecomposition d;
  d.values.resize(n);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> diag(n);
  for (int i = 0; i < n; ++i) diag[i] = a(i, i).real();
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return diag[i] > diag[j]; });

  d.vectors = CMat(n, n);
  for (int k = 0; k < n; ++k) {
    d.values[k] = diag[order[k]];
    for (int i = 0; i < n; ++i) d.vectors(i, k) = u(i, order[k]);
  }
  return d;
}

CMat eig_reconstruct(const EigenDecomposition& d) {
  const int n = d.vectors.rows();
  CMat r(n, n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i) {
      const cdouble lik = d.values[k] * d.vectors(i, k);
      for (int j = 0; j < n; ++j)
        r(i, j) += lik * std::conj(d.vectors(j, k));
    }
  return r;
}

CMat cholesky(const CMat& a) {
  const int n = a.rows();
  CMat l(n, n);
  for (int j = 0; j < n; ++j) {
    double diag = a(j, j).real();
    for (int k = 0; k < j; ++k) diag -= std::norm(l(j, k));
    if (!(diag > 0.0) || !std::isfinite(diag))
      throw SingularNoiseMatrix("cholesky: matrix is not positive definite");
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (int i = j + 1; i < n; ++i) {
      cdouble s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
      l(i, j) = s / ljj;
    }
  }
  return l;
}

CVec solve_lower(const CMat& l, std::span<const cdouble> b) {
  const int n = l.rows();
  CVec y(b.begin(), b.end());
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < i; ++k) y[i] -= l(i, k) * y[k];
    y[i] /= l(i, i);
  }
  return y;
}

CVec solve_lower_adjoint(const CMat& l, std::span<const cdouble> b) {
  const int n = l.rows();
  CVec y(b.begin(), b.end());
  for (int i = n - 1; i >= 0; --i) {
    for (int k = i + 1; k < n; ++k) y[i] -= std::conj(l(k, i)) * y[k];
    y[i] /= std::conj(l(i, i));
  }
  return y;
}

CVec gev_principal(const CMat& a, const CMat& b) {
  const int n = a.rows();
  CMat loaded = b;
  const double tr = loaded.trace().real();
  loaded.add_diagonal(1e-6 * tr / std::max(1, n));

  CMat l;
  try {
    l = cholesky(loaded);
  } catch (const SingularNoiseMatrix&) {
    throw SingularNoiseMatrix(
        "gev_principal: noise matrix singular after diagonal loading");
  }

  // Whitened matrix C = L^-1 A L^-H, then the principal eigenvector of C
  // maps back through L^-H.
  CMat z(n, n);  // L^-1 A, built column by column
  for (int j = 0; j < n; ++j) {
    CVec col(n);
    for (int i = 0; i < n; ++i) col[i] = a(i, j);
    CVec sol = solve_lower(l, col);
    for (int i = 0; i < n; ++i) z(i, j) = sol[i];
  }
  CMat zh = z.adjoint();
  CMat wh(n, n);  // L^-1 Z^H = (L^-1 A L^-H)^H
  for (int j = 0; j < n; ++j) {
    CVec col(n);
    for (int i = 0; i < n; ++i) col[i] = zh(i, j);
    CVec sol = solve_lower(l, col);
    for (int i = 0; i < n; ++i) wh(i, j) = sol[i];
  }
  CMat c = wh.adjoint();
  c.hermitize();

  EigenDecomposition d = eigh(c);
  CVec v(n);
  for (int i = 0; i < n; ++i) v[i] = d.vectors(i, 0);
  CVec w = solve_lower_adjoint(l, v);
  const double nw = norm2(w);
  if (!(nw > 0.0) || !std::isfinite(nw))
    throw SingularNoiseMatrix("gev_principal: degenerate solution");
  for (cdouble& x : w) x /= nw;
  return w;
}

double generalized_rayleigh(const CMat& a, const CMat& b,
                            std::span<const cdouble> w) {
  return quad_form_real(a, w) / quad_form_real(b, w);
}

}  // namespace seld
