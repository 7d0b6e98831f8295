#pragma once

#include <complex>
#include <span>
#include <vector>

namespace seld {

using cdouble = std::complex<double>;
using CVec = std::vector<cdouble>;

// Small dense complex matrix, row major. Everything in this toolkit is
// order <= 8 per frequency bin, so no blocking or views, just plain loops.
class CMat {
 public:
  CMat() = default;
  CMat(int rows, int cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  static CMat identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  cdouble& operator()(int i, int j) { return data_[i * cols_ + j]; }
  const cdouble& operator()(int i, int j) const { return data_[i * cols_ + j]; }

  std::span<const cdouble> data() const { return data_; }
  std::span<cdouble> data() { return data_; }

  CMat adjoint() const;
  cdouble trace() const;
  double frobenius_norm() const;

  void set_zero();
  // A += w * x x^H  (w real; keeps Hermitian structure exactly).
  void add_outer(std::span<const cdouble> x, double w);
  // A += eps * I.
  void add_diagonal(double eps);
  void scale(double s);

  // Max |A(i,j) - conj(A(j,i))| over all pairs; 0 for exactly Hermitian input.
  double hermitian_defect() const;
  // Averages A against its adjoint and zeroes diagonal imaginary parts.
  void hermitize();

  CMat operator*(const CMat& rhs) const;
  CMat operator+(const CMat& rhs) const;
  CMat operator-(const CMat& rhs) const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<cdouble> data_;
};

CVec matvec(const CMat& a, std::span<const cdouble> x);
// x^H A x; real for Hermitian A (the real part is returned by quad_form_real).
cdouble quad_form(const CMat& a, std::span<const cdouble> x);
double quad_form_real(const CMat& a, std::span<const cdouble> x);
cdouble dot_conj(std::span<const cdouble> a, std::span<const cdouble> b);  // a^H b
double norm2(std::span<const cdouble> x);

struct EigenDecomposition {
  std::vector<double> values;  // descending
  CMat vectors;                // unit-norm columns, values[k] <-> column k
};

// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
// Throws NotHermitian when the asymmetry defect exceeds 1e-12 relative.
EigenDecomposition eigh(const CMat& m);

// Reconstruction U diag(values) U^H, for invariant checks.
CMat eig_reconstruct(const EigenDecomposition& d);

// Lower Cholesky factor of a Hermitian positive definite matrix.
// Throws SingularNoiseMatrix when a pivot is not strictly positive.
CMat cholesky(const CMat& a);

// Solves L y = b (forward) / L^H y = b (backward) for lower-triangular L.
CVec solve_lower(const CMat& l, std::span<const cdouble> b);
CVec solve_lower_adjoint(const CMat& l, std::span<const cdouble> b);

// Principal generalized eigenvector: unit-norm w maximizing
// (w^H a w)/(w^H b w), via diagonal loading of b (1e-6 tr/M), Cholesky
// whitening, and eigh. Throws SingularNoiseMatrix when b stays singular.
CVec gev_principal(const CMat& a, const CMat& b);

double generalized_rayleigh(const CMat& a, const CMat& b,
                            std::span<const cdouble> w);

}  // namespace seld
