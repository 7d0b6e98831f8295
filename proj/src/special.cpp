#include "seld/special.hpp"

#include <cmath>

#include "seld/errors.hpp"

namespace seld {

double legendre_p(int n, double x) {
  if (n == 0) return 1.0;
  if (n == 1) return x;
  double pm1 = 1.0, p = x;
  for (int k = 1; k < n; ++k) {
    // (k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}
    const double next = ((2.0 * k + 1.0) * x * p - k * pm1) / (k + 1.0);
    pm1 = p;
    p = next;
  }
  return p;
}

namespace {

void check_positive(double x) {
  if (!(x > 0.0)) throw DomainError("spherical hankel: argument must be > 0");
}

// h^(2)_{-1}(x) = cos(x)/x - i sin(x)/x = e^{-ix}/x.
std::complex<double> hankel2_minus1(double x) {
  return {std::cos(x) / x, -std::sin(x) / x};
}

std::complex<double> hankel2_0(double x) {
  return {std::sin(x) / x, std::cos(x) / x};
}

}  // namespace

std::complex<double> spherical_hankel2(int n, double x) {
  check_positive(x);
  if (n == -1) return hankel2_minus1(x);
  std::complex<double> fm1 = hankel2_minus1(x);
  std::complex<double> f = hankel2_0(x);
  for (int k = 0; k < n; ++k) {
    // f_{k+1} = (2k+1)/x f_k - f_{k-1}
    const std::complex<double> next = (2.0 * k + 1.0) / x * f - fm1;
    fm1 = f;
    f = next;
  }
  return f;
}

std::complex<double> spherical_hankel2_deriv(int n, double x) {
  check_positive(x);
  std::complex<double> fm1 = hankel2_minus1(x);
  std::complex<double> f = hankel2_0(x);
  for (int k = 0; k < n; ++k) {
    const std::complex<double> next = (2.0 * k + 1.0) / x * f - fm1;
    fm1 = f;
    f = next;
  }
  return fm1 - (n + 1.0) / x * f;
}

}  // namespace seld
