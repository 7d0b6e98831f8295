#pragma once

#include <complex>

namespace seld {

// Unnormalized Legendre polynomial P_n(x) on [-1, 1], Bonnet recurrence.
double legendre_p(int n, double x);

// Spherical Hankel function of the second kind, h_n^(2) = j_n - i y_n,
// by upward recurrence. x > 0.
std::complex<double> spherical_hankel2(int n, double x);

// Derivative with respect to the argument, h'_n = h_{n-1} - (n+1)/x h_n
// (with h_{-1}(x) = e^{-ix}/x so the identity covers n = 0).
// Throws DomainError for x <= 0.
std::complex<double> spherical_hankel2_deriv(int n, double x);

}  // namespace seld
