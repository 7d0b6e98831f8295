#include <doctest.h>

#include <cmath>
#include <random>

#include "seld/errors.hpp"
#include "seld/geometry.hpp"
#include "seld/special.hpp"

using namespace seld;

TEST_CASE("P_0 is 1 and P_1 is x") {
  CHECK(legendre_p(0, -0.7) == 1.0);
  CHECK(legendre_p(0, 0.3) == 1.0);
  CHECK(legendre_p(1, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("P_5 matches the closed form") {
  const double x = 0.3;
  const double expected =
      (15.0 * x - 70.0 * x * x * x + 63.0 * std::pow(x, 5)) / 8.0;
  CHECK(legendre_p(5, x) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("Legendre bound and endpoint") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n = 0; n <= 30; ++n) {
    CHECK(legendre_p(n, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (int i = 0; i < 50; ++i)
      CHECK(std::abs(legendre_p(n, u(rng))) <= 1.0 + 1e-12);
  }
}

TEST_CASE("h_0^(2) closed form and derivative") {
  const double x = 1.0;
  const auto h0 = spherical_hankel2(0, x);
  CHECK(h0.real() == doctest::Approx(std::sin(x) / x).epsilon(1e-14));
  CHECK(h0.imag() == doctest::Approx(std::cos(x) / x).epsilon(1e-14));

  // d/dx [sin x / x + i cos x / x]
  const double dre = (x * std::cos(x) - std::sin(x)) / (x * x);
  const double dim = (-x * std::sin(x) - std::cos(x)) / (x * x);
  const auto d0 = spherical_hankel2_deriv(0, x);
  CHECK(d0.real() == doctest::Approx(dre).epsilon(1e-10));
  CHECK(d0.imag() == doctest::Approx(dim).epsilon(1e-10));
}

TEST_CASE("derivative identity agrees with a central difference") {
  const double x = 2.0, h = 1e-6;
  const auto numeric =
      (spherical_hankel2(1, x + h) - spherical_hankel2(1, x - h)) / (2.0 * h);
  const auto analytic = spherical_hankel2_deriv(1, x);
  CHECK(std::abs(numeric - analytic) < 1e-6);
}

TEST_CASE("y_0 vanishes at pi/2") {
  // h_0^(2) = j_0 - i y_0; at x = pi/2 the imaginary part is -y_0 = cos(x)/x = 0.
  const auto h0 = spherical_hankel2(0, kPi / 2.0);
  CHECK(std::abs(h0.imag()) < 1e-15);
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(spherical_hankel2_deriv(2, 0.0), DomainError);
  CHECK_THROWS_AS(spherical_hankel2_deriv(2, -1.0), DomainError);
}
