#include <doctest.h>

#include <cmath>
#include <random>

#include "gravicav/core.hpp"

using namespace gravicav;

TEST_CASE("potential: direct substitution oracles") {
  SystemParams p;  // V0 = kappa = 1, lambda = 0.3
  CHECK(potential(0.0, 0.0, p) == doctest::Approx(1.0).epsilon(1e-15));

  // z = 15: 15 + e^-15, evaluated independently in long double.
  const long double ref = 15.0L + std::exp(-15.0L);
  CHECK(std::abs(potential(15.0, 0.0, p) - static_cast<double>(ref)) < 1e-14);
  CHECK(potential(15.0, 0.0, p) == doctest::Approx(15.00000031).epsilon(1e-9));

  // Deep inside the wall the mirror term is clamped.
  SystemParams q = p;
  q.lambda = 0.0;
  CHECK(potential(-50.0, 0.0, q) == doctest::Approx(q.V_clamp - 50.0));
  CHECK(potential(-50.0, 1.3, q) == doctest::Approx(q.V_clamp - 50.0));
}

TEST_CASE("potential: long double instantiation agrees with double") {
  SystemParams p;
  for (double z : {-3.0, 0.5, 7.0, 30.0})
    for (double t : {0.0, 1.0, 4.0}) {
      const long double ld = potential<long double>(z, t, p);
      CHECK(std::abs(static_cast<double>(ld) - potential(z, t, p)) < 1e-12 * std::max(1.0, std::abs(potential(z, t, p))));
    }
}

TEST_CASE("force: limits and exponent-zero point") {
  SystemParams p;
  CHECK(force(1e3, 0.0, p) == doctest::Approx(-1.0).epsilon(1e-15));
  const double t = 0.7;
  const double z = p.lambda * std::sin(t);
  CHECK(force(z, t, p) == doctest::Approx(-1.0 + p.kappa * p.V0).epsilon(1e-14));
  // Clamp region: the mirror is flat, only gravity remains.
  CHECK(force(-50.0, 0.0, p) == -1.0);
}

TEST_CASE("force: central finite difference at z = 10, t = 1") {
  SystemParams p;
  const double h = 1e-5;
  const double fd = -(potential(10.0 + h, 1.0, p) - potential(10.0 - h, 1.0, p)) / (2 * h);
  CHECK(std::abs(fd - force(10.0, 1.0, p)) < 1e-8 * std::abs(force(10.0, 1.0, p)));
}

TEST_CASE("force: finite differences at 200 random points above the clamp") {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> uz(-5.0, 60.0), ut(0.0, kTwoPi), ul(0.0, 0.6);
  for (int i = 0; i < 200; ++i) {
    SystemParams p;
    p.lambda = ul(rng);
    const double z = uz(rng), t = ut(rng);
    // Long double differences keep the roundoff far below the tolerance.
    const long double h = 1e-6L;
    const long double fd =
        -(potential<long double>(z + h, t, p) - potential<long double>(z - h, t, p)) / (2 * h);
    const double f = force(z, t, p);
    CHECK(std::abs(static_cast<double>(fd) - f) <= 1e-8 * std::max(1.0, std::abs(f)));
  }
}

TEST_CASE("potential is 2 pi periodic in t") {
  SystemParams p;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uz(-3.0, 40.0), ut(0.0, kTwoPi);
  for (int i = 0; i < 50; ++i) {
    const double z = uz(rng), t = ut(rng);
    CHECK(potential(z, t + kTwoPi, p) == doctest::Approx(potential(z, t, p)).epsilon(1e-12));
  }
}

TEST_CASE("SystemParams::validate") {
  SystemParams p;
  CHECK_NOTHROW(p.validate());
  p.V0 = 0.0;
  CHECK_NOTHROW(p.validate());  // pure gravity is allowed
  p.V0 = -1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.kappa = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.kbar = -1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.lambda = -0.1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("pure gravity: no mirror term at all") {
  SystemParams p;
  p.V0 = 0.0;
  CHECK(potential(-40.0, 0.3, p) == -40.0);
  CHECK(force(-40.0, 0.3, p) == -1.0);
}

TEST_CASE("scale_to_dimensionless") {
  PhysicalParams ph{2.0 * std::numbers::pi * 1000.0, 1.44e-25, 9.81, 0.0};
  CHECK(scale_to_dimensionless(ph).lambda == 0.0);

  ph.a = 1e-6;
  const auto s1 = scale_to_dimensionless(ph);
  CHECK(s1.lambda == doctest::Approx(ph.a * ph.omega * ph.omega / ph.g));
  ph.omega *= 2.0;
  CHECK(scale_to_dimensionless(ph).lambda == doctest::Approx(4.0 * s1.lambda));

  // Choose M so that kbar = 1.
  ph.M = ph.hbar * std::pow(ph.omega, 3) / (ph.g * ph.g);
  CHECK(scale_to_dimensionless(ph).kbar == doctest::Approx(1.0).epsilon(1e-14));

  PhysicalParams bad = ph;
  bad.omega = 0.0;
  CHECK_THROWS_AS(scale_to_dimensionless(bad), std::domain_error);
  bad = ph;
  bad.M = -1.0;
  CHECK_THROWS_AS(scale_to_dimensionless(bad), std::domain_error);
  bad = ph;
  bad.a = -1.0;
  CHECK_THROWS_AS(scale_to_dimensionless(bad), std::domain_error);
}
