#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gravicav/classical.hpp"

using namespace gravicav;

namespace {
constexpr double kDt = kTwoPi / 1024.0;
}

TEST_CASE("named seeds") {
  CHECK(named_seed('a')->z == 14.5);
  CHECK(named_seed('a')->p == 1.45);
  CHECK(named_seed('d')->p == -2.0);
  CHECK(named_seed('f')->z == 25.0);
  CHECK_FALSE(named_seed('g').has_value());
}

TEST_CASE("pure gravity projectile is exact") {
  SystemParams p;
  p.V0 = 0.0;
  p.lambda = 0.0;
  const PhasePoint x = flow({15.0, 0.7}, 0.0, 1.0, kDt, p);
  CHECK(std::abs(x.z - (15.0 + 0.7 - 0.5)) < 1e-10);
  CHECK(std::abs(x.p - (0.7 - 1.0)) < 1e-10);
}

TEST_CASE("integrate: samples, end point and step limits") {
  SystemParams p;
  const Trajectory tr = integrate({15.0, 0.0}, 0.0, 1.0, kDt, p, 10);
  CHECK(tr.t.front() == 0.0);
  CHECK(tr.t.back() == 1.0);
  CHECK(tr.t.size() == tr.x.size());
  CHECK_THROWS_AS(integrate({15.0, 0.0}, 0.0, 1.0, kTwoPi / 100.0, p), std::invalid_argument);
  CHECK_THROWS_AS(integrate({15.0, 0.0}, 0.0, 1.0, 0.0, p), std::invalid_argument);
}

TEST_CASE("time reversal over 10 periods at lambda = 0.3") {
  SystemParams p;
  for (char s : {'a', 'c', 'd'}) {
    const PhasePoint x0 = *named_seed(s);
    const PhasePoint x1 = flow(x0, 0.0, 10 * kTwoPi, kDt, p);
    const PhasePoint back = flow(x1, 10 * kTwoPi, 0.0, kDt, p);
    CHECK(std::abs(back.z - x0.z) < 1e-9);
    CHECK(std::abs(back.p - x0.p) < 1e-9);
  }
}

TEST_CASE("second-order convergence of the integrator") {
  SystemParams p;
  const PhasePoint x0 = *named_seed('b');
  const double T = 2.0 * kTwoPi;
  const PhasePoint ref = flow(x0, 0.0, T, kDt / 64, p);
  auto err = [&](double h) {
    const PhasePoint x = flow(x0, 0.0, T, h, p);
    return std::hypot(x.z - ref.z, x.p - ref.p);
  };
  const double ratio = err(kDt) / err(kDt / 2);
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("energy at lambda = 0: bounded error, exact in free flight") {
  SystemParams p;
  p.lambda = 0.0;
  PhasePoint x = *named_seed('f');
  const double E0 = energy(x, 0.0, p);
  double worst_free = 0.0, worst_any = 0.0;
  const long long steps = 1024LL * 1000;
  for (long long k = 0; k < steps; ++k) {
    verlet_step(x, k * kDt, kDt, p);
    const double dE = std::abs(energy(x, 0.0, p) - E0) / E0;
    worst_any = std::max(worst_any, dE);
    if (p.kappa * p.V0 * std::exp(-p.kappa * x.z) < 1e-6) worst_free = std::max(worst_free, dE);
  }
  CHECK(worst_free < 1e-8);
  CHECK(worst_any < 1e-3);  // bounded excursions while inside the wall
}

TEST_CASE("poincare: strobes, determinism and thread independence") {
  SystemParams p;
  const std::vector<PhasePoint> seeds = {*named_seed('a'), *named_seed('c'), *named_seed('d')};
  const PoincareSection s1 = poincare(seeds, 40, p, 1024, 1);
  const PoincareSection s3 = poincare(seeds, 40, p, 1024, 3);
  REQUIRE(s1.samples.size() == 120);
  REQUIRE(s3.samples.size() == s1.samples.size());
  for (std::size_t i = 0; i < s1.samples.size(); ++i) {
    CHECK(s1.samples[i].seed_id == s3.samples[i].seed_id);
    CHECK(s1.samples[i].n == s3.samples[i].n);
    CHECK(s1.samples[i].x.z == s3.samples[i].x.z);
    CHECK(s1.samples[i].x.p == s3.samples[i].x.p);
  }
  // The strobe at n equals an explicit flow to t = 2 pi n.
  const PhasePoint x = flow(seeds[1], 0.0, 5 * kTwoPi, kDt, p);
  const auto& s = s1.samples[40 + 4];
  CHECK(s.seed_id == 1);
  CHECK(s.n == 5);
  CHECK(std::abs(s.x.z - x.z) < 1e-12);
}

TEST_CASE("poincare at lambda = 0 conserves energy on the strobes") {
  SystemParams p;
  p.lambda = 0.0;
  const PhasePoint x0{30.0, 0.0};  // strobes mostly in free flight
  const PoincareSection s = poincare({x0}, 200, p);
  const double E0 = energy(x0, 0.0, p);
  for (const auto& smp : s.samples)
    if (std::exp(-smp.x.z) < 1e-6) CHECK(std::abs(energy(smp.x, 0.0, p) - E0) / E0 < 1e-8);
}

TEST_CASE("seed a stays in a bounded island, seed d fills an area") {
  SystemParams p;
  const Trajectory tr = integrate(*named_seed('a'), 0.0, 1000 * kTwoPi, kDt, p, 64);
  for (const auto& x : tr.x) {
    CHECK(x.z > -5.0);  // the soft wall lets the orbit dip slightly below z = 0
    CHECK(x.z < 40.0);
  }
  const PoincareSection s = poincare({*named_seed('a'), *named_seed('d')}, 500, p);
  const int cells_a = occupied_cells(s, 0);
  const int cells_d = occupied_cells(s, 1);
  CHECK(cells_d > 10 * cells_a);
}

TEST_CASE("seed lattice") {
  const auto pts = seed_lattice(2.0, 40.0, 5, -3.0, 3.0, 5);
  REQUIRE(pts.size() == 25);
  CHECK(pts.front().z == 2.0);
  CHECK(pts.front().p == -3.0);
  CHECK(pts.back().z == 40.0);
  CHECK(pts.back().p == 3.0);
}

TEST_CASE("divergence guard") {
  SystemParams p;
  // A launch far beyond the cutoff trips the guard immediately.
  CHECK_THROWS_AS(flow({2e6, 0.0}, 0.0, 1.0, kDt, p), ErrorDivergedOrbit);
}

TEST_CASE("lyapunov: integrable limit and a regular island") {
  SystemParams p;
  p.lambda = 0.0;
  const LyapunovEstimate e0 = lyapunov(*named_seed('b'), p, 1000);
  CHECK(std::abs(e0.exponent) < 1e-3);
  CHECK(e0.classification == OrbitClass::regular);
  CHECK(e0.partial_sums.size() == 1000);
  CHECK(e0.transient_time == doctest::Approx(100 * kTwoPi));

  p.lambda = 0.3;
  const LyapunovEstimate ea = lyapunov(*named_seed('a'), p, 1000);
  CHECK(ea.exponent < 1e-3);
  CHECK_THROWS_AS(lyapunov(*named_seed('a'), p, 999), std::invalid_argument);
}

TEST_CASE("lyapunov: stochastic seed d is chaotic") {
  SystemParams p;
  const LyapunovEstimate e = lyapunov(*named_seed('d'), p, 2000);
  CHECK(e.exponent > 1e-3);
  CHECK(e.classification == OrbitClass::chaotic);
}

TEST_CASE("bounce period") {
  SystemParams p;
  // In the 2:1 resonance the packet centre bounces every two drive periods.
  CHECK(bounce_period(*named_seed('a'), p) == doctest::Approx(4.0 * std::numbers::pi).epsilon(2e-3));
  // A steep wall approaches the triangular well, T = 2 sqrt(2E).
  SystemParams hard = p;
  hard.lambda = 0.0;
  hard.kappa = 40.0;
  const PhasePoint x{20.0, 0.0};
  CHECK(bounce_period(x, hard) == doctest::Approx(2.0 * std::sqrt(2.0 * 20.0)).epsilon(5e-3));
}

TEST_CASE("classification is invariant under halving dt" * doctest::test_suite("slow")) {
  SystemParams p;
  for (char s : kSeedLabels) {
    LyapunovOptions o1, o2;
    o2.steps_per_period = 2048;
    const auto e1 = lyapunov(*named_seed(s), p, 10000, o1);
    const auto e2 = lyapunov(*named_seed(s), p, 10000, o2);
    INFO("seed " << s << ": " << e1.exponent << " vs " << e2.exponent);
    CHECK(e1.classification == e2.classification);
  }
}
