#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gravicav/revival.hpp"

using namespace gravicav;

namespace {

// Synthetic C^2: peak train cos^(2m)(pi t / T_cl) under an envelope that
// collapses with width tau and comes back around T_rev.
AutocorrSeries synthetic(double T_cl, double tau, double T_rev, double height, double dt,
                         double t_end, int m = 8) {
  AutocorrSeries s;
  for (double t = 0.0; t <= t_end; t += dt) {
    const double env = std::max(std::exp(-std::pow(t / tau, 2)),
                                height * std::exp(-std::pow((t - T_rev) / tau, 2)));
    s.t.push_back(t);
    s.c2.push_back(env * std::pow(std::cos(std::numbers::pi * t / T_cl), 2 * m));
  }
  return s;
}

}  // namespace

TEST_CASE("unmodulated revival time") {
  CHECK(t_revival_unmodulated(15.25, 1.0) == doctest::Approx(3721.0 / std::numbers::pi));
  CHECK(t_revival_unmodulated(15.25, 1.0) == doctest::Approx(1184.4).epsilon(1e-4));
  // T0 scales as E0^2 / kbar.
  CHECK(t_revival_unmodulated(30.5, 1.0) == doctest::Approx(4.0 * t_revival_unmodulated(15.25, 1.0)));
  CHECK(t_revival_unmodulated(15.25, 0.5) == doctest::Approx(2.0 * t_revival_unmodulated(15.25, 1.0)));
  CHECK_THROWS_AS(t_revival_unmodulated(0.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(t_revival_unmodulated(1.0, -1.0), std::domain_error);
}

TEST_CASE("resonance energies and triangular-well period") {
  CHECK(resonance_energy<double>(1) == doctest::Approx(std::numbers::pi * std::numbers::pi / 2));
  CHECK(resonance_energy<double>(2) == doctest::Approx(2 * std::numbers::pi * std::numbers::pi));
  CHECK(t_classical(resonance_energy<double>(2)) == doctest::Approx(4 * std::numbers::pi));
  CHECK(t_classical(resonance_energy<double>(3)) == doctest::Approx(6 * std::numbers::pi));
  CHECK_THROWS_AS(resonance_energy<double>(0), std::domain_error);
  CHECK_THROWS_AS(t_classical(0.0), std::domain_error);
}

TEST_CASE("modulated revival time: worked example against long double") {
  const ResonanceModel m = make_resonance_model(2, 15.25, 1.0);
  CHECK(m.r == doctest::Approx(1.1377).epsilon(1e-4));
  CHECK(m.a == doctest::Approx(0.02122).epsilon(1e-3));

  // Independent evaluation of the bracket.
  const long double pi = 3.141592653589793238462643383279502884L;
  const long double E0 = 15.25L, lam = 0.3L;
  const long double r = std::sqrt(2.0L * pi * pi / E0);
  const long double a = r * r / (4.0L * E0);
  const long double u = (1.0L - r) * (1.0L - r);
  const long double bracket =
      1.0L - (lam / E0) * (lam / E0) * (3.0L * u + a * a) / (8.0L * std::pow(u - a * a, 3.0L));
  const long double T0 = 16.0L * E0 * E0 / pi;

  const auto res = t_revival_modulated(15.25, m, 0.3, 1.0);
  CHECK(res.T0 == doctest::Approx(static_cast<double>(T0)).epsilon(1e-14));
  CHECK(std::abs(res.T_lambda - static_cast<double>(T0 * bracket)) < 1e-9 * res.T0);
  CHECK(res.factor == doctest::Approx(0.56).epsilon(0.01));
  CHECK_FALSE(res.out_of_regime);

  const auto ld = t_revival_modulated<long double>(E0, r, a, lam, 1.0L);
  CHECK(std::abs(static_cast<double>(ld.T_lambda) - res.T_lambda) < 1e-9 * res.T0);
}

TEST_CASE("modulated revival time: limits and monotonicity") {
  const ResonanceModel m = make_resonance_model(2, 15.25, 1.0);
  const auto zero = t_revival_modulated(15.25, m, 0.0, 1.0);
  CHECK(zero.T_lambda == zero.T0);  // exactly, not approximately
  double prev = zero.T_lambda;
  for (double lam = 0.05; lam <= 0.3001; lam += 0.05) {
    const double T = t_revival_modulated(15.25, m, lam, 1.0).T_lambda;
    CHECK(T < prev);
    prev = T;
  }
  CHECK(t_revival_modulated(15.25, m, 0.5, 1.0).out_of_regime);
  CHECK_THROWS_AS(t_revival_modulated(15.25, m, -0.1, 1.0), std::domain_error);
}

TEST_CASE("modulated revival time: pole is reported") {
  // Choose a so that (1 - r)^2 - a^2 = 0.
  const double r = 1.2;
  CHECK_THROWS_AS(t_revival_modulated<double>(15.25, r, 0.2, 0.3, 1.0), ErrorSingularity);
  CHECK_THROWS_AS(t_revival_modulated<double>(15.25, r, 0.2 + 1e-8, 0.3, 1.0), ErrorSingularity);
  CHECK_NOTHROW(t_revival_modulated<double>(15.25, r, 0.21, 0.3, 1.0));
}

TEST_CASE("running_max matches a naive centred window") {
  std::vector<double> x;
  for (int i = 0; i < 300; ++i) x.push_back(std::sin(0.37 * i) + 0.01 * (i % 7));
  for (std::size_t w : {1u, 2u, 5u, 16u, 17u, 400u}) {
    const auto fast = running_max(x, w);
    const std::size_t left = w / 2, right = w - 1 - left;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const std::size_t lo = i >= left ? i - left : 0;
      const std::size_t hi = std::min(x.size() - 1, i + right);
      CHECK(fast[i] == *std::max_element(x.begin() + lo, x.begin() + hi + 1));
    }
  }
  CHECK(running_max({}, 3).empty());
}

TEST_CASE("detect: pure peak train") {
  // C^2 = cos^2(pi t / T): unit peaks at every multiple of T, no collapse.
  AutocorrSeries s;
  const double T = 4.0 * std::numbers::pi;
  for (int i = 0; i <= 4000; ++i) {
    const double t = i * 0.01;
    s.t.push_back(t);
    s.c2.push_back(std::pow(std::cos(std::numbers::pi * t / T), 2));
  }
  const RevivalReport r = detect(s, T);
  REQUIRE(r.peak_times.size() == 3);
  for (std::size_t n = 0; n < r.peak_times.size(); ++n) {
    CHECK(r.peak_times[n] == doctest::Approx((n + 1) * T).epsilon(1e-3));
    CHECK(r.peak_heights[n] == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK_FALSE(r.collapsed);
  CHECK(r.revival_present);
}

TEST_CASE("detect: synthetic collapse and revival") {
  const double T_cl = 4.0 * std::numbers::pi;
  for (double T_rev : {600.0, 1184.0, 2500.0}) {
    const AutocorrSeries s = synthetic(T_cl, 60.0, T_rev, 0.8, 0.1, 1.3 * T_rev);
    const RevivalReport r = detect(s, T_cl);
    INFO("T_rev = " << T_rev);
    CHECK(r.collapsed);
    CHECK(r.collapse_depth < 0.5);
    CHECK(r.revival_present);
    CHECK(std::abs(r.revival_time - T_rev) < 0.02 * T_rev);
    CHECK(r.revival_height == doctest::Approx(0.8).epsilon(0.02));
    CHECK(r.collapse_time > T_cl);
    CHECK(r.collapse_time < r.revival_time);
  }
}

TEST_CASE("detect: weak revival is reported as absent") {
  const double T_cl = 4.0 * std::numbers::pi;
  const AutocorrSeries s = synthetic(T_cl, 60.0, 1000.0, 0.3, 0.1, 1300.0);
  const RevivalReport r = detect(s, T_cl);
  CHECK(r.collapsed);
  CHECK_FALSE(r.revival_present);
  CHECK(r.revival_height == doctest::Approx(0.3).epsilon(0.02));
}

TEST_CASE("detect: deterministic and validates its input") {
  const double T_cl = 4.0 * std::numbers::pi;
  const AutocorrSeries s = synthetic(T_cl, 60.0, 800.0, 0.7, 0.1, 1000.0);
  const RevivalReport a = detect(s, T_cl), b = detect(s, T_cl);
  CHECK(a.revival_time == b.revival_time);
  CHECK(a.revival_height == b.revival_height);
  CHECK(a.peak_times == b.peak_times);

  AutocorrSeries tiny;
  tiny.t = {0.0};
  tiny.c2 = {1.0};
  CHECK_THROWS_AS(detect(tiny, T_cl), std::invalid_argument);
  AutocorrSeries shortish = synthetic(T_cl, 60.0, 800.0, 0.7, 0.1, 2.0 * T_cl);
  CHECK_THROWS_AS(detect(shortish, T_cl), std::invalid_argument);
  CHECK_THROWS_AS(detect(s, 0.0), std::invalid_argument);
}

TEST_CASE("max_envelope") {
  const double T_cl = 4.0 * std::numbers::pi;
  const AutocorrSeries s = synthetic(T_cl, 60.0, 800.0, 0.7, 0.1, 1000.0);
  CHECK(max_envelope(s, 300.0, 500.0) < 1e-3);
  CHECK(max_envelope(s, 700.0, 900.0) == doctest::Approx(0.7).epsilon(0.01));
  // Between two peak-train maxima: the neighbouring peaks sit just outside
  // the interval and must not leak in.
  CHECK(max_envelope(s, 64 * T_cl + 3.5, 65 * T_cl - 3.5) < 0.05);
}

TEST_CASE("lambda scan: short horizon, errors recorded per lambda") {
  SystemParams base;
  ScanSettings cfg;
  cfg.grid = Grid(-10.0, 80.0, 1024);
  cfg.steps_per_period = 512;
  cfg.horizon = 200.0;
  cfg.threads = 2;
  const GaussianSpec spec{14.5, 1.45};
  const ScanTable t = lambda_scan(spec, {0.0, 0.3}, base, cfg);
  REQUIRE(t.entries.size() == 2);
  CHECK(t.horizon == 200.0);
  CHECK(t.T0 == doctest::Approx(t_revival_unmodulated(t.entries[0].E0, 1.0)));
  for (const auto& e : t.entries) {
    CHECK(e.ok);
    CHECK(e.T_cl > 0.0);
  }
  CHECK(t.entries[1].T_cl == doctest::Approx(4.0 * std::numbers::pi).epsilon(5e-3));
  CHECK(t.entries[0].predicted_T_lambda == doctest::Approx(t.T0));
  CHECK_THROWS_AS(lambda_scan(spec, {0.3, 0.0}, base, cfg), ConfigError);
  CHECK_THROWS_AS(lambda_scan(spec, {-0.1}, base, cfg), ConfigError);
}
