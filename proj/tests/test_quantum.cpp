#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "gravicav/classical.hpp"
#include "gravicav/quantum.hpp"

using namespace gravicav;

namespace {

const Grid kDefault(-10.0, 120.0, 2048);
constexpr double kSigma = 0.70710678118654752440;

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("gravicav_test_" + name);
}

}  // namespace

TEST_CASE("grid: spacing and momentum layout") {
  const Grid g(-10.0, 80.0, 2048);
  CHECK(g.dz() == doctest::Approx(90.0 / 2048));
  const auto p = g.momenta(1.0);
  CHECK(p[0] == 0.0);
  CHECK(p[1] == doctest::Approx(kTwoPi / 90.0));
  CHECK(p[1024] == doctest::Approx(-g.p_max(1.0)));  // wrapped Nyquist bin
  CHECK_THROWS_AS(Grid(0.0, 1.0, 1000), ConfigError);
  CHECK_THROWS_AS(Grid(1.0, 0.0, 1024), ConfigError);
}

TEST_CASE("init_gaussian: norm and minimum-uncertainty moments") {
  const Wavepacket w = init_gaussian({15.0, 0.0, kSigma}, kDefault, 1.0);
  CHECK(std::abs(norm(w) - 1.0) < 1e-12);
  const Moments m = moments(w, 1.0);
  CHECK(std::abs(m.z_mean - 15.0) < 1e-10);
  CHECK(std::abs(m.p_mean) < 1e-10);
  CHECK(std::abs(m.z_var - kSigma * kSigma) < 1e-8);
  CHECK(std::abs(m.p_var - std::pow(1.0 / (2 * kSigma), 2)) < 1e-8);

  const Moments mp = moments(init_gaussian({20.0, 1.5, 1.0}, kDefault, 1.0), 1.0);
  CHECK(std::abs(mp.p_mean - 1.5) < 1e-10);
  CHECK(std::abs(mp.p_var - 0.25) < 1e-8);

  CHECK_THROWS_AS(init_gaussian({-8.0, 0.0, kSigma}, kDefault, 1.0), ConfigError);
  CHECK_THROWS_AS(init_gaussian({15.0, 0.0, 0.0}, kDefault, 1.0), ConfigError);
}

TEST_CASE("autocorrelation and overlap") {
  const Wavepacket a = init_gaussian({15.0, 0.0, kSigma}, kDefault, 1.0);
  CHECK(std::abs(autocorrelation(a, a) - 1.0) < 1e-12);
  const Wavepacket b = init_gaussian({15.0 + 20 * kSigma, 0.0, kSigma}, kDefault, 1.0);
  CHECK(autocorrelation(a, b) < 1e-10);
  const Wavepacket c = init_gaussian({15.5, 0.3, kSigma}, kDefault, 1.0);
  CHECK(autocorrelation(a, c) <= 1.0);
  const Wavepacket other = init_gaussian({15.0, 0.0, kSigma}, Grid(-10.0, 80.0, 2048), 1.0);
  CHECK_THROWS_AS(overlap(a, other), std::invalid_argument);
}

TEST_CASE("expectation energy") {
  SystemParams pure;
  pure.V0 = 0.0;
  const Wavepacket w = init_gaussian({15.0, 0.0, kSigma}, kDefault, 1.0);
  CHECK(expectation_energy(w, pure) == doctest::Approx(15.25).epsilon(1e-10));

  SystemParams p;  // wall adds <exp(-z)>, tiny at z = 15
  const double shift = expectation_energy(w, p) - 15.25;
  CHECK(shift > 0.0);
  CHECK(shift < 1e-5);

  const Wavepacket w2 = init_gaussian({15.0, 2.0, kSigma}, kDefault, 1.0);
  CHECK(expectation_energy(w2, p) - expectation_energy(w, p) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("pure gravity: exact Gaussian solution at t = 2") {
  SystemParams p;
  p.V0 = 0.0;
  p.lambda = 0.0;
  const double z0 = 15.0, p0 = 0.5;
  const Wavepacket w = propagate(init_gaussian({z0, p0, kSigma}, kDefault, 1.0), 2.0, 1024, p);
  const Moments m = moments(w, 1.0);
  const double t = 2.0;
  const double sp = 1.0 / (2 * kSigma);
  CHECK(std::abs(m.z_mean - (z0 + p0 * t - t * t / 2)) < 1e-6);
  CHECK(std::abs(m.p_mean - (p0 - t)) < 1e-6);
  CHECK(std::abs(m.z_var - (kSigma * kSigma + sp * sp * t * t)) < 1e-6);
}

TEST_CASE("unitarity: norm drift over 1e4 steps") {
  SystemParams p;
  Propagator prop(kDefault, p, 1024);
  Wavepacket w = init_gaussian({14.5, 1.45, kSigma}, kDefault, 1.0);
  prop.advance(w, 10000 * prop.dt());
  CHECK(std::abs(w.norm - 1.0) < 1e-10);
  CHECK(w.t == doctest::Approx(10000 * prop.dt()));
}

TEST_CASE("Strang splitting is second order") {
  SystemParams p;
  const Grid g(-10.0, 120.0, 1024);
  const Wavepacket psi0 = init_gaussian({14.5, 1.45, kSigma}, g, 1.0);
  const double T = 10.0;
  const Wavepacket ref = propagate(psi0, T, 8192, p);
  auto err = [&](int spp) {
    const Wavepacket w = propagate(psi0, T, spp, p);
    return std::sqrt((w.psi - ref.psi).squaredNorm() * g.dz());
  };
  const double ratio = err(1024) / err(2048);
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("grid independence: doubling N leaves C^2 on [0, 100] unchanged") {
  SystemParams p;
  auto series = [&](Eigen::Index N) {
    const Grid g(-10.0, 120.0, N);
    Propagator prop(g, p, 1024);
    const Wavepacket psi0 = init_gaussian({14.5, 1.45, kSigma}, g, 1.0);
    return evolve_autocorrelation(psi0, 100.0, 16, prop).c2;
  };
  const auto a = series(2048);
  const auto b = series(4096);
  REQUIRE(a.size() == b.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  CHECK(worst < 1e-6);
}

TEST_CASE("short-time correspondence with the classical orbit of point a") {
  SystemParams p;
  Propagator prop(kDefault, p, 1024);
  const PhasePoint a = *named_seed('a');
  const Wavepacket psi0 = init_gaussian({a.z, a.p, kSigma}, kDefault, 1.0);
  const EvolutionRecord rec = evolve_autocorrelation(psi0, 3 * kTwoPi, 16, prop);
  const Trajectory tr = integrate(a, 0.0, 3 * kTwoPi, prop.dt(), p, 16);
  REQUIRE(tr.x.size() == rec.t.size());
  CHECK(rec.last.t == doctest::Approx(3 * kTwoPi));

  // Away from the wall the packet centre follows the single orbit. During a
  // bounce the packet straddles the exponential wall and its mean lags the
  // centre orbit by up to ~3, so there the reference is the Liouville
  // ensemble of the packet's (positive, Gaussian) Wigner function.
  for (std::size_t i = 0; i < rec.t.size(); ++i)
    if (tr.x[i].z > 5.0) CHECK(std::abs(rec.z_mean[i] - tr.x[i].z) < 0.5);

  std::mt19937_64 rng(2024);
  std::normal_distribution<double> nz(a.z, kSigma), np(a.p, 1.0 / (2 * kSigma));
  const int members = 2000;
  std::vector<double> ens(rec.t.size(), 0.0);
  for (int k = 0; k < members; ++k) {
    const PhasePoint x{nz(rng), np(rng)};
    const Trajectory m = integrate(x, 0.0, 3 * kTwoPi, prop.dt(), p, 16);
    for (std::size_t i = 0; i < ens.size(); ++i) ens[i] += m.x[i].z / members;
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < ens.size(); ++i) worst = std::max(worst, std::abs(rec.z_mean[i] - ens[i]));
  CHECK(worst < 0.25);
}

TEST_CASE("ehrenfest departure") {
  const std::vector<double> t{0, 1, 2, 3};
  CHECK(ehrenfest_departure(t, {0, 0.1, 2.0, 0}, {0, 0, 0, 0}, 0.7) == 2.0);
  CHECK(ehrenfest_departure(t, {0, 0, 0, 0}, {0, 0, 0, 0}, 0.7) < 0.0);
}

TEST_CASE("guards: edge leak and aliasing fail loudly") {
  SystemParams p;
  // Box top at 30: a packet launched upward at z = 20 reaches the edge.
  const Grid tight(-10.0, 30.0, 1024);
  CHECK_THROWS_AS(propagate(init_gaussian({20.0, 6.0, kSigma}, tight, 1.0), 10.0, 1024, p),
                  ErrorBoxTooSmall);
  // Coarse grid: p_max = pi / dz ~ 2.5, reached after t ~ 2.3 of free fall.
  const Grid coarse(-10.0, 310.0, 256);
  GuardLimits often;
  often.check_every = 16;
  CHECK_THROWS_AS(propagate(init_gaussian({30.0, 0.0, 2.0}, coarse, 1.0), kTwoPi, 1024, p, often),
                  ErrorAliasing);
  CHECK_THROWS_AS(Propagator(kDefault, p, 256), ConfigError);
}

TEST_CASE("snapshot round trip is bit exact") {
  SystemParams p;
  Wavepacket w = init_gaussian({14.5, 1.45, kSigma}, Grid(-10.0, 80.0, 512), 1.0);
  w = propagate(w, 3.0, 1024, p);
  const auto path = temp_file("snap.bin");
  write_snapshot(path, w, 0.75);
  double kbar = 0.0;
  const Wavepacket r = read_snapshot(path, &kbar);
  CHECK(kbar == 0.75);
  CHECK(r.t == w.t);
  CHECK(r.grid == w.grid);
  CHECK((r.psi.array() == w.psi.array()).all());
  CHECK(std::filesystem::file_size(path) == 8 * 5 + 16 * 512);
  std::filesystem::remove(path);
}

TEST_CASE("density CSV") {
  const Wavepacket w = init_gaussian({15.0, 0.0, kSigma}, Grid(-10.0, 80.0, 256), 1.0);
  const auto path = temp_file("density.csv");
  write_density_csv(path, w);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "z,density");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 256);
  std::filesystem::remove(path);
}
