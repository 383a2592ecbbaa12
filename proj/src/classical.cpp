#include "gravicav/classical.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "gravicav/parallel.hpp"

namespace gravicav {

std::optional<PhasePoint> named_seed(char label) {
  switch (label) {
    case 'a': return PhasePoint{14.5, 1.45};
    case 'b': return PhasePoint{15.0, 0.0};
    case 'c': return PhasePoint{15.0, -1.0};
    case 'd': return PhasePoint{15.0, -2.0};
    case 'e': return PhasePoint{10.0, 0.0};
    case 'f': return PhasePoint{25.0, 0.0};
    default: return std::nullopt;
  }
}

namespace {

void guard(const PhasePoint& x, const PhasePoint& last, double t) {
  if (!std::isfinite(x.z) || !std::isfinite(x.p) || std::abs(x.z) > kDivergenceCutoff ||
      std::abs(x.p) > kDivergenceCutoff) {
    std::ostringstream msg;
    msg << "orbit diverged near t=" << t << " (last valid z=" << last.z << ", p=" << last.p
        << ")";
    throw ErrorDivergedOrbit(msg.str(), last, t);
  }
}

template <typename Sample>
PhasePoint run(PhasePoint x, double t0, double t1, double dt, const SystemParams& params,
               int every, Sample&& sample) {
  if (!(std::abs(dt) > 0.0)) throw std::invalid_argument("integrate: dt must be non-zero");
  if (std::abs(dt) > kTwoPi / 200.0)
    throw std::invalid_argument("integrate: |dt| must not exceed 2 pi / 200");
  if (every < 1) every = 1;
  const double span = t1 - t0;
  const double h = std::copysign(std::abs(dt), span);
  // Count full steps with a relative tolerance so that spans that are
  // integer multiples of dt are not followed by a roundoff-sized step.
  const auto n_full = static_cast<long long>(std::floor(std::abs(span) / std::abs(dt) + 1e-9));
  sample(t0, x);
  for (long long n = 0; n < n_full; ++n) {
    const PhasePoint last = x;
    const double t = t0 + static_cast<double>(n) * h;
    verlet_step(x, t, h, params);
    guard(x, last, t + h);
    if ((n + 1) % every == 0 && n + 1 != n_full) sample(t + h, x);
  }
  const double t_done = t0 + static_cast<double>(n_full) * h;
  const double rest = t1 - t_done;
  if (std::abs(rest) > 1e-12 * std::max(1.0, std::abs(t1))) {
    const PhasePoint last = x;
    verlet_step(x, t_done, rest, params);
    guard(x, last, t1);
  }
  sample(t1, x);
  return x;
}

}  // namespace

Trajectory integrate(PhasePoint x0, double t0, double t1, double dt,
                     const SystemParams& params, int every) {
  Trajectory traj;
  run(x0, t0, t1, dt, params, every, [&](double t, const PhasePoint& x) {
    traj.t.push_back(t);
    traj.x.push_back(x);
  });
  return traj;
}

PhasePoint flow(PhasePoint x0, double t0, double t1, double dt, const SystemParams& params) {
  return run(x0, t0, t1, dt, params, 1 << 30, [](double, const PhasePoint&) {});
}

double bounce_period(PhasePoint x0, const SystemParams& params, int bounces,
                     int steps_per_period) {
  if (bounces < 2) throw std::invalid_argument("bounce_period: need at least 2 bounces");
  const double h = kTwoPi / steps_per_period;
  // Generous cap: a bound orbit of energy E bounces every ~2 sqrt(2E).
  const double E = std::max(energy(x0, 0.0, params), 1.0);
  const long long cap = std::llround((bounces + 2) * 4.0 * std::sqrt(2.0 * E) / h) + 100000;
  PhasePoint x = x0;
  double first = -1.0, last = -1.0;
  int seen = 0;
  for (long long k = 0; k < cap && seen < bounces; ++k) {
    const double t = static_cast<double>(k) * h;
    const double p_before = x.p;
    verlet_step(x, t, h, params);
    if (!(std::abs(x.z) < kDivergenceCutoff))
      throw ErrorDivergedOrbit("bounce_period: orbit diverged", x0, t);
    if (p_before < 0.0 && x.p >= 0.0) {
      // Linear interpolation of the p = 0 crossing inside the step.
      const double tc = t + h * (-p_before) / (x.p - p_before);
      if (seen == 0) first = tc;
      last = tc;
      ++seen;
    }
  }
  if (seen < 2) throw NumericalGuardError("bounce_period: orbit does not bounce");
  return (last - first) / (seen - 1);
}

// ---------------------------------------------------------------------------

PoincareSection poincare(const std::vector<PhasePoint>& seeds, int n_periods,
                         const SystemParams& params, int steps_per_period, int threads) {
  if (n_periods < 1) throw std::invalid_argument("poincare: n_periods must be >= 1");
  if (steps_per_period < 200) throw std::invalid_argument("poincare: steps_per_period < 200");
  const double h = kTwoPi / steps_per_period;

  struct Result {
    std::vector<StrobeSample> samples;
    bool diverged = false;
  };
  std::vector<Result> results(seeds.size());
  parallel_for(seeds.size(), threads, [&](std::size_t id) {
    Result& r = results[id];
    PhasePoint x = seeds[id];
    r.samples.reserve(static_cast<std::size_t>(n_periods));
    try {
      for (int n = 0; n < n_periods; ++n) {
        for (int k = 0; k < steps_per_period; ++k) {
          const PhasePoint last = x;
          // Time from integer step counts: no accumulated phase drift.
          const double t = kTwoPi * n + h * k;
          verlet_step(x, t, h, params);
          guard(x, last, t + h);
        }
        r.samples.push_back({static_cast<int>(id), n + 1, x});
      }
    } catch (const ErrorDivergedOrbit&) {
      r.samples.clear();
      r.diverged = true;
    }
  });

  PoincareSection section;
  section.strobe_phase = 0.0;
  for (std::size_t id = 0; id < seeds.size(); ++id) {
    if (results[id].diverged) {
      section.diverged_seeds.push_back(static_cast<int>(id));
      continue;
    }
    for (auto& s : results[id].samples) section.samples.push_back(s);
  }
  return section;
}

std::vector<PhasePoint> seed_lattice(double z_lo, double z_hi, int cols, double p_lo,
                                     double p_hi, int rows) {
  std::vector<PhasePoint> seeds;
  auto node = [](double lo, double hi, int n, int i) {
    return n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (n - 1);
  };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      seeds.push_back({node(z_lo, z_hi, cols, c), node(p_lo, p_hi, rows, r)});
  return seeds;
}

int occupied_cells(const PoincareSection& section, int seed_id, double cell) {
  std::set<std::pair<long long, long long>> cells;
  for (const auto& s : section.samples) {
    if (s.seed_id != seed_id) continue;
    cells.emplace(static_cast<long long>(std::floor(s.x.z / cell)),
                  static_cast<long long>(std::floor(s.x.p / cell)));
  }
  return static_cast<int>(cells.size());
}

std::string to_string(OrbitClass c) {
  return c == OrbitClass::regular ? "regular" : "chaotic";
}

// ---------------------------------------------------------------------------

LyapunovEstimate lyapunov(PhasePoint x0, const SystemParams& params, int periods,
                          const LyapunovOptions& opt) {
  if (periods < 1000) throw std::invalid_argument("lyapunov: need at least 1000 periods");
  const double h = kTwoPi / opt.steps_per_period;
  const double d0 = opt.separation;
  const int transient = static_cast<int>(std::floor(opt.transient_fraction * periods));

  PhasePoint x = x0;
  PhasePoint y{x0.z + d0, x0.p};
  LyapunovEstimate est;
  est.partial_sums.reserve(static_cast<std::size_t>(periods));
  double cumulative = 0.0;
  double measured = 0.0;
  for (int n = 0; n < periods; ++n) {
    for (int k = 0; k < opt.steps_per_period; ++k) {
      const double t = kTwoPi * n + h * k;
      const PhasePoint lx = x;
      const PhasePoint ly = y;
      verlet_step(x, t, h, params);
      verlet_step(y, t, h, params);
      guard(x, lx, t + h);
      guard(y, ly, t + h);
    }
    const double dz = y.z - x.z;
    const double dp = y.p - x.p;
    const double d = std::hypot(dz, dp);
    const double stretch = std::log(d / d0);
    cumulative += stretch;
    est.partial_sums.push_back(cumulative);
    if (n >= transient) measured += stretch;
    y = {x.z + dz * d0 / d, x.p + dp * d0 / d};
  }
  est.total_time = kTwoPi * periods;
  est.transient_time = kTwoPi * transient;
  est.exponent = measured / (est.total_time - est.transient_time);
  est.classification =
      est.exponent < opt.zero_threshold ? OrbitClass::regular : OrbitClass::chaotic;
  return est;
}

}  // namespace gravicav
