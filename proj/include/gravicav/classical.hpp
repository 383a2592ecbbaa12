// Hamilton's equations for the driven cavity: trajectories, stroboscopic
// sections and maximal Lyapunov exponents.
#ifndef GRAVICAV_CLASSICAL_HPP
#define GRAVICAV_CLASSICAL_HPP

#include <optional>
#include <string>
#include <vector>

#include "gravicav/core.hpp"

namespace gravicav {

struct PhasePoint {
  double z = 0.0;
  double p = 0.0;
};

/// The six launch points a-f of the reference study, in scaled units.
/// Returns std::nullopt for an unknown label.
std::optional<PhasePoint> named_seed(char label);
inline constexpr char kSeedLabels[] = {'a', 'b', 'c', 'd', 'e', 'f'};

struct Trajectory {
  std::vector<double> t;
  std::vector<PhasePoint> x;
};

/// Thrown when |z| or |p| exceeds the divergence cutoff. Carries the last
/// finite state.
struct ErrorDivergedOrbit : NumericalGuardError {
  ErrorDivergedOrbit(const std::string& what, PhasePoint last, double t_last)
      : NumericalGuardError(what), last_valid(last), t(t_last) {}
  PhasePoint last_valid;
  double t;
};

inline constexpr double kDivergenceCutoff = 1e6;

/// Velocity-Verlet (kick-drift-kick) step of length h starting at time t.
/// Symplectic and time-symmetric for the time-dependent separable Hamiltonian.
inline void verlet_step(PhasePoint& x, double t, double h, const SystemParams& params) {
  x.p += 0.5 * h * force(x.z, t, params);
  x.z += h * x.p;
  x.p += 0.5 * h * force(x.z, t + h, params);
}

/// Integrate from t0 to t1 (t1 < t0 integrates backwards) with nominal step
/// |dt|. Samples every `every` steps plus the exact end point at t1.
/// Throws std::invalid_argument when |dt| > 2 pi / 200.
Trajectory integrate(PhasePoint x0, double t0, double t1, double dt,
                     const SystemParams& params, int every = 1);

/// Final state only; no trajectory storage.
PhasePoint flow(PhasePoint x0, double t0, double t1, double dt, const SystemParams& params);

/// H(z, p, t) = p^2/2 + V(z, t)
inline double energy(PhasePoint x, double t, const SystemParams& params) {
  return 0.5 * x.p * x.p + potential(x.z, t, params);
}

/// Mean time between successive wall bounces (p turning from - to +) over
/// `bounces` bounces of the orbit launched at t = 0. Inside the 2:1
/// resonance this is 4 pi; in free regions it approaches 2 sqrt(2E).
double bounce_period(PhasePoint x0, const SystemParams& params, int bounces = 32,
                     int steps_per_period = 1024);

struct StrobeSample {
  int seed_id = 0;
  int n = 0;  // strobe index: t = t0 + 2 pi n
  PhasePoint x;
};

struct PoincareSection {
  double strobe_phase = 0.0;
  std::vector<StrobeSample> samples;
  std::vector<int> diverged_seeds;  // excluded from `samples`
};

/// One strobe per seed per period at t = 2 pi n, n = 1..n_periods. The step
/// is 2 pi / steps_per_period so strobes fall exactly on period boundaries.
/// Seeds may be processed concurrently (`threads`); output is seed-ordered.
PoincareSection poincare(const std::vector<PhasePoint>& seeds, int n_periods,
                         const SystemParams& params, int steps_per_period = 1024,
                         int threads = 1);

/// Uniform rows x cols seed lattice over [z_lo, z_hi] x [p_lo, p_hi].
std::vector<PhasePoint> seed_lattice(double z_lo, double z_hi, int cols, double p_lo,
                                     double p_hi, int rows);

/// Number of distinct `cell` x `cell` boxes visited by the samples of one seed.
int occupied_cells(const PoincareSection& section, int seed_id, double cell = 0.5);

enum class OrbitClass { regular, chaotic };
std::string to_string(OrbitClass c);

struct LyapunovEstimate {
  double exponent = 0.0;           // per unit scaled time
  std::vector<double> partial_sums;  // cumulative log-stretch after each period
  double total_time = 0.0;
  double transient_time = 0.0;
  OrbitClass classification = OrbitClass::regular;
};

struct LyapunovOptions {
  int steps_per_period = 1024;
  double separation = 1e-8;        // initial offset along z
  double transient_fraction = 0.1;
  double zero_threshold = 1e-3;    // below: regular
};

/// Benettin two-trajectory estimate, renormalised once per drive period.
/// `periods` must be at least 1000.
LyapunovEstimate lyapunov(PhasePoint x0, const SystemParams& params, int periods,
                          const LyapunovOptions& options = {});

}  // namespace gravicav

#endif  // GRAVICAV_CLASSICAL_HPP
