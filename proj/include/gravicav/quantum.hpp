// Split-operator propagation of wavepackets in the driven cavity.
#ifndef GRAVICAV_QUANTUM_HPP
#define GRAVICAV_QUANTUM_HPP

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <complex>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <vector>

#include "gravicav/core.hpp"

namespace gravicav {

using Complex = std::complex<double>;

/// Uniform periodic position grid and its FFT-conjugate momentum grid.
struct Grid {
  double z_min = -10.0;
  double z_max = 80.0;
  Eigen::Index N = 2048;

  Grid() = default;
  Grid(double lo, double hi, Eigen::Index n);

  double dz() const { return (z_max - z_min) / static_cast<double>(N); }
  double z(Eigen::Index i) const { return z_min + dz() * static_cast<double>(i); }
  Eigen::VectorXd positions() const;
  /// p_k = kbar * 2 pi k / (N dz) in FFT (wrapped) order.
  Eigen::VectorXd momenta(double kbar) const;
  /// Nyquist momentum pi kbar / dz.
  double p_max(double kbar) const;

  bool operator==(const Grid&) const = default;
};

struct ErrorBoxTooSmall : NumericalGuardError {
  using NumericalGuardError::NumericalGuardError;
};
struct ErrorAliasing : NumericalGuardError {
  using NumericalGuardError::NumericalGuardError;
};

struct Wavepacket {
  Eigen::VectorXcd psi;
  Grid grid;
  double t = 0.0;
  double norm = 1.0;  // sum |psi|^2 dz at the last bookkeeping point
};

/// Minimum-uncertainty Gaussian: sigma_p = kbar / (2 sigma_z).
struct GaussianSpec {
  double z0 = 15.0;
  double p0 = 0.0;
  double sigma_z = 0.70710678118654752440;
};

Wavepacket init_gaussian(const GaussianSpec& spec, const Grid& grid, double kbar);

/// Raw (unnormalised wrt. bookkeeping) coherent-state vector on a grid,
/// normalised so that sum |g|^2 dz = 1. Shared by initial states and probes.
Eigen::VectorXcd coherent_state(double z0, double p0, double sigma_z,
                                const Grid& grid, double kbar);

/// sum |psi|^2 dz
double norm(const Wavepacket& w);

/// <a|b> = sum conj(a) b dz. Throws std::invalid_argument on grid mismatch.
Complex overlap(const Wavepacket& a, const Wavepacket& b);

/// |<psi0|psit>|^2
double autocorrelation(const Wavepacket& psi0, const Wavepacket& psit);

struct Moments {
  double z_mean = 0.0, z_var = 0.0;
  double p_mean = 0.0, p_var = 0.0;
};

Moments moments(const Wavepacket& w, double kbar);

/// <p^2/2> + <z + V0 exp(-kappa z)>: mean energy against the undriven cavity.
double expectation_energy(const Wavepacket& w, const SystemParams& p);

/// Guard knobs checked during propagation.
struct GuardLimits {
  double edge_amplitude = 1e-6;  // max |psi| in the outermost edge_points
  Eigen::Index edge_points = 8;
  double tail_fraction = 0.10;   // top fraction of |p| bins
  double tail_mass = 1e-6;       // max probability allowed there
  int check_every = 0;           // steps; 0 means once per drive period
};

/// Strang-split propagator
///   exp(-i V dt / 2 kbar) IFFT exp(-i p^2 dt / 2 kbar) FFT exp(-i V dt / 2 kbar)
/// with V sampled at the half-step time. The time step is 2 pi / steps_per_period
/// so that drive periods are hit exactly; potential phases for one period
/// are tabulated once.
class Propagator {
 public:
  Propagator(const Grid& grid, const SystemParams& params, int steps_per_period,
             GuardLimits guards = {});

  double dt() const { return dt_; }
  int steps_per_period() const { return steps_; }
  const Grid& grid() const { return grid_; }
  const SystemParams& params() const { return params_; }

  /// Advance w to t1 (>= w.t). Steps that start on the dt lattice use the
  /// tabulated phases; a final partial step is taken when t1 is off-lattice.
  /// `observer` (optional) is called after every `every` full steps.
  void advance(Wavepacket& w, double t1,
               const std::function<void(const Wavepacket&)>& observer = {},
               int every = 1);

  /// One step of length h starting at the time w.t. Does not run guards.
  void step(Wavepacket& w, double h);

  /// Apply the one-period map t -> t + 2 pi to a raw vector starting at the
  /// drive phase 0 (no guards, no bookkeeping).
  void apply_period(Eigen::Ref<Eigen::VectorXcd> v);

  /// Throws ErrorBoxTooSmall / ErrorAliasing when the guards are violated.
  void check_guards(const Wavepacket& w);

  /// Fraction of probability in the top `tail_fraction` of |p| bins.
  double spectral_tail(const Eigen::VectorXcd& psi);

 private:
  void kick_drift_kick(Eigen::VectorXcd& psi, const Eigen::VectorXcd& half_kick);
  Eigen::VectorXcd half_kick_at(double t_mid, double h) const;

  Grid grid_;
  SystemParams params_;
  int steps_;
  double dt_;
  GuardLimits guards_;
  Eigen::VectorXd z_;
  Eigen::VectorXd p_;
  Eigen::VectorXcd kinetic_;                // exp(-i p^2 dt / 2 kbar)
  std::vector<Eigen::VectorXcd> half_kicks_;  // per step within one period
  Eigen::FFT<double> fft_;
  Eigen::VectorXcd work_;
  Eigen::VectorXd tail_mask_;
};

/// Free function form: returns the propagated packet.
Wavepacket propagate(Wavepacket psi, double t1, int steps_per_period,
                     const SystemParams& params, GuardLimits guards = {});

/// Time series of C^2(t) and mean position for a packet launched at t = 0.
struct EvolutionRecord {
  std::vector<double> t;
  std::vector<double> c2;
  std::vector<double> z_mean;
  std::vector<double> p_mean;
  Wavepacket last;  // state at t_total
};

EvolutionRecord evolve_autocorrelation(
    const Wavepacket& psi0, double t_total, int output_every,
    Propagator& propagator,
    const std::function<void(const Wavepacket&)>& snapshot = {});

/// First recorded time at which |<z>_quantum - z_classical| > 2 sigma_z;
/// negative when the curves never separate.
double ehrenfest_departure(const std::vector<double>& t,
                           const std::vector<double>& z_quantum,
                           const std::vector<double>& z_classical,
                           double sigma_z);

/// Binary snapshot: little-endian header (uint64 N, f64 z_min, f64 z_max,
/// f64 t, f64 kbar) followed by N interleaved (re, im) f64 pairs.
void write_snapshot(const std::filesystem::path& path, const Wavepacket& w,
                    double kbar);
Wavepacket read_snapshot(const std::filesystem::path& path, double* kbar = nullptr);

/// CSV with columns z,density.
void write_density_csv(const std::filesystem::path& path, const Wavepacket& w);

}  // namespace gravicav

#endif  // GRAVICAV_QUANTUM_HPP
