// One-period evolution operator, quasi-energies and phase-space
// localisation diagnostics (Husimi maps, resonance level spacing).
#ifndef GRAVICAV_FLOQUET_HPP
#define GRAVICAV_FLOQUET_HPP

#include <Eigen/Dense>

#include <filesystem>
#include <vector>

#include "gravicav/classical.hpp"
#include "gravicav/core.hpp"
#include "gravicav/quantum.hpp"

namespace gravicav {

struct ErrorUnitarity : NumericalGuardError {
  using NumericalGuardError::NumericalGuardError;
};
struct ErrorEigensolver : NumericalGuardError {
  using NumericalGuardError::NumericalGuardError;
};
struct ErrorInsufficientStates : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kUnitarityTolerance = 1e-8;

/// Dense U(2 pi, 0) in the grid basis: column j is the period map of the
/// j-th grid delta.
struct MonodromyOperator {
  Eigen::MatrixXcd U;
  Grid grid;
  SystemParams params;
  int steps_per_period = 1024;
  double unitarity_error = 0.0;  // max |U^H U - I|
};

double unitarity_error(const Eigen::MatrixXcd& U);

/// Throws ErrorUnitarity when max |U^H U - I| >= 1e-8.
MonodromyOperator build_monodromy(const Grid& grid, const SystemParams& params,
                                  int steps_per_period = 1024, int threads = 1);

/// Bit-exact binary persistence: magic "GCMONO01", N (u64), z_min, z_max,
/// V0, kappa, lambda, kbar, V_clamp (f64), steps (u64), then the column-major
/// matrix as interleaved little-endian (re, im) f64 pairs.
void save_monodromy(const std::filesystem::path& path, const MonodromyOperator& op);
MonodromyOperator load_monodromy(const std::filesystem::path& path);

struct FloquetSpectrum {
  Eigen::VectorXd quasi_energy;   // ascending, in [0, kbar)
  Eigen::MatrixXcd states;        // columns: sum |psi|^2 dz = 1 on `grid`
  Eigen::VectorXcd eigenvalues;   // of U, same order
  Grid grid;
  double kbar = 1.0;
  double eigen_residual = 0.0;    // max_j |U v_j - e^{-i 2 pi eps_j / kbar} v_j|
};

/// Quasi-energies eps = -(kbar / 2 pi) arg(mu) folded into [0, kbar).
/// U is normal, so its complex Schur vectors are the eigenvectors.
FloquetSpectrum quasi_energies(const MonodromyOperator& U);

/// |<coherent(z0, p0)|state_j>|^2 for every state of the spectrum.
Eigen::VectorXd probe_weights(const FloquetSpectrum& spec, PhasePoint center, double sigma_z);

struct PhaseWindow {
  double z_lo, z_hi, p_lo, p_hi;
};

/// Husimi density |<coherent(z, p)|state>|^2 / (2 pi kbar) on an nz x np
/// lattice (cell centres). Rows index p, columns index z.
struct HusimiMap {
  Eigen::VectorXd z;
  Eigen::VectorXd p;
  Eigen::MatrixXd Q;
  double cell_area() const;
  double mass() const { return Q.sum() * cell_area(); }
};

HusimiMap husimi(const Eigen::VectorXcd& state, const Grid& grid, double kbar,
                 const PhaseWindow& window, int nz, int np, double sigma_z);

/// |<coherent(x_k)|state_j>|^2 for a list of phase points (rows) and a block
/// of grid-normalised states (columns).
Eigen::MatrixXd coherent_overlaps(const std::vector<PhasePoint>& points,
                                  const Eigen::MatrixXcd& states, const Grid& grid,
                                  double kbar, double sigma_z);

/// Husimi mass of each state inside the disc |x - center| <= radius.
Eigen::VectorXd disc_mass(const FloquetSpectrum& spec, PhasePoint center, double radius,
                          double sigma_z, double lattice_step = 0.1);

struct LadderLevel {
  double action;        // local action around the probe centre
  double quasi_energy;  // folded into the reduced zone
  double weight;        // probe overlap (summed over merged partners)
};

struct SpacingReport {
  std::vector<int> selected;   // spectrum indices above the overlap threshold
  std::vector<LadderLevel> ladder;
  std::vector<double> gaps;    // consecutive, modulo the zone width
  double zone = 1.0;
  double mean_gap = 0.0;
  double relative_std = 0.0;
};

/// Gap statistics of a ladder: sort by action, take consecutive differences
/// modulo `zone`, report mean and relative standard deviation.
SpacingReport gap_statistics(std::vector<LadderLevel> ladder, double zone);

struct SpacingOptions {
  int resonance_order = 1;        // zone width kbar / order
  double overlap_threshold = 1e-2;
  double merge_tolerance = 2e-3;  // in units of kbar
  double action_radius = 2.0;
  double lattice_step = 0.1;
  double sigma_z = 0.70710678118654752440;
};

/// Level ladder of the states localised near `center`. States whose probe
/// overlap exceeds the threshold are folded into a zone of width
/// kbar / order; partners that coincide there (the `order` copies of one
/// island torus) are merged. Levels are ordered by their Husimi-weighted
/// mean action (|x - center|^2 / 2 inside the action disc).
/// Throws ErrorInsufficientStates when fewer than 3 levels remain.
SpacingReport resonance_spacing(const FloquetSpectrum& spec, PhasePoint center,
                                const SpacingOptions& options = {});

}  // namespace gravicav

#endif  // GRAVICAV_FLOQUET_HPP
