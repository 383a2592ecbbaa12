// Run configuration: a flat JSON object. Every key has a default; unknown
// keys are rejected.
#ifndef GRAVICAV_CONFIG_HPP
#define GRAVICAV_CONFIG_HPP

#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "gravicav/core.hpp"
#include "gravicav/quantum.hpp"

namespace gravicav {

struct RunConfig {
  SystemParams system;

  // Propagation grid and clock. dt = 2 pi / steps_per_period.
  double z_min = -10.0;
  double z_max = 120.0;
  int N = 2048;
  int steps_per_period = 1024;
  double t_total = 800.0 * std::numbers::pi;
  int output_every = 16;        // steps between C^2 samples
  int snapshot_every = 0;       // steps between wavefunction snapshots, 0 = ends only
  double sigma_z = 0.70710678118654752440;

  // Classical.
  int classical_steps_per_period = 1024;
  int poincare_periods = 500;
  int poincare_seed_cols = 5;
  int poincare_seed_rows = 5;
  double poincare_z_lo = 2.0;
  double poincare_z_hi = 40.0;
  double poincare_p_lo = -3.0;
  double poincare_p_hi = 3.0;
  int lyapunov_periods = 10000;

  // Revivals.
  double T_cl_hint = 0.0;  // 0: mean bounce period of the packet centre
  double revival_threshold = 0.5;
  double lambda_u_threshold = 0.2;
  int resonance_order = 2;
  double scan_horizon = 0.0;  // 0: 1.2 T0 of the launched packet

  // Floquet.
  int floquet_N = 512;
  double floquet_z_min = -10.0;
  double floquet_z_max = 80.0;
  int floquet_steps_per_period = 1024;
  double overlap_threshold = 1e-2;
  double action_radius = 2.0;

  double dt() const { return kTwoPi / steps_per_period; }
  Grid grid() const { return Grid(z_min, z_max, N); }
  Grid floquet_grid() const { return Grid(floquet_z_min, floquet_z_max, floquet_N); }

  /// Throws ConfigError on any invariant violation.
  void validate() const;
};

nlohmann::json to_json(const RunConfig& cfg);

/// Starts from defaults and applies every key of `j`. Throws ConfigError for
/// unknown keys, wrong types, or invalid values.
RunConfig config_from_json(const nlohmann::json& j);

RunConfig load_config(const std::filesystem::path& path);

/// Applies "key=value" overrides (value parsed as JSON) on top of `cfg`.
RunConfig apply_overrides(const RunConfig& cfg, const std::vector<std::string>& overrides);

/// Documented key names, in declaration order.
const std::vector<std::string>& config_keys();

}  // namespace gravicav

#endif  // GRAVICAV_CONFIG_HPP
