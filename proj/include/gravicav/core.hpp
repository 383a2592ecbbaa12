// Driven gravitational cavity: dimensionless parameters, potential and force.
//
// All quantities are scaled by the drive frequency so that the modulation
// period is exactly 2*pi:
//
//   H(z, p, t) = p^2 / 2 + z + V0 * exp(-kappa * (z - lambda * sin t))
//
// The exponential mirror term is clamped at `V_clamp` to keep it finite deep
// inside the wall.
#ifndef GRAVICAV_CORE_HPP
#define GRAVICAV_CORE_HPP

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gravicav {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Thrown for invalid user configuration (maps to CLI exit status 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Base of every numerical-guard failure (aliasing, edge leak, divergence).
/// Maps to CLI exit status 3.
struct NumericalGuardError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dimensionless physical configuration.
struct SystemParams {
  double V0 = 1.0;       // mirror height
  double kappa = 1.0;    // mirror steepness
  double lambda = 0.3;   // modulation strength
  double kbar = 1.0;     // effective Planck constant
  double V_clamp = 1e6;  // cap on the exponential mirror term

  void validate() const;
};

/// Laboratory-unit inputs of the scaling (SI).
struct PhysicalParams {
  double omega = 0.0;  // rad/s
  double M = 0.0;      // kg
  double g = 0.0;      // m/s^2
  double a = 0.0;      // m
  double hbar = 1.054571817e-34;  // J s
};

struct ScaledParams {
  double lambda;
  double kbar;
};

/// lambda = a omega^2 / g, kbar = hbar omega^3 / (M g^2).
/// Throws std::domain_error for non-positive omega, M, g, hbar or negative a.
ScaledParams scale_to_dimensionless(const PhysicalParams& p);

/// Exponential mirror term V0 exp(-kappa (z - lambda sin t)), clamped.
template <typename Scalar>
Scalar mirror_term(Scalar z, Scalar t, const SystemParams& p) {
  using std::exp;
  using std::sin;
  if (p.V0 == 0.0) return Scalar(0);  // pure gravity
  const Scalar exponent =
      -Scalar(p.kappa) * (z - Scalar(p.lambda) * sin(t));
  // Compare in log space so the clamp branch never evaluates an overflowing
  // exponential.
  const Scalar log_cap = std::log(Scalar(p.V_clamp) / Scalar(p.V0));
  if (exponent >= log_cap) return Scalar(p.V_clamp);
  return Scalar(p.V0) * exp(exponent);
}

/// Potential V(z, t) = z + mirror_term(z, t).
template <typename Scalar>
Scalar potential(Scalar z, Scalar t, const SystemParams& p) {
  return z + mirror_term(z, t, p);
}

/// Force -dV/dz. Inside the clamp region the mirror term is flat, so only
/// gravity remains.
template <typename Scalar>
Scalar force(Scalar z, Scalar t, const SystemParams& p) {
  const Scalar wall = mirror_term(z, t, p);
  if (wall >= Scalar(p.V_clamp)) return Scalar(-1);
  return Scalar(-1) + Scalar(p.kappa) * wall;
}

/// Time-independent cavity potential z + V0 exp(-kappa z): the drive frozen
/// at sin t = 0.
template <typename Scalar>
Scalar static_potential(Scalar z, const SystemParams& p) {
  return potential(z, Scalar(0), p);
}

}  // namespace gravicav

#endif  // GRAVICAV_CORE_HPP
