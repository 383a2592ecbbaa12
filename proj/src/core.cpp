#include "gravicav/core.hpp"

#include <cmath>

namespace gravicav {

void SystemParams::validate() const {
  if (!(V0 >= 0.0)) throw ConfigError("V0 must be non-negative");
  if (!(kappa > 0.0)) throw ConfigError("kappa must be positive");
  if (!(kbar > 0.0)) throw ConfigError("kbar must be positive");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  if (!(V_clamp >= 1e3)) throw ConfigError("V_clamp must be at least 1e3");
}

ScaledParams scale_to_dimensionless(const PhysicalParams& p) {
  if (!(p.omega > 0.0)) throw std::domain_error("omega must be positive");
  if (!(p.M > 0.0)) throw std::domain_error("M must be positive");
  if (!(p.g > 0.0)) throw std::domain_error("g must be positive");
  if (!(p.hbar > 0.0)) throw std::domain_error("hbar must be positive");
  if (!(p.a >= 0.0)) throw std::domain_error("a must be non-negative");
  const double w2 = p.omega * p.omega;
  return {p.a * w2 / p.g, p.hbar * w2 * p.omega / (p.M * p.g * p.g)};
}

}  // namespace gravicav
