// Autocorrelation series, recurrence/revival detection and the closed-form
// revival-time estimates of the triangular-well approximation.
#ifndef GRAVICAV_REVIVAL_HPP
#define GRAVICAV_REVIVAL_HPP

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gravicav/core.hpp"
#include "gravicav/quantum.hpp"

namespace gravicav {

struct ErrorSingularity : std::domain_error {
  using std::domain_error::domain_error;
};

/// Bounce period of the triangular well (hard floor plus gravity): 2 sqrt(2E).
template <typename Scalar>
Scalar t_classical(Scalar E) {
  if (!(E > Scalar(0))) throw std::domain_error("t_classical: energy must be positive");
  using std::sqrt;
  return Scalar(2) * sqrt(Scalar(2) * E);
}

/// Energy whose triangular-well bounce period is N drive periods:
/// (N pi)^2 / 2.
template <typename Scalar>
Scalar resonance_energy(int order) {
  if (order < 1) throw std::domain_error("resonance_energy: order must be >= 1");
  const Scalar x = Scalar(order) * std::numbers::pi_v<Scalar>;
  return x * x / Scalar(2);
}

/// Revival time without modulation: 16 E0^2 / (pi kbar).
template <typename Scalar>
Scalar t_revival_unmodulated(Scalar E0, Scalar kbar) {
  if (!(E0 > Scalar(0)) || !(kbar > Scalar(0)))
    throw std::domain_error("t_revival_unmodulated: E0 and kbar must be positive");
  return Scalar(16) * E0 * E0 / (std::numbers::pi_v<Scalar> * kbar);
}

struct ResonanceModel {
  int order = 2;
  double E_N = 0.0;
  double r = 0.0;  // sqrt(E_N / E0)
  double a = 0.0;  // r^2 kbar / (4 E0)
};

ResonanceModel make_resonance_model(int order, double E0, double kbar);

template <typename Scalar>
struct ModulatedRevival {
  Scalar T0;
  Scalar T_lambda;
  Scalar factor;      // bracket: T_lambda / T0
  Scalar correction;  // 1 - factor
  bool out_of_regime; // |correction| > 0.5
};

inline constexpr double kPoleTolerance = 1e-6;

/// T_lambda = T0 [1 - (1/8)(lambda/E0)^2 (3(1-r)^2 + a^2) / ((1-r)^2 - a^2)^3]
template <typename Scalar>
ModulatedRevival<Scalar> t_revival_modulated(Scalar E0, Scalar r, Scalar a, Scalar lambda,
                                             Scalar kbar) {
  if (!(lambda >= Scalar(0))) throw std::domain_error("t_revival_modulated: lambda < 0");
  const Scalar T0 = t_revival_unmodulated(E0, kbar);
  const Scalar u = (Scalar(1) - r) * (Scalar(1) - r);
  const Scalar a2 = a * a;
  const Scalar gap = u - a2;
  using std::abs;
  if (abs(gap) < Scalar(kPoleTolerance))
    throw ErrorSingularity("t_revival_modulated: (1-r)^2 - a^2 is within 1e-6 of the pole");
  const Scalar s = lambda / E0;
  const Scalar corr = s * s * (Scalar(3) * u + a2) / (Scalar(8) * gap * gap * gap);
  const Scalar factor = Scalar(1) - corr;
  return {T0, T0 * factor, factor, corr, abs(corr) > Scalar(0.5)};
}

inline ModulatedRevival<double> t_revival_modulated(double E0, const ResonanceModel& m,
                                                    double lambda, double kbar) {
  return t_revival_modulated<double>(E0, m.r, m.a, lambda, kbar);
}

// ---------------------------------------------------------------------------

struct AutocorrSeries {
  std::vector<double> t;
  std::vector<double> c2;
  SystemParams params;
  GaussianSpec spec;
};

struct DetectOptions {
  double revival_threshold = 0.5;  // envelope height that counts as a revival
  double window = 0.25;            // peak-train half window, in units of T_cl
};

struct RevivalReport {
  double T_cl_hint = 0.0;
  std::vector<double> peak_times;    // classical-period train, n = 1, 2, ...
  std::vector<double> peak_heights;
  bool collapsed = false;
  double collapse_time = -1.0;       // where the envelope bottoms out
  double collapse_depth = 1.0;
  double revival_time = -1.0;
  double revival_height = 0.0;
  bool revival_present = false;
  double revival_threshold = 0.5;
};

/// Upper envelope of C^2: centred running maximum over `width` samples.
std::vector<double> running_max(const std::vector<double>& x, std::size_t width);

/// Classical-period peak train plus collapse/revival analysis of the upper
/// envelope (running max over one T_cl). The collapse begins where the
/// envelope first drops below the revival threshold after t = T_cl; the
/// revival is the highest envelope point past the first envelope minimum
/// that follows, located at the largest raw C^2 peak inside its plateau. Without a collapse the search starts at
/// 1.5 T_cl, so the "revival" is the best late recurrence of a packet that
/// never lost its shape.
RevivalReport detect(const AutocorrSeries& series, double T_cl_hint,
                     const DetectOptions& options = {});

/// Largest envelope value on the open interval (t_lo, t_hi), counting only
/// samples inside it.
double max_envelope(const AutocorrSeries& series, double t_lo, double t_hi);

// ---------------------------------------------------------------------------

struct ScanSettings {
  Grid grid;
  int steps_per_period = 1024;
  int output_every = 16;
  double horizon = 0.0;  // 0: 1.2 T0
  double T_cl_hint = 0.0;  // 0: bounce period of the packet centre, per lambda
  DetectOptions detect;
  double lambda_u_threshold = 0.2;
  int resonance_order = 2;
  int threads = 1;
};

struct ScanEntry {
  double lambda = 0.0;
  bool ok = false;
  std::string error;
  double E0 = 0.0;
  double T_cl = 0.0;
  bool collapsed = false;
  double revival_time = -1.0;
  double revival_height = 0.0;
  bool revival_present = false;
  double predicted_T_lambda = 0.0;  // closed form, NaN at the pole
  bool prediction_out_of_regime = false;
};

struct ScanTable {
  std::vector<ScanEntry> entries;
  std::optional<double> lambda_u;  // smallest lambda with revival height < threshold
  double T0 = 0.0;
  double horizon = 0.0;  // resolved propagation length
};

/// One propagation + detect per lambda (sorted, >= 0). Per-lambda numerical
/// errors are recorded and the scan continues.
ScanTable lambda_scan(const GaussianSpec& spec, const std::vector<double>& lambdas,
                      const SystemParams& base, const ScanSettings& settings);

/// Propagates a packet from t = 0 and returns its C^2 series.
AutocorrSeries autocorrelation_series(const GaussianSpec& spec, const SystemParams& params,
                                      const Grid& grid, int steps_per_period, double horizon,
                                      int output_every);

}  // namespace gravicav

#endif  // GRAVICAV_REVIVAL_HPP
