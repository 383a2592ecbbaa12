#include "gravicav/revival.hpp"

#include <algorithm>
#include <deque>
#include <limits>

#include "gravicav/classical.hpp"
#include "gravicav/parallel.hpp"

namespace gravicav {

ResonanceModel make_resonance_model(int order, double E0, double kbar) {
  if (!(E0 > 0.0) || !(kbar > 0.0))
    throw std::domain_error("resonance model: E0 and kbar must be positive");
  ResonanceModel m;
  m.order = order;
  m.E_N = resonance_energy<double>(order);
  m.r = std::sqrt(m.E_N / E0);
  m.a = m.r * m.r * kbar / (4.0 * E0);
  return m;
}

std::vector<double> running_max(const std::vector<double>& x, std::size_t width) {
  const std::size_t n = x.size();
  std::vector<double> out(n);
  if (n == 0) return out;
  width = std::max<std::size_t>(width, 1);
  const std::size_t left = width / 2;
  const std::size_t right = width - 1 - left;
  std::deque<std::size_t> q;  // indices with decreasing values
  std::size_t hi = 0;         // next index to push
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t want = std::min(n - 1, i + right);
    while (hi <= want) {
      while (!q.empty() && x[q.back()] <= x[hi]) q.pop_back();
      q.push_back(hi++);
    }
    const std::size_t lo = i >= left ? i - left : 0;
    while (q.front() < lo) q.pop_front();
    out[i] = x[q.front()];
  }
  return out;
}

namespace {

std::size_t samples_per(const AutocorrSeries& s, double span) {
  const double cadence = s.t[1] - s.t[0];
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(span / cadence)));
}

std::size_t first_index_at(const std::vector<double>& t, double when) {
  return static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), when) - t.begin());
}

void check_series(const AutocorrSeries& s) {
  if (s.t.size() != s.c2.size()) throw std::invalid_argument("detect: t/c2 size mismatch");
  if (s.t.size() < 2) throw std::invalid_argument("detect: series too short");
}

}  // namespace

RevivalReport detect(const AutocorrSeries& series, double T_cl, const DetectOptions& opt) {
  check_series(series);
  if (!(T_cl > 0.0)) throw std::invalid_argument("detect: T_cl_hint must be positive");
  const auto& t = series.t;
  const auto& c2 = series.c2;
  if (t.back() - t.front() < 3.0 * T_cl)
    throw std::invalid_argument("detect: series shorter than 3 T_cl");

  RevivalReport rep;
  rep.T_cl_hint = T_cl;
  rep.revival_threshold = opt.revival_threshold;

  for (int n = 1; n * T_cl <= t.back(); ++n) {
    const std::size_t lo = first_index_at(t, (n - opt.window) * T_cl);
    const std::size_t hi = first_index_at(t, (n + opt.window) * T_cl);
    if (lo >= hi) continue;
    const auto it = std::max_element(c2.begin() + static_cast<std::ptrdiff_t>(lo),
                                     c2.begin() + static_cast<std::ptrdiff_t>(hi));
    rep.peak_times.push_back(t[static_cast<std::size_t>(it - c2.begin())]);
    rep.peak_heights.push_back(*it);
  }

  const std::size_t w = samples_per(series, T_cl);
  const std::vector<double> env = running_max(c2, w);
  const std::size_t start = first_index_at(t, t.front() + T_cl);

  std::size_t search = env.size();
  for (std::size_t i = start; i < env.size(); ++i) {
    if (env[i] < opt.revival_threshold) {
      search = i;
      rep.collapsed = true;
      break;
    }
  }
  if (rep.collapsed) {
    // Skip the decaying tail of the collapse: the revival lies beyond the
    // first point where the envelope stops falling.
    while (search + 1 < env.size() && env[search + 1] <= env[search]) ++search;
  } else {
    search = first_index_at(t, t.front() + 1.5 * T_cl);
  }
  if (search >= env.size()) return rep;

  const auto best = std::max_element(env.begin() + static_cast<std::ptrdiff_t>(search), env.end());
  const std::size_t ir = static_cast<std::size_t>(best - env.begin());
  // The envelope is a plateau of width w around the raw peak; take the peak.
  const std::size_t lo = std::max(search, ir >= w ? ir - w : 0);
  const std::size_t hi = std::min(c2.size(), ir + w + 1);
  const auto raw = std::max_element(c2.begin() + static_cast<std::ptrdiff_t>(lo),
                                    c2.begin() + static_cast<std::ptrdiff_t>(hi));
  const std::size_t ip = static_cast<std::size_t>(raw - c2.begin());
  rep.revival_time = t[ip];
  rep.revival_height = c2[ip];
  rep.revival_present = rep.revival_height >= opt.revival_threshold;

  const auto low = std::min_element(env.begin() + static_cast<std::ptrdiff_t>(start),
                                    env.begin() + static_cast<std::ptrdiff_t>(std::max(ir, start + 1)));
  rep.collapse_depth = *low;
  rep.collapse_time = t[static_cast<std::size_t>(low - env.begin())];
  return rep;
}

double max_envelope(const AutocorrSeries& series, double t_lo, double t_hi) {
  check_series(series);
  // The running max only spreads values sideways, so its largest value on
  // the interval is the largest sample there, once samples from beyond the
  // edges are excluded.
  double best = 0.0;
  for (std::size_t i = 0; i < series.t.size(); ++i)
    if (series.t[i] > t_lo && series.t[i] < t_hi) best = std::max(best, series.c2[i]);
  return best;
}

AutocorrSeries autocorrelation_series(const GaussianSpec& spec, const SystemParams& params,
                                      const Grid& grid, int steps_per_period, double horizon,
                                      int output_every) {
  Propagator prop(grid, params, steps_per_period);
  const Wavepacket psi0 = init_gaussian(spec, grid, params.kbar);
  AutocorrSeries s;
  s.params = params;
  s.spec = spec;
  s.t.push_back(0.0);
  s.c2.push_back(autocorrelation(psi0, psi0));
  Wavepacket w = psi0;
  prop.advance(
      w, horizon,
      [&](const Wavepacket& cur) {
        s.t.push_back(cur.t);
        s.c2.push_back(autocorrelation(psi0, cur));
      },
      output_every);
  return s;
}

ScanTable lambda_scan(const GaussianSpec& spec, const std::vector<double>& lambdas,
                      const SystemParams& base, const ScanSettings& cfg) {
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    if (!(lambdas[i] >= 0.0)) throw ConfigError("lambda_scan: lambdas must be >= 0");
    if (i > 0 && lambdas[i] < lambdas[i - 1]) throw ConfigError("lambda_scan: lambdas must be sorted");
  }
  ScanTable table;
  table.entries.resize(lambdas.size());

  const double E0 = expectation_energy(init_gaussian(spec, cfg.grid, base.kbar), base);
  table.T0 = t_revival_unmodulated(E0, base.kbar);
  const ResonanceModel model = make_resonance_model(cfg.resonance_order, E0, base.kbar);
  table.horizon = cfg.horizon > 0.0 ? cfg.horizon : 1.2 * table.T0;

  parallel_for(lambdas.size(), cfg.threads, [&](std::size_t i) {
    ScanEntry& e = table.entries[i];
    e.lambda = lambdas[i];
    e.E0 = E0;
    try {
      const auto pred = t_revival_modulated(E0, model, e.lambda, base.kbar);
      e.predicted_T_lambda = pred.T_lambda;
      e.prediction_out_of_regime = pred.out_of_regime;
    } catch (const ErrorSingularity&) {
      e.predicted_T_lambda = std::numeric_limits<double>::quiet_NaN();
      e.prediction_out_of_regime = true;
    }
    try {
      SystemParams p = base;
      p.lambda = e.lambda;
      const AutocorrSeries s = autocorrelation_series(spec, p, cfg.grid, cfg.steps_per_period,
                                                      table.horizon, cfg.output_every);
      e.T_cl = cfg.T_cl_hint > 0.0 ? cfg.T_cl_hint
                                   : bounce_period({spec.z0, spec.p0}, p, 32, cfg.steps_per_period);
      const RevivalReport rep = detect(s, e.T_cl, cfg.detect);
      e.collapsed = rep.collapsed;
      e.revival_time = rep.revival_time;
      e.revival_height = rep.revival_height;
      e.revival_present = rep.revival_present;
      e.ok = true;
    } catch (const NumericalGuardError& err) {
      e.error = err.what();
    }
  });

  for (const auto& e : table.entries) {
    if (e.ok && e.revival_height < cfg.lambda_u_threshold) {
      table.lambda_u = e.lambda;
      break;
    }
  }
  return table;
}

}  // namespace gravicav
