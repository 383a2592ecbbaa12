#include "gravicav/cli.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gravicav/classical.hpp"
#include "gravicav/config.hpp"
#include "gravicav/floquet.hpp"
#include "gravicav/io.hpp"
#include "gravicav/manifest.hpp"
#include "gravicav/parallel.hpp"
#include "gravicav/quantum.hpp"
#include "gravicav/revival.hpp"
#include "gravicav/svg.hpp"

namespace gravicav {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Seed {
  std::string label;
  PhasePoint x;
};

// "a".."f" or "z,p". Explicit points are labelled s<index>.
Seed parse_seed(const std::string& text, std::size_t index) {
  if (text.size() == 1)
    if (auto x = named_seed(text[0])) return {text, *x};
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw ConfigError("seed '" + text + "' is neither a..f nor z,p");
  try {
    std::size_t used = 0;
    const std::string zs = text.substr(0, comma);
    const std::string ps = text.substr(comma + 1);
    const double z = std::stod(zs, &used);
    if (used != zs.size()) throw std::invalid_argument("z");
    const double p = std::stod(ps, &used);
    if (used != ps.size()) throw std::invalid_argument("p");
    return {"s" + std::to_string(index), {z, p}};
  } catch (const std::exception&) {
    throw ConfigError("seed '" + text + "' is not a valid z,p pair");
  }
}

std::vector<Seed> parse_seeds(const std::vector<std::string>& texts,
                              const std::vector<std::string>& fallback) {
  const auto& src = texts.empty() ? fallback : texts;
  std::vector<Seed> out;
  for (std::size_t i = 0; i < src.size(); ++i) out.push_back(parse_seed(src[i], i));
  return out;
}

// "lo:step:hi" (inclusive, integer-counted) or "x,y,z".
std::vector<double> parse_lambdas(const std::string& text) {
  std::vector<double> out;
  try {
    if (text.find(':') != std::string::npos) {
      std::vector<double> part;
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ':')) part.push_back(std::stod(item));
      if (part.size() != 3 || !(part[1] > 0.0) || part[2] < part[0])
        throw std::invalid_argument("range");
      const auto n = static_cast<long>(std::floor((part[2] - part[0]) / part[1] + 1e-9));
      for (long k = 0; k <= n; ++k) out.push_back(part[0] + static_cast<double>(k) * part[1]);
    } else {
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    }
  } catch (const std::exception&) {
    throw ConfigError("lambdas '" + text + "' must be lo:step:hi or a comma list");
  }
  if (out.empty()) throw ConfigError("lambdas: empty list");
  return out;
}

// Subcommand options that are not config keys. Stored in the manifest.
struct Options {
  std::vector<std::string> seeds;
  std::string lambdas = "0:0.05:0.6";
  int figure = 0;
  std::string island = "a";
  std::string stochastic = "d";
  std::string load_monodromy;
  bool save_monodromy = false;
};

json to_json(const Options& o) {
  return {{"seeds", o.seeds},         {"lambdas", o.lambdas},
          {"figure", o.figure},       {"island", o.island},
          {"stochastic", o.stochastic}, {"load_monodromy", o.load_monodromy},
          {"save_monodromy", o.save_monodromy}};
}

Options options_from_json(const json& j) {
  Options o;
  try {
    o.seeds = j.at("seeds").get<std::vector<std::string>>();
    o.lambdas = j.at("lambdas").get<std::string>();
    o.figure = j.at("figure").get<int>();
    o.island = j.at("island").get<std::string>();
    o.stochastic = j.at("stochastic").get<std::string>();
    o.load_monodromy = j.at("load_monodromy").get<std::string>();
    o.save_monodromy = j.at("save_monodromy").get<bool>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest options: ") + e.what());
  }
  return o;
}

// Collects the files a run writes, relative to its directory.
class RunDir {
 public:
  explicit RunDir(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }
  fs::path file(const std::string& rel) {
    outputs_.push_back(rel);
    const fs::path p = dir_ / rel;
    fs::create_directories(p.parent_path());
    return p;
  }
  const fs::path& dir() const { return dir_; }
  std::vector<std::string> outputs() const {
    auto o = outputs_;
    std::sort(o.begin(), o.end());
    return o;
  }

 private:
  fs::path dir_;
  std::vector<std::string> outputs_;
};

struct Context {
  RunConfig cfg;
  Options opt;
  RunDir& run;
  std::ostream& log;
  int threads;
};

void write_json(const fs::path& p, const json& j) {
  write_atomically(p, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

void write_seeds_csv(RunDir& run, const std::vector<Seed>& seeds) {
  write_atomically(run.file("seeds.csv"), [&](std::ostream& out) {
    out << "seed_id,label,z0,p0\n";
    for (std::size_t i = 0; i < seeds.size(); ++i)
      out << i << ',' << seeds[i].label << ',' << fmt_double(seeds[i].x.z) << ','
          << fmt_double(seeds[i].x.p) << '\n';
  });
}

json to_json(const RevivalReport& r) {
  return {{"T_cl_hint", r.T_cl_hint},
          {"peak_times", r.peak_times},
          {"peak_heights", r.peak_heights},
          {"collapsed", r.collapsed},
          {"collapse_time", r.collapse_time},
          {"collapse_depth", r.collapse_depth},
          {"revival_time", r.revival_time},
          {"revival_height", r.revival_height},
          {"revival_present", r.revival_present},
          {"revival_threshold", r.revival_threshold}};
}

json to_json(const SpacingReport& s) {
  json ladder = json::array();
  for (const auto& l : s.ladder)
    ladder.push_back({{"action", l.action}, {"quasi_energy", l.quasi_energy}, {"weight", l.weight}});
  return {{"selected", s.selected}, {"ladder", ladder},       {"gaps", s.gaps},
          {"zone", s.zone},         {"mean_gap", s.mean_gap}, {"relative_std", s.relative_std}};
}

double t_cl_for(const RunConfig& cfg, PhasePoint x) {
  if (cfg.T_cl_hint > 0.0) return cfg.T_cl_hint;
  return bounce_period(x, cfg.system, 32, cfg.classical_steps_per_period);
}

std::string short_num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

GaussianSpec packet(const RunConfig& cfg, PhasePoint x) { return {x.z, x.p, cfg.sigma_z}; }

// ---------------------------------------------------------------------------
// Classical

struct PoincareRun {
  std::vector<Seed> seeds;
  PoincareSection section;
};

PoincareRun run_poincare(Context& c, bool with_lattice) {
  PoincareRun r;
  r.seeds = parse_seeds(c.opt.seeds, {"a", "b", "c", "d", "e", "f"});
  if (with_lattice) {
    const auto lattice = seed_lattice(c.cfg.poincare_z_lo, c.cfg.poincare_z_hi, c.cfg.poincare_seed_cols,
                                      c.cfg.poincare_p_lo, c.cfg.poincare_p_hi, c.cfg.poincare_seed_rows);
    for (std::size_t i = 0; i < lattice.size(); ++i) r.seeds.push_back({"L" + std::to_string(i), lattice[i]});
  }
  std::vector<PhasePoint> pts;
  for (const auto& s : r.seeds) pts.push_back(s.x);
  c.log << "poincare: " << pts.size() << " seeds x " << c.cfg.poincare_periods << " periods\n";
  r.section = poincare(pts, c.cfg.poincare_periods, c.cfg.system, c.cfg.classical_steps_per_period,
                       c.threads);

  write_seeds_csv(c.run, r.seeds);
  write_atomically(c.run.file("poincare.csv"), [&](std::ostream& out) {
    out << "seed_id,n,z,p\n";
    for (const auto& s : r.section.samples)
      out << s.seed_id << ',' << s.n << ',' << fmt_double(s.x.z) << ',' << fmt_double(s.x.p) << '\n';
  });
  if (!r.section.diverged_seeds.empty()) {
    c.log << "poincare: diverged seeds excluded:";
    for (int id : r.section.diverged_seeds) c.log << ' ' << r.seeds[static_cast<std::size_t>(id)].label;
    c.log << '\n';
  }
  return r;
}

svg::Panel poincare_panel(const PoincareRun& r, const RunConfig& cfg) {
  svg::Panel panel{"Surface of section, lambda = " + short_num(cfg.system.lambda), "z", "p", {}};
  std::vector<svg::Series> per(r.seeds.size());
  for (std::size_t i = 0; i < r.seeds.size(); ++i) {
    per[i].markers = true;
    if (r.seeds[i].label.size() == 1) per[i].label = r.seeds[i].label;
  }
  for (const auto& s : r.section.samples) {
    per[static_cast<std::size_t>(s.seed_id)].x.push_back(s.x.z);
    per[static_cast<std::size_t>(s.seed_id)].y.push_back(s.x.p);
  }
  for (auto& s : per)
    if (!s.x.empty()) panel.series.push_back(std::move(s));
  return panel;
}

void cmd_poincare(Context& c) {
  const PoincareRun r = run_poincare(c, c.opt.seeds.empty());
  svg::write(c.run.file("poincare.svg"), svg::render_panels({poincare_panel(r, c.cfg)}, 900, 700));
}

void cmd_lyapunov(Context& c) {
  const auto seeds = parse_seeds(c.opt.seeds, {"a", "b", "c", "d", "e", "f"});
  std::vector<LyapunovEstimate> est(seeds.size());
  LyapunovOptions lo;
  lo.steps_per_period = c.cfg.classical_steps_per_period;
  c.log << "lyapunov: " << seeds.size() << " seeds x " << c.cfg.lyapunov_periods << " periods\n";
  parallel_for(seeds.size(), c.threads, [&](std::size_t i) {
    est[i] = lyapunov(seeds[i].x, c.cfg.system, c.cfg.lyapunov_periods, lo);
  });

  write_seeds_csv(c.run, seeds);
  write_atomically(c.run.file("lyapunov.csv"), [&](std::ostream& out) {
    out << "seed_id,T,exponent,classification\n";
    for (std::size_t i = 0; i < seeds.size(); ++i)
      out << i << ',' << fmt_double(est[i].total_time) << ',' << fmt_double(est[i].exponent) << ','
          << to_string(est[i].classification) << '\n';
  });

  // Running estimate after the transient, thinned to at most ~1000 rows per seed.
  svg::Panel panel{"Running Lyapunov estimate", "t", "exponent", {}};
  write_atomically(c.run.file("lyapunov_convergence.csv"), [&](std::ostream& out) {
    out << "seed_id,t,estimate\n";
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      const auto& ps = est[i].partial_sums;
      const auto n0 = static_cast<std::size_t>(std::llround(est[i].transient_time / kTwoPi));
      const double base = n0 > 0 ? ps[n0 - 1] : 0.0;
      const std::size_t stride = std::max<std::size_t>(1, ps.size() / 1000);
      svg::Series s{seeds[i].label, {}, {}, false};
      for (std::size_t n = n0; n < ps.size(); n += stride) {
        const double t = kTwoPi * static_cast<double>(n + 1);
        const double e = (ps[n] - base) / (kTwoPi * static_cast<double>(n + 1 - n0));
        out << i << ',' << fmt_double(t) << ',' << fmt_double(e) << '\n';
        s.x.push_back(t);
        s.y.push_back(e);
      }
      panel.series.push_back(std::move(s));
    }
  });
  svg::write(c.run.file("lyapunov.svg"), svg::render_panels({panel}));
}

// ---------------------------------------------------------------------------
// Quantum

json prediction_json(const RunConfig& cfg, double E0) {
  json j;
  j["E0"] = E0;
  j["T0"] = t_revival_unmodulated(E0, cfg.system.kbar);
  const ResonanceModel m = make_resonance_model(cfg.resonance_order, E0, cfg.system.kbar);
  j["resonance_order"] = m.order;
  j["E_N"] = m.E_N;
  j["r"] = m.r;
  j["a"] = m.a;
  try {
    const auto mr = t_revival_modulated(E0, m, cfg.system.lambda, cfg.system.kbar);
    j["T_lambda"] = mr.T_lambda;
    j["correction"] = mr.correction;
    j["out_of_regime"] = mr.out_of_regime;
  } catch (const ErrorSingularity& e) {
    j["T_lambda"] = nullptr;
    j["singularity"] = e.what();
  }
  return j;
}

void cmd_evolve(Context& c) {
  const auto seeds = parse_seeds(c.opt.seeds, {"a"});
  if (seeds.size() != 1) throw ConfigError("evolve takes exactly one --seed");
  const Seed& seed = seeds.front();
  const RunConfig& cfg = c.cfg;
  const Grid grid = cfg.grid();
  const Wavepacket psi0 = init_gaussian(packet(cfg, seed.x), grid, cfg.system.kbar);
  Propagator prop(grid, cfg.system, cfg.steps_per_period);

  c.log << "evolve: seed " << seed.label << ", t_total " << cfg.t_total << '\n';
  write_snapshot(c.run.file("snapshots/psi_initial.bin"), psi0, cfg.system.kbar);
  auto snap = [&](const Wavepacket& w) {
    if (cfg.snapshot_every <= 0) return;
    const auto step = std::llround(w.t / prop.dt());
    if (step == 0 || step % cfg.snapshot_every != 0) return;
    char name[64];
    std::snprintf(name, sizeof name, "snapshots/psi_%09lld.bin", static_cast<long long>(step));
    write_snapshot(c.run.file(name), w, cfg.system.kbar);
  };
  const EvolutionRecord rec = evolve_autocorrelation(psi0, cfg.t_total, cfg.output_every, prop, snap);
  write_snapshot(c.run.file("snapshots/psi_final.bin"), rec.last, cfg.system.kbar);
  write_density_csv(c.run.file("density_final.csv"), rec.last);

  // Classical orbit of the packet centre on the same clock.
  const Trajectory tr = integrate(seed.x, 0.0, cfg.t_total, prop.dt(), cfg.system, cfg.output_every);
  const std::size_t n = std::min(rec.t.size(), tr.x.size());
  std::vector<double> zc(n);
  for (std::size_t i = 0; i < n; ++i) zc[i] = tr.x[i].z;

  write_atomically(c.run.file("autocorr.csv"), [&](std::ostream& out) {
    out << "t,C2\n";
    for (std::size_t i = 0; i < rec.t.size(); ++i) out << fmt_double(rec.t[i]) << ',' << fmt_double(rec.c2[i]) << '\n';
  });
  write_atomically(c.run.file("observables.csv"), [&](std::ostream& out) {
    out << "t,C2,z_mean,p_mean,z_classical,p_classical\n";
    for (std::size_t i = 0; i < n; ++i)
      out << fmt_double(rec.t[i]) << ',' << fmt_double(rec.c2[i]) << ',' << fmt_double(rec.z_mean[i]) << ','
          << fmt_double(rec.p_mean[i]) << ',' << fmt_double(tr.x[i].z) << ',' << fmt_double(tr.x[i].p) << '\n';
  });

  const double E0 = expectation_energy(psi0, cfg.system);
  json report;
  report["seed"] = {{"label", seed.label}, {"z0", seed.x.z}, {"p0", seed.x.p}};
  report["prediction"] = prediction_json(cfg, E0);
  report["norm_initial"] = psi0.norm;
  report["norm_final"] = rec.last.norm;
  report["ehrenfest_time"] = ehrenfest_departure(rec.t, rec.z_mean, zc, cfg.sigma_z);
  const double T_cl = t_cl_for(cfg, seed.x);
  AutocorrSeries series{rec.t, rec.c2, cfg.system, packet(cfg, seed.x)};
  try {
    report["revival"] = to_json(detect(series, T_cl));
  } catch (const std::invalid_argument& e) {
    report["revival"] = nullptr;
    report["revival_note"] = e.what();
  }
  write_json(c.run.file("report.json"), report);

  svg::Panel p1{"Autocorrelation, seed " + seed.label, "t", "C^2", {{"", rec.t, rec.c2, false}}};
  svg::Panel p2{"Mean position", "t", "<z>",
                {{"quantum", {rec.t.begin(), rec.t.begin() + static_cast<std::ptrdiff_t>(n)},
                  {rec.z_mean.begin(), rec.z_mean.begin() + static_cast<std::ptrdiff_t>(n)}, false},
                 {"classical", {rec.t.begin(), rec.t.begin() + static_cast<std::ptrdiff_t>(n)}, zc, false}}};
  svg::write(c.run.file("evolve.svg"), svg::render_panels({p1, p2}));
}

// One C^2 run + detect per seed; panels in seed order.
void autocorr_panels(Context& c, const std::vector<Seed>& seeds, const std::string& svg_name,
                     const std::string& title_prefix) {
  const RunConfig& cfg = c.cfg;
  const Grid grid = cfg.grid();
  std::vector<AutocorrSeries> series(seeds.size());
  std::vector<double> t_cl(seeds.size());
  c.log << "autocorr: " << seeds.size() << " seeds, t_total " << cfg.t_total << '\n';
  parallel_for(seeds.size(), c.threads, [&](std::size_t i) {
    series[i] = autocorrelation_series(packet(cfg, seeds[i].x), cfg.system, grid, cfg.steps_per_period,
                                       cfg.t_total, cfg.output_every);
    t_cl[i] = t_cl_for(cfg, seeds[i].x);
  });

  json reports = json::array();
  std::vector<svg::Panel> panels;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    write_atomically(c.run.file("autocorr_" + seeds[i].label + ".csv"), [&](std::ostream& out) {
      out << "t,C2\n";
      for (std::size_t k = 0; k < series[i].t.size(); ++k)
        out << fmt_double(series[i].t[k]) << ',' << fmt_double(series[i].c2[k]) << '\n';
    });
    json r;
    r["label"] = seeds[i].label;
    r["z0"] = seeds[i].x.z;
    r["p0"] = seeds[i].x.p;
    r["T_cl"] = t_cl[i];
    r["prediction"] = prediction_json(cfg, expectation_energy(init_gaussian(packet(cfg, seeds[i].x), grid, cfg.system.kbar), cfg.system));
    try {
      r["revival"] = to_json(detect(series[i], t_cl[i]));
    } catch (const std::invalid_argument& e) {
      r["revival"] = nullptr;
      r["revival_note"] = e.what();
    }
    reports.push_back(r);
    std::ostringstream title;
    title << title_prefix << seeds[i].label << " (" << seeds[i].x.z << ", " << seeds[i].x.p << ")";
    panels.push_back({title.str(), "t", "C^2", {{"", series[i].t, series[i].c2, false}}});
  }
  write_json(c.run.file("revival.json"), {{"lambda", cfg.system.lambda}, {"seeds", reports}});
  svg::write(c.run.file(svg_name), svg::render_panels(panels));
}

void cmd_autocorr(Context& c) {
  autocorr_panels(c, parse_seeds(c.opt.seeds, {"a"}), "autocorr.svg", "seed ");
}

void scan_outputs(Context& c, const Seed& seed, const std::vector<double>& lambdas,
                  const std::string& svg_name) {
  const RunConfig& cfg = c.cfg;
  ScanSettings s;
  s.grid = cfg.grid();
  s.steps_per_period = cfg.steps_per_period;
  s.output_every = cfg.output_every;
  s.horizon = cfg.scan_horizon;
  s.T_cl_hint = cfg.T_cl_hint;
  s.detect.revival_threshold = cfg.revival_threshold;
  s.lambda_u_threshold = cfg.lambda_u_threshold;
  s.resonance_order = cfg.resonance_order;
  s.threads = c.threads;
  c.log << "revival-scan: seed " << seed.label << ", " << lambdas.size() << " lambdas\n";
  const ScanTable table = lambda_scan(packet(cfg, seed.x), lambdas, cfg.system, s);

  json entries = json::array();
  svg::Series height{"revival height", {}, {}, false}, time{"detected", {}, {}, false},
      predicted{"closed form", {}, {}, false};
  for (const auto& e : table.entries) {
    json j{{"lambda", e.lambda},
           {"ok", e.ok},
           {"E0", e.E0},
           {"T_cl", e.T_cl},
           {"collapsed", e.collapsed},
           {"revival_time", e.revival_time},
           {"revival_height", e.revival_height},
           {"revival_present", e.revival_present},
           {"prediction_out_of_regime", e.prediction_out_of_regime}};
    j["predicted_T_lambda"] = std::isfinite(e.predicted_T_lambda) ? json(e.predicted_T_lambda) : json(nullptr);
    if (!e.ok) j["error"] = e.error;
    entries.push_back(j);
    if (e.ok) {
      height.x.push_back(e.lambda);
      height.y.push_back(e.revival_height);
      if (e.revival_present && e.collapsed) {
        time.x.push_back(e.lambda);
        time.y.push_back(e.revival_time);
      }
    }
    if (std::isfinite(e.predicted_T_lambda) && !e.prediction_out_of_regime) {
      predicted.x.push_back(e.lambda);
      predicted.y.push_back(e.predicted_T_lambda);
    }
  }
  json out{{"seed", {{"label", seed.label}, {"z0", seed.x.z}, {"p0", seed.x.p}}},
           {"T0", table.T0},
           {"horizon", table.horizon},
           {"revival_threshold", cfg.revival_threshold},
           {"lambda_u_threshold", cfg.lambda_u_threshold},
           {"entries", entries}};
  out["lambda_u"] = table.lambda_u ? json(*table.lambda_u) : json(nullptr);
  write_json(c.run.file("scan.json"), out);

  std::vector<svg::Panel> panels{{"Revival height vs modulation, seed " + seed.label, "lambda", "height", {height}}};
  svg::Panel tp{"Revival time vs modulation", "lambda", "t", {}};
  if (!time.x.empty()) tp.series.push_back(time);
  if (!predicted.x.empty()) tp.series.push_back(predicted);
  if (!tp.series.empty()) panels.push_back(tp);
  svg::write(c.run.file(svg_name), svg::render_panels(panels));
}

void cmd_revival_scan(Context& c) {
  const auto seeds = parse_seeds(c.opt.seeds, {"f"});
  if (seeds.size() != 1) throw ConfigError("revival-scan takes exactly one --seed");
  scan_outputs(c, seeds.front(), parse_lambdas(c.opt.lambdas), "scan.svg");
}

// ---------------------------------------------------------------------------
// Floquet

void write_husimi(RunDir& run, const std::string& name, const HusimiMap& h, const std::string& title) {
  write_atomically(run.file(name + ".csv"), [&](std::ostream& out) {
    out << "z,p,Q\n";
    for (Eigen::Index j = 0; j < h.p.size(); ++j)
      for (Eigen::Index i = 0; i < h.z.size(); ++i)
        out << fmt_double(h.z[i]) << ',' << fmt_double(h.p[j]) << ',' << fmt_double(h.Q(j, i)) << '\n';
  });
  svg::write(run.file(name + ".svg"), svg::render_heatmap(h.z, h.p, h.Q, title, "z", "p"));
}

void cmd_floquet(Context& c) {
  const RunConfig& cfg = c.cfg;
  MonodromyOperator op;
  if (!c.opt.load_monodromy.empty()) {
    op = load_monodromy(c.opt.load_monodromy);
    if (!(op.grid == cfg.floquet_grid()) || op.steps_per_period != cfg.floquet_steps_per_period ||
        op.params.V0 != cfg.system.V0 || op.params.kappa != cfg.system.kappa ||
        op.params.lambda != cfg.system.lambda || op.params.kbar != cfg.system.kbar ||
        op.params.V_clamp != cfg.system.V_clamp)
      throw ConfigError("loaded monodromy does not match the resolved config");
    c.log << "floquet: loaded " << c.opt.load_monodromy << '\n';
  } else {
    c.log << "floquet: building " << cfg.floquet_N << "x" << cfg.floquet_N << " monodromy\n";
    op = build_monodromy(cfg.floquet_grid(), cfg.system, cfg.floquet_steps_per_period, c.threads);
  }
  if (c.opt.save_monodromy) save_monodromy(c.run.file("monodromy.bin"), op);

  const FloquetSpectrum spec = quasi_energies(op);
  const Seed island = parse_seed(c.opt.island, 0);
  const Seed stoch = parse_seed(c.opt.stochastic, 1);
  const Eigen::VectorXd wi = probe_weights(spec, island.x, cfg.sigma_z);
  const Eigen::VectorXd ws = probe_weights(spec, stoch.x, cfg.sigma_z);

  write_atomically(c.run.file("spectrum.csv"), [&](std::ostream& out) {
    out << "index,quasi_energy,island_weight,stochastic_weight\n";
    for (Eigen::Index j = 0; j < spec.quasi_energy.size(); ++j)
      out << j << ',' << fmt_double(spec.quasi_energy[j]) << ',' << fmt_double(wi[j]) << ','
          << fmt_double(ws[j]) << '\n';
  });

  SpacingOptions so;
  so.resonance_order = cfg.resonance_order;
  so.overlap_threshold = cfg.overlap_threshold;
  so.action_radius = cfg.action_radius;
  so.sigma_z = cfg.sigma_z;
  auto spacing = [&](const Seed& probe) -> json {
    json j{{"label", probe.label}, {"z", probe.x.z}, {"p", probe.x.p}};
    try {
      j["report"] = to_json(resonance_spacing(spec, probe.x, so));
    } catch (const ErrorInsufficientStates& e) {
      j["report"] = nullptr;
      j["error"] = e.what();
    }
    return j;
  };
  json sj{{"N", op.grid.N},
          {"unitarity_error", op.unitarity_error},
          {"eigen_residual", spec.eigen_residual},
          {"island", spacing(island)},
          {"stochastic", spacing(stoch)}};
  const auto& ri = sj["island"]["report"];
  const auto& rs = sj["stochastic"]["report"];
  if (!ri.is_null() && !rs.is_null() && ri["relative_std"].get<double>() > 0.0)
    sj["dispersion_contrast"] = rs["relative_std"].get<double>() / ri["relative_std"].get<double>();
  write_json(c.run.file("spacing.json"), sj);

  const PhaseWindow window{0.0, 40.0, -8.0, 8.0};
  Eigen::Index top_i = 0, top_s = 0;
  wi.maxCoeff(&top_i);
  ws.maxCoeff(&top_s);
  write_husimi(c.run, "husimi_island", husimi(spec.states.col(top_i), spec.grid, spec.kbar, window, 80, 64, cfg.sigma_z),
               "Husimi, state " + std::to_string(top_i) + " (island probe)");
  write_husimi(c.run, "husimi_stochastic", husimi(spec.states.col(top_s), spec.grid, spec.kbar, window, 80, 64, cfg.sigma_z),
               "Husimi, state " + std::to_string(top_s) + " (stochastic probe)");

  svg::Series si{"island " + island.label, {}, {}, true}, ss{"stochastic " + stoch.label, {}, {}, true};
  si.marker_radius = ss.marker_radius = 1.5;
  for (Eigen::Index j = 0; j < spec.quasi_energy.size(); ++j) {
    si.x.push_back(spec.quasi_energy[j]);
    si.y.push_back(wi[j]);
    ss.x.push_back(spec.quasi_energy[j]);
    ss.y.push_back(ws[j]);
  }
  svg::write(c.run.file("spectrum.svg"),
             svg::render_panels({{"Probe overlap vs quasi-energy", "quasi-energy", "overlap", {si, ss}}}));
}

// ---------------------------------------------------------------------------

void cmd_reproduce_figure(Context& c) {
  switch (c.opt.figure) {
    case 1: {
      const PoincareRun r = run_poincare(c, true);
      svg::Panel panel = poincare_panel(r, c.cfg);
      // Named seeds as large dots, plus a 2 pi kbar cell in the upper right corner.
      svg::Series named{"seeds", {}, {}, true};
      named.marker_radius = 4.0;
      double zmax = 0.0, pmax = 0.0;
      for (const auto& s : r.section.samples) {
        zmax = std::max(zmax, s.x.z);
        pmax = std::max(pmax, s.x.p);
      }
      for (const auto& s : r.seeds)
        if (s.label.size() == 1) {
          named.x.push_back(s.x.z);
          named.y.push_back(s.x.p);
        }
      panel.series.push_back(named);
      const double side = std::sqrt(kTwoPi * c.cfg.system.kbar);
      panel.series.push_back({"2 pi kbar", {zmax - side, zmax, zmax, zmax - side, zmax - side},
                              {pmax - side, pmax - side, pmax, pmax, pmax - side}, false});
      svg::write(c.run.file("figure1.svg"), svg::render_panels({panel}, 900, 700));
      break;
    }
    case 2:
      autocorr_panels(c, parse_seeds({"a", "b", "c", "d"}, {}), "figure2.svg", "");
      break;
    case 3:
      autocorr_panels(c, parse_seeds({"f", "e"}, {}), "figure3.svg", "");
      break;
    case 4:
      scan_outputs(c, parse_seed("f", 0), parse_lambdas(c.opt.lambdas), "figure4.svg");
      break;
    default:
      throw ConfigError("reproduce-figure: figure must be 1, 2, 3 or 4");
  }
}

using Command = std::function<void(Context&)>;

const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> table = {
      {"poincare", cmd_poincare},           {"lyapunov", cmd_lyapunov},
      {"evolve", cmd_evolve},               {"autocorr", cmd_autocorr},
      {"revival-scan", cmd_revival_scan},   {"floquet", cmd_floquet},
      {"reproduce-figure", cmd_reproduce_figure}};
  return table;
}

void execute(const std::string& name, const RunConfig& cfg, const Options& opt, const fs::path& out,
             std::ostream& log) {
  RunDir run(out);
  Context c{cfg, opt, run, log, default_threads()};
  commands().at(name)(c);
  Manifest m{name, to_json(opt), cfg, code_version(), run.outputs()};
  write_manifest(out, m);  // last: its presence marks a complete run
  log << "wrote " << m.outputs.size() << " files + manifest.json to " << out.string() << '\n';
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& log, std::ostream& err) {
  CLI::App app{"gravicav: driven gravitational cavity, classical and quantum", "gravicav"};
  app.require_subcommand(1);
  app.set_version_flag("--version", code_version());

  std::string config_path, out_dir = "run";
  std::vector<std::string> sets;
  Options opt;
  std::string manifest_path;
  bool check = false;

  auto common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "JSON config file");
    sub->add_option("-o,--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("-s,--set", sets, "config override key=value (repeatable)");
  };
  auto seeds = [&](CLI::App* sub, const std::string& help) {
    sub->add_option("--seed", opt.seeds, help);
  };

  auto* poin = app.add_subcommand("poincare", "stroboscopic surface of section");
  common(poin);
  seeds(poin, "a..f or z,p (repeatable); default a..f plus the seed lattice");
  auto* lyap = app.add_subcommand("lyapunov", "largest Lyapunov exponent per seed");
  common(lyap);
  seeds(lyap, "a..f or z,p (repeatable); default a..f");
  auto* evol = app.add_subcommand("evolve", "propagate one packet: snapshots, C^2, <z>");
  common(evol);
  seeds(evol, "a..f or z,p; default a");
  auto* acor = app.add_subcommand("autocorr", "C^2(t) and revival report per seed");
  common(acor);
  seeds(acor, "a..f or z,p (repeatable); default a");
  auto* scan = app.add_subcommand("revival-scan", "revival height and time against lambda");
  common(scan);
  seeds(scan, "a..f or z,p; default f");
  scan->add_option("--lambdas", opt.lambdas, "lo:step:hi or comma list")->capture_default_str();
  auto* floq = app.add_subcommand("floquet", "monodromy, quasi-energies, spacing, Husimi maps");
  common(floq);
  floq->add_option("--island", opt.island, "island probe (a..f or z,p)")->capture_default_str();
  floq->add_option("--stochastic", opt.stochastic, "stochastic probe (a..f or z,p)")->capture_default_str();
  floq->add_option("--load-monodromy", opt.load_monodromy, "reuse a saved monodromy.bin");
  floq->add_flag("--save-monodromy", opt.save_monodromy, "write monodromy.bin");
  auto* figr = app.add_subcommand("reproduce-figure", "figure 1 (section), 2 (a-d), 3 (f, e), 4 (lambda scan)");
  common(figr);
  figr->add_option("figure", opt.figure, "figure number")->required();
  figr->add_option("--lambdas", opt.lambdas, "lambda list for figure 4")->capture_default_str();
  auto* repl = app.add_subcommand("replay", "rerun from a manifest.json");
  repl->add_option("manifest", manifest_path, "manifest.json of an earlier run")->required();
  repl->add_option("-o,--out", out_dir, "output directory")->required();
  repl->add_flag("--check", check, "compare outputs with the original run directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, log, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (repl->parsed()) {
      const Manifest m = read_manifest(manifest_path);
      if (!commands().count(m.command)) throw ConfigError("manifest names unknown command '" + m.command + "'");
      if (m.version != code_version())
        err << "warning: manifest written by version " << m.version << ", running " << code_version() << '\n';
      const fs::path original = fs::path(manifest_path).parent_path();
      if (fs::weakly_canonical(original) == fs::weakly_canonical(out_dir))
        throw ConfigError("replay: --out must differ from the original run directory");
      execute(m.command, m.config, options_from_json(m.options), out_dir, log);
      if (check) {
        const auto diffs = compare_outputs(original, out_dir, m.outputs);
        for (const auto& d : diffs) err << "mismatch: " << d.file << ": " << d.reason << '\n';
        if (!diffs.empty()) return kExitFailure;
        log << "replay matches " << m.outputs.size() << " outputs\n";
      }
      return kExitOk;
    }
    std::string name;
    for (const auto* sub : app.get_subcommands()) name = sub->get_name();
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    cfg = apply_overrides(cfg, sets);
    execute(name, cfg, opt, out_dir, log);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalGuardError& e) {
    err << "numerical guard: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace gravicav
