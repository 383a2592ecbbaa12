#include "gravicav/quantum.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gravicav/io.hpp"

namespace gravicav {

namespace {

bool is_power_of_two(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

void require_same_grid(const Grid& a, const Grid& b) {
  if (!(a == b)) throw std::invalid_argument("wavepackets live on different grids");
}

}  // namespace

Grid::Grid(double lo, double hi, Eigen::Index n) : z_min(lo), z_max(hi), N(n) {
  if (!(lo < hi)) throw ConfigError("grid: z_min must be below z_max");
  if (!is_power_of_two(n) || n < 2) throw ConfigError("grid: N must be a power of two");
}

Eigen::VectorXd Grid::positions() const {
  Eigen::VectorXd z(N);
  for (Eigen::Index i = 0; i < N; ++i) z[i] = this->z(i);
  return z;
}

Eigen::VectorXd Grid::momenta(double kbar) const {
  Eigen::VectorXd p(N);
  const double dk = kTwoPi / (static_cast<double>(N) * dz());
  for (Eigen::Index k = 0; k < N; ++k) {
    const Eigen::Index wrapped = k < N / 2 ? k : k - N;
    p[k] = kbar * dk * static_cast<double>(wrapped);
  }
  return p;
}

double Grid::p_max(double kbar) const { return std::numbers::pi * kbar / dz(); }

Eigen::VectorXcd coherent_state(double z0, double p0, double sigma_z, const Grid& grid,
                                double kbar) {
  Eigen::VectorXcd g(grid.N);
  const double inv4s2 = 1.0 / (4.0 * sigma_z * sigma_z);
  for (Eigen::Index i = 0; i < grid.N; ++i) {
    const double x = grid.z(i) - z0;
    g[i] = std::exp(Complex(-x * x * inv4s2, p0 * x / kbar));
  }
  g /= std::sqrt(g.squaredNorm() * grid.dz());
  return g;
}

Wavepacket init_gaussian(const GaussianSpec& spec, const Grid& grid, double kbar) {
  if (!(spec.sigma_z > 0.0)) throw ConfigError("gaussian: sigma_z must be positive");
  if (!(kbar > 0.0)) throw ConfigError("gaussian: kbar must be positive");
  const double margin = 5.0 * spec.sigma_z;
  if (spec.z0 - grid.z_min < margin || grid.z_max - spec.z0 < margin) {
    std::ostringstream msg;
    msg << "gaussian: center z0=" << spec.z0 << " is closer than 5 sigma_z to the grid edge";
    throw ConfigError(msg.str());
  }
  Wavepacket w;
  w.grid = grid;
  w.psi = coherent_state(spec.z0, spec.p0, spec.sigma_z, grid, kbar);
  w.t = 0.0;
  w.norm = norm(w);
  return w;
}

double norm(const Wavepacket& w) { return w.psi.squaredNorm() * w.grid.dz(); }

Complex overlap(const Wavepacket& a, const Wavepacket& b) {
  require_same_grid(a.grid, b.grid);
  return a.psi.dot(b.psi) * a.grid.dz();  // Eigen's dot conjugates the left side
}

double autocorrelation(const Wavepacket& psi0, const Wavepacket& psit) {
  return std::norm(overlap(psi0, psit));
}

Moments moments(const Wavepacket& w, double kbar) {
  const Eigen::VectorXd rho = w.psi.cwiseAbs2();
  const double mass = rho.sum();
  const Eigen::VectorXd z = w.grid.positions();
  Moments m;
  m.z_mean = rho.dot(z) / mass;
  m.z_var = rho.dot((z.array() - m.z_mean).square().matrix()) / mass;

  Eigen::FFT<double> fft;
  Eigen::VectorXcd phi(w.grid.N);
  fft.fwd(phi, w.psi);
  const Eigen::VectorXd prob = phi.cwiseAbs2();
  const Eigen::VectorXd p = w.grid.momenta(kbar);
  const double pmass = prob.sum();
  m.p_mean = prob.dot(p) / pmass;
  m.p_var = prob.dot((p.array() - m.p_mean).square().matrix()) / pmass;
  return m;
}

double expectation_energy(const Wavepacket& w, const SystemParams& params) {
  const Eigen::VectorXd rho = w.psi.cwiseAbs2();
  const double mass = rho.sum();
  double pot = 0.0;
  for (Eigen::Index i = 0; i < w.grid.N; ++i)
    pot += rho[i] * static_potential(w.grid.z(i), params);
  pot /= mass;

  Eigen::FFT<double> fft;
  Eigen::VectorXcd phi(w.grid.N);
  fft.fwd(phi, w.psi);
  const Eigen::VectorXd prob = phi.cwiseAbs2();
  const Eigen::VectorXd p = w.grid.momenta(params.kbar);
  const double kin = 0.5 * prob.dot(p.cwiseAbs2()) / prob.sum();
  return kin + pot;
}

// ---------------------------------------------------------------------------

Propagator::Propagator(const Grid& grid, const SystemParams& params, int steps_per_period,
                       GuardLimits guards)
    : grid_(grid), params_(params), steps_(steps_per_period), guards_(guards) {
  params_.validate();
  if (steps_per_period < 512)
    throw ConfigError("propagator: steps_per_period must be >= 512 (dt <= 2 pi / 512)");
  dt_ = kTwoPi / steps_per_period;
  if (guards_.check_every <= 0) guards_.check_every = steps_per_period;

  z_ = grid_.positions();
  p_ = grid_.momenta(params_.kbar);
  kinetic_ = (p_.array().square() * (-dt_ / (2.0 * params_.kbar))).unaryExpr([](double a) {
    return std::exp(Complex(0.0, a));
  });
  half_kicks_.reserve(static_cast<std::size_t>(steps_));
  for (int n = 0; n < steps_; ++n) half_kicks_.push_back(half_kick_at((n + 0.5) * dt_, dt_));

  const double cut = (1.0 - guards_.tail_fraction) * grid_.p_max(params_.kbar);
  tail_mask_ = (p_.array().abs() > cut).cast<double>();
  work_.resize(grid_.N);
}

Eigen::VectorXcd Propagator::half_kick_at(double t_mid, double h) const {
  Eigen::VectorXcd k(grid_.N);
  const double scale = -h / (2.0 * params_.kbar);
  for (Eigen::Index i = 0; i < grid_.N; ++i)
    k[i] = std::exp(Complex(0.0, scale * potential(z_[i], t_mid, params_)));
  return k;
}

void Propagator::kick_drift_kick(Eigen::VectorXcd& psi, const Eigen::VectorXcd& half_kick) {
  psi.array() *= half_kick.array();
  fft_.fwd(work_, psi);
  work_.array() *= kinetic_.array();
  fft_.inv(psi, work_);
  psi.array() *= half_kick.array();
}

void Propagator::step(Wavepacket& w, double h) {
  const double n_real = w.t / dt_;
  const double n_round = std::nearbyint(n_real);
  const bool on_lattice = std::abs(n_real - n_round) < 1e-9 * std::max(1.0, std::abs(n_real));
  if (on_lattice && std::abs(h - dt_) < 1e-12 * dt_) {
    auto n = static_cast<long long>(n_round) % steps_;
    if (n < 0) n += steps_;
    kick_drift_kick(w.psi, half_kicks_[static_cast<std::size_t>(n)]);
    w.t = (n_round + 1.0) * dt_;
    return;
  }
  // Off-lattice or shortened step: build phases on the fly.
  const Eigen::VectorXcd hk = half_kick_at(w.t + 0.5 * h, h);
  const Eigen::VectorXcd kin =
      (p_.array().square() * (-h / (2.0 * params_.kbar))).unaryExpr([](double a) {
        return std::exp(Complex(0.0, a));
      });
  w.psi.array() *= hk.array();
  fft_.fwd(work_, w.psi);
  work_.array() *= kin.array();
  fft_.inv(w.psi, work_);
  w.psi.array() *= hk.array();
  w.t += h;
}

void Propagator::advance(Wavepacket& w, double t1,
                         const std::function<void(const Wavepacket&)>& observer,
                         int every) {
  if (!(w.grid == grid_)) throw std::invalid_argument("propagator: grid mismatch");
  if (t1 < w.t) throw std::invalid_argument("propagator: t1 precedes the packet time");
  if (every < 1) every = 1;
  long long full_steps = 0;
  const double tol = 1e-9 * dt_;
  while (t1 - w.t > tol) {
    const double remaining = t1 - w.t;
    if (remaining >= dt_ - tol) {
      step(w, dt_);
      ++full_steps;
      if (full_steps % guards_.check_every == 0) check_guards(w);
      if (observer && full_steps % every == 0) observer(w);
    } else {
      step(w, remaining);
      w.t = t1;
    }
  }
  if (full_steps % guards_.check_every != 0) check_guards(w);
  w.norm = norm(w);
}

void Propagator::apply_period(Eigen::Ref<Eigen::VectorXcd> v) {
  Eigen::VectorXcd psi = v;
  for (int n = 0; n < steps_; ++n) kick_drift_kick(psi, half_kicks_[static_cast<std::size_t>(n)]);
  v = psi;
}

double Propagator::spectral_tail(const Eigen::VectorXcd& psi) {
  fft_.fwd(work_, psi);
  const Eigen::VectorXd prob = work_.cwiseAbs2();
  return prob.dot(tail_mask_) / prob.sum();
}

void Propagator::check_guards(const Wavepacket& w) {
  const Eigen::Index e = std::min(guards_.edge_points, grid_.N / 2);
  const double lo = w.psi.head(e).cwiseAbs().maxCoeff();
  const double hi = w.psi.tail(e).cwiseAbs().maxCoeff();
  if (std::max(lo, hi) > guards_.edge_amplitude) {
    std::ostringstream msg;
    msg << "box too small: edge amplitude " << std::max(lo, hi) << " at t=" << w.t
        << " exceeds " << guards_.edge_amplitude;
    throw ErrorBoxTooSmall(msg.str());
  }
  const double tail = spectral_tail(w.psi);
  if (tail > guards_.tail_mass) {
    std::ostringstream msg;
    msg << "aliasing: spectral tail mass " << tail << " at t=" << w.t << " exceeds "
        << guards_.tail_mass;
    throw ErrorAliasing(msg.str());
  }
}

Wavepacket propagate(Wavepacket psi, double t1, int steps_per_period,
                     const SystemParams& params, GuardLimits guards) {
  Propagator prop(psi.grid, params, steps_per_period, guards);
  prop.advance(psi, t1);
  return psi;
}

EvolutionRecord evolve_autocorrelation(
    const Wavepacket& psi0, double t_total, int output_every, Propagator& propagator,
    const std::function<void(const Wavepacket&)>& snapshot) {
  EvolutionRecord rec;
  const double kbar = propagator.params().kbar;
  auto record = [&](const Wavepacket& w) {
    const Moments m = moments(w, kbar);
    rec.t.push_back(w.t);
    rec.c2.push_back(autocorrelation(psi0, w));
    rec.z_mean.push_back(m.z_mean);
    rec.p_mean.push_back(m.p_mean);
    if (snapshot) snapshot(w);
  };
  Wavepacket w = psi0;
  record(w);
  propagator.advance(w, psi0.t + t_total, record, output_every);
  rec.last = std::move(w);
  return rec;
}

double ehrenfest_departure(const std::vector<double>& t, const std::vector<double>& z_quantum,
                           const std::vector<double>& z_classical, double sigma_z) {
  const std::size_t n = std::min({t.size(), z_quantum.size(), z_classical.size()});
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(z_quantum[i] - z_classical[i]) > 2.0 * sigma_z) return t[i];
  return -1.0;
}

// ---------------------------------------------------------------------------

void write_snapshot(const std::filesystem::path& path, const Wavepacket& w, double kbar) {
  write_atomically(path, [&](std::ostream& out) {
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(w.grid.N));
    put_le(out, w.grid.z_min);
    put_le(out, w.grid.z_max);
    put_le(out, w.t);
    put_le(out, kbar);
    for (Eigen::Index i = 0; i < w.grid.N; ++i) {
      put_le(out, w.psi[i].real());
      put_le(out, w.psi[i].imag());
    }
  });
}

Wavepacket read_snapshot(const std::filesystem::path& path, double* kbar) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("snapshot: cannot open " + path.string());
  const auto n = get_le<std::uint64_t>(in);
  const double lo = get_le<double>(in);
  const double hi = get_le<double>(in);
  Wavepacket w;
  w.grid = Grid(lo, hi, static_cast<Eigen::Index>(n));
  w.t = get_le<double>(in);
  const double kb = get_le<double>(in);
  if (kbar) *kbar = kb;
  w.psi.resize(w.grid.N);
  for (Eigen::Index i = 0; i < w.grid.N; ++i) {
    const double re = get_le<double>(in);
    const double im = get_le<double>(in);
    w.psi[i] = Complex(re, im);
  }
  w.norm = norm(w);
  return w;
}

void write_density_csv(const std::filesystem::path& path, const Wavepacket& w) {
  write_atomically(path, [&](std::ostream& out) {
    out << "z,density\n";
    for (Eigen::Index i = 0; i < w.grid.N; ++i)
      out << fmt_double(w.grid.z(i)) << ',' << fmt_double(std::norm(w.psi[i])) << '\n';
  });
}

}  // namespace gravicav
