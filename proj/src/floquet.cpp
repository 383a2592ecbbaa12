#include "gravicav/floquet.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gravicav/io.hpp"
#include "gravicav/parallel.hpp"

namespace gravicav {

double unitarity_error(const Eigen::MatrixXcd& U) {
  const Eigen::MatrixXcd G = U.adjoint() * U;
  return (G - Eigen::MatrixXcd::Identity(U.rows(), U.cols())).cwiseAbs().maxCoeff();
}

MonodromyOperator build_monodromy(const Grid& grid, const SystemParams& params,
                                  int steps_per_period, int threads) {
  MonodromyOperator op;
  op.grid = grid;
  op.params = params;
  op.steps_per_period = steps_per_period;
  op.U = Eigen::MatrixXcd::Zero(grid.N, grid.N);

  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(grid.N)));
  parallel_for(static_cast<std::size_t>(workers), workers, [&](std::size_t w) {
    Propagator prop(grid, params, steps_per_period);
    for (Eigen::Index j = static_cast<Eigen::Index>(w); j < grid.N; j += workers) {
      auto col = op.U.col(j);
      col[j] = 1.0;
      prop.apply_period(col);
    }
  });

  op.unitarity_error = unitarity_error(op.U);
  if (!(op.unitarity_error < kUnitarityTolerance)) {
    std::ostringstream msg;
    msg << "monodromy not unitary: max |U^H U - I| = " << op.unitarity_error;
    throw ErrorUnitarity(msg.str());
  }
  return op;
}

namespace {
constexpr char kMonodromyMagic[8] = {'G', 'C', 'M', 'O', 'N', 'O', '0', '1'};
}

void save_monodromy(const std::filesystem::path& path, const MonodromyOperator& op) {
  write_atomically(path, [&](std::ostream& out) {
    out.write(kMonodromyMagic, sizeof kMonodromyMagic);
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(op.grid.N));
    for (double v : {op.grid.z_min, op.grid.z_max, op.params.V0, op.params.kappa,
                     op.params.lambda, op.params.kbar, op.params.V_clamp})
      put_le(out, v);
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(op.steps_per_period));
    const Complex* data = op.U.data();
    for (Eigen::Index k = 0; k < op.U.size(); ++k) {
      put_le(out, data[k].real());
      put_le(out, data[k].imag());
    }
  });
}

MonodromyOperator load_monodromy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("monodromy: cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || !std::equal(magic, magic + 8, kMonodromyMagic))
    throw std::runtime_error("monodromy: bad magic in " + path.string());
  MonodromyOperator op;
  const auto n = static_cast<Eigen::Index>(get_le<std::uint64_t>(in));
  const double lo = get_le<double>(in);
  const double hi = get_le<double>(in);
  op.grid = Grid(lo, hi, n);
  op.params.V0 = get_le<double>(in);
  op.params.kappa = get_le<double>(in);
  op.params.lambda = get_le<double>(in);
  op.params.kbar = get_le<double>(in);
  op.params.V_clamp = get_le<double>(in);
  op.steps_per_period = static_cast<int>(get_le<std::uint64_t>(in));
  op.U.resize(n, n);
  Complex* data = op.U.data();
  for (Eigen::Index k = 0; k < op.U.size(); ++k) {
    const double re = get_le<double>(in);
    const double im = get_le<double>(in);
    data[k] = Complex(re, im);
  }
  op.unitarity_error = unitarity_error(op.U);
  return op;
}

FloquetSpectrum quasi_energies(const MonodromyOperator& op) {
  const Eigen::Index n = op.U.rows();
  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(op.U);
  if (schur.info() != Eigen::Success) throw ErrorEigensolver("complex Schur did not converge");
  const Eigen::VectorXcd mu = schur.matrixT().diagonal();
  const Eigen::MatrixXcd& Q = schur.matrixU();

  const double kbar = op.params.kbar;
  std::vector<double> eps(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    double e = -kbar / kTwoPi * std::arg(mu[j]);
    e = std::fmod(e, kbar);
    if (e < 0.0) e += kbar;
    if (e >= kbar) e -= kbar;
    eps[static_cast<std::size_t>(j)] = e;
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return eps[static_cast<std::size_t>(a)] < eps[static_cast<std::size_t>(b)];
  });

  FloquetSpectrum spec;
  spec.grid = op.grid;
  spec.kbar = kbar;
  spec.quasi_energy.resize(n);
  spec.eigenvalues.resize(n);
  spec.states.resize(n, n);
  const double scale = 1.0 / std::sqrt(op.grid.dz());
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index j = order[static_cast<std::size_t>(k)];
    spec.quasi_energy[k] = eps[static_cast<std::size_t>(j)];
    spec.eigenvalues[k] = mu[j];
    spec.states.col(k) = Q.col(j).normalized() * scale;
  }

  // Eigenphase consistency, in the plain (unit-norm) basis.
  const Eigen::MatrixXcd V = spec.states / scale;
  const Eigen::MatrixXcd R = op.U * V - V * spec.eigenvalues.asDiagonal();
  spec.eigen_residual = R.colwise().norm().maxCoeff();
  if (!(spec.eigen_residual < 1e-6)) {
    std::ostringstream msg;
    msg << "eigenvector residual " << spec.eigen_residual << " exceeds 1e-6";
    throw ErrorEigensolver(msg.str());
  }
  return spec;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd coherent_overlaps(const std::vector<PhasePoint>& points,
                                  const Eigen::MatrixXcd& states, const Grid& grid,
                                  double kbar, double sigma_z) {
  const Eigen::Index cols = states.cols();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(points.size()), cols);
  const double dz = grid.dz();
  const double reach = 12.0 * sigma_z;  // Gaussian below 1e-15 beyond this
  for (std::size_t k = 0; k < points.size(); ++k) {
    const PhasePoint c = points[k];
    const Eigen::VectorXcd g = coherent_state(c.z, c.p, sigma_z, grid, kbar);
    auto lo = static_cast<Eigen::Index>(std::floor((c.z - reach - grid.z_min) / dz));
    auto hi = static_cast<Eigen::Index>(std::ceil((c.z + reach - grid.z_min) / dz)) + 1;
    lo = std::clamp<Eigen::Index>(lo, 0, grid.N);
    hi = std::clamp<Eigen::Index>(hi, lo, grid.N);
    const Eigen::Index len = hi - lo;
    if (len == 0) {
      out.row(static_cast<Eigen::Index>(k)).setZero();
      continue;
    }
    const Eigen::RowVectorXcd amp =
        (g.segment(lo, len).adjoint() * states.middleRows(lo, len)) * dz;
    out.row(static_cast<Eigen::Index>(k)) = amp.cwiseAbs2();
  }
  return out;
}

Eigen::VectorXd probe_weights(const FloquetSpectrum& spec, PhasePoint center, double sigma_z) {
  return coherent_overlaps({center}, spec.states, spec.grid, spec.kbar, sigma_z).row(0).transpose();
}

double HusimiMap::cell_area() const {
  const double hz = z.size() > 1 ? z[1] - z[0] : 0.0;
  const double hp = p.size() > 1 ? p[1] - p[0] : 0.0;
  return hz * hp;
}

HusimiMap husimi(const Eigen::VectorXcd& state, const Grid& grid, double kbar,
                 const PhaseWindow& win, int nz, int np, double sigma_z) {
  if (nz < 2 || np < 2) throw std::invalid_argument("husimi: resolution must be >= 2");
  HusimiMap map;
  map.z.resize(nz);
  map.p.resize(np);
  const double hz = (win.z_hi - win.z_lo) / nz;
  const double hp = (win.p_hi - win.p_lo) / np;
  for (int i = 0; i < nz; ++i) map.z[i] = win.z_lo + (i + 0.5) * hz;
  for (int j = 0; j < np; ++j) map.p[j] = win.p_lo + (j + 0.5) * hp;
  std::vector<PhasePoint> pts;
  pts.reserve(static_cast<std::size_t>(nz) * np);
  for (int i = 0; i < nz; ++i)
    for (int j = 0; j < np; ++j) pts.push_back({map.z[i], map.p[j]});
  const Eigen::MatrixXd ov = coherent_overlaps(pts, state, grid, kbar, sigma_z);
  map.Q.resize(np, nz);
  const double norm = 1.0 / (kTwoPi * kbar);
  for (int i = 0; i < nz; ++i)
    for (int j = 0; j < np; ++j)
      map.Q(j, i) = ov(static_cast<Eigen::Index>(i) * np + j, 0) * norm;
  return map;
}

namespace {

struct DiscLattice {
  std::vector<PhasePoint> points;
  std::vector<double> half_r2;
  double cell = 0.0;
};

DiscLattice disc_lattice(PhasePoint c, double radius, double h) {
  DiscLattice d;
  d.cell = h * h;
  const int m = static_cast<int>(std::floor(radius / h));
  for (int i = -m; i <= m; ++i)
    for (int j = -m; j <= m; ++j) {
      const double dz = i * h;
      const double dp = j * h;
      const double r2 = dz * dz + dp * dp;
      if (r2 > radius * radius) continue;
      d.points.push_back({c.z + dz, c.p + dp});
      d.half_r2.push_back(0.5 * r2);
    }
  return d;
}

}  // namespace

Eigen::VectorXd disc_mass(const FloquetSpectrum& spec, PhasePoint center, double radius,
                          double sigma_z, double h) {
  const DiscLattice d = disc_lattice(center, radius, h);
  const Eigen::MatrixXd ov = coherent_overlaps(d.points, spec.states, spec.grid, spec.kbar, sigma_z);
  return ov.colwise().sum().transpose() * (d.cell / (kTwoPi * spec.kbar));
}

SpacingReport gap_statistics(std::vector<LadderLevel> ladder, double zone) {
  if (!(zone > 0.0)) throw std::invalid_argument("gap_statistics: zone must be positive");
  std::stable_sort(ladder.begin(), ladder.end(),
                   [](const LadderLevel& a, const LadderLevel& b) { return a.action < b.action; });
  SpacingReport rep;
  rep.zone = zone;
  rep.ladder = ladder;
  for (std::size_t i = 1; i < ladder.size(); ++i) {
    double g = std::fmod(ladder[i].quasi_energy - ladder[i - 1].quasi_energy, zone);
    if (g < 0.0) g += zone;
    rep.gaps.push_back(g);
  }
  if (rep.gaps.empty()) return rep;
  const double n = static_cast<double>(rep.gaps.size());
  rep.mean_gap = std::accumulate(rep.gaps.begin(), rep.gaps.end(), 0.0) / n;
  double var = 0.0;
  for (double g : rep.gaps) var += (g - rep.mean_gap) * (g - rep.mean_gap);
  rep.relative_std = rep.mean_gap > 0.0 ? std::sqrt(var / n) / rep.mean_gap : 0.0;
  return rep;
}

SpacingReport resonance_spacing(const FloquetSpectrum& spec, PhasePoint center,
                                const SpacingOptions& opt) {
  if (opt.resonance_order < 1) throw std::invalid_argument("resonance_spacing: order < 1");
  const double zone = spec.kbar / opt.resonance_order;
  const Eigen::VectorXd weight = probe_weights(spec, center, opt.sigma_z);

  std::vector<int> selected;
  for (Eigen::Index j = 0; j < weight.size(); ++j)
    if (weight[j] > opt.overlap_threshold) selected.push_back(static_cast<int>(j));
  if (selected.size() < 3) {
    std::ostringstream msg;
    msg << "only " << selected.size() << " states overlap the probe at (" << center.z << ", "
        << center.p << ") above " << opt.overlap_threshold;
    throw ErrorInsufficientStates(msg.str());
  }

  // Local action of each selected state from its Husimi density in the disc.
  const DiscLattice disc = disc_lattice(center, opt.action_radius, opt.lattice_step);
  Eigen::MatrixXcd block(spec.states.rows(), static_cast<Eigen::Index>(selected.size()));
  for (std::size_t k = 0; k < selected.size(); ++k)
    block.col(static_cast<Eigen::Index>(k)) = spec.states.col(selected[k]);
  const Eigen::MatrixXd Q = coherent_overlaps(disc.points, block, spec.grid, spec.kbar, opt.sigma_z);
  const Eigen::Map<const Eigen::VectorXd> half_r2(disc.half_r2.data(),
                                                  static_cast<Eigen::Index>(disc.half_r2.size()));

  struct Group {
    double folded;
    double wsum = 0.0;
    double action_w = 0.0;
  };
  std::vector<Group> groups;
  // Merge in order of decreasing weight so the dominant member anchors a group.
  std::vector<std::size_t> by_weight(selected.size());
  std::iota(by_weight.begin(), by_weight.end(), std::size_t{0});
  std::stable_sort(by_weight.begin(), by_weight.end(), [&](std::size_t a, std::size_t b) {
    return weight[selected[a]] > weight[selected[b]];
  });
  const double tol = opt.merge_tolerance * spec.kbar;
  for (std::size_t k : by_weight) {
    const double w = weight[selected[k]];
    const auto col = Q.col(static_cast<Eigen::Index>(k));
    const double mass = col.sum();
    const double action = mass > 0.0 ? col.dot(half_r2) / mass : 0.0;
    double f = std::fmod(spec.quasi_energy[selected[k]], zone);
    if (f < 0.0) f += zone;
    Group* hit = nullptr;
    for (auto& g : groups) {
      double d = std::fmod(f - g.folded + 0.5 * zone, zone);
      if (d < 0.0) d += zone;
      if (std::abs(d - 0.5 * zone) < tol) {
        hit = &g;
        break;
      }
    }
    if (!hit) {
      groups.push_back({f});
      hit = &groups.back();
    }
    hit->wsum += w;
    hit->action_w += w * action;
  }

  std::vector<LadderLevel> ladder;
  for (const auto& g : groups) ladder.push_back({g.action_w / g.wsum, g.folded, g.wsum});
  if (ladder.size() < 3) {
    std::ostringstream msg;
    msg << "only " << ladder.size() << " distinct levels near (" << center.z << ", " << center.p
        << ") after merging";
    throw ErrorInsufficientStates(msg.str());
  }
  SpacingReport rep = gap_statistics(std::move(ladder), zone);
  rep.selected = std::move(selected);
  return rep;
}

}  // namespace gravicav
