#include "stflow/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stflow {

void DiscreteMeasure::validate() const {
  if (!density.grid.same_layout(grid)) throw GridError("measure: grid mismatch");
  double sum = 0.0;
  double biggest = 0.0;
  for (double x : density.v) {
    if (!(x >= 0.0) || !std::isfinite(x))
      throw GridError("measure: density must be finite and nonnegative");
    sum += x;
    biggest = std::max(biggest, x);
  }
  sum *= grid.h * grid.h;
  biggest *= grid.h * grid.h;
  if (!(total > 0.0)) throw GridError("measure: total mass must be positive");
  if (std::abs(sum - total) > 1e-12 * total)
    throw GridError("measure: stored total disagrees with the density");
  if (biggest > atom_limit * total)
    throw GridError("measure: a single cell exceeds the atom fraction limit");
}

double DiscreteMeasure::ball_mass(Vec2 center, double r) const {
  double s = 0.0;
  for (int k = 0; k < grid.size(); ++k)
    if (dist(grid.center(k), center) <= r) s += density[k];
  return s * grid.h * grid.h;
}

Mask DiscreteMeasure::support() const {
  Mask m(grid);
  for (int k = 0; k < grid.size(); ++k) m.inside[k] = density[k] > 0.0 ? 1 : 0;
  return m;
}

DiscreteMeasure measure_from_density(Field density, double atom_limit) {
  DiscreteMeasure mu;
  mu.grid = density.grid;
  mu.density = std::move(density);
  mu.atom_limit = atom_limit;
  double sum = 0.0;
  for (double x : mu.density.v) sum += x;
  mu.total = sum * mu.grid.h * mu.grid.h;
  mu.validate();
  return mu;
}

DiscreteMeasure measure_on_perfect_set(const Grid& g, const std::vector<int>& cells,
                                       double mass, double atom_limit) {
  if (cells.empty()) throw GridError("measure: empty cell set");
  if (!(mass > 0.0)) throw GridError("measure: mass must be positive");
  if (static_cast<double>(cells.size()) * atom_limit < 1.0)
    throw GridError("measure: set too small for the atom fraction limit");
  Field density(g, 0.0);
  double per_cell = mass / (static_cast<double>(cells.size()) * g.h * g.h);
  for (int c : cells) {
    if (c < 0 || c >= g.size()) throw GridError("measure: cell out of range");
    if (density[c] != 0.0) throw GridError("measure: duplicate cell in set");
    density[c] = per_cell;
  }
  DiscreteMeasure mu;
  mu.grid = g;
  mu.density = std::move(density);
  mu.total = mass;
  mu.atom_limit = atom_limit;
  mu.validate();
  return mu;
}

Field mollify(const DiscreteMeasure& mu, double sigma) {
  mu.validate();
  const Grid& g = mu.grid;
  if (!(sigma >= g.h)) throw GridError("mollify: sigma must be at least h");

  // truncated Gaussian kernel, normalized to unit discrete mass
  int K = std::max(1, static_cast<int>(std::ceil(4.0 * sigma / g.h)));
  std::vector<double> w((2 * K + 1) * (2 * K + 1));
  double wsum = 0.0;
  for (int dj = -K; dj <= K; ++dj)
    for (int di = -K; di <= K; ++di) {
      double r2 = (di * di + dj * dj) * g.h * g.h;
      double val = std::exp(-r2 / (2.0 * sigma * sigma));
      w[(dj + K) * (2 * K + 1) + (di + K)] = val;
      wsum += val;
    }
  for (double& x : w) x /= wsum;

  Field u0(g, 0.0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double d = mu.density.at(i, j);
      if (d == 0.0) continue;
      for (int dj = -K; dj <= K; ++dj)
        for (int di = -K; di <= K; ++di) {
          int ii = i + di, jj = j + dj;
          if (!g.contains(ii, jj)) continue;
          u0.at(ii, jj) += d * w[(dj + K) * (2 * K + 1) + (di + K)];
        }
    }
  return u0;
}

FlowState weak_start(const DiscreteMeasure& mu, double sigma, double t_init,
                     double floor, BoundaryPolicy boundary) {
  const Grid& g = mu.grid;
  if (!(t_init > 0.0)) throw GridError("weak start: t_init must be positive");
  if (!(floor > 0.0)) throw GridError("weak start: floor must be positive");

  Field u0 = mollify(mu, sigma);
  for (double& x : u0.v) x += floor;

  // the outermost ring serves as the ghost layer for the stepper
  Mask m(g, true);
  for (int i = 0; i < g.nx; ++i) {
    m.set(i, 0, false);
    m.set(i, g.ny - 1, false);
  }
  for (int j = 0; j < g.ny; ++j) {
    m.set(0, j, false);
    m.set(g.nx - 1, j, false);
  }

  FlowState f;
  f.t = t_init;
  f.u = std::move(u0);
  f.mask = std::move(m);
  f.boundary = std::move(boundary);
  f.validate();
  return f;
}

VerificationReport check_weak_convergence(const Trajectory& traj,
                                          const DiscreteMeasure& mu,
                                          const std::vector<TestFunction>& fs,
                                          double sigma, double floor) {
  if (traj.size() < 1) throw GridError("weak convergence: empty trajectory");
  if (fs.empty()) throw GridError("weak convergence: no test functions");
  const auto& first = traj.snaps.front();
  const Grid& g = mu.grid;
  double area = 0.0;
  for (int k = 0; k < g.size(); ++k)
    if (traj.mask.at(k)) area += 1.0;
  area *= g.h * g.h;

  double worst = std::numeric_limits<double>::infinity();
  VerificationReport rep;
  rep.check = "weak-convergence";
  rep.inputs_digest = digest_of({first.t, mu.total, double(fs.size())});
  for (const auto& f : fs) {
    double flow_int = 0.0, mu_int = 0.0, fmax = 0.0;
    for (int k = 0; k < g.size(); ++k) {
      if (traj.mask.at(k)) flow_int += f.values[k] * first.u[k];
      mu_int += f.values[k] * mu.density[k];
      fmax = std::max(fmax, std::abs(f.values[k]));
    }
    flow_int *= g.h * g.h;
    mu_int *= g.h * g.h;
    double gap = std::abs(flow_int - mu_int);
    double tol = f.lipschitz * (sigma + g.h) * mu.total +
                 fmax * (floor * area + 4.0 * M_PI * first.t);
    worst = std::min(worst, tol - gap);
    rep.add("gap_" + f.name, gap);
    rep.add("tol_" + f.name, tol);
  }
  rep.margin = worst;
  rep.tolerance = 0.0;
  rep.verdict = worst >= 0.0 ? VerificationReport::Verdict::Pass
                             : VerificationReport::Verdict::Fail;
  if (!rep.passed()) rep.set_witness(-1, -1, first.t);
  return rep;
}

double volume_decay_constant(double r, double R) {
  if (!(r > 0.0 && r < R)) throw GridError("volume decay: need 0 < r < R");
  double q = (r / R) * (r / R);
  return 4.0 * M_PI * (1.0 + q) / (1.0 - q);
}

VerificationReport check_volume_decay(const Trajectory& traj, const DiscreteMeasure& mu,
                                      double r, double R, Vec2 center, double sigma) {
  mu.validate();
  const Grid& g = mu.grid;
  double C = volume_decay_constant(r, R);
  double tol_vol = C * (sigma + g.h);
  double mass_r = mu.ball_mass(center, r);
  if (mass_r == 0.0) {
    // nothing to retain: the bound holds at every time with zero slack needed
    VerificationReport rep = VerificationReport::make(
        "volume-decay", 0.0, tol_vol, digest_of({0.0, C}));
    rep.add("C", C);
    rep.add("mu_ball", 0.0);
    rep.add("vacuous", 1.0);
    return rep;
  }
  double window_hi = std::min(traj.t_back(), mass_r / (4.0 * M_PI));

  Mask ballR(g);
  for (int k = 0; k < g.size(); ++k)
    ballR.inside[k] =
        (traj.mask.at(k) && dist(g.center(k), center) <= R) ? 1 : 0;

  double worst = std::numeric_limits<double>::infinity();
  double worst_t = 0.0;
  int checked = 0;
  for (const auto& snap : traj.snaps) {
    if (!(snap.t > 0.0 && snap.t <= window_hi + 1e-15)) continue;
    double vol = integrate(snap.u, ballR);
    double slack = vol + C * snap.t - mass_r;
    ++checked;
    if (slack < worst) {
      worst = slack;
      worst_t = snap.t;
    }
  }
  if (checked == 0) throw GridError("volume decay: no stored time in the window");
  VerificationReport rep = VerificationReport::make(
      "volume-decay", worst, tol_vol, digest_of({mass_r, C, double(checked)}));
  rep.add("C", C);
  rep.add("mu_ball", mass_r);
  rep.add("window", window_hi);
  rep.add("times_checked", double(checked));
  if (!rep.passed()) rep.set_witness(-1, -1, worst_t);
  return rep;
}

VerificationReport check_l1_linf(const Trajectory& traj, const DiscreteMeasure& mu,
                                 double r, Vec2 center, double C0_cap,
                                 double stability_ratio) {
  mu.validate();
  const Grid& g = mu.grid;
  double threshold = mu.ball_mass(center, 2.0 * r) / (2.0 * M_PI);
  double c0_min = std::numeric_limits<double>::infinity();
  double c0_max = 0.0;
  int checked = 0;
  VerificationReport rep;
  rep.check = "l1-linf";
  rep.inputs_digest = digest_of({threshold, r, C0_cap});
  for (const auto& snap : traj.snaps) {
    if (!(snap.t > threshold)) continue;
    double sup = 0.0;
    for (int k = 0; k < g.size(); ++k)
      if (traj.mask.at(k) && dist(g.center(k), center) <= r)
        sup = std::max(sup, snap.u[k]);
    double c0 = sup * r * r / snap.t;
    rep.add("t" + std::to_string(checked), snap.t);
    rep.add("C0_" + std::to_string(checked), c0);
    c0_min = std::min(c0_min, c0);
    c0_max = std::max(c0_max, c0);
    ++checked;
  }
  if (checked == 0) throw GridError("smoothing probe: no stored time in the window");
  bool stable = c0_max / c0_min <= stability_ratio;
  rep.margin = C0_cap - c0_max;
  rep.tolerance = 0.0;
  rep.verdict = (rep.margin >= 0.0 && stable) ? VerificationReport::Verdict::Pass
                                              : VerificationReport::Verdict::Fail;
  rep.add("C0_max", c0_max);
  rep.add("C0_min", c0_min);
  rep.add("spread", c0_max / c0_min);
  if (!rep.passed()) rep.set_witness(-1, -1, 0.0);
  return rep;
}

namespace {

Mask dilate8(const Mask& m, int rounds) {
  const Grid& g = m.grid;
  Mask cur = m;
  for (int r = 0; r < rounds; ++r) {
    Mask next = cur;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        if (cur.at(i, j)) continue;
        bool near = false;
        for (int dj = -1; dj <= 1 && !near; ++dj)
          for (int di = -1; di <= 1 && !near; ++di) {
            int ii = i + di, jj = j + dj;
            if (g.contains(ii, jj) && cur.at(ii, jj)) near = true;
          }
        next.set(i, j, near);
      }
    cur = next;
  }
  return cur;
}

}  // namespace

BlowupResult initial_time_blowup(const Trajectory& traj, const Mask& support,
                                 int buffer_cells, double inset, double ledger_tol) {
  if (traj.size() < 2) throw GridError("blowup: need at least two stored times");
  const Grid& g = traj.mask.grid;
  if (!g.same_layout(support.grid)) throw GridError("blowup: support grid differs");

  Mask region = interior_band(traj.mask, inset);
  Mask fat = dilate8(support, buffer_cells);
  region = subtract(region, fat);
  if (region.empty()) throw GridError("blowup: report region is empty");

  BlowupResult out;
  out.region = region;

  // u/t nonincreasing in time
  for (int k = 0; k + 1 < traj.size(); ++k) {
    const auto& a = traj.snaps[k];
    const auto& b = traj.snaps[k + 1];
    double worst = 0.0;
    for (int c = 0; c < g.size(); ++c) {
      if (!region.at(c)) continue;
      double va = a.u[c] / a.t, vb = b.u[c] / b.t;
      worst = std::max(worst, (vb - va) / va);
    }
    out.ledger_time.push_back(worst);
    if (worst > ledger_tol) out.monotone = false;
  }

  // m u(t/m) nondecreasing in m, probed at the last stored time via the ladder
  double t_top = traj.t_back();
  for (int k = traj.size() - 1; k > 0; --k) {
    const auto& hi = traj.snaps[k];      // smaller m
    const auto& lo = traj.snaps[k - 1];  // larger m
    double m_hi = t_top / hi.t, m_lo = t_top / lo.t;
    double worst = 0.0;
    for (int c = 0; c < g.size(); ++c) {
      if (!region.at(c)) continue;
      double v_small_m = m_hi * hi.u[c];
      double v_large_m = m_lo * lo.u[c];
      worst = std::max(worst, (v_small_m - v_large_m) / v_small_m);
    }
    out.ledger_scale.push_back(worst);
    if (worst > ledger_tol) out.monotone = false;
  }

  // ghat and its curvature from the earliest stored state
  const auto& first = traj.snaps.front();
  out.ghat = Field(g, 0.0);
  Field log_ghat(g, 0.0), log_ghost(g, 0.0);
  for (int c = 0; c < g.size(); ++c) {
    if (traj.mask.at(c)) {
      out.ghat[c] = first.u[c] / (2.0 * first.t);
      log_ghat[c] = std::log(out.ghat[c]);
    }
    double gh = first.ghost[c] / (2.0 * first.t);
    log_ghost[c] = gh > 0.0 ? std::log(gh) : 0.0;
  }
  Field lap = laplacian(log_ghat, traj.mask, &log_ghost);
  out.curvature_min = std::numeric_limits<double>::infinity();
  out.curvature_max = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < g.size(); ++c) {
    if (!region.at(c)) continue;
    double K = -0.5 * lap[c] / out.ghat[c];
    out.curvature_min = std::min(out.curvature_min, K);
    out.curvature_max = std::max(out.curvature_max, K);
  }
  return out;
}

}  // namespace stflow
