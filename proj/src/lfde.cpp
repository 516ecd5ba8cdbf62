#include "stflow/lfde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "stflow/io.hpp"
#include "stflow/numerics.hpp"

namespace stflow {

BoundaryPolicy BoundaryPolicy::dirichlet(double v) {
  if (!(v > 0.0)) throw GridError("boundary: ghost value must be positive");
  BoundaryPolicy bp;
  bp.kind = Kind::DirichletConstant;
  bp.value = v;
  return bp;
}

BoundaryPolicy BoundaryPolicy::barrier_hyperbolic(Field H) {
  BoundaryPolicy bp;
  bp.kind = Kind::BarrierHyperbolic;
  bp.barrier = std::move(H);
  return bp;
}

BoundaryPolicy BoundaryPolicy::frozen(Field trace) {
  BoundaryPolicy bp;
  bp.kind = Kind::Frozen;
  bp.trace = std::move(trace);
  return bp;
}

Field BoundaryPolicy::ghost_u(const Grid& g, double t) const {
  switch (kind) {
    case Kind::DirichletConstant:
      return Field(g, value);
    case Kind::BarrierHyperbolic: {
      if (!barrier.grid.same_layout(g)) throw GridError("boundary: barrier grid differs");
      Field out(g);
      for (int k = 0; k < g.size(); ++k) {
        out[k] = 2.0 * t * barrier[k];
        if (!(out[k] > 0.0)) out[k] = 1e-300;  // outside-domain filler, never read
      }
      return out;
    }
    case Kind::Frozen:
      if (!trace.grid.same_layout(g)) throw GridError("boundary: trace grid differs");
      return trace;
  }
  throw GridError("boundary: unknown kind");
}

void FlowState::validate() const {
  if (!(t > 0.0)) throw GridError("flow state: time must be positive");
  if (!u.grid.same_layout(mask.grid)) throw GridError("flow state: grids differ");
  for (int k = 0; k < u.grid.size(); ++k)
    if (mask.at(k) && !(u[k] > 0.0 && std::isfinite(u[k])))
      throw GridError("flow state: factor must be positive and finite on mask");
}

namespace {

struct CompactIndex {
  std::vector<int> cells;          // compact -> flat
  std::vector<int> of_flat;        // flat -> compact (-1 outside)
  explicit CompactIndex(const Mask& m) : of_flat(m.grid.size(), -1) {
    for (int k = 0; k < m.grid.size(); ++k)
      if (m.at(k)) {
        of_flat[k] = static_cast<int>(cells.size());
        cells.push_back(k);
      }
  }
  int n() const { return static_cast<int>(cells.size()); }
};

// Scaled max-norm: residual against local solution scale.
double scaled_norm(const std::vector<double>& F, const std::vector<double>& w) {
  double m = 0.0;
  for (size_t k = 0; k < F.size(); ++k)
    m = std::max(m, std::abs(F[k]) / (1.0 + std::abs(w[k])));
  return m;
}

}  // namespace

FlowState step_implicit(const FlowState& f, double tau, StepReport* report) {
  f.validate();
  if (tau < 0.0) throw GridError("step: negative step size");
  if (tau == 0.0) {
    if (report) *report = {true, 0, 0.0, 0};
    return f;
  }
  const Grid& g = f.u.grid;
  const Mask& m = f.mask;
  const double h2 = g.h * g.h;
  const double t_next = f.t + tau;

  CompactIndex idx(m);
  const int n = idx.n();
  if (n < 1) throw GridError("step: mask has no cells");

  Field ghost = f.boundary.ghost_u(g, t_next);
  // log of ghost values, only read where the stencil leaves the mask
  Field log_ghost(g);
  for (int k = 0; k < g.size(); ++k)
    log_ghost[k] = ghost[k] > 0.0 ? std::log(ghost[k]) : 0.0;

  const int nx = g.nx;
  auto flat_neighbors = [&](int flat, int out[4]) {
    int i = flat % nx, j = flat / nx;
    out[0] = i > 0 ? flat - 1 : -1;
    out[1] = i < nx - 1 ? flat + 1 : -1;
    out[2] = j > 0 ? flat - nx : -1;
    out[3] = j < g.ny - 1 ? flat + nx : -1;
  };

  // residual F(w) = w - u - tau * lap(log w) with fixed ghost data
  std::vector<double> w(n), u0(n), F(n);
  for (int c = 0; c < n; ++c) {
    w[c] = f.u[idx.cells[c]];
    u0[c] = w[c];
  }
  auto eval_F = [&](const std::vector<double>& wv, std::vector<double>& out) {
    int nb[4];
    for (int c = 0; c < n; ++c) {
      int flat = idx.cells[c];
      double lw = std::log(wv[c]);
      double s = -4.0 * lw;
      flat_neighbors(flat, nb);
      for (int d = 0; d < 4; ++d) {
        int q = nb[d];
        if (q >= 0 && idx.of_flat[q] >= 0)
          s += std::log(wv[idx.of_flat[q]]);
        else if (q >= 0)
          s += log_ghost[q];
        else
          throw GridError("step: mask touches the grid edge; enlarge the box");
      }
      out[c] = wv[c] - u0[c] - tau * s / h2;
    }
  };

  eval_F(w, F);
  double fn = scaled_norm(F, w);
  StepReport rep;
  std::vector<double> y(n, 0.0), rhs(n), diag(n), wtry(n), Ftry(n);
  int it = 0;
  for (; it < kMaxNewtonIterations && fn > kTolNewton; ++it) {
    // Newton system in substituted form: (diag(w) + tau*A) y = -F, delta = w.*y,
    // where A is the five-point operator with zero-Dirichlet ghosts.
    for (int c = 0; c < n; ++c) {
      rhs[c] = -F[c];
      diag[c] = w[c] + 4.0 * tau / h2;
    }
    auto apply = [&](const std::vector<double>& x, std::vector<double>& out) {
      int nb[4];
      for (int c = 0; c < n; ++c) {
        double s = (w[c] + 4.0 * tau / h2) * x[c];
        flat_neighbors(idx.cells[c], nb);
        for (int d = 0; d < 4; ++d) {
          int q = nb[d];
          if (q >= 0 && idx.of_flat[q] >= 0) s -= tau / h2 * x[idx.of_flat[q]];
        }
        out[c] = s;
      }
    };
    std::fill(y.begin(), y.end(), 0.0);
    CGResult cg = cg_solve(apply, rhs, y, diag, 1e-12, 4000);
    rep.cg_iterations_total += cg.iterations;

    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      bool positive = true;
      for (int c = 0; c < n; ++c) {
        wtry[c] = w[c] * (1.0 + alpha * y[c]);
        if (!(wtry[c] > 0.0)) {
          positive = false;
          break;
        }
      }
      if (positive) {
        eval_F(wtry, Ftry);
        double fn_try = scaled_norm(Ftry, wtry);
        if (fn_try <= fn * (1.0 - 0.25 * alpha) || fn_try <= kTolNewton) {
          w.swap(wtry);
          F.swap(Ftry);
          fn = fn_try;
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!accepted) break;  // line search exhausted
  }
  rep.newton_iterations = it;
  rep.residual = fn;
  rep.converged = fn <= kTolNewton;
  if (report) *report = rep;
  if (!rep.converged)
    throw GridError("step: Newton failed to converge (residual " +
                    std::to_string(fn) + ")");

  FlowState out = f;
  out.t = t_next;
  for (int c = 0; c < n; ++c) out.u[idx.cells[c]] = w[c];
  return out;
}

Field scalar_curvature(const FlowState& f) {
  f.validate();
  const Grid& g = f.u.grid;
  Field ghost = f.boundary.ghost_u(g, f.t);
  Field log_u(g), log_ghost(g);
  for (int k = 0; k < g.size(); ++k) {
    log_u[k] = f.mask.at(k) ? std::log(f.u[k]) : 0.0;
    log_ghost[k] = ghost[k] > 0.0 ? std::log(ghost[k]) : 0.0;
  }
  Field lap = laplacian(log_u, f.mask, &log_ghost);
  Field R(g, 0.0);
  for (int k = 0; k < g.size(); ++k)
    if (f.mask.at(k)) R[k] = -lap[k] / f.u[k];
  return R;
}

FlowState rescale_parabolic(const FlowState& f, double lambda) {
  if (!(lambda > 0.0)) throw GridError("rescale: lambda must be positive");
  FlowState out = f;
  out.t = lambda * f.t;
  for (double& x : out.u.v) x *= lambda;
  switch (out.boundary.kind) {
    case BoundaryPolicy::Kind::DirichletConstant:
      out.boundary.value *= lambda;
      break;
    case BoundaryPolicy::Kind::BarrierHyperbolic:
      break;  // ghost 2 t' H = lambda * (2 t H) already
    case BoundaryPolicy::Kind::Frozen:
      for (double& x : out.boundary.trace.v) x *= lambda;
      break;
  }
  return out;
}

Field Trajectory::sample(double t) const {
  if (snaps.empty()) throw GridError("trajectory: empty");
  if (t <= snaps.front().t) return snaps.front().u;
  if (t >= snaps.back().t) return snaps.back().u;
  for (size_t k = 1; k < snaps.size(); ++k)
    if (t <= snaps[k].t) {
      double a = (t - snaps[k - 1].t) / (snaps[k].t - snaps[k - 1].t);
      Field out = snaps[k - 1].u;
      for (size_t q = 0; q < out.v.size(); ++q)
        out.v[q] = (1.0 - a) * out.v[q] + a * snaps[k].u.v[q];
      return out;
    }
  return snaps.back().u;
}

Field Trajectory::sample_ghost(double t) const {
  if (snaps.empty()) throw GridError("trajectory: empty");
  if (t <= snaps.front().t) return snaps.front().ghost;
  if (t >= snaps.back().t) return snaps.back().ghost;
  for (size_t k = 1; k < snaps.size(); ++k)
    if (t <= snaps[k].t) {
      double a = (t - snaps[k - 1].t) / (snaps[k].t - snaps[k - 1].t);
      Field out = snaps[k - 1].ghost;
      for (size_t q = 0; q < out.v.size(); ++q)
        out.v[q] = (1.0 - a) * out.v[q] + a * snaps[k].ghost.v[q];
      return out;
    }
  return snaps.back().ghost;
}

int Trajectory::nearest_index(double t) const {
  int best = 0;
  double dist = std::abs(snaps[0].t - t);
  for (int k = 1; k < size(); ++k)
    if (std::abs(snaps[k].t - t) < dist) {
      best = k;
      dist = std::abs(snaps[k].t - t);
    }
  return best;
}

Trajectory run_flow(const FlowState& f0, const std::vector<double>& times,
                    double max_tau, StepReport* last_report) {
  if (times.empty()) throw GridError("run_flow: no times");
  if (!(max_tau > 0.0)) throw GridError("run_flow: max_tau must be positive");
  Trajectory traj;
  traj.mask = f0.mask;
  FlowState cur = f0;
  StepReport rep;
  auto store = [&](const FlowState& s) {
    traj.snaps.push_back({s.t, s.u, s.boundary.ghost_u(s.u.grid, s.t)});
  };
  for (size_t k = 0; k < times.size(); ++k) {
    double target = times[k];
    if (k == 0 && std::abs(target - cur.t) < 1e-14) {
      store(cur);
      continue;
    }
    if (!(target > cur.t)) throw GridError("run_flow: times must increase");
    double span = target - cur.t;
    int steps = std::max(1, static_cast<int>(std::ceil(span / max_tau - 1e-12)));
    double tau = span / steps;
    for (int q = 0; q < steps; ++q) cur = step_implicit(cur, tau, &rep);
    cur.t = target;  // absorb rounding drift in the accumulated time
    store(cur);
  }
  if (last_report) *last_report = rep;
  return traj;
}

Trajectory supersolution_transform(const Trajectory& traj, double eps) {
  if (!(eps > 0.0)) throw GridError("supersolution: eps must be positive");
  if (traj.size() < 2) throw GridError("supersolution: need at least two snapshots");
  Trajectory out;
  out.mask = traj.mask;
  for (const auto& snap : traj.snaps) {
    double t = snap.t;
    double s = std::log1p(eps * t) / eps;
    if (s < traj.t_front() - 1e-12) continue;  // reparameterized time not stored
    double amp = 1.0 + eps * t;
    Trajectory::Snapshot o;
    o.t = t;
    o.u = traj.sample(s);
    o.ghost = traj.sample_ghost(s);
    for (double& x : o.u.v) x *= amp;
    for (double& x : o.ghost.v) x *= amp;
    out.snaps.push_back(std::move(o));
  }
  if (out.size() < 2)
    throw GridError("supersolution: reparameterized range leaves the archive");
  return out;
}

Field discrete_residual(const Trajectory& traj, int k) {
  if (k < 0 || k + 1 >= traj.size()) throw GridError("residual: index out of range");
  const auto& a = traj.snaps[k];
  const auto& b = traj.snaps[k + 1];
  const Grid& g = a.u.grid;
  double dt = b.t - a.t;
  Field log_u(g), log_ghost(g);
  for (int q = 0; q < g.size(); ++q) {
    log_u[q] = traj.mask.at(q) ? std::log(b.u[q]) : 0.0;
    log_ghost[q] = b.ghost[q] > 0.0 ? std::log(b.ghost[q]) : 0.0;
  }
  Field lap = laplacian(log_u, traj.mask, &log_ghost);
  Field res(g, 0.0);
  for (int q = 0; q < g.size(); ++q)
    if (traj.mask.at(q)) res[q] = (b.u[q] - a.u[q]) / dt - lap[q];
  return res;
}

void ChenBoundParams::validate() const {
  if (n < 2) throw GridError("chen: dimension must be >= 2");
  double two_over_n = 2.0 / n;
  if (!(delta > 0.0 && delta < two_over_n)) throw GridError("chen: delta out of range");
  if (!(r0 > 0.0)) throw GridError("chen: r0 must be positive");
  if (!(K > 0.0)) throw GridError("chen: K must be positive");
  if (!(C > 0.0)) throw GridError("chen: C must be positive");
  if (!(t1 < t2)) throw GridError("chen: need t1 < t2");
  double a_min = 2.0 + 24.0 * (n - 1) * t2 / (r0 * r0);
  if (!(A >= a_min)) throw GridError("chen: A below its admissible floor");
}

double chen_bound_rhs(const ChenBoundParams& p, double t) {
  p.validate();
  if (!(t >= p.t1 && t <= p.t2)) throw GridError("chen: t outside [t1, t2]");
  double first = -1.0 / ((2.0 / p.n - p.delta) * (t - p.t1) + 1.0 / p.K);
  double second = -p.C / (p.A * p.A * p.r0 * p.r0);
  return std::min(first, second);
}

double chen_tolerance(double h, double tau, double t) {
  return 10.0 * (h + tau / t);
}

VerificationReport check_chen_global(const FlowState& f, double hindsight_t,
                                     double tol, double inset) {
  f.validate();
  if (!(f.t > hindsight_t))
    throw GridError("chen check: state time must exceed the hindsight time");
  Field R = scalar_curvature(f);
  Mask band = interior_band(f.mask, inset);
  if (band.empty()) throw GridError("chen check: interior band is empty");
  double bound = 1.0 / (f.t - hindsight_t);
  double worst = std::numeric_limits<double>::infinity();
  int worst_cell = -1;
  for (int k = 0; k < f.u.grid.size(); ++k) {
    if (!band.at(k)) continue;
    double slack = R[k] + bound;
    if (slack < worst) {
      worst = slack;
      worst_cell = k;
    }
  }
  VerificationReport rep = VerificationReport::make(
      "chen-global", worst, tol, digest_of({f.t, hindsight_t, double(band.count())}));
  rep.add("t", f.t);
  rep.add("h", f.u.grid.h);
  if (!rep.passed() && worst_cell >= 0)
    rep.set_witness(worst_cell % f.u.grid.nx, worst_cell / f.u.grid.nx, f.t);
  return rep;
}

void save_trajectory(const std::string& dir, const Trajectory& traj) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  save_mask(dir + "/mask.mask", traj.mask);
  std::ofstream man(dir + "/manifest.txt");
  if (!man) throw GridError("trajectory: cannot write manifest");
  char name[64];
  for (int k = 0; k < traj.size(); ++k) {
    std::snprintf(name, sizeof name, "u_%06d.field", k);
    save_field(dir + "/" + name, traj.snaps[k].u);
    std::string uname = name;
    std::snprintf(name, sizeof name, "g_%06d.field", k);
    save_field(dir + "/" + name, traj.snaps[k].ghost);
    man << format_g17(traj.snaps[k].t) << "  " << uname << "  " << name << "\n";
  }
}

Trajectory load_trajectory(const std::string& dir) {
  Trajectory traj;
  traj.mask = load_mask(dir + "/mask.mask");
  std::ifstream man(dir + "/manifest.txt");
  if (!man) throw GridError("trajectory: cannot read manifest");
  double t;
  std::string uname, gname;
  while (man >> t >> uname >> gname) {
    Trajectory::Snapshot s;
    s.t = t;
    s.u = load_field(dir + "/" + uname);
    s.ghost = load_field(dir + "/" + gname);
    traj.snaps.push_back(std::move(s));
  }
  if (traj.snaps.empty()) throw GridError("trajectory: empty manifest");
  return traj;
}

}  // namespace stflow
