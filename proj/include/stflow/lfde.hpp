#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stflow/grid.hpp"
#include "stflow/report.hpp"

namespace stflow {

// Ghost data for stencils that leave the domain mask. The conformal factors
// of interest blow up toward a complete boundary, so the values injected
// there characterize the flow; they are supplied by the caller as a policy.
struct BoundaryPolicy {
  enum class Kind { DirichletConstant, BarrierHyperbolic, Frozen };

  Kind kind = Kind::DirichletConstant;
  double value = 1.0;  // DirichletConstant ghost value
  Field barrier;       // BarrierHyperbolic: ghost u = 2 t * barrier(cell)
  Field trace;         // Frozen: ghost u = trace(cell), time-independent

  static BoundaryPolicy dirichlet(double v);
  static BoundaryPolicy barrier_hyperbolic(Field H);
  static BoundaryPolicy frozen(Field trace);

  // Full-grid ghost values of u at time t (all strictly positive).
  Field ghost_u(const Grid& g, double t) const;
};

// Conformal factor u(.,t) on a masked region: the metric is u |dz|^2.
struct FlowState {
  double t = 0.0;
  Field u;
  Mask mask;
  BoundaryPolicy boundary;

  void validate() const;  // u finite and > 0 on mask, t > 0
};

struct StepReport {
  bool converged = false;
  int newton_iterations = 0;
  double residual = 0.0;       // scaled max-norm of the implicit residual
  int cg_iterations_total = 0;
};

// Newton tolerance for implicit steps: max-norm of the residual measured
// against the local solution scale, |F_c| / (1 + |u_c|). Complete-boundary
// factors reach ~1e9 where a raw absolute 1e-10 is finer than double-precision
// spacing, so the scaled norm is the attainable equivalent (identical to the
// absolute norm wherever u = O(1)).
inline constexpr double kTolNewton = 1e-10;
inline constexpr int kMaxNewtonIterations = 60;

// One implicit Euler step of du/dt = lap(log u): solves
//   (u+ - u)/tau = lap(log u+)
// on the mask with ghost values from the boundary policy at time t + tau,
// via damped Newton with a positivity line search. tau = 0 returns the state
// unchanged. Throws GridError if Newton fails (report carries the residual).
FlowState step_implicit(const FlowState& f, double tau, StepReport* report = nullptr);

// R = -lap(log u)/u on mask cells, ghosts from the boundary policy at f.t.
// Outside cells are zero.
Field scalar_curvature(const FlowState& f);

// u' = lambda u at t' = lambda t.
FlowState rescale_parabolic(const FlowState& f, double lambda);

// Stored flow: one snapshot per time, each carrying the ghost values that were
// in force, so curvature and residuals are reproducible from the archive.
struct Trajectory {
  Mask mask;
  struct Snapshot {
    double t = 0.0;
    Field u;
    Field ghost;
  };
  std::vector<Snapshot> snaps;

  int size() const { return static_cast<int>(snaps.size()); }
  double t_front() const { return snaps.front().t; }
  double t_back() const { return snaps.back().t; }
  // Linear interpolation in time (exact at stored times).
  Field sample(double t) const;
  Field sample_ghost(double t) const;
  int nearest_index(double t) const;
};

// Runs the implicit stepper from an initial state through the given times
// (strictly increasing, first >= f.t; the initial state is stored as-is when
// times starts at f.t). Sub-steps so no single step exceeds max_tau.
Trajectory run_flow(const FlowState& f, const std::vector<double>& times,
                    double max_tau, StepReport* last_report = nullptr);

// v_eps(z, t) = (1 + eps t) v(z, s),  s = log(1 + eps t)/eps.
// Mapped onto the trajectory's own time list where s lands inside the stored
// range; ghosts transform the same way. The result is a strict supersolution
// whose flow residual equals eps * v(z, s) > 0.
Trajectory supersolution_transform(const Trajectory& traj, double eps);

// Implicit-form discrete flow residual between consecutive snapshots k, k+1:
//   (u_{k+1} - u_k)/(t_{k+1} - t_k) - lap(log u_{k+1})
// with the stored ghosts of snapshot k+1.
Field discrete_residual(const Trajectory& traj, int k);

// Parameters of the local curvature lower bound
//   R >= min{ -1/((2/n - delta)(t - t1) + 1/K), -C/(A^2 r0^2) }.
// The interior constant C is not pinned down by theory; the caller supplies it.
struct ChenBoundParams {
  int n = 2;
  double delta = 0.5;  // in (0, 2/n)
  double r0 = 1.0;
  double K = 1.0;
  double A = 2.0;      // must satisfy A >= 2 + 24 (n-1) r0^-2 t2
  double C = 1.0;
  double t1 = 0.0;
  double t2 = 1.0;

  void validate() const;
};

double chen_bound_rhs(const ChenBoundParams& p, double t);

// tol for the global curvature bound checks: 10 (h + tau/t).
double chen_tolerance(double h, double tau, double t);

// Global lower bound R >= -1/(t - hindsight) in two dimensions: reports the
// minimum of R + 1/(t - hindsight) over interior cells at least `inset` away
// from the mask boundary, pass iff >= -tol.
VerificationReport check_chen_global(const FlowState& f, double hindsight_t,
                                     double tol, double inset = 0.0);

// Trajectory archive: directory of FIELD snapshots plus a manifest with one
// "t_k  u_k.field  g_k.field" line per step.
void save_trajectory(const std::string& dir, const Trajectory& traj);
Trajectory load_trajectory(const std::string& dir);

}  // namespace stflow
