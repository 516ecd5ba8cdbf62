#pragma once

#include <functional>
#include <string>
#include <vector>

#include "stflow/grid.hpp"
#include "stflow/lfde.hpp"
#include "stflow/report.hpp"

namespace stflow {

// Non-atomic measure surrogate: a nonnegative density on the grid. The
// non-atomicity guard rejects densities where a single cell carries more than
// atom_limit of the total mass.
struct DiscreteMeasure {
  Grid grid;
  Field density;          // >= 0 everywhere
  double total = 0.0;     // = integrate(density) within 1e-12 relative
  double atom_limit = 0.05;

  void validate() const;
  // Mass of the closed rasterized ball (centers with |c - p| <= r).
  double ball_mass(Vec2 center, double r) const;
  Mask support() const;  // cells with positive density
};

DiscreteMeasure measure_from_density(Field density, double atom_limit = 0.05);

// Uniform mass on a cell set: density = mass/(count h^2) on the set.
DiscreteMeasure measure_on_perfect_set(const Grid& g, const std::vector<int>& cells,
                                       double mass, double atom_limit = 0.05);

// Truncated normalized Gaussian smoothing of the density, on the full grid.
// Requires sigma >= h; the kernel is normalized to unit discrete mass.
Field mollify(const DiscreteMeasure& mu, double sigma);

inline constexpr double kDefaultFloor = 1e-6;

// Mollified positive start: u0 = (Gaussian_sigma * density) + floor at t_init.
// Requires sigma >= h. The kernel is normalized to unit discrete mass, so the
// start satisfies integrate(u0) = total + floor * box area up to edge leakage.
FlowState weak_start(const DiscreteMeasure& mu, double sigma, double t_init,
                     double floor = kDefaultFloor,
                     BoundaryPolicy boundary = BoundaryPolicy::dirichlet(kDefaultFloor));

// Weak-start consistency: |integral of f against the flow area at the earliest
// stored time - integral of f d(mu)| <= tol for each test function.
struct TestFunction {
  std::string name;
  Field values;
  double lipschitz = 0.0;  // scale used in the tolerance
};

VerificationReport check_weak_convergence(const Trajectory& traj,
                                          const DiscreteMeasure& mu,
                                          const std::vector<TestFunction>& fs,
                                          double sigma, double floor);

// C = 4 pi (1 + (r/R)^2) / (1 - (r/R)^2): the constant in the volume decay
// inequality mu(B_r) <= Vol_{g(t)}(B_R) + C t.
double volume_decay_constant(double r, double R);

// Checks the inequality at every stored time in (0, min(T_traj, mu(B_r)/4pi)],
// with slack tol_vol = C (sigma + h). Balls are closed rasterized balls.
VerificationReport check_volume_decay(const Trajectory& traj, const DiscreteMeasure& mu,
                                      double r, double R, Vec2 center, double sigma);

// Smoothing probe: measured C0(t) = sup_{B_r} u(t) * r^2 / t over stored times
// with t > mu(closed B_{2r})/(2 pi). Pass iff the measured values stay below
// C0_cap and their spread max/min stays below the stability ratio.
VerificationReport check_l1_linf(const Trajectory& traj, const DiscreteMeasure& mu,
                                 double r, Vec2 center, double C0_cap = 100.0,
                                 double stability_ratio = 10.0);

struct BlowupResult {
  Field ghat;                        // u(t_min)/(2 t_min) on the report region
  Mask region;                       // where the ledgers and curvature apply
  std::vector<double> ledger_time;   // per consecutive-time pair: max positive
                                     // relative increase of u/t (should be ~0)
  std::vector<double> ledger_scale;  // per m-doubling: max positive relative
                                     // decrease of m u(t/m) (should be ~0)
  double curvature_min = 0.0;        // K of ghat over the region
  double curvature_max = 0.0;
  bool monotone = true;
};

// Early-time limit extraction: on cells >= buffer_cells (L-infinity) from the
// support and >= inset from the mask boundary, verifies that u/t is
// nonincreasing in t and m u(t/m) is nondecreasing in m across the stored
// ladder (within ledger_tol, relative), and reports the Gaussian curvature of
// ghat = u(t_min)/(2 t_min) computed with the stored ghosts.
BlowupResult initial_time_blowup(const Trajectory& traj, const Mask& support,
                                 int buffer_cells = 5, double inset = 0.0,
                                 double ledger_tol = 1e-6);

}  // namespace stflow
