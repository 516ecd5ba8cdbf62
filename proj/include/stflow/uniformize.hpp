#pragma once

#include <vector>

#include "stflow/grid.hpp"
#include "stflow/report.hpp"
#include "stflow/spacetime.hpp"

namespace stflow {

// Conformal factor of the complete curvature -1 metric of a planar region,
// either a closed-form model factor or a solved one (with the solve residual
// and the boundary value it was run at).
struct HyperbolicFactor {
  enum class Provenance { ClosedForm, Solved };

  Field H;          // positive on the mask; closed forms also fill the rest of
                    // the grid wherever the formula is defined (barrier use)
  Mask mask;
  Provenance provenance = Provenance::ClosedForm;
  double residual = 0.0;  // solved: final residual max-norm
  double phi_b = 0.0;     // solved: Dirichlet boundary value of phi = log(H)/2
  int newton_iterations = 0;
};

inline constexpr double kTolLiouville = 1e-9;

// Poincare factor of the disk of the given radius: H = 4 r^2/(r^2 - |z-c|^2)^2.
// The field carries the formula on the whole grid (it is positive off the
// circle), the mask is the strict-inside rasterization.
HyperbolicFactor hyperbolic_disk(const Grid& g, Vec2 center, double radius);

// Cusp factor about b: H = 1/(|z-b|^2 (-log(2|z-b|))^2) on 0 < |z-b| < 1/2,
// where the logarithm's sign makes the formula positive. The mask covers
// exactly that punctured region. evaluate_cusp checks the domain and throws
// outside it.
HyperbolicFactor hyperbolic_punctured_ball(const Grid& g, Vec2 b);
double evaluate_cusp(Vec2 z, Vec2 b);

// Damped Newton solve of lap(phi) = e^{2 phi} (phi = log(H)/2, curvature -1)
// with Dirichlet ghost value phi_b, residual max-norm <= tol. init, when
// given, seeds the iteration on the mask.
HyperbolicFactor solve_liouville(const Mask& m, double phi_b,
                                 double tol = kTolLiouville,
                                 const Field* init = nullptr);

struct SweepResult {
  HyperbolicFactor factor;        // solution at the largest boundary value
  std::vector<double> phi_values;
  // max relative change between consecutive sweep solutions on the interior
  // band (cells >= band_width from the boundary). The discrete exhaustion has
  // no finite limit (interior values keep creeping up, iterated-log slowly, as
  // the boundary value grows), so the certificate asks the changes to be
  // either already tiny or contracting geometrically along the ladder.
  std::vector<double> step_changes;
  bool converged = false;
};

// Monotone sweep of boundary values approximating the complete factor
// (boundary blow-up truncated at increasing finite heights). band_width is the
// clearance used for the convergence comparison.
SweepResult solve_liouville_swept(const Mask& m,
                                  const std::vector<double>& phi_bs = {3.0, 5.0, 7.0},
                                  double band_width = -1.0 /* default 3h */);

// Inclusion A within B forces H_A >= H_B on A: pass iff H_A - H_B >= -tol
// cellwise on A's interior cells, with tol = 5 h * local gradient scale.
VerificationReport schwarz_compare(const HyperbolicFactor& inner,
                                   const HyperbolicFactor& outer);

struct PropernessResult {
  bool proper = true;
  std::vector<std::pair<int, int>> witnesses;  // (flat cell, time index)
};

// Discrete surrogate of "sublevel sets of H on interior time bands are
// compactly contained in the spacetime": every (cell, k) with t_k in
// (t_0 + eps, t_K - eps) and H_k <= level must keep a one-cell buffer inside
// slice k and persist into the temporally adjacent slices.
PropernessResult parabolic_properness(const SpacetimeDomain& s,
                                      const std::vector<Field>& H_per_slice,
                                      double eps, double level);

}  // namespace stflow
