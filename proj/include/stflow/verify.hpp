#pragma once

#include <vector>

#include "stflow/grid.hpp"
#include "stflow/lfde.hpp"
#include "stflow/measures.hpp"
#include "stflow/report.hpp"
#include "stflow/spacetime.hpp"
#include "stflow/uniformize.hpp"

namespace stflow {

// Strictness gap for "strictly greater" hypotheses: ties at machine precision
// are treated as hypothesis failure, not as conclusion violations.
inline constexpr double kStrictGap = 1e-8;

// Length monotonicity along the flow: the curve's length at the later time is
// bounded by sqrt((t1 - hindsight)/(t0 - hindsight)) times its earlier length.
// margin = bound - measured, pass iff margin >= -tol_len; tol_len <= 0 selects
// a relative tolerance of 1% of the larger measured length. Requires
// hindsight < t0 <= t1 with both times inside the stored range; the curve must
// lie inside the mask (curve evaluation throws otherwise).
VerificationReport check_harnack(const Trajectory& traj, const Curve& curve,
                                 double t0, double t1, double hindsight_t,
                                 double tol_len = -1.0);

// Lower barrier by the complete hyperbolic factor: u >= 2 t H on interior
// cells. margin = min(u - 2 t H); pass iff margin >= -tol_schwarz * 2 t.
// The flow state and the factor must carry identical masks.
VerificationReport check_hyperbolic_lower(const FlowState& f,
                                          const HyperbolicFactor& H,
                                          double tol_schwarz);

// Order preservation between two stored flows on the same mask and time list.
// Hypothesis: upper - lower >= strict_gap at every stored time <= s.
// Conclusion: upper >= lower - tol at every stored time; margin = min over
// cells and stored times > s of (upper - lower), or over all stored times
// when none exceed s. Hypothesis failure yields NotApplicable with the
// violating cell, distinct from a failed conclusion.
VerificationReport check_comparison(const Trajectory& lower, const Trajectory& upper,
                                    double s, double tol = 0.0,
                                    double strict_gap = kStrictGap);

// Staged contradiction probe: a late-addition attempt (the complement cells)
// is split into perfect and scattered parts; the perfect part is charged with
// a finite mass, mollified, and flowed; the sweep compares the candidate flow
// against the parabolic rescalings of that reference flow and measures how
// the probe-ball volume grows with the rescaling parameter. A bounded
// candidate cannot dominate rescalings whose probe volume grows linearly —
// the emitted reports exhibit exactly where that fails.
struct RigidityOptions {
  std::vector<int> complement;     // flat cell indices of the attempted addition
  Adjacency adjacency = Adjacency::Four;
  double mass = 1.0;               // mass charged to the perfect part
  double sigma = 0.2;              // mollification width of the reference start
  double floor = kDefaultFloor;
  Vec2 probe_center{0.0, 0.0};     // must lie in a perfect-part cell when nonempty
  double probe_radius = 0.5;
  double t2 = 0.5;                 // probe time
  double s_time = 0.0;             // comparison hypothesis horizon (<= 0: first stored time)
  std::vector<double> lambdas{1.0, 4.0, 16.0, 64.0};
  double large_lambda = 16.0;      // volume inequality applies from here up
  double comparison_tol = 0.0;
  double slope_rel_tol = 0.2;      // slope must match mu(B)/2 within this fraction
  double max_tau = 1e-3;           // stepping bound for the reference flow
};

// Emits, in order: the perfect/scattered split, the measure stage, one
// comparison report per lambda, one volume report per lambda, and the
// least-squares slope report. Preconditions: the spacetime is expanding and
// continuous, and the candidate flows on its final slice.
std::vector<VerificationReport> rigidity_pipeline(const SpacetimeDomain& s,
                                                  const Trajectory& candidate,
                                                  const RigidityOptions& opt);

}  // namespace stflow
