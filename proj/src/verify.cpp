#include "stflow/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace stflow {

VerificationReport check_harnack(const Trajectory& traj, const Curve& curve,
                                 double t0, double t1, double hindsight_t,
                                 double tol_len) {
  if (traj.size() < 1) throw GridError("harnack: empty trajectory");
  if (!(hindsight_t < t0)) throw GridError("harnack: need hindsight < t0");
  if (!(t0 <= t1)) throw GridError("harnack: need t0 <= t1");
  if (t0 < traj.t_front() - 1e-12 || t1 > traj.t_back() + 1e-12)
    throw GridError("harnack: times outside the stored range");

  Field u0 = traj.sample(t0);
  Field u1 = traj.sample(t1);
  double len0 = curve_length(curve, u0, traj.mask);
  double len1 = curve_length(curve, u1, traj.mask);
  double factor = std::sqrt((t1 - hindsight_t) / (t0 - hindsight_t));
  double margin = factor * len0 - len1;
  double tol = tol_len > 0.0 ? tol_len : 0.01 * std::max(len0, len1);

  VerificationReport rep = VerificationReport::make(
      "harnack", margin, tol, digest_of({t0, t1, hindsight_t, len0, len1}));
  rep.add("len_t0", len0);
  rep.add("len_t1", len1);
  rep.add("ratio", len1 / len0);
  rep.add("bound_ratio", factor);
  rep.add("rel_gap", len1 / len0 / factor - 1.0);
  rep.add("h", traj.mask.grid.h);
  if (!rep.passed()) rep.set_witness(-1, -1, t1);
  return rep;
}

VerificationReport check_hyperbolic_lower(const FlowState& f,
                                          const HyperbolicFactor& H,
                                          double tol_schwarz) {
  f.validate();
  if (!f.mask.grid.same_layout(H.mask.grid) || f.mask.inside != H.mask.inside)
    throw GridError("hyperbolic lower: mask mismatch");
  if (!(tol_schwarz >= 0.0)) throw GridError("hyperbolic lower: negative tolerance");

  const Grid& g = f.mask.grid;
  auto cls = classify_cells(f.mask);
  double worst = std::numeric_limits<double>::infinity();
  int worst_cell = -1;
  for (int c = 0; c < g.size(); ++c) {
    if (cls[c] != CellClass::Interior) continue;
    double gap = f.u[c] - 2.0 * f.t * H.H[c];
    if (gap < worst) {
      worst = gap;
      worst_cell = c;
    }
  }
  if (worst_cell < 0) throw GridError("hyperbolic lower: no interior cells");
  VerificationReport rep = VerificationReport::make(
      "hyperbolic-lower", worst, tol_schwarz * 2.0 * f.t,
      digest_of({f.t, double(f.mask.count())}));
  rep.add("t", f.t);
  rep.add("h", g.h);
  if (!rep.passed())
    rep.set_witness(worst_cell % g.nx, worst_cell / g.nx, f.t);
  return rep;
}

VerificationReport check_comparison(const Trajectory& lower, const Trajectory& upper,
                                    double s, double tol, double strict_gap) {
  if (lower.size() < 1 || upper.size() < 1)
    throw GridError("comparison: empty trajectory");
  if (!lower.mask.grid.same_layout(upper.mask.grid) ||
      lower.mask.inside != upper.mask.inside)
    throw GridError("comparison: the flows live on different masks");
  if (lower.size() != upper.size())
    throw GridError("comparison: stored time lists differ in length");
  const Grid& g = lower.mask.grid;
  for (int k = 0; k < lower.size(); ++k) {
    double a = lower.snaps[k].t, b = upper.snaps[k].t;
    if (std::abs(a - b) > 1e-9 * std::max(1.0, std::abs(b)))
      throw GridError("comparison: stored time lists differ");
  }

  double hyp_min = std::numeric_limits<double>::infinity();
  int hyp_cell = -1;
  double hyp_t = 0.0;
  double concl_min = std::numeric_limits<double>::infinity();
  int concl_cell = -1;
  double concl_t = 0.0;
  int later = 0;
  for (int k = 0; k < lower.size(); ++k) {
    double t = upper.snaps[k].t;
    bool early = t <= s + 1e-12;
    if (!early) ++later;
    for (int c = 0; c < g.size(); ++c) {
      if (!lower.mask.at(c)) continue;
      double gap = upper.snaps[k].u[c] - lower.snaps[k].u[c];
      if (early) {
        if (gap < hyp_min) {
          hyp_min = gap;
          hyp_cell = c;
          hyp_t = t;
        }
      } else if (gap < concl_min) {
        concl_min = gap;
        concl_cell = c;
        concl_t = t;
      }
    }
  }

  VerificationReport rep;
  rep.check = "comparison";
  rep.inputs_digest = digest_of({s, double(lower.size()), double(lower.mask.count())});
  rep.tolerance = tol;
  if (hyp_cell >= 0 && hyp_min < strict_gap) {
    rep.verdict = VerificationReport::Verdict::NotApplicable;
    rep.margin = hyp_min;
    rep.add("hypothesis_gap", hyp_min);
    rep.set_witness(hyp_cell % g.nx, hyp_cell / g.nx, hyp_t);
    return rep;
  }
  if (later == 0) {
    // every stored time sits inside the hypothesis window
    concl_min = hyp_min;
    concl_cell = hyp_cell;
    concl_t = hyp_t;
  }
  rep.margin = concl_min;
  rep.verdict = concl_min >= -tol ? VerificationReport::Verdict::Pass
                                  : VerificationReport::Verdict::Fail;
  rep.add("hypothesis_gap", hyp_cell >= 0 ? hyp_min : strict_gap);
  rep.add("times_after_s", double(later));
  if (!rep.passed())
    rep.set_witness(concl_cell % g.nx, concl_cell / g.nx, concl_t);
  return rep;
}

namespace {

Trajectory rescaled_reference(const Trajectory& ref, const Trajectory& candidate,
                              double lambda) {
  Trajectory out;
  out.mask = candidate.mask;
  for (const auto& snap : candidate.snaps) {
    Trajectory::Snapshot r;
    r.t = snap.t;
    r.u = ref.sample(snap.t / lambda);
    r.ghost = ref.sample_ghost(snap.t / lambda);
    for (double& x : r.u.v) x *= lambda;
    for (double& x : r.ghost.v) x *= lambda;
    out.snaps.push_back(std::move(r));
  }
  return out;
}

}  // namespace

std::vector<VerificationReport> rigidity_pipeline(const SpacetimeDomain& s,
                                                  const Trajectory& candidate,
                                                  const RigidityOptions& opt) {
  if (!is_expanding(s)) throw GridError("rigidity: spacetime is not expanding");
  if (!is_continuous(s).continuous)
    throw GridError("rigidity: spacetime is not continuous");
  const Grid& g = s.grid;
  if (!candidate.mask.grid.same_layout(g) ||
      candidate.mask.inside != s.slices.back().inside)
    throw GridError("rigidity: candidate does not flow on the final slice");
  if (candidate.size() < 1) throw GridError("rigidity: empty candidate");
  if (!(opt.t2 > 0.0)) throw GridError("rigidity: probe time must be positive");
  if (opt.lambdas.empty()) throw GridError("rigidity: empty sweep");
  for (double lam : opt.lambdas)
    if (!(lam >= 1.0)) throw GridError("rigidity: sweep values must be >= 1");

  std::vector<VerificationReport> out;

  // stage: perfect/scattered split of the attempted addition
  CBDecomposition cb = cantor_bendixson(g, opt.complement, opt.adjacency);
  {
    VerificationReport rep = VerificationReport::make(
        "rigidity-cb-split", 0.0, 0.0,
        digest_of({double(opt.complement.size()), double(cb.perfect.size())}));
    rep.add("perfect", double(cb.perfect.size()));
    rep.add("scattered", double(cb.scattered.size()));
    out.push_back(rep);
  }

  // stage: measure on the perfect part
  double mu_ball = 0.0;
  DiscreteMeasure mu;
  bool have_measure = !cb.perfect.empty();
  if (have_measure) {
    mu = measure_on_perfect_set(g, cb.perfect, opt.mass);
    int pi = static_cast<int>(std::floor((opt.probe_center.x - g.origin.x) / g.h));
    int pj = static_cast<int>(std::floor((opt.probe_center.y - g.origin.y) / g.h));
    if (!g.contains(pi, pj) ||
        std::find(cb.perfect.begin(), cb.perfect.end(), g.index(pi, pj)) ==
            cb.perfect.end())
      throw GridError("rigidity: probe center must sit in a perfect-part cell");
    mu_ball = mu.ball_mass(opt.probe_center, opt.probe_radius);
    VerificationReport rep = VerificationReport::make(
        "rigidity-measure", 0.0, 0.0, digest_of({mu.total, mu_ball}));
    rep.add("total", mu.total);
    rep.add("mu_ball", mu_ball);
    rep.add("support_cells", double(cb.perfect.size()));
    out.push_back(rep);
  } else {
    VerificationReport rep =
        VerificationReport::make("rigidity-measure", 0.0, 0.0, digest_of({}));
    rep.add("vacuous", 1.0);
    out.push_back(rep);
  }

  double lam_max = *std::max_element(opt.lambdas.begin(), opt.lambdas.end());
  double s_time = opt.s_time > 0.0 ? opt.s_time : candidate.t_front();

  // reference flow: mollified measure start on the candidate's mask, or a
  // small static level when the perfect part is empty
  Trajectory ref;
  ref.mask = candidate.mask;
  if (have_measure) {
    Field u0 = mollify(mu, opt.sigma);
    for (double& x : u0.v) x += opt.floor;
    FlowState f0;
    f0.t = std::min(opt.t2, candidate.t_front()) / (2.0 * lam_max);
    f0.u = std::move(u0);
    f0.mask = candidate.mask;
    f0.boundary = BoundaryPolicy::dirichlet(opt.floor);
    f0.validate();
    std::vector<double> targets{f0.t};
    for (double lam : opt.lambdas) {
      for (const auto& snap : candidate.snaps) targets.push_back(snap.t / lam);
      targets.push_back(opt.t2 / lam);
    }
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end(),
                              [](double a, double b) { return b - a < 1e-12; }),
                  targets.end());
    while (!targets.empty() && targets.front() < f0.t) targets.erase(targets.begin());
    if (targets.empty() || std::abs(targets.front() - f0.t) > 1e-12)
      targets.insert(targets.begin(), f0.t);
    ref = run_flow(f0, targets, opt.max_tau);
  } else {
    double cand_min = std::numeric_limits<double>::infinity();
    for (int c = 0; c < g.size(); ++c)
      if (candidate.mask.at(c))
        cand_min = std::min(cand_min, candidate.snaps.front().u[c]);
    double level = cand_min / (2.0 * lam_max);
    for (const auto& snap : candidate.snaps) {
      Trajectory::Snapshot r;
      r.t = snap.t;
      r.u = Field(g, level);
      r.ghost = Field(g, level);
      ref.snaps.push_back(std::move(r));
    }
  }

  // stage: one comparison per sweep value (reference rescaled below, candidate above)
  for (double lam : opt.lambdas) {
    Trajectory ref_lam =
        have_measure ? rescaled_reference(ref, candidate, lam) : [&] {
          Trajectory t = ref;
          for (auto& snap : t.snaps) {
            for (double& x : snap.u.v) x *= lam;
            for (double& x : snap.ghost.v) x *= lam;
          }
          return t;
        }();
    VerificationReport rep =
        check_comparison(ref_lam, candidate, s_time, opt.comparison_tol);
    rep.check = "rigidity-comparison";
    rep.add("lambda", lam);
    out.push_back(rep);
  }

  // stage: probe-ball volume of the rescaled reference at the probe time
  Mask ball(g);
  for (int c = 0; c < g.size(); ++c)
    ball.inside[c] = (candidate.mask.at(c) &&
                      dist(g.center(c), opt.probe_center) <= opt.probe_radius)
                         ? 1
                         : 0;
  std::vector<double> fit_lams, fit_vols;
  for (double lam : opt.lambdas) {
    double vol;
    if (have_measure) {
      Field u = ref.sample(opt.t2 / lam);
      vol = lam * integrate(u, ball);
    } else {
      vol = lam * integrate(ref.snaps.front().u, ball);
    }
    double bound = 0.5 * lam * mu_ball;
    VerificationReport rep;
    rep.check = "rigidity-volume";
    rep.inputs_digest = digest_of({lam, vol, mu_ball});
    rep.margin = vol - bound;
    rep.tolerance = 0.0;
    if (!have_measure) {
      rep.verdict = VerificationReport::Verdict::Pass;
      rep.add("vacuous", 1.0);
    } else if (lam >= opt.large_lambda) {
      rep.verdict = rep.margin >= 0.0 ? VerificationReport::Verdict::Pass
                                      : VerificationReport::Verdict::Fail;
      fit_lams.push_back(lam);
      fit_vols.push_back(vol);
    } else {
      // the growth inequality only claims anything for large sweep values
      rep.verdict = VerificationReport::Verdict::NotApplicable;
      rep.add("below_large_lambda", 1.0);
    }
    rep.add("lambda", lam);
    rep.add("volume", vol);
    rep.add("mu_ball", mu_ball);
    rep.add("bound", bound);
    if (rep.verdict == VerificationReport::Verdict::Fail)
      rep.set_witness(-1, -1, opt.t2);
    out.push_back(rep);
  }

  // stage: least-squares volume growth rate across the large sweep values
  {
    VerificationReport rep;
    rep.check = "rigidity-volume-slope";
    rep.tolerance = 0.0;
    if (!have_measure || mu_ball == 0.0) {
      rep.verdict = VerificationReport::Verdict::Pass;
      rep.margin = 0.0;
      rep.add("vacuous", 1.0);
      rep.inputs_digest = digest_of({});
    } else if (fit_lams.size() < 2) {
      rep.verdict = VerificationReport::Verdict::NotApplicable;
      rep.margin = 0.0;
      rep.add("too_few_points", double(fit_lams.size()));
      rep.inputs_digest = digest_of({double(fit_lams.size())});
    } else {
      double lbar = 0.0, vbar = 0.0;
      for (size_t i = 0; i < fit_lams.size(); ++i) {
        lbar += fit_lams[i];
        vbar += fit_vols[i];
      }
      lbar /= fit_lams.size();
      vbar /= fit_vols.size();
      double num = 0.0, den = 0.0;
      for (size_t i = 0; i < fit_lams.size(); ++i) {
        num += (fit_lams[i] - lbar) * (fit_vols[i] - vbar);
        den += (fit_lams[i] - lbar) * (fit_lams[i] - lbar);
      }
      double slope = num / den;
      double target = 0.5 * mu_ball;
      rep.margin = opt.slope_rel_tol * target - std::abs(slope - target);
      rep.verdict = rep.margin >= 0.0 ? VerificationReport::Verdict::Pass
                                      : VerificationReport::Verdict::Fail;
      rep.add("slope", slope);
      rep.add("target", target);
      rep.add("points", double(fit_lams.size()));
      rep.inputs_digest = digest_of({slope, target});
      if (!rep.passed()) rep.set_witness(-1, -1, opt.t2);
    }
    out.push_back(rep);
  }

  return out;
}

}  // namespace stflow
