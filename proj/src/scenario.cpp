#include "stflow/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stflow/io.hpp"
#include "stflow/verify.hpp"

namespace stflow {

Trajectory run_flow_adaptive(const FlowState& f0, const std::vector<double>& times,
                             double tau, int max_halvings, double* tau_used) {
  double cur = tau;
  for (int attempt = 0;; ++attempt) {
    try {
      Trajectory t = run_flow(f0, times, cur);
      if (tau_used) *tau_used = cur;
      return t;
    } catch (const GridError& e) {
      if (attempt >= max_halvings)
        throw SolverFailure(std::string("stepper failed after halving the step ") +
                            std::to_string(max_halvings) + " times: " + e.what());
      cur *= 0.5;
    }
  }
}

bool all_checks_pass(const std::vector<VerificationReport>& reports) {
  for (const auto& r : reports)
    if (r.verdict == VerificationReport::Verdict::Fail) return false;
  return true;
}

namespace {

Grid grid_from(const ExperimentConfig& cfg) {
  double half = cfg.get_num("grid.half_width");
  double h = cfg.get_num("grid.h");
  if (!(half > 0.0) || !(h > 0.0))
    throw ConfigError("config: grid.half_width and grid.h must be positive");
  return Grid::centered_box(half, h);
}

std::vector<double> time_ladder(const ExperimentConfig& cfg) {
  std::vector<double> times;
  if (cfg.has("time.times")) {
    times = cfg.get_list("time.times");
  } else {
    double t0 = cfg.get_num("time.t_init");
    double t1 = cfg.get_num("time.t_final");
    double tau = cfg.get_num("time.tau");
    int stride = cfg.get_int("time.stride", 1);
    if (!(tau > 0.0) || stride < 1)
      throw ConfigError("config: time.tau must be positive, stride >= 1");
    if (!(t0 > 0.0 && t1 > t0))
      throw ConfigError("config: need 0 < t_init < t_final");
    for (double t = t0; t < t1 - 1e-12; t += stride * tau) times.push_back(t);
    times.push_back(t1);
  }
  for (size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] > 0.0))
      throw ConfigError("config: ladder times must be positive");
    if (k > 0 && !(times[k] > times[k - 1]))
      throw ConfigError("config: ladder times must be strictly increasing");
  }
  return times;
}

int cell_of_point(const Grid& g, Vec2 p) {
  int i = static_cast<int>(std::floor((p.x - g.origin.x) / g.h));
  int j = static_cast<int>(std::floor((p.y - g.origin.y) / g.h));
  if (!g.contains(i, j)) throw ConfigError("config: point outside the grid");
  return g.index(i, j);
}

double punctured_factor_value(Vec2 w, double a) {
  double r = norm(w);
  if (r < 1e-14) return 1e12;
  double l = std::log(r / a);
  if (std::abs(l) < 1e-14) return 1e12;
  return 1.0 / (r * r * l * l);
}

struct DomainSpec {
  std::string kind;
  Vec2 center{0.0, 0.0};
  double radius = 1.0;
  double growth_rate = 1.0;
  double fill_time = 0.0;
  double r_inner = 0.0, r_outer = 0.0;
  double half = 0.0;
  std::string file;

  bool time_varying() const {
    return kind == "growing-disk" || kind == "punctured-disk";
  }
};

DomainSpec domain_spec(const ExperimentConfig& cfg) {
  DomainSpec d;
  d.kind = cfg.get_str("domain.kind");
  d.center = {cfg.get_num("domain.center_x", 0.0), cfg.get_num("domain.center_y", 0.0)};
  if (d.kind == "disk" || d.kind == "growing-disk" || d.kind == "punctured-disk") {
    d.radius = cfg.get_num("domain.radius");
    if (!(d.radius > 0.0)) throw ConfigError("config: domain.radius must be positive");
  }
  if (d.kind == "growing-disk") d.growth_rate = cfg.get_num("domain.growth_rate", 1.0);
  if (d.kind == "punctured-disk") d.fill_time = cfg.get_num("domain.fill_time");
  if (d.kind == "annulus") {
    d.r_inner = cfg.get_num("domain.r_inner");
    d.r_outer = cfg.get_num("domain.r_outer");
    if (!(0.0 < d.r_inner && d.r_inner < d.r_outer))
      throw ConfigError("config: need 0 < r_inner < r_outer");
  }
  if (d.kind == "square") {
    d.half = cfg.get_num("domain.half");
    if (!(d.half > 0.0)) throw ConfigError("config: domain.half must be positive");
  }
  if (d.kind == "file") {
    d.file = cfg.path("domain.file");
    if (!std::filesystem::exists(d.file))
      throw ConfigError("config: domain file not found: " + d.file);
  }
  return d;
}

Mask mask_for(const DomainSpec& d, const Grid& g, double t) {
  if (d.kind == "disk") return raster_disk(g, d.center, d.radius);
  if (d.kind == "growing-disk")
    return raster_disk(g, d.center, d.radius + d.growth_rate * t);
  if (d.kind == "punctured-disk") {
    Mask m = raster_disk(g, d.center, d.radius);
    if (t < d.fill_time) m.inside[cell_of_point(g, d.center)] = 0;
    return m;
  }
  if (d.kind == "annulus")
    return raster(g, [&](Vec2 p) {
      double r = dist(p, d.center);
      return r > d.r_inner && r < d.r_outer;
    });
  if (d.kind == "square")
    return raster(g, [&](Vec2 p) {
      return std::max(std::abs(p.x - d.center.x), std::abs(p.y - d.center.y)) <
             d.half;
    });
  if (d.kind == "box") {
    Mask m(g, true);
    for (int i = 0; i < g.nx; ++i) {
      m.set(i, 0, false);
      m.set(i, g.ny - 1, false);
    }
    for (int j = 0; j < g.ny; ++j) {
      m.set(0, j, false);
      m.set(g.nx - 1, j, false);
    }
    return m;
  }
  if (d.kind == "file") return load_mask(d.file);
  throw ConfigError("config: unknown domain.kind '" + d.kind + "'");
}

// Complete factor of the slice: closed forms for the disk family, a swept
// Liouville solve otherwise (off-mask cells filled at the solve's own ghost
// level so the field can serve as a barrier).
HyperbolicFactor factor_for(const DomainSpec& d, const Grid& g, const Mask& m,
                            double t) {
  if (d.kind == "disk" || d.kind == "box" ||
      (d.kind == "punctured-disk" && !(t < d.fill_time)) ||
      d.kind == "growing-disk") {
    double radius = d.kind == "growing-disk" ? d.radius + d.growth_rate * t : d.radius;
    if (d.kind == "box") {
      HyperbolicFactor hf = solve_liouville_swept(m).factor;
      double ghost = std::exp(2.0 * hf.phi_b);
      for (int c = 0; c < g.size(); ++c)
        if (!m.at(c)) hf.H[c] = ghost;
      return hf;
    }
    HyperbolicFactor hf = hyperbolic_disk(g, d.center, radius);
    hf.mask = m;
    return hf;
  }
  if (d.kind == "punctured-disk") {
    HyperbolicFactor hf;
    hf.mask = m;
    hf.H = map_field(
        g, [&](Vec2 p) { return punctured_factor_value(p - d.center, d.radius); });
    return hf;
  }
  HyperbolicFactor hf = solve_liouville_swept(m).factor;
  double ghost = std::exp(2.0 * hf.phi_b);
  for (int c = 0; c < g.size(); ++c)
    if (!m.at(c)) hf.H[c] = ghost;
  return hf;
}

std::vector<std::string> check_list(const ExperimentConfig& cfg) {
  std::vector<std::string> out;
  std::string raw = cfg.get_str("checks.list", "");
  for (char& c : raw)
    if (c == ',') c = ' ';
  std::istringstream is(raw);
  std::string name;
  while (is >> name) out.push_back(name);
  return out;
}

FlowState final_state(const Trajectory& traj) {
  const auto& snap = traj.snaps.back();
  FlowState f;
  f.t = snap.t;
  f.u = snap.u;
  f.mask = traj.mask;
  f.boundary = BoundaryPolicy::frozen(snap.ghost);
  return f;
}

}  // namespace

ScenarioArtifacts run_experiment(const ExperimentConfig& cfg) {
  ScenarioArtifacts out;
  out.scenario = cfg.get_str("scenario", "unnamed");
  out.expected_fail = cfg.get_bool("checks.expected_fail", false);

  Grid g = grid_from(cfg);
  DomainSpec dom = domain_spec(cfg);
  std::vector<double> times = time_ladder(cfg);
  std::vector<std::string> checks = check_list(cfg);

  auto needs = [&](std::initializer_list<const char*> names) {
    for (const char* n : names)
      if (std::find(checks.begin(), checks.end(), n) != checks.end()) return true;
    return false;
  };

  bool want_spacetime = dom.time_varying() || needs({"continuity", "properness"});
  if (want_spacetime) {
    double T = cfg.get_num("time.T", times.back() * 1.05);
    if (!(T > times.back()))
      throw ConfigError("config: time.T must exceed the last ladder time");
    std::vector<Mask> slices;
    slices.reserve(times.size());
    for (double t : times) slices.push_back(mask_for(dom, g, t));
    out.spacetime.emplace(g, T, times, std::move(slices));
  }

  // flow construction
  double tau_used = cfg.get_num("time.tau", 0.0);
  if (cfg.has("flow.kind")) {
    if (dom.time_varying())
      throw ConfigError("config: flows require a static domain");
    Mask m = mask_for(dom, g, times.front());
    out.domain = m;
    std::string kind = cfg.get_str("flow.kind");
    FlowState f0;
    f0.t = times.front();
    f0.mask = m;
    if (kind == "big-bang") {
      HyperbolicFactor hf = factor_for(dom, g, m, times.front());
      f0.u = Field(g, 0.0);
      for (int c = 0; c < g.size(); ++c)
        if (m.at(c)) f0.u[c] = 2.0 * f0.t * hf.H[c];
      f0.boundary = BoundaryPolicy::barrier_hyperbolic(hf.H);
    } else if (kind == "flat") {
      double level = cfg.get_num("flow.level", 1.0);
      if (!(level > 0.0)) throw ConfigError("config: flow.level must be positive");
      f0.u = Field(g, level);
      f0.boundary = BoundaryPolicy::dirichlet(level);
    } else if (kind == "mollified-measure") {
      std::string mpath = cfg.path("flow.measure");
      if (!std::filesystem::exists(mpath))
        throw ConfigError("config: measure file not found: " + mpath);
      DiscreteMeasure mu = load_measure(mpath);
      if (!mu.grid.same_layout(g))
        throw ConfigError("config: measure grid differs from the experiment grid");
      double sigma = cfg.get_num("flow.sigma", 2.0 * g.h);
      double floor = cfg.get_num("flow.floor", kDefaultFloor);
      Field u0 = mollify(mu, sigma);
      for (double& x : u0.v) x += floor;
      f0.u = std::move(u0);
      f0.boundary = BoundaryPolicy::dirichlet(floor);
      out.measure = std::move(mu);
    } else if (kind == "file") {
      std::string fpath = cfg.path("flow.file");
      if (!std::filesystem::exists(fpath))
        throw ConfigError("config: flow file not found: " + fpath);
      f0.u = load_field(fpath);
      std::string btype = cfg.get_str("flow.boundary", "dirichlet");
      if (btype == "dirichlet")
        f0.boundary = BoundaryPolicy::dirichlet(cfg.get_num("flow.boundary_value", 1.0));
      else if (btype == "frozen")
        f0.boundary = BoundaryPolicy::frozen(load_field(cfg.path("flow.boundary_file")));
      else if (btype == "barrier")
        f0.boundary =
            BoundaryPolicy::barrier_hyperbolic(load_field(cfg.path("flow.boundary_file")));
      else
        throw ConfigError("config: unknown flow.boundary '" + btype + "'");
    } else {
      throw ConfigError("config: unknown flow.kind '" + kind + "'");
    }
    double tau = cfg.get_num("time.tau");
    f0.validate();
    out.trajectory = run_flow_adaptive(f0, times, tau, 20, &tau_used);
  }

  if (!out.measure && cfg.has("checks.measure")) {
    std::string mpath = cfg.path("checks.measure");
    if (!std::filesystem::exists(mpath))
      throw ConfigError("config: measure file not found: " + mpath);
    out.measure = load_measure(mpath);
  }

  // checks
  for (const std::string& name : checks) {
    VerificationReport rep;
    if (name == "continuity") {
      if (!out.spacetime) throw ConfigError("config: continuity needs a spacetime");
      ContinuityResult cr = is_continuous(*out.spacetime);
      rep = VerificationReport::make("continuity",
                                     cr.continuous ? 0.0 : -double(cr.violations.size()),
                                     0.0, digest_of({double(out.spacetime->layers())}));
      rep.add("violations", double(cr.violations.size()));
      if (!cr.violations.empty()) {
        auto [c, k] = cr.violations.front();
        rep.set_witness(c % g.nx, c / g.nx, out.spacetime->times[k]);
      }
    } else if (name == "properness") {
      if (!out.spacetime) throw ConfigError("config: properness needs a spacetime");
      double level = cfg.get_num("checks.level", 64.0);
      double span = out.spacetime->times.back() - out.spacetime->times.front();
      double eps = cfg.get_num("checks.eps", span / 4.0);
      std::vector<Field> Hs;
      for (int k = 0; k < out.spacetime->layers(); ++k)
        Hs.push_back(
            factor_for(dom, g, out.spacetime->slices[k], out.spacetime->times[k]).H);
      PropernessResult pr = parabolic_properness(*out.spacetime, Hs, eps, level);
      rep = VerificationReport::make("parabolic-properness",
                                     pr.proper ? 0.0 : -double(pr.witnesses.size()),
                                     0.0, digest_of({level, eps}));
      rep.add("level", level);
      rep.add("eps", eps);
      rep.add("witnesses", double(pr.witnesses.size()));
      if (!pr.witnesses.empty()) {
        auto [c, k] = pr.witnesses.front();
        rep.set_witness(c % g.nx, c / g.nx, out.spacetime->times[k]);
      }
    } else if (name == "chen-global") {
      if (!out.trajectory) throw ConfigError("config: chen-global needs a flow");
      FlowState f = final_state(*out.trajectory);
      double hind = cfg.get_num("checks.hindsight", 0.0);
      double inset = cfg.get_num("checks.inset", 0.1);
      double tol = cfg.has("checks.chen_tol")
                       ? cfg.get_num("checks.chen_tol")
                       : chen_tolerance(g.h, tau_used, f.t);
      if (!(tol > 0.0)) throw ConfigError("config: chen tolerance must be positive");
      rep = check_chen_global(f, hind, tol, inset);
    } else if (name == "harnack") {
      if (!out.trajectory) throw ConfigError("config: harnack needs a flow");
      Curve curve = Curve::segment(
          {cfg.get_num("checks.x0"), cfg.get_num("checks.y0")},
          {cfg.get_num("checks.x1"), cfg.get_num("checks.y1")});
      rep = check_harnack(*out.trajectory, curve, cfg.get_num("checks.t0"),
                          cfg.get_num("checks.t1"),
                          cfg.get_num("checks.hindsight", 0.0),
                          cfg.get_num("checks.tol_len", -1.0));
    } else if (name == "hyperbolic-lower") {
      if (!out.trajectory) throw ConfigError("config: hyperbolic-lower needs a flow");
      FlowState f = final_state(*out.trajectory);
      HyperbolicFactor hf = factor_for(dom, g, f.mask, f.t);
      double tol = cfg.get_num("checks.tol_schwarz", 0.05);
      if (!(tol > 0.0)) throw ConfigError("config: tol_schwarz must be positive");
      rep = check_hyperbolic_lower(f, hf, tol);
    } else if (name == "volume-decay") {
      if (!out.trajectory || !out.measure)
        throw ConfigError("config: volume-decay needs a flow and a measure");
      rep = check_volume_decay(
          *out.trajectory, *out.measure, cfg.get_num("checks.r"),
          cfg.get_num("checks.R"),
          {cfg.get_num("checks.ball_x", 0.0), cfg.get_num("checks.ball_y", 0.0)},
          cfg.get_num("flow.sigma", 2.0 * g.h));
    } else if (name == "l1-linf") {
      if (!out.trajectory || !out.measure)
        throw ConfigError("config: l1-linf needs a flow and a measure");
      rep = check_l1_linf(
          *out.trajectory, *out.measure, cfg.get_num("checks.r"),
          {cfg.get_num("checks.ball_x", 0.0), cfg.get_num("checks.ball_y", 0.0)},
          cfg.get_num("checks.cap", 100.0), cfg.get_num("checks.stability", 10.0));
    } else {
      throw ConfigError("config: unknown check '" + name + "'");
    }
    if (cfg.has("checks.seed")) rep.add("seed", cfg.get_num("checks.seed"));
    out.reports.push_back(std::move(rep));
  }

  return out;
}

std::string write_artifacts(const ScenarioArtifacts& a, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  if (a.trajectory) {
    save_trajectory((fs::path(out_dir) / "traj").string(), *a.trajectory);
    save_mask((fs::path(out_dir) / "mask.mask").string(), a.domain);
  }
  if (a.spacetime)
    save_spacetime((fs::path(out_dir) / "spacetime.st").string(), *a.spacetime);
  if (a.measure)
    save_measure((fs::path(out_dir) / "measure.measure").string(), *a.measure);
  std::string report_path = (fs::path(out_dir) / "reports.txt").string();
  save_reports(report_path, a.reports);

  std::ofstream sum(fs::path(out_dir) / "summary.txt");
  sum << "scenario: " << a.scenario << '\n';
  for (const auto& r : a.reports) {
    const char* v = r.verdict == VerificationReport::Verdict::Pass ? "PASS"
                    : r.verdict == VerificationReport::Verdict::Fail
                        ? "FAIL"
                        : "NOT-APPLICABLE";
    sum << r.check << ": " << v << " margin=" << format_g17(r.margin)
        << " tolerance=" << format_g17(r.tolerance);
    if (r.witness)
      sum << " witness=(" << r.witness->i << ',' << r.witness->j << ','
          << format_g17(r.witness->t) << ')';
    sum << '\n';
  }
  return report_path;
}

}  // namespace stflow
