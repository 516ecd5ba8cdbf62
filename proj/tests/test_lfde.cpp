#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "stflow/grid.hpp"
#include "stflow/lfde.hpp"
#include "stflow/uniformize.hpp"

using namespace stflow;

namespace {

// Disk factor H = 4 r^2/(r^2 - |z|^2)^2 on the whole grid (positive also just
// outside the circle, which is what barrier ghosts read).
Field disk_factor(const Grid& g, double radius) {
  return map_field(g, [radius](Vec2 p) {
    double d = radius * radius - (p.x * p.x + p.y * p.y);
    return 4.0 * radius * radius / (d * d);
  });
}

FlowState bigbang_state(const Grid& g, const Mask& m, const Field& H, double t) {
  FlowState f;
  f.t = t;
  f.mask = m;
  f.u = Field(g, 0.0);
  for (int k = 0; k < g.size(); ++k)
    if (m.at(k)) f.u[k] = 2.0 * t * H[k];
  f.boundary = BoundaryPolicy::barrier_hyperbolic(H);
  return f;
}

Trajectory constant_trajectory(const Grid& g, const Mask& m, double level,
                               const std::vector<double>& times) {
  Trajectory traj;
  traj.mask = m;
  for (double t : times) traj.snaps.push_back({t, Field(g, level), Field(g, level)});
  return traj;
}

}  // namespace

TEST_SUITE("lfde") {

TEST_CASE("a constant state with matching ghosts is a fixed point of the step") {
  Grid g = Grid::centered_box(1.0, 0.1);
  Mask m = raster_disk(g, {0.0, 0.0}, 0.8);
  FlowState f;
  f.t = 0.5;
  f.mask = m;
  f.u = Field(g, 2.5);
  f.boundary = BoundaryPolicy::dirichlet(2.5);
  StepReport rep;
  FlowState out = step_implicit(f, 0.01, &rep);
  CHECK(rep.converged);
  CHECK(out.t == doctest::Approx(0.51));
  for (int k = 0; k < g.size(); ++k)
    if (m.at(k)) CHECK(out.u[k] == doctest::Approx(2.5).epsilon(1e-9));
}

TEST_CASE("a zero step returns the state unchanged") {
  Grid g = Grid::centered_box(1.0, 0.2);
  Mask m = raster_disk(g, {0.0, 0.0}, 0.7);
  FlowState f;
  f.t = 0.3;
  f.mask = m;
  f.u = map_field(g, [](Vec2 p) { return 1.0 + p.x * p.x + p.y * p.y; });
  f.boundary = BoundaryPolicy::dirichlet(1.0);
  FlowState out = step_implicit(f, 0.0);
  CHECK(out.t == f.t);
  for (int k = 0; k < g.size(); ++k) CHECK(out.u[k] == f.u[k]);
}

TEST_CASE("one implicit step tracks the self-similar disk solution") {
  // u = 2 t H solves the flow exactly; with barrier ghosts one step must land
  // on 2 (t + tau) H up to spatial truncation times tau.
  double h = 1.0 / 32;
  Grid gr = Grid::centered_box(1.05, h);
  Mask m = raster_disk(gr, {0.0, 0.0}, 1.0);
  Field H = disk_factor(gr, 1.0);
  double t0 = 0.5, tau = 1e-3;
  FlowState f = bigbang_state(gr, m, H, t0);
  StepReport rep;
  FlowState out = step_implicit(f, tau, &rep);
  CHECK(rep.converged);
  CHECK(rep.residual <= kTolNewton);
  double worst_rel = 0.0;
  for (int k = 0; k < gr.size(); ++k) {
    if (!m.at(k)) continue;
    Vec2 p = gr.center(k);
    if (p.x * p.x + p.y * p.y > 0.8 * 0.8) continue;
    double exact = 2.0 * (t0 + tau) * H[k];
    worst_rel = std::max(worst_rel, std::abs(out.u[k] - exact) / exact);
    CHECK(out.u[k] > 0.0);
  }
  CHECK(worst_rel < 1e-4);
}

TEST_CASE("step error on the exact solution shrinks about fourfold under h -> h/2") {
  auto one_step_err = [](double h) {
    Grid gr = Grid::centered_box(1.05, h);
    Mask m = raster_disk(gr, {0.0, 0.0}, 1.0);
    Field H = disk_factor(gr, 1.0);
    double t0 = 0.5, tau = 1e-5;  // tau tiny so spatial truncation dominates
    FlowState out = step_implicit(bigbang_state(gr, m, H, t0), tau);
    double worst = 0.0;
    for (int k = 0; k < gr.size(); ++k) {
      if (!m.at(k)) continue;
      Vec2 p = gr.center(k);
      if (p.x * p.x + p.y * p.y > 0.64) continue;
      double exact = 2.0 * (t0 + tau) * H[k];
      worst = std::max(worst, std::abs(out.u[k] - exact) / exact);
    }
    return worst;
  };
  double coarse = one_step_err(1.0 / 16);
  double fine = one_step_err(1.0 / 32);
  double ratio = coarse / fine;
  CHECK(ratio > 2.5);
  CHECK(ratio < 6.0);
}

TEST_CASE("curvature of flat and self-similar states") {
  Grid gr = Grid::centered_box(1.05, 1.0 / 32);
  Mask m = raster_disk(gr, {0.0, 0.0}, 1.0);

  FlowState flat;
  flat.t = 1.0;
  flat.mask = m;
  flat.u = Field(gr, 3.0);
  flat.boundary = BoundaryPolicy::dirichlet(3.0);
  Field Rflat = scalar_curvature(flat);
  auto cls = classify_cells(m);
  for (int k = 0; k < gr.size(); ++k)
    if (cls[k] == CellClass::Interior) CHECK(Rflat[k] == doctest::Approx(0.0).epsilon(1e-12));

  double t0 = 0.5;
  Field H = disk_factor(gr, 1.0);
  FlowState bb = bigbang_state(gr, m, H, t0);
  Field R = scalar_curvature(bb);
  // R approaches -1/t away from the rim as the grid refines
  for (int k = 0; k < gr.size(); ++k) {
    if (!m.at(k)) continue;
    Vec2 p = gr.center(k);
    if (p.x * p.x + p.y * p.y > 0.36) continue;
    CHECK(R[k] == doctest::Approx(-1.0 / t0).epsilon(2e-3));
  }
}

TEST_CASE("curvature of the cusp factor approaches -2 scalar (-1 Gaussian)") {
  Grid gr = Grid::centered_box(0.6, 1.0 / 64);
  HyperbolicFactor cusp = hyperbolic_punctured_ball(gr, {0.0, 0.0});
  FlowState f;
  f.t = 1.0;
  f.mask = cusp.mask;
  f.u = Field(gr, 0.0);
  for (int k = 0; k < gr.size(); ++k)
    if (cusp.mask.at(k)) f.u[k] = cusp.H[k];
  Field ghost(gr);
  for (int k = 0; k < gr.size(); ++k) ghost[k] = std::max(cusp.H[k], 1e-12);
  f.boundary = BoundaryPolicy::frozen(ghost);
  Field R = scalar_curvature(f);
  for (int k = 0; k < gr.size(); ++k) {
    if (!f.mask.at(k)) continue;
    double r = norm(gr.center(k));
    if (r < 0.1 || r > 0.35) continue;
    CHECK(R[k] == doctest::Approx(-2.0).epsilon(0.05));
  }
}

TEST_CASE("parabolic rescaling acts by scaling both factor and time") {
  Grid g = Grid::centered_box(1.0, 0.25);
  Mask m(g, true);
  FlowState f;
  f.t = 1.0;
  f.mask = m;
  f.u = Field(g, 3.0);
  f.boundary = BoundaryPolicy::dirichlet(3.0);

  FlowState id = rescale_parabolic(f, 1.0);
  CHECK(id.t == f.t);
  for (int k = 0; k < g.size(); ++k) CHECK(id.u[k] == f.u[k]);

  FlowState two = rescale_parabolic(f, 2.0);
  CHECK(two.t == doctest::Approx(2.0));
  for (int k = 0; k < g.size(); ++k) CHECK(two.u[k] == doctest::Approx(6.0));

  FlowState ab = rescale_parabolic(rescale_parabolic(f, 1.7), 2.5);
  FlowState once = rescale_parabolic(f, 1.7 * 2.5);
  CHECK(ab.t == doctest::Approx(once.t).epsilon(1e-15));
  for (int k = 0; k < g.size(); ++k)
    CHECK(ab.u[k] == doctest::Approx(once.u[k]).epsilon(1e-15));

  CHECK_THROWS_AS(rescale_parabolic(f, 0.0), GridError);
}

TEST_CASE("the self-similar solution is a fixed point of rescaling") {
  Grid gr = Grid::centered_box(1.05, 1.0 / 16);
  Mask m = raster_disk(gr, {0.0, 0.0}, 1.0);
  Field H = disk_factor(gr, 1.0);
  FlowState f = bigbang_state(gr, m, H, 0.25);
  FlowState r = rescale_parabolic(f, 3.0);
  // rescaled state equals the same closed form evaluated at the new time
  for (int k = 0; k < gr.size(); ++k)
    if (m.at(k)) CHECK(r.u[k] == doctest::Approx(2.0 * r.t * H[k]).epsilon(1e-14));
}

TEST_CASE("ordered initial states stay ordered after a step") {
  Grid g = Grid::centered_box(1.0, 0.1);
  Mask m = raster_disk(g, {0.0, 0.0}, 0.8);
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> U(0.5, 1.5);
  for (int trial = 0; trial < 3; ++trial) {
    Field lo(g, 0.0), hi(g, 0.0);
    for (int k = 0; k < g.size(); ++k) {
      double a = U(rng), b = U(rng);
      lo[k] = std::min(a, b);
      hi[k] = std::max(a, b) + 0.05;
    }
    FlowState fl, fh;
    fl.t = fh.t = 0.4;
    fl.mask = fh.mask = m;
    fl.u = lo;
    fh.u = hi;
    fl.boundary = BoundaryPolicy::dirichlet(0.5);
    fh.boundary = BoundaryPolicy::dirichlet(0.55);
    FlowState ol = step_implicit(fl, 5e-3);
    FlowState oh = step_implicit(fh, 5e-3);
    for (int k = 0; k < g.size(); ++k)
      if (m.at(k)) CHECK(ol.u[k] <= oh.u[k] + 1e-9);
  }
}

TEST_CASE("the bound formula takes the worse of its two branches") {
  ChenBoundParams p;
  p.n = 2;
  p.delta = 1e-9;
  p.K = 1e12;
  p.r0 = 1.0;
  p.t1 = 0.0;
  p.t2 = 1.0;
  p.A = 26.0;  // floor is 2 + 24 t2/r0^2 = 26
  p.C = 1e-6;  // second branch -C/(A^2 r0^2) ~ 0, so the first branch is the min
  CHECK(chen_bound_rhs(p, 0.7) == doctest::Approx(-1.0 / 0.7).epsilon(1e-6));

  ChenBoundParams q;
  q.n = 2;
  q.delta = 0.5;
  q.K = 1.0;
  q.r0 = 1.0;
  q.t1 = 0.0;
  q.t2 = 1.0;
  q.A = 26.0;
  q.C = 10.0 * 26.0 * 26.0;  // second branch exactly -10
  // first branch at t - t1 = 1: -1/(0.5 + 1) = -2/3; min is -10
  CHECK(chen_bound_rhs(q, 1.0) == doctest::Approx(-10.0));
  // at t = t1 the first branch is -K
  CHECK(chen_bound_rhs(q, 0.0) == doctest::Approx(std::min(-1.0, -10.0)));
  CHECK_THROWS_AS(chen_bound_rhs(q, 1.5), GridError);
  ChenBoundParams bad = q;
  bad.A = 2.0;  // below the admissible floor
  CHECK_THROWS_AS(chen_bound_rhs(bad, 0.5), GridError);
}

TEST_CASE("curvature tolerance arithmetic") {
  CHECK(chen_tolerance(0.01, 1e-4, 0.5) == doctest::Approx(10.0 * (0.01 + 2e-4)));
  CHECK(chen_tolerance(0.0, 0.0, 1.0) == 0.0);
}

TEST_CASE("global curvature bound: flat passes, self-similar sits at equality") {
  Grid gr = Grid::centered_box(1.05, 1.0 / 32);
  Mask m = raster_disk(gr, {0.0, 0.0}, 1.0);

  FlowState flat;
  flat.t = 0.7;
  flat.mask = m;
  flat.u = Field(gr, 2.0);
  flat.boundary = BoundaryPolicy::dirichlet(2.0);
  VerificationReport rf = check_chen_global(flat, 0.0, 0.05, 0.1);
  CHECK(rf.passed());
  CHECK(rf.margin == doctest::Approx(1.0 / 0.7).epsilon(1e-9));

  Field H = disk_factor(gr, 1.0);
  FlowState bb = bigbang_state(gr, m, H, 0.5);
  double tol = chen_tolerance(gr.h, 1e-3, 0.5);
  VerificationReport rb = check_chen_global(bb, 0.0, tol, 0.1);
  CHECK(rb.passed());
  CHECK(std::abs(rb.margin) < tol);
}

TEST_CASE("a pit in the factor violates the global bound with a witness") {
  Grid gr = Grid::centered_box(1.0, 0.1);
  Mask m = raster_disk(gr, {0.0, 0.0}, 0.8);
  FlowState f;
  f.t = 1.0;
  f.mask = m;
  f.u = Field(gr, 1.0);
  int ci = gr.nx / 2 + 1, cj = gr.ny / 2;
  f.u.at(ci, cj) = 0.5;  // deep log pit: strongly negative curvature there
  f.boundary = BoundaryPolicy::dirichlet(1.0);
  VerificationReport r = check_chen_global(f, 0.0, 0.05, 0.0);
  CHECK(!r.passed());
  REQUIRE(r.witness.has_value());
  CHECK(r.witness->i == ci);
  CHECK(r.witness->j == cj);
}

TEST_CASE("flows are archived and reloaded exactly") {
  Grid g = Grid::centered_box(1.0, 0.125);
  Mask m = raster_disk(g, {0.0, 0.0}, 0.8);
  FlowState f;
  f.t = 0.2;
  f.mask = m;
  f.u = Field(g, 1.0);
  f.boundary = BoundaryPolicy::dirichlet(1.0);
  Trajectory traj = run_flow(f, {0.2, 0.25, 0.3}, 5e-2);
  std::string dir = (std::filesystem::temp_directory_path() / "stflow_traj_rt").string();
  save_trajectory(dir, traj);
  Trajectory back = load_trajectory(dir);
  REQUIRE(back.size() == traj.size());
  CHECK(back.mask.inside == traj.mask.inside);
  for (int k = 0; k < traj.size(); ++k) {
    CHECK(back.snaps[k].t == traj.snaps[k].t);
    CHECK(back.snaps[k].u.v == traj.snaps[k].u.v);
    CHECK(back.snaps[k].ghost.v == traj.snaps[k].ghost.v);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("run_flow stores the initial time and respects the step bound") {
  Grid g = Grid::centered_box(1.0, 0.2);
  Mask m = raster_disk(g, {0.0, 0.0}, 0.7);
  FlowState f;
  f.t = 0.1;
  f.mask = m;
  f.u = Field(g, 1.0);
  f.boundary = BoundaryPolicy::dirichlet(1.0);
  Trajectory traj = run_flow(f, {0.1, 0.2, 0.4}, 0.05);
  REQUIRE(traj.size() == 3);
  CHECK(traj.t_front() == doctest::Approx(0.1));
  CHECK(traj.t_back() == doctest::Approx(0.4));
  // sampling interpolates linearly between stored snapshots
  Field mid = traj.sample(0.3);
  for (int k = 0; k < g.size(); ++k)
    if (m.at(k))
      CHECK(mid[k] == doctest::Approx(0.5 * (traj.snaps[1].u[k] + traj.snaps[2].u[k])));
  CHECK(traj.nearest_index(0.39) == 2);
  CHECK_THROWS_AS(run_flow(f, {0.1, 0.05}, 0.05), GridError);
}

TEST_CASE("supersolution transform of a static flow has exactly residual eps*v") {
  Grid g = Grid::centered_box(1.0, 0.125);
  Mask m = raster_disk(g, {0.0, 0.0}, 0.8);
  double c = 2.0, eps = 0.05;
  Trajectory traj = constant_trajectory(g, m, c, {0.2, 0.4, 0.6, 0.8, 1.0});
  Trajectory super = supersolution_transform(traj, eps);
  REQUIRE(super.size() >= 2);
  for (int k = 0; k + 1 < super.size(); ++k) {
    Field res = discrete_residual(super, k);
    auto cls = classify_cells(m);
    for (int q = 0; q < g.size(); ++q)
      if (cls[q] == CellClass::Interior)
        CHECK(res[q] == doctest::Approx(eps * c).epsilon(1e-10));
  }
}

TEST_CASE("supersolution amplitudes vanish with eps") {
  Grid g = Grid::centered_box(1.0, 0.25);
  Mask m = raster_disk(g, {0.0, 0.0}, 0.7);
  Trajectory traj = constant_trajectory(g, m, 1.5, {0.5, 1.0, 1.5});
  for (double eps : {0.2, 0.02, 0.002}) {
    Trajectory super = supersolution_transform(traj, eps);
    const auto& last = super.snaps.back();
    double dev = 0.0;
    for (int q = 0; q < g.size(); ++q)
      if (m.at(q)) dev = std::max(dev, std::abs(last.u[q] - 1.5));
    CHECK(dev <= 1.5 * eps * last.t + 1e-12);
  }
  CHECK_THROWS_AS(supersolution_transform(traj, -0.1), GridError);
}

TEST_CASE("newton converges at the huge amplitudes near a complete rim") {
  // Near the circle the barrier factor reaches ~1e6-1e9; the scaled residual
  // norm must still be attainable there.
  Grid gr = Grid::centered_box(1.02, 1.0 / 64);
  Mask m = raster_disk(gr, {0.0, 0.0}, 1.0);
  Field H = disk_factor(gr, 1.0);
  double hmax = 0.0;
  for (int k = 0; k < gr.size(); ++k)
    if (m.at(k)) hmax = std::max(hmax, H[k]);
  CHECK(hmax > 1e5);  // the stiff regime is actually exercised
  StepReport rep;
  FlowState out = step_implicit(bigbang_state(gr, m, H, 0.5), 5e-4, &rep);
  CHECK(rep.converged);
  for (int k = 0; k < gr.size(); ++k)
    if (m.at(k)) CHECK(out.u[k] > 0.0);
}

}  // TEST_SUITE("lfde")
