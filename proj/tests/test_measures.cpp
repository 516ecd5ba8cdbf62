#include <doctest.h>

#include <cmath>

#include "stflow/grid.hpp"
#include "stflow/lfde.hpp"
#include "stflow/measures.hpp"

using namespace stflow;

namespace {

Field disk_factor(const Grid& g, double radius) {
  return map_field(g, [radius](Vec2 p) {
    double d = radius * radius - (p.x * p.x + p.y * p.y);
    return 4.0 * radius * radius / (d * d);
  });
}

Trajectory constant_trajectory(const Grid& g, const Mask& m, double level,
                               const std::vector<double>& times) {
  Trajectory traj;
  traj.mask = m;
  for (double t : times) traj.snaps.push_back({t, Field(g, level), Field(g, level)});
  return traj;
}

DiscreteMeasure uniform_disk_measure(const Grid& g, Vec2 c, double r, double mass) {
  Mask ball = raster_disk(g, c, r);
  std::vector<int> cells;
  for (int k = 0; k < g.size(); ++k)
    if (ball.at(k)) cells.push_back(k);
  return measure_on_perfect_set(g, cells, mass);
}

}  // namespace

TEST_SUITE("measures") {

TEST_CASE("measure validation guards") {
  Grid g = Grid::centered_box(1.0, 0.1);
  // negative density
  Field neg(g, 1.0);
  neg[5] = -0.25;
  CHECK_THROWS_AS(measure_from_density(neg), GridError);
  // single-cell concentration beyond the atom fraction
  Field spike(g, 0.0);
  spike[g.index(10, 10)] = 1.0;
  spike[g.index(4, 4)] = 0.1;
  CHECK_THROWS_AS(measure_from_density(spike), GridError);
  // a well-spread density is accepted and its total is the quadrature
  Field ok(g, 2.0);
  DiscreteMeasure mu = measure_from_density(ok);
  CHECK(mu.total == doctest::Approx(2.0 * g.nx * g.ny * g.h * g.h));
  // stored total must match the density
  mu.total *= 1.5;
  CHECK_THROWS_AS(mu.validate(), GridError);
}

TEST_CASE("uniform mass on a cell set") {
  Grid g = Grid::centered_box(1.0, 0.1);
  CHECK_THROWS_AS(measure_on_perfect_set(g, {}, 1.0), GridError);
  CHECK_THROWS_AS(measure_on_perfect_set(g, {g.index(3, 3)}, 1.0), GridError);  // atomic

  std::vector<int> cells;
  for (int j = 5; j < 9; ++j)
    for (int i = 5; i < 9; ++i) cells.push_back(g.index(i, j));    // block one
  for (int j = 12; j < 16; ++j)
    for (int i = 12; i < 16; ++i) cells.push_back(g.index(i, j));  // block two
  DiscreteMeasure mu = measure_on_perfect_set(g, cells, 1.0);
  CHECK(mu.total == doctest::Approx(1.0));
  double expected_density = 1.0 / (cells.size() * g.h * g.h);
  for (int c : cells) CHECK(mu.density[c] == doctest::Approx(expected_density));
  CHECK(mu.support().count() == static_cast<int>(cells.size()));
  CHECK(integrate(mu.density, Mask(g, true)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("closed-ball mass counts boundary centers") {
  // odd grid so a cell center sits exactly at the origin
  Grid g({-0.625, -0.625}, 0.25, 5, 5);
  Field one(g, 1.0);
  DiscreteMeasure mu = measure_from_density(one);
  // centers at distance exactly h are included by the closed inequality
  double m5 = mu.ball_mass({0.0, 0.0}, 0.25);
  CHECK(m5 == doctest::Approx(5.0 * 0.0625));
  double m1 = mu.ball_mass({0.0, 0.0}, 0.2);
  CHECK(m1 == doctest::Approx(1.0 * 0.0625));
}

TEST_CASE("mollification preserves mass and symmetry") {
  Grid g = Grid::centered_box(1.0, 1.0 / 16);
  DiscreteMeasure mu = uniform_disk_measure(g, {0.0, 0.0}, 0.3, 1.0);
  CHECK_THROWS_AS(mollify(mu, 0.5 * g.h), GridError);
  Field u0 = mollify(mu, 2.0 * g.h);
  CHECK(integrate(u0, Mask(g, true)) == doctest::Approx(1.0).epsilon(1e-10));
  // mirror symmetry of a centered source
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      double a = u0.at(i, j);
      double b = u0.at(g.nx - 1 - i, g.ny - 1 - j);
      CHECK(a == doctest::Approx(b).epsilon(1e-11));
    }
}

TEST_CASE("weak start bookkeeping") {
  Grid g = Grid::centered_box(1.0, 1.0 / 16);
  DiscreteMeasure mu = uniform_disk_measure(g, {0.0, 0.0}, 0.3, 1.0);
  double floor = 1e-6;
  FlowState f = weak_start(mu, 2.0 * g.h, 0.01, floor);
  CHECK(f.t == doctest::Approx(0.01));
  // total area = mass + floor * box area, a direct mollifier identity
  double area = g.nx * g.ny * g.h * g.h;
  CHECK(integrate(f.u, Mask(g, true)) ==
        doctest::Approx(1.0 + floor * area).epsilon(1e-6));
  // the flow mask spares the outermost ring for ghost data
  CHECK(f.mask.count() == (g.nx - 2) * (g.ny - 2));
  CHECK_THROWS_AS(weak_start(mu, 0.5 * g.h, 0.01), GridError);
  CHECK_THROWS_AS(weak_start(mu, 2.0 * g.h, -0.1), GridError);
}

TEST_CASE("a wide mollifier flattens the start toward the mean level") {
  Grid g = Grid::centered_box(1.0, 1.0 / 16);
  DiscreteMeasure mu = uniform_disk_measure(g, {0.0, 0.0}, 0.3, 1.0);
  Field u0 = mollify(mu, 0.9);
  double mean = 1.0 / (g.nx * g.ny * g.h * g.h);
  for (int j = g.ny / 4; j < 3 * g.ny / 4; ++j)
    for (int i = g.nx / 4; i < 3 * g.nx / 4; ++i) {
      CHECK(u0.at(i, j) > 0.2 * mean);
      CHECK(u0.at(i, j) < 5.0 * mean);
    }
}

TEST_CASE("weak-start consistency against test functions") {
  Grid g = Grid::centered_box(1.0, 1.0 / 16);
  DiscreteMeasure mu = uniform_disk_measure(g, {-0.4, 0.0}, 0.25, 1.0);
  double sigma = 2.0 * g.h, floor = 1e-6, t0 = 1e-3;
  FlowState f = weak_start(mu, sigma, t0, floor);
  Trajectory traj;
  traj.mask = f.mask;
  traj.snaps.push_back({f.t, f.u, f.boundary.ghost_u(g, f.t)});

  std::vector<TestFunction> fs;
  // constant one: pure mass bookkeeping
  fs.push_back({"one", Field(g, 1.0), 0.0});
  // bump far from the support: integral close to the floor contribution only
  fs.push_back({"far_bump", map_field(g, [](Vec2 p) {
                  double d2 = (p.x - 0.55) * (p.x - 0.55) + p.y * p.y;
                  return std::exp(-40.0 * d2);
                }),
                10.0});
  VerificationReport r = check_weak_convergence(traj, mu, fs, sigma, floor);
  CHECK(r.passed());
  CHECK(r.get("gap_far_bump", 1e9) < 1e-3);

  // self test: the flow's own area measure gives zero gap on a matching bump
  Field inner_bump = map_field(g, [](Vec2 p) {
    double d2 = (p.x + 0.4) * (p.x + 0.4) + p.y * p.y;
    return std::exp(-30.0 * d2);
  });
  // zero the test function on cells outside the flow mask so both integrals
  // read the same cells
  for (int k = 0; k < g.size(); ++k)
    if (!traj.mask.at(k)) inner_bump[k] = 0.0;
  DiscreteMeasure self = measure_from_density(f.u);
  std::vector<TestFunction> fs2{{"self", inner_bump, 5.0}};
  VerificationReport r2 = check_weak_convergence(traj, self, fs2, sigma, floor);
  CHECK(r2.passed());
  CHECK(r2.get("gap_self", 1.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("volume decay constant formula") {
  CHECK(volume_decay_constant(0.5, 1.0) == doctest::Approx(20.0 * M_PI / 3.0));
  CHECK(volume_decay_constant(1e-4, 1.0) == doctest::Approx(4.0 * M_PI).epsilon(1e-6));
  // approaching the pole the constant blows up
  CHECK(volume_decay_constant(0.999, 1.0) > 1e3);
  CHECK_THROWS_AS(volume_decay_constant(1.0, 1.0), GridError);
  CHECK_THROWS_AS(volume_decay_constant(1.2, 1.0), GridError);
  CHECK_THROWS_AS(volume_decay_constant(0.0, 1.0), GridError);
}

TEST_CASE("volume retention along a mollified start") {
  Grid g = Grid::centered_box(1.2, 1.0 / 16);
  DiscreteMeasure mu = uniform_disk_measure(g, {0.0, 0.0}, 0.4, 1.0);
  double sigma = 2.0 * g.h;
  FlowState f = weak_start(mu, sigma, 0.002);
  Trajectory traj = run_flow(f, {0.002, 0.01, 0.02}, 1e-3);
  VerificationReport r = check_volume_decay(traj, mu, 0.4, 0.8, {0.0, 0.0}, sigma);
  CHECK(r.passed());
  CHECK(r.get("times_checked", 0.0) == doctest::Approx(3.0));
  CHECK(r.get("mu_ball", 0.0) == doctest::Approx(1.0));

  // all stored times beyond the valid window is a usage error
  Trajectory late = constant_trajectory(g, f.mask, 1.0, {0.2, 0.3});
  CHECK_THROWS_AS(check_volume_decay(late, mu, 0.4, 0.8, {0.0, 0.0}, sigma), GridError);

  // a ball carrying no mass makes the bound vacuous
  VerificationReport rv = check_volume_decay(late, mu, 0.1, 0.2, {0.9, 0.9}, sigma);
  CHECK(rv.passed());
  CHECK(rv.get("vacuous", 0.0) == 1.0);
}

TEST_CASE("smoothing probe on a static flow") {
  Grid g = Grid::centered_box(1.0, 1.0 / 16);
  Mask m = raster_disk(g, {0.0, 0.0}, 0.9);
  Field one(g, 1.0);
  DiscreteMeasure mu = measure_from_density(one);
  Trajectory traj = constant_trajectory(g, m, 1.0, {0.05, 0.2, 0.4, 0.8});
  double r = 0.25;
  // window opens at mu(closed B_{2r})/(2 pi) ~ 0.125: the first stored time
  // is excluded, the rest are measured
  VerificationReport rep = check_l1_linf(traj, mu, r, {0.0, 0.0});
  CHECK(rep.passed());
  CHECK(rep.get("t0", -1.0) == doctest::Approx(0.2));
  CHECK(rep.get("C0_0", -1.0) == doctest::Approx(r * r / 0.2));
  CHECK(rep.get("C0_max", -1.0) == doctest::Approx(r * r / 0.2));
  CHECK(rep.get("spread", 0.0) == doctest::Approx(4.0));

  Trajectory early = constant_trajectory(g, m, 1.0, {0.01, 0.05});
  CHECK_THROWS_AS(check_l1_linf(early, mu, r, {0.0, 0.0}), GridError);

  // a tight cap turns the same measurements into a failure
  VerificationReport tight = check_l1_linf(traj, mu, r, {0.0, 0.0}, 0.1, 10.0);
  CHECK(!tight.passed());
}

TEST_CASE("early-time ledgers accept the self-similar family") {
  Grid g = Grid::centered_box(1.05, 1.0 / 32);
  Mask m = raster_disk(g, {0.0, 0.0}, 1.0);
  Field H = disk_factor(g, 1.0);
  Trajectory traj;
  traj.mask = m;
  for (double t : {0.1, 0.2, 0.4, 0.8}) {
    Field u(g, 0.0), ghost(g);
    for (int k = 0; k < g.size(); ++k) {
      double v = 2.0 * t * H[k];
      if (m.at(k)) u[k] = v;
      ghost[k] = v > 0.0 ? v : 1e-300;
    }
    traj.snaps.push_back({t, u, ghost});
  }
  Mask no_support(g, false);
  BlowupResult b = initial_time_blowup(traj, no_support, 5, 0.1);
  CHECK(b.monotone);
  for (double x : b.ledger_time) CHECK(x <= 1e-6);
  for (double x : b.ledger_scale) CHECK(x <= 1e-6);
  // the early-time factor is the hyperbolic factor itself
  for (int k = 0; k < g.size(); ++k)
    if (b.region.at(k)) CHECK(b.ghat[k] == doctest::Approx(H[k]).epsilon(1e-13));
  CHECK(b.curvature_min > -1.1);
  CHECK(b.curvature_max < -0.9);
}

TEST_CASE("a static flow shows flat early-time curvature") {
  Grid g = Grid::centered_box(1.0, 0.1);
  Mask m = raster_disk(g, {0.0, 0.0}, 0.8);
  Trajectory traj = constant_trajectory(g, m, 3.0, {0.1, 0.2, 0.4});
  Mask no_support(g, false);
  BlowupResult b = initial_time_blowup(traj, no_support, 5, 0.0);
  CHECK(b.monotone);  // u/t falls, m u(t/m) rises: ledgers hold
  CHECK(b.curvature_min == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(b.curvature_max == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("ledger violations flag a broken archive") {
  Grid g = Grid::centered_box(1.0, 0.1);
  Mask m = raster_disk(g, {0.0, 0.0}, 0.8);
  Trajectory traj;
  traj.mask = m;
  traj.snaps.push_back({0.1, Field(g, 1.0), Field(g, 1.0)});
  traj.snaps.push_back({0.2, Field(g, 3.0), Field(g, 3.0)});  // u/t jumps up
  Mask no_support(g, false);
  BlowupResult b = initial_time_blowup(traj, no_support, 5, 0.0);
  CHECK(!b.monotone);
  REQUIRE(b.ledger_time.size() == 1);
  CHECK(b.ledger_time[0] == doctest::Approx(0.5));
}

TEST_CASE("a support blanket empties the report region") {
  Grid g = Grid::centered_box(1.0, 0.1);
  Mask m = raster_disk(g, {0.0, 0.0}, 0.8);
  Trajectory traj = constant_trajectory(g, m, 1.0, {0.1, 0.2});
  Mask everywhere(g, true);
  CHECK_THROWS_AS(initial_time_blowup(traj, everywhere, 5, 0.0), GridError);
}

}  // TEST_SUITE("measures")
