#include "stflow/uniformize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stflow/numerics.hpp"

namespace stflow {

HyperbolicFactor hyperbolic_disk(const Grid& g, Vec2 center, double radius) {
  if (!(radius > 0.0)) throw GridError("hyperbolic_disk: radius must be positive");
  HyperbolicFactor out;
  out.provenance = HyperbolicFactor::Provenance::ClosedForm;
  out.mask = raster_disk(g, center, radius);
  out.H = map_field(g, [&](Vec2 p) {
    double d2 = radius * radius - dist(p, center) * dist(p, center);
    if (d2 == 0.0) return std::numeric_limits<double>::max();
    return 4.0 * radius * radius / (d2 * d2);
  });
  return out;
}

double evaluate_cusp(Vec2 z, Vec2 b) {
  double r = dist(z, b);
  if (!(r > 0.0 && r < 0.5))
    throw GridError("cusp factor: point outside 0 < |z-b| < 1/2");
  double L = -std::log(2.0 * r);
  return 1.0 / (r * r * L * L);
}

HyperbolicFactor hyperbolic_punctured_ball(const Grid& g, Vec2 b) {
  HyperbolicFactor out;
  out.provenance = HyperbolicFactor::Provenance::ClosedForm;
  out.mask = raster(g, [&](Vec2 p) {
    double r = dist(p, b);
    return r > 0.0 && r < 0.5;
  });
  out.H = Field(g, 0.0);
  for (int k = 0; k < g.size(); ++k)
    if (out.mask.at(k)) out.H[k] = evaluate_cusp(g.center(k), b);
  return out;
}

HyperbolicFactor solve_liouville(const Mask& m, double phi_b, double tol,
                                 const Field* init) {
  const Grid& g = m.grid;
  auto cls = classify_cells(m);
  bool any_interior = false;
  for (auto c : cls) any_interior |= c == CellClass::Interior;
  if (!any_interior) throw GridError("liouville: mask has no interior cell");

  std::vector<int> cells;
  std::vector<int> of_flat(g.size(), -1);
  for (int k = 0; k < g.size(); ++k)
    if (m.at(k)) {
      of_flat[k] = static_cast<int>(cells.size());
      cells.push_back(k);
    }
  const int n = static_cast<int>(cells.size());
  const int nx = g.nx;
  const double h2 = g.h * g.h;

  auto flat_neighbors = [&](int flat, int out[4]) {
    int i = flat % nx, j = flat / nx;
    out[0] = i > 0 ? flat - 1 : -1;
    out[1] = i < nx - 1 ? flat + 1 : -1;
    out[2] = j > 0 ? flat - nx : -1;
    out[3] = j < g.ny - 1 ? flat + nx : -1;
  };

  // Unknown phi on mask cells; F(phi) = lap(phi) - e^{2 phi}, ghosts at phi_b.
  std::vector<double> phi(n);
  for (int c = 0; c < n; ++c)
    phi[c] = init ? init->v[cells[c]] : phi_b;

  std::vector<double> F(n), delta(n), rhs(n), diag(n), ptry(n), Ftry(n);
  auto eval_F = [&](const std::vector<double>& pv, std::vector<double>& out) {
    int nb[4];
    for (int c = 0; c < n; ++c) {
      double s = -4.0 * pv[c];
      flat_neighbors(cells[c], nb);
      for (int d = 0; d < 4; ++d) {
        int q = nb[d];
        if (q >= 0 && of_flat[q] >= 0)
          s += pv[of_flat[q]];
        else
          s += phi_b;  // grid-edge ghosts also sit at the boundary value
      }
      out[c] = s / h2 - std::exp(2.0 * pv[c]);
    }
  };

  eval_F(phi, F);
  double fn = max_abs(F);
  int it = 0;
  for (; it < 200 && fn > tol; ++it) {
    // J = lap - diag(2 e^{2 phi}); solve (-J) delta = F, so phi += delta.
    auto apply = [&](const std::vector<double>& x, std::vector<double>& out) {
      int nb[4];
      for (int c = 0; c < n; ++c) {
        double s = (4.0 / h2 + 2.0 * std::exp(2.0 * phi[c])) * x[c];
        flat_neighbors(cells[c], nb);
        for (int d = 0; d < 4; ++d) {
          int q = nb[d];
          if (q >= 0 && of_flat[q] >= 0) s -= x[of_flat[q]] / h2;
        }
        out[c] = s;
      }
    };
    for (int c = 0; c < n; ++c) {
      rhs[c] = F[c];
      diag[c] = 4.0 / h2 + 2.0 * std::exp(2.0 * phi[c]);
    }
    std::fill(delta.begin(), delta.end(), 0.0);
    cg_solve(apply, rhs, delta, diag, 1e-12, 4000);

    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      for (int c = 0; c < n; ++c) ptry[c] = phi[c] + alpha * delta[c];
      eval_F(ptry, Ftry);
      double fn_try = max_abs(Ftry);
      if (fn_try <= fn * (1.0 - 0.25 * alpha) || fn_try <= tol) {
        phi.swap(ptry);
        F.swap(Ftry);
        fn = fn_try;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
  }
  if (fn > tol)
    throw GridError("liouville: Newton did not reach the residual tolerance");

  HyperbolicFactor out;
  out.provenance = HyperbolicFactor::Provenance::Solved;
  out.mask = m;
  out.residual = fn;
  out.phi_b = phi_b;
  out.newton_iterations = it;
  out.H = Field(g, 0.0);
  for (int c = 0; c < n; ++c) out.H[cells[c]] = std::exp(2.0 * phi[c]);
  return out;
}

SweepResult solve_liouville_swept(const Mask& m, const std::vector<double>& phi_bs,
                                  double band_width) {
  if (phi_bs.empty()) throw GridError("liouville sweep: no boundary values");
  SweepResult out;
  out.phi_values = phi_bs;
  double band = band_width > 0.0 ? band_width : 3.0 * m.grid.h;
  Mask band_mask = interior_band(m, band);
  Field prev;
  bool have_prev = false;
  const Field* seed = nullptr;
  Field seed_phi;
  for (double pb : phi_bs) {
    HyperbolicFactor hf = solve_liouville(m, pb, kTolLiouville, seed);
    if (have_prev) {
      double change = 0.0;
      for (int k = 0; k < m.grid.size(); ++k)
        if (band_mask.at(k)) {
          double rel = std::abs(hf.H[k] - prev[k]) / std::abs(prev[k]);
          change = std::max(change, rel);
        }
      out.step_changes.push_back(change);
    }
    prev = hf.H;
    have_prev = true;
    seed_phi = Field(m.grid, 0.0);
    for (int k = 0; k < m.grid.size(); ++k)
      if (m.at(k)) seed_phi[k] = 0.5 * std::log(hf.H[k]);
    seed = &seed_phi;
    out.factor = std::move(hf);
  }
  // Certified when the band has stopped moving, or when the ladder's band
  // changes contract geometrically (each step at most 3/4 of the previous),
  // which is the strongest stabilization the truncated exhaustion admits.
  const auto& sc = out.step_changes;
  bool tiny = !sc.empty() && sc.back() < 0.005;
  bool contracting = sc.size() >= 2;
  for (size_t k = 1; k < sc.size(); ++k)
    contracting = contracting && sc[k] <= 0.75 * sc[k - 1];
  out.converged = tiny || contracting;
  return out;
}

VerificationReport schwarz_compare(const HyperbolicFactor& inner,
                                   const HyperbolicFactor& outer) {
  const Grid& g = inner.mask.grid;
  if (!g.same_layout(outer.mask.grid)) throw GridError("schwarz: grids differ");
  if (!inner.mask.subset_of(outer.mask))
    throw GridError("schwarz: inner region is not contained in the outer one");
  auto cls = classify_cells(inner.mask);
  const double h = g.h;
  double worst = std::numeric_limits<double>::infinity();
  double worst_tol = 0.0;
  int worst_cell = -1;
  bool pass = true;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      int k = g.index(i, j);
      if (cls[k] != CellClass::Interior) continue;
      double diff = inner.H[k] - outer.H[k];
      // local gradient scale of the two factors via centered differences
      auto grad = [&](const Field& f) {
        double gx = (f.at(i + 1, j) - f.at(i - 1, j)) / (2 * h);
        double gy = (f.at(i, j + 1) - f.at(i, j - 1)) / (2 * h);
        return std::hypot(gx, gy);
      };
      double tol = 5.0 * h * std::max(grad(inner.H), grad(outer.H));
      if (diff < worst) {
        worst = diff;
        worst_tol = tol;
        worst_cell = k;
      }
      if (diff < -tol) pass = false;
    }
  if (worst_cell < 0) throw GridError("schwarz: inner region has no interior cell");
  VerificationReport rep = VerificationReport::make(
      "schwarz-monotonicity", worst, worst_tol,
      digest_of({double(inner.mask.count()), double(outer.mask.count())}));
  rep.verdict = pass ? VerificationReport::Verdict::Pass
                     : VerificationReport::Verdict::Fail;
  rep.add("h", h);
  if (!pass)
    rep.set_witness(worst_cell % g.nx, worst_cell / g.nx, 0.0);
  return rep;
}

PropernessResult parabolic_properness(const SpacetimeDomain& s,
                                      const std::vector<Field>& H_per_slice,
                                      double eps, double level) {
  if (static_cast<int>(H_per_slice.size()) != s.layers())
    throw GridError("properness: need one factor per slice");
  double t0 = s.times.front(), tK = s.times.back();
  if (!(eps > 0.0 && eps < 0.5 * (tK - t0)))
    throw GridError("properness: eps outside (0, (tK - t0)/2)");
  PropernessResult out;
  const Grid& g = s.grid;
  for (int k = 0; k < s.layers(); ++k) {
    double t = s.times[k];
    if (!(t > t0 + eps && t < tK - eps)) continue;
    const Mask& slice = s.slices[k];
    auto in = [&](const Mask& m, int i, int j) {
      return g.contains(i, j) && m.at(i, j);
    };
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        if (!slice.at(i, j)) continue;
        if (!(H_per_slice[k].at(i, j) <= level)) continue;
        bool ok = in(slice, i - 1, j) && in(slice, i + 1, j) &&
                  in(slice, i, j - 1) && in(slice, i, j + 1);
        if (k > 0 && !s.slices[k - 1].at(i, j)) ok = false;
        if (k + 1 < s.layers() && !s.slices[k + 1].at(i, j)) ok = false;
        if (!ok) out.witnesses.push_back({g.index(i, j), k});
      }
  }
  out.proper = out.witnesses.empty();
  return out;
}

}  // namespace stflow
