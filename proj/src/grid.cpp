#include "stflow/grid.hpp"

#include <algorithm>
#include <cmath>

namespace stflow {

double norm(Vec2 a) { return std::hypot(a.x, a.y); }
double dist(Vec2 a, Vec2 b) { return norm(a - b); }

Grid::Grid(Vec2 origin_, double h_, int nx_, int ny_)
    : origin(origin_), h(h_), nx(nx_), ny(ny_) {
  if (!(h > 0.0)) throw GridError("grid spacing must be positive");
  if (nx < 3 || ny < 3) throw GridError("grid needs at least 3 cells per axis");
}

Grid Grid::centered_box(double half_width, double h_) {
  if (!(half_width > 0.0) || !(h_ > 0.0)) throw GridError("bad box parameters");
  int n = static_cast<int>(std::llround(2.0 * half_width / h_));
  if (n < 3) throw GridError("box too small for spacing");
  return Grid({-half_width, -half_width}, h_, n, n);
}

bool Grid::same_layout(const Grid& o) const {
  return nx == o.nx && ny == o.ny && h == o.h && origin.x == o.origin.x &&
         origin.y == o.origin.y;
}

Field::Field(const Grid& g, double fill) : grid(g), v(g.size(), fill) {}

Field::Field(const Grid& g, std::vector<double> values) : grid(g), v(std::move(values)) {
  if (static_cast<int>(v.size()) != g.size())
    throw GridError("field length must be nx*ny");
}

void Field::check_finite(const std::string& label) const {
  for (double x : v)
    if (!std::isfinite(x)) throw GridError("non-finite value in field " + label);
}

Field map_field(const Grid& g, const std::function<double(Vec2)>& f) {
  Field out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out.at(i, j) = f(g.center(i, j));
  return out;
}

Mask::Mask(const Grid& g, bool fill) : grid(g), inside(g.size(), fill ? 1 : 0) {}

int Mask::count() const {
  int n = 0;
  for (auto b : inside) n += b != 0;
  return n;
}

bool Mask::subset_of(const Mask& o) const {
  if (!grid.same_layout(o.grid)) throw GridError("mask grids differ");
  for (size_t k = 0; k < inside.size(); ++k)
    if (inside[k] && !o.inside[k]) return false;
  return true;
}

Mask raster(const Grid& g, const std::function<bool(Vec2)>& inside_pred) {
  Mask m(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) m.set(i, j, inside_pred(g.center(i, j)));
  return m;
}

Mask raster_covered(const Grid& g, const std::function<bool(Vec2)>& inside_pred) {
  Mask m(g);
  double r = 0.5 * g.h;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      Vec2 c = g.center(i, j);
      bool ok = inside_pred(c) && inside_pred({c.x - r, c.y - r}) &&
                inside_pred({c.x + r, c.y - r}) && inside_pred({c.x - r, c.y + r}) &&
                inside_pred({c.x + r, c.y + r});
      m.set(i, j, ok);
    }
  return m;
}

Mask raster_disk(const Grid& g, Vec2 c, double radius) {
  return raster(g, [c, radius](Vec2 p) { return dist(p, c) < radius; });
}

Mask intersect(const Mask& a, const Mask& b) {
  if (!a.grid.same_layout(b.grid)) throw GridError("mask grids differ");
  Mask m(a.grid);
  for (size_t k = 0; k < m.inside.size(); ++k) m.inside[k] = a.inside[k] & b.inside[k];
  return m;
}

Mask subtract(const Mask& a, const Mask& b) {
  if (!a.grid.same_layout(b.grid)) throw GridError("mask grids differ");
  Mask m(a.grid);
  for (size_t k = 0; k < m.inside.size(); ++k)
    m.inside[k] = a.inside[k] && !b.inside[k];
  return m;
}

std::vector<CellClass> classify_cells(const Mask& m) {
  const Grid& g = m.grid;
  std::vector<CellClass> cls(g.size(), CellClass::Outside);
  auto in = [&](int i, int j) { return g.contains(i, j) && m.at(i, j); };
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (!m.at(i, j)) continue;
      bool full = in(i - 1, j) && in(i + 1, j) && in(i, j - 1) && in(i, j + 1);
      cls[g.index(i, j)] = full ? CellClass::Interior : CellClass::BoundaryAdjacent;
    }
  return cls;
}

Field laplacian(const Field& f, const Mask& m, const Field* ghost) {
  const Grid& g = f.grid;
  if (!g.same_layout(m.grid)) throw GridError("laplacian: field/mask grids differ");
  if (ghost && !ghost->grid.same_layout(g))
    throw GridError("laplacian: ghost grid differs");
  if (m.empty()) throw GridError("laplacian: empty mask");
  Field out(g, 0.0);
  const double inv_h2 = 1.0 / (g.h * g.h);
  auto value = [&](int i, int j) -> double {
    if (g.contains(i, j) && m.at(i, j)) return f.at(i, j);
    if (!ghost) throw GridError("laplacian: stencil leaves mask and no ghost values");
    if (!g.contains(i, j))
      throw GridError("laplacian: stencil leaves the grid");
    return ghost->at(i, j);
  };
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (!m.at(i, j)) continue;
      double s = value(i - 1, j) + value(i + 1, j) + value(i, j - 1) +
                 value(i, j + 1) - 4.0 * f.at(i, j);
      out.at(i, j) = s * inv_h2;
    }
  return out;
}

double integrate(const Field& f, const Mask& m) {
  if (!f.grid.same_layout(m.grid)) throw GridError("integrate: grids differ");
  double s = 0.0;
  for (int k = 0; k < f.grid.size(); ++k)
    if (m.at(k)) s += f[k];
  return s * f.grid.h * f.grid.h;
}

Mask interior_band(const Mask& m, double inset) {
  const Grid& g = m.grid;
  Mask band(g);
  auto cls = classify_cells(m);
  for (int k = 0; k < g.size(); ++k)
    band.inside[k] = cls[k] == CellClass::Interior ? 1 : 0;
  int rounds = inset > 0.0 ? static_cast<int>(std::ceil(inset / g.h - 1e-12)) : 0;
  for (int r = 0; r < rounds; ++r) {
    Mask next(g);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        if (!band.at(i, j)) continue;
        bool keep = true;
        for (int dj = -1; dj <= 1 && keep; ++dj)
          for (int di = -1; di <= 1 && keep; ++di) {
            int ii = i + di, jj = j + dj;
            if (!g.contains(ii, jj) || !band.at(ii, jj)) keep = false;
          }
        next.set(i, j, keep);
      }
    band = next;
  }
  return band;
}

Curve::Curve(std::vector<Vec2> p) : pts(std::move(p)) {
  if (pts.size() < 2) throw GridError("curve needs at least two vertices");
  for (size_t k = 1; k < pts.size(); ++k)
    if (dist(pts[k], pts[k - 1]) == 0.0)
      throw GridError("curve has repeated consecutive vertices");
}

double Curve::euclidean_length() const {
  double s = 0.0;
  for (size_t k = 1; k < pts.size(); ++k) s += dist(pts[k], pts[k - 1]);
  return s;
}

double interp_bilinear(const Field& f, Vec2 p) {
  const Grid& g = f.grid;
  // coordinates in units of h relative to the first cell center
  double gx = (p.x - g.origin.x) / g.h - 0.5;
  double gy = (p.y - g.origin.y) / g.h - 0.5;
  gx = std::clamp(gx, 0.0, static_cast<double>(g.nx - 1));
  gy = std::clamp(gy, 0.0, static_cast<double>(g.ny - 1));
  int i0 = std::min(static_cast<int>(gx), g.nx - 2);
  int j0 = std::min(static_cast<int>(gy), g.ny - 2);
  double fx = gx - i0, fy = gy - j0;
  double a = f.at(i0, j0) * (1 - fx) + f.at(i0 + 1, j0) * fx;
  double b = f.at(i0, j0 + 1) * (1 - fx) + f.at(i0 + 1, j0 + 1) * fx;
  return a * (1 - fy) + b * fy;
}

namespace {
bool point_in_mask(const Mask& m, Vec2 p) {
  const Grid& g = m.grid;
  int i = static_cast<int>(std::floor((p.x - g.origin.x) / g.h));
  int j = static_cast<int>(std::floor((p.y - g.origin.y) / g.h));
  return g.contains(i, j) && m.at(i, j);
}
}  // namespace

double curve_length(const Curve& c, const Field& u, const Mask& m) {
  if (!u.grid.same_layout(m.grid)) throw GridError("curve_length: grids differ");
  for (const Vec2& p : c.pts)
    if (!point_in_mask(m, p)) throw GridError("curve_length: vertex outside mask");
  const double h = u.grid.h;
  double total = 0.0;
  for (size_t k = 1; k < c.pts.size(); ++k) {
    Vec2 a = c.pts[k - 1], b = c.pts[k];
    double seg = dist(a, b);
    int pieces = std::max(1, static_cast<int>(std::ceil(seg / h)));
    double dl = seg / pieces;
    for (int q = 0; q < pieces; ++q) {
      double s = (q + 0.5) / pieces;
      Vec2 mid = a + s * (b - a);
      double uu = interp_bilinear(u, mid);
      if (!(uu > 0.0))
        throw GridError("curve_length: non-positive interpolated factor");
      total += std::sqrt(uu) * dl;
    }
  }
  return total;
}

}  // namespace stflow
