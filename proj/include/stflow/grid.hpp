#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace stflow {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
double norm(Vec2 a);
double dist(Vec2 a, Vec2 b);

// Uniform cell-centered Cartesian grid on a rectangle. Cell (i, j) has its
// center at origin + ((i + 1/2) h, (j + 1/2) h), with 0 <= i < nx, 0 <= j < ny.
struct Grid {
  Vec2 origin;
  double h = 0.0;
  int nx = 0;
  int ny = 0;

  Grid() = default;
  Grid(Vec2 origin_, double h_, int nx_, int ny_);

  // Square grid covering [-half, half]^2 with the given spacing.
  static Grid centered_box(double half_width, double h_);

  int size() const { return nx * ny; }
  int index(int i, int j) const { return j * nx + i; }
  bool contains(int i, int j) const { return i >= 0 && i < nx && j >= 0 && j < ny; }
  Vec2 center(int i, int j) const {
    return {origin.x + (i + 0.5) * h, origin.y + (j + 0.5) * h};
  }
  Vec2 center(int idx) const { return center(idx % nx, idx / nx); }

  bool same_layout(const Grid& o) const;
};

// Scalar values, one per cell, stored row-major (y outer, x inner).
struct Field {
  Grid grid;
  std::vector<double> v;

  Field() = default;
  explicit Field(const Grid& g, double fill = 0.0);
  Field(const Grid& g, std::vector<double> values);

  double& at(int i, int j) { return v[grid.index(i, j)]; }
  double at(int i, int j) const { return v[grid.index(i, j)]; }
  double& operator[](int idx) { return v[idx]; }
  double operator[](int idx) const { return v[idx]; }

  void check_finite(const std::string& label) const;
};

Field map_field(const Grid& g, const std::function<double(Vec2)>& f);

// Boolean inclusion flag per cell.
struct Mask {
  Grid grid;
  std::vector<std::uint8_t> inside;

  Mask() = default;
  explicit Mask(const Grid& g, bool fill = false);

  bool at(int i, int j) const { return inside[grid.index(i, j)] != 0; }
  void set(int i, int j, bool b) { inside[grid.index(i, j)] = b ? 1 : 0; }
  bool at(int idx) const { return inside[idx] != 0; }
  int count() const;
  bool empty() const { return count() == 0; }
  bool subset_of(const Mask& o) const;
};

// Cell inside iff its center satisfies the predicate (strict-inequality
// rasterization convention: pass a strict predicate for determinism).
Mask raster(const Grid& g, const std::function<bool(Vec2)>& inside_pred);

// Conservative variant for quadrature domains: a cell is kept only when its
// center and all four corners satisfy the predicate (fully covered cells).
Mask raster_covered(const Grid& g, const std::function<bool(Vec2)>& inside_pred);

Mask raster_disk(const Grid& g, Vec2 c, double radius);
Mask intersect(const Mask& a, const Mask& b);
Mask subtract(const Mask& a, const Mask& b);

enum class CellClass : std::uint8_t { Outside = 0, Interior = 1, BoundaryAdjacent = 2 };

// Interior: the cell and its four axis neighbors are inside the mask.
// BoundaryAdjacent: inside, but the five-point stencil leaves the mask (or grid).
std::vector<CellClass> classify_cells(const Mask& m);

// Five-point Laplacian on inside cells. Stencil values at cells outside the
// mask are taken from the ghost field, which must cover the whole grid; pass
// nullptr only when the mask has no boundary-adjacent cells (throws otherwise).
// Outside cells of the result are zero.
Field laplacian(const Field& f, const Mask& m, const Field* ghost = nullptr);

// Midpoint quadrature sum f * h^2 over the cells of the mask.
double integrate(const Field& f, const Mask& m);

// Polyline with at least two vertices, consecutive vertices distinct.
struct Curve {
  std::vector<Vec2> pts;

  Curve() = default;
  explicit Curve(std::vector<Vec2> p);
  static Curve segment(Vec2 a, Vec2 b) { return Curve({a, b}); }
  double euclidean_length() const;
};

// Bilinear interpolation of a cell-centered field at an arbitrary point
// (clamped to the center lattice hull at the edges).
double interp_bilinear(const Field& f, Vec2 p);

// Cells with full stencil inside the mask, then eroded (L-infinity, in cell
// units) until every kept cell has at least `inset` Euclidean clearance from
// outside cell centers. inset <= 0 keeps all full-stencil cells.
Mask interior_band(const Mask& m, double inset);

// Length of the curve in the metric u |dz|^2: sum over sub-segments of
// sqrt(u at midpoint) times Euclidean sub-length. Segments are subdivided
// until each piece is at most h long. All vertices must lie inside the mask
// and the interpolated u must be positive along the curve.
double curve_length(const Curve& c, const Field& u, const Mask& m);

struct GridError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace stflow
