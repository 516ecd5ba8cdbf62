#pragma once

#include <utility>
#include <vector>

#include "stflow/grid.hpp"

namespace stflow {

// Time-indexed family of domain masks on a shared grid: the discrete model of
// a region swept out inside the ambient box over the interval (0, T).
struct SpacetimeDomain {
  Grid grid;
  double T = 0.0;                // final time of the governing interval
  std::vector<double> times;     // strictly increasing, inside (0, T)
  std::vector<Mask> slices;      // one mask per time, all nonempty

  SpacetimeDomain() = default;
  SpacetimeDomain(Grid g, double T_, std::vector<double> ts, std::vector<Mask> sl);

  int layers() const { return static_cast<int>(times.size()); }
  const Mask& slice(int k) const { return slices.at(k); }

  static SpacetimeDomain cylinder(const Mask& m, std::vector<double> ts, double T_);
};

// Maximal contiguous run of time indices during which one cell stays inside.
struct Worldline {
  int cell = 0;   // flat cell index
  int k0 = 0;     // first time index of the run
  int k1 = 0;     // last time index of the run (inclusive)
};

std::vector<Worldline> worldlines(const SpacetimeDomain& s);

// True iff every slice is contained in every later slice.
bool is_expanding(const SpacetimeDomain& s);

enum class Adjacency { Four = 4, Eight = 8 };

struct ContinuityResult {
  bool continuous = true;
  // (flat cell index, time index) pairs where the 4-interior of the
  // intersection of all strictly later slices holds a cell the slice lacks.
  std::vector<std::pair<int, int>> violations;
};

// Ambient continuity test for expanding domains: every cell of the discrete
// 4-interior of the intersection of all strictly later slices must already
// belong to slice_k, for every k < K. (The discrete interior erodes one cell
// ring, so it under-approximates the continuum interior; containment of the
// slice in later slices is the expanding hypothesis, checked separately.)
// Throws on non-expanding input.
ContinuityResult is_continuous(const SpacetimeDomain& s);

// Cells of the set with no neighbor in the set under the chosen adjacency.
std::vector<int> isolated_points(const Grid& g, const std::vector<int>& cells,
                                 Adjacency adj);

struct CBDecomposition {
  std::vector<int> perfect;    // no member isolated under the adjacency
  std::vector<int> scattered;  // exhausted by iterated isolated-point removal
};

// Iterated isolated-point removal: removed cells form the scattered part, the
// remainder the perfect part.
CBDecomposition cantor_bendixson(const Grid& g, const std::vector<int>& cells,
                                 Adjacency adj);

// Earliest slice time reachable from (cell, k) by stepping backward one layer
// at a time, moving to the same cell or a spatial neighbor that is inside the
// earlier slice. Returns times[k] itself when no earlier layer is reachable.
double hindsight(const SpacetimeDomain& s, int i, int j, int k,
                 Adjacency adj = Adjacency::Four);

}  // namespace stflow
