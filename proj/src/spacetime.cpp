#include "stflow/spacetime.hpp"

#include <algorithm>
#include <deque>
#include <unordered_set>

namespace stflow {

SpacetimeDomain::SpacetimeDomain(Grid g, double T_, std::vector<double> ts,
                                 std::vector<Mask> sl)
    : grid(g), T(T_), times(std::move(ts)), slices(std::move(sl)) {
  if (times.empty() || times.size() != slices.size())
    throw GridError("spacetime: times and slices must match and be nonempty");
  for (size_t k = 0; k < times.size(); ++k) {
    if (k > 0 && !(times[k] > times[k - 1]))
      throw GridError("spacetime: times must be strictly increasing");
    if (!(times[k] > 0.0 && times[k] < T))
      throw GridError("spacetime: times must lie inside (0, T)");
    if (!slices[k].grid.same_layout(grid))
      throw GridError("spacetime: slice grid differs");
    if (slices[k].empty()) throw GridError("spacetime: empty slice");
  }
}

SpacetimeDomain SpacetimeDomain::cylinder(const Mask& m, std::vector<double> ts,
                                          double T_) {
  std::vector<Mask> sl(ts.size(), m);
  return SpacetimeDomain(m.grid, T_, std::move(ts), std::move(sl));
}

std::vector<Worldline> worldlines(const SpacetimeDomain& s) {
  std::vector<Worldline> out;
  const int K = s.layers();
  for (int c = 0; c < s.grid.size(); ++c) {
    int run_start = -1;
    for (int k = 0; k <= K; ++k) {
      bool in = k < K && s.slices[k].at(c);
      if (in && run_start < 0) run_start = k;
      if (!in && run_start >= 0) {
        out.push_back({c, run_start, k - 1});
        run_start = -1;
      }
    }
  }
  return out;
}

bool is_expanding(const SpacetimeDomain& s) {
  for (int k = 0; k + 1 < s.layers(); ++k)
    if (!s.slices[k].subset_of(s.slices[k + 1])) return false;
  return true;
}

namespace {

Mask interior4(const Mask& m) {
  const Grid& g = m.grid;
  Mask out(g);
  auto in = [&](int i, int j) { return g.contains(i, j) && m.at(i, j); };
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      out.set(i, j, m.at(i, j) && in(i - 1, j) && in(i + 1, j) && in(i, j - 1) &&
                        in(i, j + 1));
  return out;
}

}  // namespace

ContinuityResult is_continuous(const SpacetimeDomain& s) {
  if (!is_expanding(s))
    throw GridError("is_continuous: criterion requires an expanding domain");
  ContinuityResult res;
  const int K = s.layers();
  // Expanding, so the intersection of all later slices is the next slice.
  // The discrete interior erodes by one cell, so it under-approximates the
  // continuum interior; the informative direction of the identity at raster
  // scale is that every cell of that interior must already be present in the
  // current slice (the reverse containment is the expanding hypothesis).
  for (int k = 0; k + 1 < K; ++k) {
    Mask want = interior4(s.slices[k + 1]);
    for (int c = 0; c < s.grid.size(); ++c)
      if (want.at(c) && !s.slices[k].at(c)) res.violations.push_back({c, k});
  }
  res.continuous = res.violations.empty();
  return res;
}

namespace {

const int DX8[8] = {1, -1, 0, 0, 1, 1, -1, -1};
const int DY8[8] = {0, 0, 1, -1, 1, -1, 1, -1};

std::vector<int> neighbors_of(const Grid& g, int c, Adjacency adj) {
  int i = c % g.nx, j = c / g.nx;
  int n = adj == Adjacency::Four ? 4 : 8;
  std::vector<int> out;
  out.reserve(n);
  for (int d = 0; d < n; ++d) {
    int ii = i + DX8[d], jj = j + DY8[d];
    if (g.contains(ii, jj)) out.push_back(g.index(ii, jj));
  }
  return out;
}

}  // namespace

std::vector<int> isolated_points(const Grid& g, const std::vector<int>& cells,
                                 Adjacency adj) {
  std::unordered_set<int> set(cells.begin(), cells.end());
  std::vector<int> out;
  for (int c : cells) {
    bool has = false;
    for (int nb : neighbors_of(g, c, adj))
      if (set.count(nb)) {
        has = true;
        break;
      }
    if (!has) out.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

CBDecomposition cantor_bendixson(const Grid& g, const std::vector<int>& cells,
                                 Adjacency adj) {
  std::vector<int> current(cells.begin(), cells.end());
  std::sort(current.begin(), current.end());
  current.erase(std::unique(current.begin(), current.end()), current.end());
  CBDecomposition out;
  while (true) {
    std::vector<int> iso = isolated_points(g, current, adj);
    if (iso.empty()) break;
    out.scattered.insert(out.scattered.end(), iso.begin(), iso.end());
    std::unordered_set<int> drop(iso.begin(), iso.end());
    std::vector<int> next;
    next.reserve(current.size() - iso.size());
    for (int c : current)
      if (!drop.count(c)) next.push_back(c);
    current.swap(next);
  }
  out.perfect = std::move(current);
  std::sort(out.scattered.begin(), out.scattered.end());
  return out;
}

double hindsight(const SpacetimeDomain& s, int i, int j, int k, Adjacency adj) {
  const Grid& g = s.grid;
  if (!g.contains(i, j) || k < 0 || k >= s.layers())
    throw GridError("hindsight: cell or layer out of range");
  int start = g.index(i, j);
  if (!s.slices[k].at(start)) throw GridError("hindsight: cell not inside slice");
  // Backward BFS layer by layer: frontier of cells reachable at the current
  // layer; step to (same cell or spatial neighbor) inside the previous slice.
  std::vector<char> frontier(g.size(), 0), next(g.size(), 0);
  frontier[start] = 1;
  int reached = k;
  for (int layer = k; layer > 0; --layer) {
    const Mask& prev = s.slices[layer - 1];
    std::fill(next.begin(), next.end(), 0);
    bool any = false;
    for (int c = 0; c < g.size(); ++c) {
      if (!frontier[c]) continue;
      if (prev.at(c)) {
        next[c] = 1;
        any = true;
      }
      for (int nb : neighbors_of(g, c, adj))
        if (prev.at(nb)) {
          next[nb] = 1;
          any = true;
        }
    }
    if (!any) break;
    frontier.swap(next);
    reached = layer - 1;
  }
  return s.times[reached];
}

}  // namespace stflow
