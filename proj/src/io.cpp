#include "stflow/io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "stflow/measures.hpp"
#include "stflow/spacetime.hpp"

namespace stflow {

std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

void expect_word(std::istream& is, const char* word) {
  std::string tok;
  if (!(is >> tok) || tok != word)
    throw GridError(std::string("io: expected '") + word + "', got '" + tok + "'");
}

Grid read_grid_header(std::istream& is, const char* word) {
  expect_word(is, word);
  int nx = 0, ny = 0;
  double ox = 0.0, oy = 0.0, h = 0.0;
  if (!(is >> nx >> ny >> ox >> oy >> h))
    throw GridError(std::string("io: malformed ") + word + " header");
  return Grid({ox, oy}, h, nx, ny);
}

void write_grid_header(std::ostream& os, const char* word, const Grid& g) {
  os << word << ' ' << g.nx << ' ' << g.ny << ' ' << format_g17(g.origin.x) << ' '
     << format_g17(g.origin.y) << ' ' << format_g17(g.h) << '\n';
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw GridError("io: cannot open " + path + " for reading");
  return is;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw GridError("io: cannot open " + path + " for writing");
  return os;
}

}  // namespace

void write_field(std::ostream& os, const Field& f) {
  write_grid_header(os, "FIELD", f.grid);
  for (int j = 0; j < f.grid.ny; ++j) {
    for (int i = 0; i < f.grid.nx; ++i) {
      if (i) os << ' ';
      os << format_g17(f.at(i, j));
    }
    os << '\n';
  }
}

Field read_field(std::istream& is) {
  Grid g = read_grid_header(is, "FIELD");
  Field f(g, 0.0);
  for (double& x : f.v)
    if (!(is >> x)) throw GridError("io: FIELD body truncated");
  return f;
}

void write_mask(std::ostream& os, const Mask& m) {
  write_grid_header(os, "MASK", m.grid);
  for (int j = 0; j < m.grid.ny; ++j) {
    for (int i = 0; i < m.grid.nx; ++i) {
      if (i) os << ' ';
      os << (m.at(i, j) ? '1' : '0');
    }
    os << '\n';
  }
}

Mask read_mask(std::istream& is) {
  Grid g = read_grid_header(is, "MASK");
  Mask m(g);
  for (auto& b : m.inside) {
    int flag = 0;
    if (!(is >> flag) || (flag != 0 && flag != 1))
      throw GridError("io: MASK body must be 0/1 flags");
    b = static_cast<std::uint8_t>(flag);
  }
  return m;
}

void save_field(const std::string& path, const Field& f) {
  auto os = open_out(path);
  write_field(os, f);
  if (!os) throw GridError("io: write failed for " + path);
}

Field load_field(const std::string& path) {
  auto is = open_in(path);
  return read_field(is);
}

void save_mask(const std::string& path, const Mask& m) {
  auto os = open_out(path);
  write_mask(os, m);
  if (!os) throw GridError("io: write failed for " + path);
}

Mask load_mask(const std::string& path) {
  auto is = open_in(path);
  return read_mask(is);
}

void write_spacetime(std::ostream& os, const SpacetimeDomain& s) {
  os << "SPACETIME " << s.layers() << '\n';
  for (int k = 0; k < s.layers(); ++k) {
    os << format_g17(s.times[k]) << '\n';
    write_mask(os, s.slices[k]);
  }
  os << "T " << format_g17(s.T) << '\n';
}

SpacetimeDomain read_spacetime(std::istream& is) {
  expect_word(is, "SPACETIME");
  int n = 0;
  if (!(is >> n) || n <= 0) throw GridError("io: bad SPACETIME layer count");
  std::vector<double> ts;
  std::vector<Mask> slices;
  ts.reserve(n);
  slices.reserve(n);
  for (int k = 0; k < n; ++k) {
    double t = 0.0;
    if (!(is >> t)) throw GridError("io: SPACETIME time truncated");
    ts.push_back(t);
    slices.push_back(read_mask(is));
  }
  expect_word(is, "T");
  double T = 0.0;
  if (!(is >> T)) throw GridError("io: SPACETIME final time truncated");
  Grid g = slices.front().grid;
  return SpacetimeDomain(g, T, std::move(ts), std::move(slices));
}

void save_spacetime(const std::string& path, const SpacetimeDomain& s) {
  auto os = open_out(path);
  write_spacetime(os, s);
  if (!os) throw GridError("io: write failed for " + path);
}

SpacetimeDomain load_spacetime(const std::string& path) {
  auto is = open_in(path);
  return read_spacetime(is);
}

void write_measure(std::ostream& os, const DiscreteMeasure& mu) {
  os << "MEASURE " << format_g17(mu.total) << '\n';
  write_field(os, mu.density);
}

DiscreteMeasure read_measure(std::istream& is) {
  expect_word(is, "MEASURE");
  double total = 0.0;
  if (!(is >> total)) throw GridError("io: MEASURE total truncated");
  DiscreteMeasure mu;
  mu.density = read_field(is);
  mu.grid = mu.density.grid;
  mu.total = total;
  mu.validate();
  return mu;
}

void save_measure(const std::string& path, const DiscreteMeasure& mu) {
  auto os = open_out(path);
  write_measure(os, mu);
  if (!os) throw GridError("io: write failed for " + path);
}

DiscreteMeasure load_measure(const std::string& path) {
  auto is = open_in(path);
  return read_measure(is);
}

}  // namespace stflow
