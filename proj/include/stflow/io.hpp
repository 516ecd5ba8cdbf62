#pragma once

#include <iosfwd>
#include <string>

#include "stflow/grid.hpp"

namespace stflow {

struct SpacetimeDomain;
struct DiscreteMeasure;

// Text snapshot formats. Values are written with 17 significant digits so a
// write/read round trip reproduces them to the last digit.
//
//   FIELD nx ny ox oy h
//   v[0] v[1] ... (row-major, y outer, x inner)
//
//   MASK nx ny ox oy h
//   0/1 flags in the same order
//
//   SPACETIME n
//   t_0
//   <MASK block>
//   ... repeated n times; a trailing "T <value>" line carries the final time.
//
//   MEASURE total
//   <FIELD block with the density>

void write_field(std::ostream& os, const Field& f);
Field read_field(std::istream& is);
void write_mask(std::ostream& os, const Mask& m);
Mask read_mask(std::istream& is);

void save_field(const std::string& path, const Field& f);
Field load_field(const std::string& path);
void save_mask(const std::string& path, const Mask& m);
Mask load_mask(const std::string& path);

void write_spacetime(std::ostream& os, const SpacetimeDomain& s);
SpacetimeDomain read_spacetime(std::istream& is);
void save_spacetime(const std::string& path, const SpacetimeDomain& s);
SpacetimeDomain load_spacetime(const std::string& path);

void write_measure(std::ostream& os, const DiscreteMeasure& mu);
DiscreteMeasure read_measure(std::istream& is);
void save_measure(const std::string& path, const DiscreteMeasure& mu);
DiscreteMeasure load_measure(const std::string& path);

std::string format_g17(double x);

}  // namespace stflow
