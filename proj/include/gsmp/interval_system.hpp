#pragma once

#include <array>
#include <vector>

namespace gsmp {

// A finite system of closed bands on the real line, described as an outer
// interval [b0, a0] with g disjoint open gaps removed:
//
//   E = [b0, a0] \ (gap_1 u ... u gap_g),   gap_k = (lo_k, hi_k).
//
// g is the genus of the system.  Bands are the g+1 closed intervals that
// remain, ordered left to right.
struct IntervalSystem {
  double b0 = -2.0;
  double a0 = 2.0;
  std::vector<std::array<double, 2>> gaps;  // sorted, disjoint, strictly inside

  int genus() const { return static_cast<int>(gaps.size()); }

  // The g+1 closed bands [l_i, r_i], left to right.
  std::vector<std::array<double, 2>> bands() const;

  bool contains(double x) const;

  // Distance from x to E (zero on E).
  double dist_to_set(double x) const;

  // Distance from x to R \ E (zero off E; on a band, distance to the
  // nearest band edge).
  double dist_to_complement(double x) const;

  // Throws std::invalid_argument if the geometry is malformed.
  void validate() const;
};

IntervalSystem make_interval_system(double b0, double a0,
                                    std::vector<std::array<double, 2>> gaps);

}  // namespace gsmp
