#pragma once

#include <vector>

namespace gsmp {

// Scalar Jacobi coefficients over a contiguous index range:
// a[i] = a(n_lo + i) > 0, b[i] = b(n_lo + i).
struct JacobiWindow {
  long n_lo = 0;
  std::vector<double> a, b;

  long n_hi() const { return n_lo + static_cast<long>(a.size()) - 1; }
};

}  // namespace gsmp
