#pragma once

#include <complex>
#include <vector>

#include "gsmp/exec.hpp"
#include "gsmp/interval_system.hpp"

namespace gsmp {

// Rational function of Herglotz type,
//
//   V(z) = lambda0 * z + c0 + sum_k lambda_k / (c_k - z),
//
// with lambda0 >= 0, lambda_k > 0 and one real pole c_k per gap.  V' > 0
// away from the poles, so V is strictly increasing between consecutive
// poles and V(x) = y has exactly g+1 real solutions for every y when
// lambda0 > 0 (g solutions when lambda0 == 0 and y != c0).
struct PotentialV {
  double lambda0 = 1.0;
  double c0 = 0.0;
  std::vector<double> lambda;  // size g, all > 0
  std::vector<double> c;       // size g, ascending

  int genus() const { return static_cast<int>(lambda.size()); }
  double eval(double x) const;
  double deriv(double x) const;
  std::complex<double> eval(std::complex<double> z) const;
  void validate() const;  // throws std::invalid_argument
};

struct PotentialSolveReport {
  PotentialV V;
  int iterations = 0;
  double residual = 0.0;  // max band-edge defect |V(edge) -+ 2|
  bool converged = false;
};

// Solves the 2g+2 band-edge conditions V(left edge) = -2, V(right edge) = +2
// (one pair per band) by damped Newton iteration.  The iterate keeps
// lambda0, lambda_k > 0 and c_k inside gap k.  Throws std::runtime_error on
// non-convergence.
PotentialSolveReport solve_potential(const IntervalSystem& E, double tol = 1e-12,
                                     int max_iter = 100);

struct PotentialVerifyReport {
  double edge_residual = 0.0;     // max |V(edge) -+ 2| over all band edges
  double interior_excess = 0.0;   // max (|V| - 2)+ over sampled band interiors
  double exterior_margin = 0.0;   // min |V| - 2 over sampled gap interiors
  bool ok = false;
};

// Samples |V| <= 2 on the bands and |V| > 2 inside the gaps.
PotentialVerifyReport verify_potential(const PotentialV& V, const IntervalSystem& E,
                                       int samples_per_band = 257,
                                       Exec exec = Exec::Serial);

// The real solutions of V(x) = y in ascending order: one per open interval
// between consecutive poles (plus the two unbounded intervals when
// lambda0 > 0).  Throws std::domain_error if lambda0 == 0 and y == c0,
// the value V approaches at +-infinity but never attains.
std::vector<double> potential_preimage(const PotentialV& V, double y);

}  // namespace gsmp
