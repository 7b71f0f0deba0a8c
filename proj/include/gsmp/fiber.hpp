#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "gsmp/exec.hpp"
#include "gsmp/potential.hpp"
#include "gsmp/window.hpp"

namespace gsmp {

// Fiber of a constant-block periodic operator at phase theta:
//   M(theta) = B + e^{i theta} A + e^{-i theta} A*,
// Hermitian by construction.  The phase multiplies the super-diagonal
// coupling, so the period-(g+1) shift acts as the scalar e^{i theta}.
Eigen::MatrixXcd fiber_matrix(const BlockPair& pq, const std::vector<double>& poles,
                              double theta);

// Frobenius deviation of V(M(theta)) from 2 cos(theta) I.  Throws
// std::domain_error when some pole c_k is an eigenvalue of the fiber (which
// cannot happen for on-surface data).
double fiber_magic_defect(const BlockPair& pq, const std::vector<double>& poles,
                          const PotentialV& V, double theta);

// Eigenvalues of all fibers on the uniform grid theta_t = 2 pi t / n,
// t = 0..n-1, each spectrum sorted ascending.  Sorted position i traces
// band i as theta sweeps, so per-position extrema are the band edges (the
// grid contains theta = 0 and, for even n, theta = pi, where the extrema
// sit).
struct FiberSweep {
  std::vector<double> theta;
  std::vector<Eigen::VectorXd> eigs;
};
FiberSweep fiber_sweep(const BlockPair& pq, const std::vector<double>& poles, int n_theta,
                       Exec exec = Exec::Serial);

// max_theta of fiber_magic_defect over the same uniform grid.
double fiber_magic_check(const BlockPair& pq, const std::vector<double>& poles,
                         const PotentialV& V, int n_theta, Exec exec = Exec::Serial);

// Per-band [left, right] from a sweep.
std::vector<std::array<double, 2>> band_edges_from_fiber(const FiberSweep& sweep);

}  // namespace gsmp
