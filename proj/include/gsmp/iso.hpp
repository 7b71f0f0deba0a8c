#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gsmp/exec.hpp"
#include "gsmp/potential.hpp"
#include "gsmp/transfer.hpp"
#include "gsmp/window.hpp"

namespace gsmp {

// A certified point of the isospectral surface of V: the block pair
// satisfies p_g = 1/lambda0, q_g = -c0 - lambda0 sum_{j<g} p_j q_j and
// Lambda_k = lambda_k for every pole.  margin is the smallest
// Lambda-functional value (the class-positivity certificate; +inf at g=0
// where there is nothing to certify).
struct IsoPoint {
  BlockPair pair;
  PotentialV V;
  double residual = 0.0;
  double margin = 0.0;
};

// residual vector (p_g - 1/lambda0,
//                  q_g + c0 + lambda0 sum_{j<g} p_j q_j,
//                  Lambda_1 - lambda_1, ..., Lambda_g - lambda_g).
Eigen::VectorXd iso_residuals(const BlockPair& pq, const PotentialV& V);

// Jacobian of (Lambda_1..Lambda_g) in the 2g free coordinates
// (p_0..p_{g-1}, q_0..q_{g-1}), at fixed (p_g, q_g).
enum class JacobianMode { Analytic, FiniteDifference };
struct IsoJacobian {
  JacobianMode mode = JacobianMode::Analytic;
  Eigen::MatrixXd T;  // g x 2g
};
IsoJacobian iso_jacobian(const BlockPair& pq, const PotentialV& V,
                         JacobianMode mode = JacobianMode::Analytic);

// Pins one of the 2g free coordinates: idx < g selects p_idx, idx >= g
// selects q_{idx-g}.
struct Pin {
  int idx = 0;
  double value = 0.0;
};

// Damped Newton on the g+2 surface equations with g coordinates pinned
// (the complementary free coordinates plus p_g, q_g are the unknowns).
// Keeps p_g > 0 along the way, normalizes signs per block pair on exit
// ((p_j,q_j) and (-p_j,-q_j) are the same surface point), and certifies
// the Lambda margin.  Throws std::runtime_error on non-convergence or a
// nonpositive margin.
IsoPoint solve_iso_point_pinned(const PotentialV& V, const BlockPair& seed,
                                const std::vector<Pin>& pins, double tol = 1e-12,
                                int max_iter = 100);

// Convenience chart: pins q_0..q_{g-1} at the seed's values.
IsoPoint solve_iso_point(const PotentialV& V, const BlockPair& seed, double tol = 1e-12,
                         int max_iter = 100);

// Closed-form surface point with all free q's zero:
//   p_{k-1} = sqrt(lambda_k/lambda0), p_g = 1/lambda0, q_g = -c0.
// Exact (to rounding), hence both a certified sample and a Newton seed.
BlockPair anchor_pair(const PotentialV& V);

// Canonical representative under the per-pair sign identification: flips
// any (p_j, q_j), j < g, with p_j < 0 (or p_j = 0 and q_j < 0).
void normalize_signs(BlockPair& pq);

// Spread of certified points across the surface.  g=0: the unique point,
// repeated.  g=1: radial sweep in the (p_0, q_0) chart, which traverses the
// whole quotient circle.  g>=2: pinned-q offsets from the anchor on a
// low-discrepancy lattice, shrunk toward the anchor on failure; points
// whose chart fails are skipped, so fewer than `count` points may return.
std::vector<IsoPoint> sample_torus(const PotentialV& V, int count, Exec exec = Exec::Serial);

// Constant-block two-sided window, blocks j in [-half_width, half_width).
GsmpWindow build_periodic(const IsoPoint& pt, long half_width);

}  // namespace gsmp
