#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gsmp/exec.hpp"
#include "gsmp/potential.hpp"
#include "gsmp/transfer.hpp"
#include "gsmp/window.hpp"

namespace gsmp {

// One column of (c_k - A)^{-1}: the resolvent at pole k applied to the unit
// vector at position `pos` of block j0.  For class members the column is
// supported on blocks j0-1..j0+1 exactly, which is what makes local solves
// legitimate.
struct ResolventColumn {
  int k = 1;
  long j0 = 0;
  int pos = 0;
  Eigen::VectorXd f_prev, f_mid, f_next;
  double residual = 0.0;  // defect of the full five-block-row local system
};

// Dense least-squares solve of the local five-block-row system (the two
// outer row blocks collapse to scalar conditions).  Independent reference
// path for the closed-form column below.  Throws std::out_of_range if
// blocks j0-1..j0+1 are not all trusted, std::runtime_error if the local
// system is rank deficient (a class violation).
ResolventColumn resolvent_apply_local(const GsmpWindow& w, int k, long j0, int pos);

// Same, addressed by the scalar site index: site = j0*(g+1) + pos.
ResolventColumn resolvent_apply_local(const GsmpWindow& w, int k, long site);

// Column anchored at position k-1 of block j0, outer blocks from the closed
// product formulas (anchors 1/lambda_sharp, short transfer products for the
// remaining entries, last entry of the left block completed from the
// orthogonality row), middle block completed from its own defining rows.
// Throws std::runtime_error when a lambda_sharp anchor falls below margin.
ResolventColumn resolvent_column_closed_form(const GsmpWindow& w, int k, long j0,
                                             double margin = 1e-8);

// Banded section of V(A) = lambda0 A + c0 I + sum_k lambda_k (c_k - A)^{-1}
// held as diagonal blocks w_j, j in [j_lo, j_hi], and couplings v_j at block
// position (j-1, j), j in [j_lo+1, j_hi].  Each v_j is lower triangular up
// to triangular_defect; blocks are symmetrized by averaging with the
// transposed opposite coupling and the worst discrepancy is reported as
// asymmetry, never silently dropped.
struct VBlocks {
  long j_lo = 0, j_hi = -1;
  std::vector<Eigen::MatrixXd> w;  // w[j - j_lo]
  std::vector<Eigen::MatrixXd> v;  // v[j - j_lo - 1]
  double asymmetry = 0.0;
  double triangular_defect = 0.0;

  const Eigen::MatrixXd& wblock(long j) const;
  const Eigen::MatrixXd& vblock(long j) const;  // block (j-1, j)
};

// Assembles the section column by column from local resolvent solves.
// Needs trusted blocks [j_lo - 1, j_hi + 1] (each column solve reads one
// block either side of its anchor).  Column solves are independent, so the
// OpenMP path writes per-block slots and reduces serially afterwards.
VBlocks assemble_v_blocks(const GsmpWindow& w, const PotentialV& V, long j_lo, long j_hi,
                          Exec exec = Exec::Serial);

// Hilbert-Schmidt distance of the section from S^{g+1} + S^{-(g+1)}:
// total^2 = sum_j ||w_j||_F^2 + sum_j ||v_j - I||_F^2, each coupling counted
// once.  per_block[j - j_lo] carries the squared contribution of w_j plus
// (for j > j_lo) of v_j.
struct MagicResidual {
  long j_lo = 0;
  std::vector<double> per_block;
  double total = 0.0;
  double max_per_block = 0.0;
};
MagicResidual magic_residual(const VBlocks& vb);

// Single column of V(A) at position pos of block j0, stacked over blocks
// j0-1..j0+1 (the full support).  Cheap form used by the flow-step energy
// bookkeeping, which only ever needs one column.
struct VColumn {
  long j_first = 0;  // = j0 - 1
  Eigen::VectorXd values;  // 3 stacked blocks of size g+1
};
VColumn v_column(const GsmpWindow& w, const PotentialV& V, long j0, int pos);

}  // namespace gsmp
