#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace gsmp {

// Generating pair for one block column: vectors p, q of length g+1.
// Admissible blocks have p[g] > 0.
struct BlockPair {
  Eigen::VectorXd p, q;

  int size() const { return static_cast<int>(p.size()); }
};

// Off-diagonal block: only the last row is populated, and it carries p^T.
Eigen::MatrixXd block_A(const Eigen::VectorXd& p);

// Diagonal block: upper triangle (with diagonal) of q p^T, strict lower
// triangle of p q^T, plus diag(c_1, ..., c_g, 0).  Symmetric by
// construction.
Eigen::MatrixXd block_B(const BlockPair& pq, const std::vector<double>& poles);

// A finite stretch of generating pairs of a two-sided block Jacobi matrix:
// diagonal blocks B(p_j, q_j), super-diagonal blocks A(p_{j+1}).  All
// diagonal blocks share the pole vector.  Operations that consume
// neighbouring blocks shrink the trusted range [t_lo, t_hi].
struct GsmpWindow {
  std::vector<double> poles;  // c_1..c_g
  long j_min = 0;             // block index of blocks.front()
  std::vector<BlockPair> blocks;
  long t_lo = 0, t_hi = -1;   // trusted block range, inclusive

  int genus() const { return static_cast<int>(poles.size()); }
  int bs() const { return genus() + 1; }  // scalar rows per block
  long j_max() const { return j_min + static_cast<long>(blocks.size()) - 1; }

  const BlockPair& at(long j) const;
  BlockPair& at(long j);
  void validate() const;  // shapes, p[g] > 0, trusted range sanity
};

// Constant-block window (a periodic whole-line operator restricted to the
// given block range).
GsmpWindow build_periodic(const BlockPair& pq, const std::vector<double>& poles,
                          long j_lo, long j_hi);

// Dense symmetric section over block columns [jlo, jhi] of the stored
// range.  Rows at the section boundary see truncated neighbours.
Eigen::MatrixXd assemble_window(const GsmpWindow& w, long jlo, long jhi);

// Reads generating pairs back off a dense GSMP-structured section whose
// first block row is labelled j_lo_label.  Pairs are recovered for block
// columns [j_lo_label + 1, j_hi_label]; structure_defect is the largest
// entry violating the required block pattern.
struct ExtractedWindow {
  GsmpWindow window;
  double structure_defect = 0.0;
};
ExtractedWindow window_from_dense(const Eigen::MatrixXd& M,
                                  const std::vector<double>& poles, long j_lo_label);

// Seeded additive perturbation of the generating pairs.  PowerDecay scales
// entries of block j by amplitude * max(1, |j|)^-exponent; Compact applies
// the flat amplitude on |j| <= support and nothing outside.
struct PerturbationSpec {
  enum class Family { None, PowerDecay, Compact };
  Family family = Family::None;
  double amplitude = 0.0;
  double exponent = 1.0;
  long support = 8;
  std::uint64_t seed = 1;
};
GsmpWindow apply_perturbation(const GsmpWindow& base, const PerturbationSpec& spec);

}  // namespace gsmp
