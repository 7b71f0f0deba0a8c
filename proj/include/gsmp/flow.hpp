#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gsmp/jacobi_window.hpp"
#include "gsmp/transfer.hpp"
#include "gsmp/window.hpp"

namespace gsmp {

// Angle cascade of the block rotation U(p): g (sin, cos) pairs with
// (sin_phi[m-1], cos_phi[m-1]) = (p_{m-1}, R_m) / R_{m-1},
// R_i = sqrt(p_i^2 + ... + p_g^2).  Requires p_g > 0.
struct RotationPlan {
  Eigen::VectorXd sin_phi, cos_phi;
};
RotationPlan rotation_plan(const Eigen::VectorXd& p);

// U(p): the product of the g Givens rotations of the cascade, rightmost
// acting in coordinates (0,1), leftmost in (g-1,g).  Orthogonal, and
// p^T U = ||p|| e_0^T.
Eigen::MatrixXd rotation_U(const Eigen::VectorXd& p);

// Single rotation step of the flow: conjugation by the block-diagonal
// rotation built from each block's (p_{g-1}, p_g) plane, followed by the
// one-index scalar shift.  Output pole order (c_g, c_1, ..., c_{g-1});
// output window one block narrower per side.  Throws when the rotation
// norm sqrt(p_{g-1}^2 + p_g^2) of some needed block falls below margin or
// when the window is too narrow.
GsmpWindow flow_O(const GsmpWindow& w, double margin = 1e-12);

// Same map evaluated the expensive way: assemble, conjugate, shift,
// re-extract.  Keeps the explicit index bookkeeping honest.  Output blocks
// start one block later than flow_O's (the shift consumes the left edge of
// the dense section).
GsmpWindow flow_O_conjugation(const GsmpWindow& w);

// Full Jacobi-flow step J = (block shift) o O^(o g), poles back in the
// original order, via the closed per-block update formulas:
//   q_i(1)^(j) = -||p_j|| p_i / (R_i R_{i+1}),            i < g
//   q_g(1)^(j) = <B_{j+1} p_{j+1}, p_{j+1}> ||p_j|| / (p_g ||p_{j+1}||^3)
//   p_i(1)^(j) = (U(p_j)^T B_j U(p_j) e_0)_{i+1},          i < g
//   p_g(1)^(j) = (||p_{j+1}|| / ||p_j||) p_g^(j)
// Output block j consumes input blocks j and j+1; the window shrinks one
// block per side.
GsmpWindow flow_J_fast(const GsmpWindow& w, double margin = 1e-12);

// Reference path: g applications of flow_O, then one whole-block relabel.
GsmpWindow flow_J_reference(const GsmpWindow& w, double margin = 1e-12);

// Dense oracle path: shift of U* A U by one scalar index.
GsmpWindow flow_J_conjugation(const GsmpWindow& w);

// Largest |p|/|q| entry difference over the intersection of trusted
// ranges.  Throws if the poles differ or the intersection is empty.
double window_max_diff(const GsmpWindow& a, const GsmpWindow& b);

// Per-iterate scalar diagnostics along a flow run.
struct FlowStep {
  long n = 0;
  double a = 0.0;                // ||p_0(n)||
  double b_prev = 0.0;           // q_g^(-1)(n) p_g^(-1)(n)
  double min_lambda_sharp = 0.0; // class certificate of the iterate
  double dual_max_dev = 0.0;     // fast-vs-reference deviation of the step
                                 // that produced this iterate (0 for n=0 or
                                 // when dual-path checking is off)
};

struct FlowTrace {
  std::vector<GsmpWindow> iterates;  // n = 0..N (possibly fewer on early stop)
  std::vector<FlowStep> steps;       // one per stored iterate
  long early_stop = -1;              // first step that could not be taken, or -1
};

struct FlowOptions {
  bool dual_path = false;    // re-derive each step via flow_J_reference and compare
  double class_margin = 1e-8;
  double dual_tol = 1e-9;    // abort threshold for the dual-path deviation
};

// Iterates flow_J_fast n_steps times from w0 (whose trusted range must
// contain blocks -1..0), recording diagnostics per iterate.  Stops early
// (recorded, not thrown) when the trusted window can no longer cover the
// diagnostic blocks or the class certificate fails; throws on dual-path
// disagreement, which always signals a bug rather than data.
FlowTrace flow_run(const GsmpWindow& w0, int n_steps, const FlowOptions& opts = {});

// a(n) = ||p_0(n)||, b(n-1) = q_g^(-1)(n) p_g^(-1)(n) over the longest
// range the trace determines completely: n in [0, N-1] for N+1 iterates.
JacobiWindow extract_jacobi(const FlowTrace& trace);

}  // namespace gsmp
