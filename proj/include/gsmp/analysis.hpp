#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <vector>

#include "gsmp/exec.hpp"
#include "gsmp/flow.hpp"
#include "gsmp/interval_system.hpp"
#include "gsmp/iso.hpp"
#include "gsmp/jacobi_window.hpp"
#include "gsmp/potential.hpp"
#include "gsmp/resolvent.hpp"
#include "gsmp/window.hpp"

namespace gsmp {

// ---------------------------------------------------------------------------
// Lanczos map: block window -> scalar Jacobi coefficients
// ---------------------------------------------------------------------------

// Tridiagonalizes the one-sided restrictions of the assembled window by the
// three-term recurrence with full reorthogonalization (two modified
// Gram-Schmidt sweeps per step).  The plus side starts from the normalized
// projection of A e_{-1} onto sites >= 0, which is p_0/||p_0|| placed in
// block 0, so a(0) = ||p_0|| by construction; the minus side starts from
// e_{-1} itself and fills n <= -1.  Returns coefficients on
// [-d_minus, d_plus - 1].  Depths are limited to half the corresponding
// one-sided truncation size so boundary contamination stays out of the
// output.  Throws std::runtime_error on recurrence breakdown
// (residual norm < 1e-13 before the requested depth).
JacobiWindow lanczos_F(const GsmpWindow& w, int d_minus, int d_plus);

// Symmetric convenience: coefficients for |n| < depth.
JacobiWindow lanczos_F(const GsmpWindow& w, int depth);

// ---------------------------------------------------------------------------
// Resolvent functions of the half-line restrictions
// ---------------------------------------------------------------------------

struct ResolventValue {
  std::complex<double> value{0.0, 0.0};
  double trunc_err = 0.0;  // |value - same computation at half depth|
};

// side=+1: <(J_+ - z)^{-1} e_0, e_0> over rows n >= 0, by the backward
// continued-fraction recursion m_k = 1/(b(k) - z - a(k+1)^2 m_{k+1}).
// side=-1: <(J_- - z)^{-1} e_{-1}, e_{-1}> by the mirrored recursion.
// Requires Im z != 0 or z away from the truncation spectrum (a vanishing
// recursion denominator throws std::runtime_error).
ResolventValue resolvent_r(const JacobiWindow& J, std::complex<double> z, int side = +1);

// Same entries computed from the block window: dense solve of the one-sided
// restriction, cyclic vector p_0/||p_0|| (plus) or e_{-1} (minus).
ResolventValue resolvent_r(const GsmpWindow& w, std::complex<double> z, int side = +1);

// ---------------------------------------------------------------------------
// Coefficient distances
// ---------------------------------------------------------------------------

// Geometrically weighted distance between coefficient windows that share
// n_lo:  dist^2 = sum_i (|da(i)|^2 + |db(i)|^2) eta^{2i} over the common
// range, i counted from n_lo.  The weight makes the truncated tail
// negligible.  Throws on eta outside (0,1) or mismatched n_lo.
double dist_eta(const JacobiWindow& J1, const JacobiWindow& J2, double eta);

// Upper bound on the distance from a half-line window (n_lo = 0) to the
// sampled isospectral family: minimum of dist_eta against the Lanczos
// coefficients of each sample's periodic operator and of its first
// n_shifts flow translates (the family is shift invariant; translating the
// samples makes the sampled set see that).
double dist_to_isospectral(const JacobiWindow& J, const std::vector<IsoPoint>& samples,
                           double eta, int n_shifts = 4);

// ---------------------------------------------------------------------------
// Killip-Simon functional, coefficient side
// ---------------------------------------------------------------------------

// Per-block summands
//   summand_j = 1/2 { tr(v_j^T v_j + w_j^2 + v_{j+1} v_{j+1}^T) - 2(g+1) }
//               - log det v_j - log det v_{j+1}
// over j in [j_lo, j_hi] (determinants are products of coupling diagonals;
// requires vb to hold couplings j_lo .. j_hi+1).  partial[i] is the running
// sum through j_lo + i.  Throws std::domain_error when some coupling
// diagonal entry is <= 0 (the log is undefined there: a class violation).
struct KsSummands {
  long j_lo = 0;
  std::vector<double> summand;
  std::vector<double> partial;
  double total = 0.0;
};
KsSummands ks_functional_H(const VBlocks& vb, long j_lo, long j_hi);

// One-step drop of the half-line functional under the flow:
//   delta = 1/2 ||V(A') e_{-1}||^2 - 1 - log( v'_{-1}(g,g) * v'_0(g,g) )
// where A' is the flow image of w and v' its couplings.  Needs trusted
// blocks [-4, 2] of w: one flow step, then the local systems behind the
// couplings at -1 and 0 reach one block further on each side.
double ks_delta(const GsmpWindow& w, const PotentialV& V);

// ks_delta along a flow trace; stops early (returning the computed prefix)
// once an iterate's trusted range is too narrow.
std::vector<double> ks_delta_series(const FlowTrace& trace, const PotentialV& V);

// Hilbert-Schmidt bookkeeping of the same section: per-block squared
// residuals ||w_j||_F^2 (+ ||v_j - I||_F^2 past the first block) with
// running partial sums; total is the root of the full sum.
struct HsReport {
  long j_lo = 0;
  std::vector<double> per_block;
  std::vector<double> partial;
  double total = 0.0;
};
HsReport hs_residual_report(const VBlocks& vb);

// ---------------------------------------------------------------------------
// Spectral data of truncations and the spectral-side functional
// ---------------------------------------------------------------------------

struct SpectralData {
  Eigen::VectorXd eigenvalues;  // ascending
  Eigen::VectorXd weights;      // squared cyclic-vector components; sum 1
  int N = 0;
};

// Eigen-decomposition of the N x N truncation of J_+ (rows 0..N-1); weights
// are squared first components of the orthonormal eigenvectors.
SpectralData spectral_data(const JacobiWindow& J, int N);

// Same for the block window's plus-side truncation (N scalar rows) with
// cyclic vector p_0/||p_0||.
SpectralData spectral_data(const GsmpWindow& w, int N);

struct KsSpectralOptions {
  double eps = 0.0;         // smoothing height; 0 means 5/N
  double edge_delta = 0.0;  // collar excluded at band edges; 0 means 1/sqrt(N)
  int nodes_per_band = 201; // Gauss-Legendre nodes per band
  Exec exec = Exec::Serial;
};

struct KsSpectralTerms {
  double ac_term = 0.0;  // integral over the shrunk bands of |log density| * sqrt(edge distance)
  double ev_term = 0.0;  // sum over eigenvalues off E of dist(x, E)^{3/2}
  double eps = 0.0;
  double edge_delta = 0.0;
};

// Spectral-side diagnostic: the smoothed density sigma'_eps(x) =
// Im r_+(x + i*eps) / pi of the N-row truncation, integrated per band
// (minus edge_delta collars) against the edge-vanishing weight
// sqrt(dist(x, R \ E)); plus the (3/2)-moment of eigenvalues off E.
// For finite data this is a bounded-vs-growing diagnostic, not a value of
// the infinite-volume functional.
KsSpectralTerms ks_spectral_side(const JacobiWindow& J, int N, const IntervalSystem& E,
                                 const KsSpectralOptions& opts = {});

// Same from precomputed spectral data; r_+ is the finite Herglotz sum
// sum_i weight_i / (x_i - z).
KsSpectralTerms ks_spectral_side(const SpectralData& sd, const IntervalSystem& E,
                                 const KsSpectralOptions& opts = {});

// Gauss-Legendre rule on [-1, 1] from the symmetric tridiagonal
// eigenproblem of the Legendre recurrence.
void gauss_legendre(int n, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

// ---------------------------------------------------------------------------
// Matrix-measure density identity
// ---------------------------------------------------------------------------

// det[ 1/(c_j - x_k) ] by the closed product formula
//   prod_{j<j'} (c_j - c_{j'}) * prod_{k<k'} (x_{k'} - x_k) / prod_{j,k} (c_j - x_k).
double cauchy_determinant(const std::vector<double>& c, const std::vector<double>& x);

struct MatrixDensityResult {
  std::vector<double> preimages;  // solutions of V(x) = y, ascending
  double det_sigma = 0.0;
  double target = 0.0;            // prod_i sigma'(x_i) / prod_k lambda_k
  double residual = 0.0;          // |det - target| / max(|target|, eps)
};

// Density identity for a pure-pole potential (lambda0 = 0): assembles
//   Sigma'(y) = sum_i W(x_i)^T (sigma'(x_i)/V'(x_i)) W(x_i),
//   W(x) = [1/(c_1 - x), ..., 1/(c_g - x)],
// over the g preimages of y and compares det Sigma'(y) with
// prod sigma'(x_i) / prod lambda_k.  sigma_values holds sigma'(x_i) in
// ascending-preimage order.  Throws when lambda0 != 0, y = c0, a preimage
// collides with a pole, or the value count mismatches.
MatrixDensityResult matrix_density_check(const PotentialV& V, double y,
                                         const std::vector<double>& sigma_values);

// ---------------------------------------------------------------------------
// Square-summability diagnostics along the flow
// ---------------------------------------------------------------------------

// Five deviation families per iterate n, entering as squared magnitudes:
//   0: p^{(-1)}_j(n) - p^{(0)}_j(n), j < g
//   1: q^{(-1)}_j(n) - q^{(0)}_j(n), j < g
//   2: lambda0 * p^{(0)}_g(n) - 1
//   3: lambda0 * <p_0(n), q_0(n)> + c0
//   4: Lambda_k(p_0(n), q_0(n)) - lambda_k over all poles
// partial[f][n] is the running sum of family f through iterate n;
// last50_growth[f] = (S_end - S_{end-50}) / S_end, 0 when the trace is
// shorter than 51 iterates.
struct CoefficientDiagnostics {
  static constexpr int n_families = 5;
  std::array<std::vector<double>, n_families> partial;
  std::array<double, n_families> last50_growth{};
};
CoefficientDiagnostics ks_coefficient_diagnostics(const FlowTrace& trace,
                                                  const PotentialV& V);

// Tail growth of a nondecreasing partial-sum sequence:
// (S_end - S_{end-k}) / S_end; 0 for short or vanishing sequences.
double tail_growth(const std::vector<double>& partial, int k = 50);

// Aggregate emitted by the report pipeline.
struct KsReport {
  KsSummands h_plus;
  HsReport hs;
  std::vector<double> delta_series;
  KsSpectralTerms spectral;
  CoefficientDiagnostics coeffs;
};

}  // namespace gsmp
