#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "gsmp/window.hpp"

namespace gsmp {

// 2x2 building blocks of the pole-ordered transfer matrix.  Both factors
// have determinant one.
//
//   finite pole c:   I - ((p q, -p^2), (q^2, -p q)) / (c - z)
//   infinity factor: ((0, -p), (1/p, (z - p q)/p))
template <class S>
Eigen::Matrix<S, 2, 2> bp_factor(S z, double c, double p, double q) {
  const S u = S(1.0) / (S(c) - z);
  Eigen::Matrix<S, 2, 2> m;
  m(0, 0) = S(1.0) - u * (p * q);
  m(0, 1) = u * (p * p);
  m(1, 0) = -u * (q * q);
  m(1, 1) = S(1.0) + u * (p * q);
  return m;
}

template <class S>
Eigen::Matrix<S, 2, 2> bp_factor_inf(S z, double p, double q) {
  Eigen::Matrix<S, 2, 2> m;
  m(0, 0) = S(0.0);
  m(0, 1) = S(-p);
  m(1, 0) = S(1.0 / p);
  m(1, 1) = (z - S(p * q)) / S(p);
  return m;
}

// Product a(z,c_1;p_0,q_0) ... a(z,c_g;p_{g-1},q_{g-1}) a(z;p_g,q_g).
// Its trace is the rational potential attached to the generating pair.
template <class S>
Eigen::Matrix<S, 2, 2> transfer_matrix(S z, const BlockPair& pq,
                                       const std::vector<double>& poles) {
  const int g = static_cast<int>(poles.size());
  Eigen::Matrix<S, 2, 2> m = Eigen::Matrix<S, 2, 2>::Identity();
  for (int k = 0; k < g; ++k) m = m * bp_factor(z, poles[k], pq.p(k), pq.q(k));
  return m * bp_factor_inf(z, pq.p(g), pq.q(g));
}

// -Res_{c_k} tr of the transfer matrix, evaluated as a closed product (no
// limit): the k-th pole's residue functional of a single pair.
double lambda_residue(int k, const BlockPair& pq, const std::vector<double>& poles);

// Two-block positivity functional at pole k.  `upper` plays the role of
// block j+1 sitting above `lower` = block j; with equal arguments it
// coincides with lambda_residue.
double lambda_sharp(int k, const BlockPair& upper, const BlockPair& lower,
                    const std::vector<double>& poles);

double lambda_iso(int k, const BlockPair& pq, const std::vector<double>& poles);

// All 2(g+1) partials of lambda_iso(k) in the order
// (d/dp_0..d/dp_g, d/dq_0..d/dq_g), assembled by the product rule over the
// factor chain.
Eigen::VectorXd lambda_iso_grad(int k, const BlockPair& pq, const std::vector<double>& poles);

// q_g recovered from the pole data of the trace: an independent expression
// for the last q entry in terms of (p, q_0..q_{g-1}) and c0.
double qg_from_traces(const BlockPair& pq, const std::vector<double>& poles, double c0);

// Uniform positivity certificate over a window: min over trusted adjacent
// pairs (j+1, j) and poles k of lambda_sharp.
struct ClassReport {
  double min_lambda_sharp = 0.0;
  long arg_j = 0;  // block index attaining the minimum
  int arg_k = 0;   // pole index (1-based) attaining the minimum
  bool certified = false;
};
ClassReport check_gsmp_class(const GsmpWindow& w, double margin = 1e-8);

}  // namespace gsmp
