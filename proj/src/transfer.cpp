#include "gsmp/transfer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gsmp {

namespace {

using M2 = Eigen::Matrix2d;

void check_pole_index(int k, int g) {
  if (k < 1 || k > g) throw std::out_of_range("pole index must lie in 1..g");
}

// Factor chain of the residue functional at pole k: the finite factors with
// the k-th one removed, in product order, then the infinity factor.  The
// middle (rank-one) factor is inserted by the callers.
//
// chain layout:  pre[0..k-2] | rank-one | post[k..g-1] | inf
M2 pre_product(int k, const BlockPair& pq, const std::vector<double>& poles, double z) {
  M2 m = M2::Identity();
  for (int j = 0; j + 1 <= k - 1; ++j) m = m * bp_factor(z, poles[j], pq.p(j), pq.q(j));
  return m;
}

M2 post_product(int k, const BlockPair& pq, const std::vector<double>& poles, double z) {
  const int g = static_cast<int>(poles.size());
  M2 m = M2::Identity();
  for (int j = k; j <= g - 1; ++j) m = m * bp_factor(z, poles[j], pq.p(j), pq.q(j));
  return m;
}

}  // namespace

double lambda_residue(int k, const BlockPair& pq, const std::vector<double>& poles) {
  const int g = static_cast<int>(poles.size());
  check_pole_index(k, g);
  const double z = poles[k - 1];
  const Eigen::RowVector2d row(-pq.q(k - 1), pq.p(k - 1));
  const Eigen::Vector2d col(pq.p(k - 1), pq.q(k - 1));
  const M2 mid = post_product(k, pq, poles, z) * bp_factor_inf(z, pq.p(g), pq.q(g)) *
                 pre_product(k, pq, poles, z);
  return row * mid * col;
}

double lambda_sharp(int k, const BlockPair& upper, const BlockPair& lower,
                    const std::vector<double>& poles) {
  const int g = static_cast<int>(poles.size());
  check_pole_index(k, g);
  const double z = poles[k - 1];
  // Rank-one middle factor [p^u; q^u] [q^l, -p^l] built from both pairs;
  // leading factors come from the upper pair, trailing ones (and the
  // infinity factor) from the lower pair.
  M2 mid;
  mid(0, 0) = upper.p(k - 1) * lower.q(k - 1);
  mid(0, 1) = -upper.p(k - 1) * lower.p(k - 1);
  mid(1, 0) = upper.q(k - 1) * lower.q(k - 1);
  mid(1, 1) = -upper.q(k - 1) * lower.p(k - 1);
  const M2 prod = pre_product(k, upper, poles, z) * mid * post_product(k, lower, poles, z) *
                  bp_factor_inf(z, lower.p(g), lower.q(g));
  return -prod.trace();
}

double lambda_iso(int k, const BlockPair& pq, const std::vector<double>& poles) {
  return lambda_sharp(k, pq, pq, poles);
}

Eigen::VectorXd lambda_iso_grad(int k, const BlockPair& pq, const std::vector<double>& poles) {
  const int g = static_cast<int>(poles.size());
  check_pole_index(k, g);
  const double z = poles[k - 1];

  // Factor chain: F_1 .. F_{k-1}, R, F_{k+1} .. F_g, F_inf where F_m uses
  // pair m-1 and pole c_m, R = [p;q][q,-p] uses pair k-1, F_inf uses pair g.
  // Each pair appears in exactly one factor, so the gradient is a sum of
  // single-factor substitutions.
  const int nf = g + 1;  // number of chain factors (rank-one included, inf included)
  std::vector<M2> F(nf + 1);
  // positions 0..g: finite factors and the rank-one in slot k-1; slot g is inf.
  for (int m = 1; m <= g; ++m) {
    if (m == k) {
      M2 R;
      const double p = pq.p(k - 1), q = pq.q(k - 1);
      R << p * q, -p * p, q * q, -p * q;
      F[m - 1] = R;
    } else {
      F[m - 1] = bp_factor(z, poles[m - 1], pq.p(m - 1), pq.q(m - 1));
    }
  }
  F[g] = bp_factor_inf(z, pq.p(g), pq.q(g));

  std::vector<M2> prefix(nf + 1), suffix(nf + 1);
  prefix[0] = M2::Identity();
  for (int i = 0; i < nf; ++i) prefix[i + 1] = prefix[i] * F[i];
  suffix[nf] = M2::Identity();
  for (int i = nf - 1; i >= 0; --i) suffix[i] = F[i] * suffix[i + 1];

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(2 * (g + 1));
  auto add = [&](int slot, const M2& dF, int coord) {
    grad(coord) = -(prefix[slot] * dF * suffix[slot + 1]).trace();
  };

  for (int m = 1; m <= g; ++m) {
    const int slot = m - 1;
    const double p = pq.p(m - 1), q = pq.q(m - 1);
    M2 dp, dq;
    if (m == k) {
      dp << q, -2 * p, 0, -q;
      dq << p, 0, 2 * q, -p;
    } else {
      const double u = 1.0 / (poles[m - 1] - z);
      dp << -u * q, u * 2 * p, 0, u * q;
      dq << -u * p, 0, -u * 2 * q, u * p;
    }
    add(slot, dp, m - 1);
    add(slot, dq, (g + 1) + (m - 1));
  }
  {
    const double p = pq.p(g);
    M2 dp, dq;
    dp << 0, -1, -1.0 / (p * p), -z / (p * p);
    dq << 0, 0, 0, -1;
    add(g, dp, g);
    add(g, dq, 2 * g + 1);
  }
  return grad;
}

double qg_from_traces(const BlockPair& pq, const std::vector<double>& poles, double c0) {
  const int g = static_cast<int>(poles.size());
  if (g == 0) return -c0;
  double acc = 0.0;
  for (int k = 1; k <= g; ++k) {
    const double z = poles[k - 1];
    M2 mid;
    const double p = pq.p(k - 1), q = pq.q(k - 1);
    // [p; q] [-q, p]
    mid << -p * q, p * p, -q * q, p * q;
    M2 tail = M2::Zero();
    tail(1, 1) = 1.0 / pq.p(g);
    acc += (pre_product(k, pq, poles, z) * mid * post_product(k, pq, poles, z) * tail).trace();
  }
  return -acc - c0;
}

ClassReport check_gsmp_class(const GsmpWindow& w, double margin) {
  w.validate();
  ClassReport rep;
  rep.min_lambda_sharp = std::numeric_limits<double>::infinity();
  const int g = w.genus();
  if (g == 0 || w.t_lo >= w.t_hi) {
    // Nothing to certify beyond p[g] > 0, which validate() enforced.
    rep.certified = true;
    rep.min_lambda_sharp = std::numeric_limits<double>::infinity();
    return rep;
  }
  for (long j = w.t_lo; j < w.t_hi; ++j) {
    for (int k = 1; k <= g; ++k) {
      const double v = lambda_sharp(k, w.at(j + 1), w.at(j), w.poles);
      if (v < rep.min_lambda_sharp) {
        rep.min_lambda_sharp = v;
        rep.arg_j = j;
        rep.arg_k = k;
      }
    }
  }
  rep.certified = rep.min_lambda_sharp > margin;
  return rep;
}

}  // namespace gsmp
