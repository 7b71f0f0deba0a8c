#include "gsmp/fiber.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <numbers>

namespace gsmp {

Eigen::MatrixXcd fiber_matrix(const BlockPair& pq, const std::vector<double>& poles,
                              double theta) {
  const std::complex<double> phase(std::cos(theta), std::sin(theta));
  const Eigen::MatrixXd A = block_A(pq.p);
  Eigen::MatrixXcd M = block_B(pq, poles).cast<std::complex<double>>();
  M += phase * A.cast<std::complex<double>>();
  M += std::conj(phase) * A.transpose().cast<std::complex<double>>();
  return M;
}

double fiber_magic_defect(const BlockPair& pq, const std::vector<double>& poles,
                          const PotentialV& V, double theta) {
  const Eigen::MatrixXcd M = fiber_matrix(pq, poles, theta);
  const Eigen::Index n = M.rows();
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(n, n);
  Eigen::MatrixXcd W = V.lambda0 * M + V.c0 * I;
  for (size_t k = 0; k < V.c.size(); ++k) {
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(V.c[k] * I - M);
    if (!lu.isInvertible())
      throw std::domain_error("fiber_magic_defect: pole coincides with a fiber eigenvalue");
    W += V.lambda[k] * lu.inverse();
  }
  W -= 2.0 * std::cos(theta) * I;
  return W.norm();
}

FiberSweep fiber_sweep(const BlockPair& pq, const std::vector<double>& poles, int n_theta,
                       Exec exec) {
  if (n_theta < 2) throw std::invalid_argument("fiber_sweep: need at least two grid points");
  FiberSweep sweep;
  sweep.theta.resize(n_theta);
  sweep.eigs.resize(n_theta);
  for (int t = 0; t < n_theta; ++t)
    sweep.theta[t] = 2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(n_theta);
  for_each_index(n_theta, exec, [&](long t) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(
        fiber_matrix(pq, poles, sweep.theta[static_cast<size_t>(t)]),
        Eigen::EigenvaluesOnly);
    sweep.eigs[static_cast<size_t>(t)] = es.eigenvalues();
  });
  return sweep;
}

double fiber_magic_check(const BlockPair& pq, const std::vector<double>& poles,
                         const PotentialV& V, int n_theta, Exec exec) {
  if (n_theta < 2)
    throw std::invalid_argument("fiber_magic_check: need at least two grid points");
  std::vector<double> defect(n_theta);
  for_each_index(n_theta, exec, [&](long t) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(n_theta);
    defect[static_cast<size_t>(t)] = fiber_magic_defect(pq, poles, V, theta);
  });
  double worst = 0.0;
  for (double d : defect) worst = std::max(worst, d);
  return worst;
}

std::vector<std::array<double, 2>> band_edges_from_fiber(const FiberSweep& sweep) {
  if (sweep.eigs.empty()) return {};
  const Eigen::Index nb = sweep.eigs.front().size();
  std::vector<std::array<double, 2>> edges(
      nb, {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()});
  for (const auto& ev : sweep.eigs)
    for (Eigen::Index i = 0; i < nb; ++i) {
      edges[static_cast<size_t>(i)][0] = std::min(edges[static_cast<size_t>(i)][0], ev(i));
      edges[static_cast<size_t>(i)][1] = std::max(edges[static_cast<size_t>(i)][1], ev(i));
    }
  return edges;
}

}  // namespace gsmp
