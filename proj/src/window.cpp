#include "gsmp/window.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace gsmp {

Eigen::MatrixXd block_A(const Eigen::VectorXd& p) {
  const auto n = p.size();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  A.row(n - 1) = p.transpose();
  return A;
}

Eigen::MatrixXd block_B(const BlockPair& pq, const std::vector<double>& poles) {
  const auto n = pq.p.size();
  if (pq.q.size() != n) throw std::invalid_argument("block_B: p/q size mismatch");
  if (static_cast<long>(poles.size()) + 1 != n)
    throw std::invalid_argument("block_B: pole count must be block size - 1");
  Eigen::MatrixXd B(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      B(i, j) = (i <= j) ? pq.q(i) * pq.p(j) : pq.p(i) * pq.q(j);
  for (std::size_t k = 0; k < poles.size(); ++k) B(k, k) += poles[k];
  return B;
}

const BlockPair& GsmpWindow::at(long j) const {
  if (j < j_min || j > j_max()) throw std::out_of_range("GsmpWindow: block index outside stored range");
  return blocks[static_cast<std::size_t>(j - j_min)];
}

BlockPair& GsmpWindow::at(long j) {
  if (j < j_min || j > j_max()) throw std::out_of_range("GsmpWindow: block index outside stored range");
  return blocks[static_cast<std::size_t>(j - j_min)];
}

void GsmpWindow::validate() const {
  const int n = bs();
  if (blocks.empty()) throw std::invalid_argument("GsmpWindow: no blocks");
  if (t_lo < j_min || t_hi > j_max() || t_lo > t_hi)
    throw std::invalid_argument("GsmpWindow: trusted range outside stored range");
  for (const auto& b : blocks) {
    if (b.p.size() != n || b.q.size() != n)
      throw std::invalid_argument("GsmpWindow: block vector size mismatch");
    if (!(b.p(n - 1) > 0)) throw std::invalid_argument("GsmpWindow: p[g] must be positive");
  }
}

GsmpWindow build_periodic(const BlockPair& pq, const std::vector<double>& poles,
                          long j_lo, long j_hi) {
  if (j_lo > j_hi) throw std::invalid_argument("build_periodic: empty range");
  GsmpWindow w;
  w.poles = poles;
  w.j_min = j_lo;
  w.blocks.assign(static_cast<std::size_t>(j_hi - j_lo + 1), pq);
  w.t_lo = j_lo;
  w.t_hi = j_hi;
  w.validate();
  return w;
}

Eigen::MatrixXd assemble_window(const GsmpWindow& w, long jlo, long jhi) {
  if (jlo < w.j_min || jhi > w.j_max() || jlo > jhi)
    throw std::out_of_range("assemble_window: range outside stored blocks");
  const int n = w.bs();
  const long nb = jhi - jlo + 1;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nb * n, nb * n);
  for (long j = jlo; j <= jhi; ++j) {
    const long r = (j - jlo) * n;
    M.block(r, r, n, n) = block_B(w.at(j), w.poles);
    if (j < jhi) {
      const Eigen::MatrixXd A = block_A(w.at(j + 1).p);
      M.block(r, r + n, n, n) = A;
      M.block(r + n, r, n, n) = A.transpose();
    }
  }
  return M;
}

ExtractedWindow window_from_dense(const Eigen::MatrixXd& M,
                                  const std::vector<double>& poles, long j_lo_label) {
  const int n = static_cast<int>(poles.size()) + 1;
  if (M.rows() != M.cols() || M.rows() % n != 0)
    throw std::invalid_argument("window_from_dense: matrix is not a whole number of blocks");
  const long nb = M.rows() / n;
  if (nb < 2) throw std::invalid_argument("window_from_dense: need at least two blocks");

  ExtractedWindow out;
  out.window.poles = poles;
  out.window.j_min = j_lo_label + 1;
  double defect = 0.0;

  // Pairs are read for block columns 1..nb-1 of the section: p from the
  // last row of the super-diagonal block, q from the last column of the
  // diagonal block (q_i = B(i, g) / p_g).
  for (long jb = 1; jb < nb; ++jb) {
    const long r = jb * n;
    BlockPair pq;
    pq.p = M.block(r - n, r, n, n).row(n - 1).transpose();
    if (!(pq.p(n - 1) > 0))
      throw std::invalid_argument("window_from_dense: recovered p[g] not positive");
    const Eigen::MatrixXd B = M.block(r, r, n, n);
    pq.q = B.col(n - 1) / pq.p(n - 1);

    // Structure checks: super-diagonal block vanishes off its last row,
    // and the diagonal block is exactly rebuilt from the recovered pair.
    Eigen::MatrixXd Ahat = M.block(r - n, r, n, n);
    Ahat.row(n - 1).setZero();
    defect = std::max(defect, Ahat.cwiseAbs().maxCoeff());
    defect = std::max(defect, (M.block(r - n, r, n, n) - M.block(r, r - n, n, n).transpose())
                                  .cwiseAbs()
                                  .maxCoeff());
    defect = std::max(defect, (B - block_B(pq, poles)).cwiseAbs().maxCoeff());

    out.window.blocks.push_back(std::move(pq));
  }
  out.window.t_lo = out.window.j_min;
  out.window.t_hi = out.window.j_max();
  out.structure_defect = defect;
  return out;
}

GsmpWindow apply_perturbation(const GsmpWindow& base, const PerturbationSpec& spec) {
  if (spec.family == PerturbationSpec::Family::None || spec.amplitude == 0.0) return base;
  GsmpWindow w = base;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = w.bs();
  // Fixed draw order (ascending block, p before q) keeps runs reproducible.
  for (long j = w.j_min; j <= w.j_max(); ++j) {
    double amp = 0.0;
    if (spec.family == PerturbationSpec::Family::PowerDecay) {
      amp = spec.amplitude * std::pow(std::max<double>(1.0, std::abs(static_cast<double>(j))),
                                      -spec.exponent);
    } else {  // Compact
      amp = (std::abs(j) <= spec.support) ? spec.amplitude : 0.0;
    }
    auto& blk = w.at(j);
    for (int i = 0; i < n; ++i) blk.p(i) += amp * u(rng);
    for (int i = 0; i < n; ++i) blk.q(i) += amp * u(rng);
    // Keep the block admissible; class membership is re-checked by the
    // caller, never assumed.
    if (!(blk.p(n - 1) > 0)) blk.p(n - 1) = base.at(j).p(n - 1);
  }
  return w;
}

}  // namespace gsmp
