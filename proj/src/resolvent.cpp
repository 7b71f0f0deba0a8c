#include "gsmp/resolvent.hpp"

#include <Eigen/QR>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gsmp {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Product of the finite factors with pole labels in [lo, hi] (1-based),
// evaluated at z; empty ranges give the identity.
Eigen::Matrix2d factor_chain(const BlockPair& pq, const std::vector<double>& poles, int lo,
                             int hi, double z) {
  Eigen::Matrix2d m = Eigen::Matrix2d::Identity();
  for (int k = lo; k <= hi; ++k)
    m = m * bp_factor<double>(z, poles[k - 1], pq.p(k - 1), pq.q(k - 1));
  return m;
}

MatrixXd shifted_block(const BlockPair& pq, const std::vector<double>& poles, double c) {
  MatrixXd m = -block_B(pq, poles);
  m.diagonal().array() += c;
  return m;  // c - B
}

void require_pole(const GsmpWindow& w, int k) {
  if (k < 1 || k > w.genus())
    throw std::invalid_argument("resolvent: pole index " + std::to_string(k) +
                                " outside 1.." + std::to_string(w.genus()));
}

void require_neighbors_trusted(const GsmpWindow& w, long j0) {
  if (j0 - 1 < w.t_lo || j0 + 1 > w.t_hi)
    throw std::out_of_range("resolvent: blocks " + std::to_string(j0 - 1) + ".." +
                            std::to_string(j0 + 1) + " not inside trusted range [" +
                            std::to_string(w.t_lo) + "," + std::to_string(w.t_hi) + "]");
}

// Rows of (c_k - A) restricted to blocks j0-1..j0+1, plus the two scalar
// conditions the vanishing outer neighbours leave behind:
//   <p_{j0-1}, f_prev> = 0   and   (f_next)_g = 0.
MatrixXd local_matrix(const GsmpWindow& w, int k, long j0) {
  const int bs = w.bs();
  const double ck = w.poles[k - 1];
  const BlockPair& prev = w.at(j0 - 1);
  const BlockPair& mid = w.at(j0);
  const BlockPair& next = w.at(j0 + 1);

  MatrixXd M = MatrixXd::Zero(3 * bs + 2, 3 * bs);
  M.block(0, 0, bs, bs) = shifted_block(prev, w.poles, ck);
  M.block(0, bs, bs, bs) = -block_A(mid.p);
  M.block(bs, 0, bs, bs) = -block_A(mid.p).transpose();
  M.block(bs, bs, bs, bs) = shifted_block(mid, w.poles, ck);
  M.block(bs, 2 * bs, bs, bs) = -block_A(next.p);
  M.block(2 * bs, bs, bs, bs) = -block_A(next.p).transpose();
  M.block(2 * bs, 2 * bs, bs, bs) = shifted_block(next, w.poles, ck);
  M.block(3 * bs, 0, 1, bs) = prev.p.transpose();
  M(3 * bs + 1, 3 * bs - 1) = 1.0;
  return M;
}

double local_residual(const MatrixXd& M, const VectorXd& f, int bs, int pos) {
  VectorXd r = M * f;
  r(bs + pos) -= 1.0;
  return r.norm();
}

ResolventColumn split_column(int k, long j0, int pos, const VectorXd& f, double residual,
                             int bs) {
  ResolventColumn col;
  col.k = k;
  col.j0 = j0;
  col.pos = pos;
  col.f_prev = f.segment(0, bs);
  col.f_mid = f.segment(bs, bs);
  col.f_next = f.segment(2 * bs, bs);
  col.residual = residual;
  return col;
}

}  // namespace

ResolventColumn resolvent_apply_local(const GsmpWindow& w, int k, long j0, int pos) {
  require_pole(w, k);
  require_neighbors_trusted(w, j0);
  const int bs = w.bs();
  if (pos < 0 || pos >= bs) throw std::invalid_argument("resolvent: position outside block");

  const MatrixXd M = local_matrix(w, k, j0);
  Eigen::ColPivHouseholderQR<MatrixXd> qr(M);
  if (qr.rank() < 3 * bs)
    throw std::runtime_error("resolvent: local system rank deficient (class violation?)");
  VectorXd rhs = VectorXd::Zero(3 * bs + 2);
  rhs(bs + pos) = 1.0;
  const VectorXd f = qr.solve(rhs);
  return split_column(k, j0, pos, f, local_residual(M, f, bs, pos), bs);
}

ResolventColumn resolvent_apply_local(const GsmpWindow& w, int k, long site) {
  const long bs = w.bs();
  long j0 = site >= 0 ? site / bs : -((-site + bs - 1) / bs);
  const int pos = static_cast<int>(site - j0 * bs);
  return resolvent_apply_local(w, k, j0, pos);
}

ResolventColumn resolvent_column_closed_form(const GsmpWindow& w, int k, long j0,
                                             double margin) {
  require_pole(w, k);
  require_neighbors_trusted(w, j0);
  const int g = w.genus();
  const int bs = g + 1;
  const double ck = w.poles[k - 1];
  const BlockPair& prev = w.at(j0 - 1);
  const BlockPair& mid = w.at(j0);
  const BlockPair& next = w.at(j0 + 1);

  const double L_prev = lambda_sharp(k, mid, prev, w.poles);
  const double L_mid = lambda_sharp(k, next, mid, w.poles);
  if (L_prev < margin || L_mid < margin)
    throw std::runtime_error("resolvent: lambda_sharp anchor below margin, refusing to divide");

  // Left block: zero up to the anchor at k-1, short products above it, last
  // entry fixed by orthogonality to the p-vector.
  VectorXd f_prev = VectorXd::Zero(bs);
  f_prev(k - 1) = 1.0 / L_prev;
  const Eigen::RowVector2d row_prev(prev.q(k - 1), -prev.p(k - 1));
  for (int l = k; l <= g - 1; ++l) {
    const Eigen::Vector2d col(prev.p(l), prev.q(l));
    const double val = row_prev * factor_chain(prev, w.poles, k + 1, l, ck) * col;
    f_prev(l) = -val / ((w.poles[l] - ck) * L_prev);
  }
  double tail = 0.0;
  for (int l = 0; l < g; ++l) tail += prev.p(l) * f_prev(l);
  f_prev(g) = -tail / prev.p(g);

  // Right block: anchored at k-1 as well, short products below it, zero from
  // position k on.
  VectorXd f_next = VectorXd::Zero(bs);
  f_next(k - 1) = 1.0 / L_mid;
  const Eigen::Vector2d col_next(next.p(k - 1), next.q(k - 1));
  for (int m = 0; m <= k - 2; ++m) {
    const Eigen::RowVector2d row(next.q(m), -next.p(m));
    const double val = row * factor_chain(next, w.poles, m + 2, k - 1, ck) * col_next;
    f_next(m) = -val / ((w.poles[m] - ck) * L_mid);
  }

  // Middle block from its own defining rows: the centre block row plus the
  // two couplings back into the outer blocks.
  MatrixXd M = MatrixXd::Zero(bs + 2, bs);
  VectorXd rhs = VectorXd::Zero(bs + 2);
  M.block(0, 0, bs, bs) = shifted_block(mid, w.poles, ck);
  rhs(k - 1) += 1.0;
  rhs.segment(0, bs) += mid.p * f_prev(g);
  rhs(g) += next.p.dot(f_next);
  M.block(bs, 0, 1, bs) = mid.p.transpose();
  rhs(bs) = (shifted_block(prev, w.poles, ck) * f_prev)(g);
  M(bs + 1, g) = next.p(g);
  rhs(bs + 1) = (shifted_block(next, w.poles, ck) * f_next)(g);
  const VectorXd f_mid = M.colPivHouseholderQr().solve(rhs);

  VectorXd f(3 * bs);
  f << f_prev, f_mid, f_next;
  const double res = local_residual(local_matrix(w, k, j0), f, bs, k - 1);
  return split_column(k, j0, k - 1, f, res, bs);
}

const Eigen::MatrixXd& VBlocks::wblock(long j) const {
  if (j < j_lo || j > j_hi) throw std::out_of_range("VBlocks: diagonal block outside range");
  return w[static_cast<size_t>(j - j_lo)];
}

const Eigen::MatrixXd& VBlocks::vblock(long j) const {
  if (j <= j_lo || j > j_hi) throw std::out_of_range("VBlocks: coupling block outside range");
  return v[static_cast<size_t>(j - j_lo - 1)];
}

VBlocks assemble_v_blocks(const GsmpWindow& w, const PotentialV& V, long j_lo, long j_hi,
                          Exec exec) {
  if (j_hi < j_lo) throw std::invalid_argument("assemble_v_blocks: empty block range");
  const int g = w.genus();
  const int bs = g + 1;
  if (static_cast<int>(V.c.size()) != g)
    throw std::invalid_argument("assemble_v_blocks: potential pole count differs from window");
  for (int k = 0; k < g; ++k)
    if (std::abs(V.c[k] - w.poles[k]) > 1e-12 * std::max(1.0, std::abs(w.poles[k])))
      throw std::invalid_argument("assemble_v_blocks: potential poles differ from window poles");

  const long nb = j_hi - j_lo + 1;
  // Per-column-block pieces of V(A): rows one block above, on, and one block
  // below the diagonal.  Written independently per block, reduced serially.
  std::vector<MatrixXd> top(nb), diag(nb), below(nb);
  for_each_index(nb, exec, [&](long i) {
    const long j = j_lo + i;
    MatrixXd t = V.lambda0 * block_A(w.at(j).p);
    MatrixXd d = V.lambda0 * block_B(w.at(j), w.poles);
    d.diagonal().array() += V.c0;
    MatrixXd b = V.lambda0 * block_A(w.at(j + 1).p).transpose();
    for (int k = 1; k <= g; ++k) {
      const MatrixXd M = local_matrix(w, k, j);
      Eigen::ColPivHouseholderQR<MatrixXd> qr(M);
      if (qr.rank() < 3 * bs)
        throw std::runtime_error("assemble_v_blocks: local system rank deficient");
      for (int pos = 0; pos < bs; ++pos) {
        VectorXd rhs = VectorXd::Zero(3 * bs + 2);
        rhs(bs + pos) = 1.0;
        const VectorXd f = qr.solve(rhs);
        t.col(pos) += V.lambda[k - 1] * f.segment(0, bs);
        d.col(pos) += V.lambda[k - 1] * f.segment(bs, bs);
        b.col(pos) += V.lambda[k - 1] * f.segment(2 * bs, bs);
      }
    }
    top[i] = std::move(t);
    diag[i] = std::move(d);
    below[i] = std::move(b);
  });

  VBlocks out;
  out.j_lo = j_lo;
  out.j_hi = j_hi;
  out.w.resize(nb);
  out.v.resize(nb - 1);
  for (long i = 0; i < nb; ++i) {
    out.asymmetry =
        std::max(out.asymmetry, (diag[i] - diag[i].transpose()).cwiseAbs().maxCoeff());
    out.w[i] = 0.5 * (diag[i] + diag[i].transpose().eval());
    if (i > 0) {
      const MatrixXd other = below[i - 1].transpose();
      out.asymmetry = std::max(out.asymmetry, (top[i] - other).cwiseAbs().maxCoeff());
      out.v[i - 1] = 0.5 * (top[i] + other);
      for (int r = 0; r < bs; ++r)
        for (int c = r + 1; c < bs; ++c)
          out.triangular_defect = std::max(out.triangular_defect, std::abs(out.v[i - 1](r, c)));
    }
  }
  return out;
}

MagicResidual magic_residual(const VBlocks& vb) {
  MagicResidual mr;
  mr.j_lo = vb.j_lo;
  const long nb = vb.j_hi - vb.j_lo + 1;
  if (nb <= 0) return mr;
  const Eigen::Index bs = vb.w.empty() ? 0 : vb.w[0].rows();
  double sum = 0.0, worst = 0.0;
  mr.per_block.resize(nb);
  for (long i = 0; i < nb; ++i) {
    double s = vb.w[i].squaredNorm();
    if (i > 0) s += (vb.v[i - 1] - MatrixXd::Identity(bs, bs)).squaredNorm();
    mr.per_block[i] = s;
    sum += s;
    worst = std::max(worst, s);
  }
  mr.total = std::sqrt(sum);
  mr.max_per_block = std::sqrt(worst);
  return mr;
}

VColumn v_column(const GsmpWindow& w, const PotentialV& V, long j0, int pos) {
  const int g = w.genus();
  const int bs = g + 1;
  if (pos < 0 || pos >= bs) throw std::invalid_argument("v_column: position outside block");

  VColumn col;
  col.j_first = j0 - 1;
  col.values = VectorXd::Zero(3 * bs);
  col.values(g) += V.lambda0 * w.at(j0).p(pos);  // row g of block j0-1
  col.values.segment(bs, bs) += V.lambda0 * block_B(w.at(j0), w.poles).col(pos);
  col.values(bs + pos) += V.c0;
  if (pos == g) col.values.segment(2 * bs, bs) += V.lambda0 * w.at(j0 + 1).p;
  for (int k = 1; k <= g; ++k) {
    const ResolventColumn f = resolvent_apply_local(w, k, j0, pos);
    col.values.segment(0, bs) += V.lambda[k - 1] * f.f_prev;
    col.values.segment(bs, bs) += V.lambda[k - 1] * f.f_mid;
    col.values.segment(2 * bs, bs) += V.lambda[k - 1] * f.f_next;
  }
  return col;
}

}  // namespace gsmp
