#include "gsmp/flow.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gsmp {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Tail norms R_i = sqrt(p_i^2 + ... + p_g^2), accumulated from the right so
// each value is a plain hypot chain.
VectorXd tail_norms(const VectorXd& p) {
  const Eigen::Index n = p.size();
  VectorXd R(n);
  R(n - 1) = std::abs(p(n - 1));
  for (Eigen::Index i = n - 2; i >= 0; --i) R(i) = std::hypot(p(i), R(i + 1));
  return R;
}

void require_width(const GsmpWindow& w, const char* who) {
  if (w.t_lo + 1 > w.t_hi - 1 || w.j_min + 1 > w.j_max() - 1)
    throw std::invalid_argument(std::string(who) + ": window too narrow to shrink");
}

GsmpWindow shell_like(const GsmpWindow& w, std::vector<double> poles) {
  GsmpWindow out;
  out.poles = std::move(poles);
  out.j_min = w.j_min + 1;
  out.t_lo = w.t_lo + 1;
  out.t_hi = w.t_hi - 1;
  out.blocks.resize(static_cast<size_t>(w.j_max() - 1 - out.j_min + 1));
  return out;
}

std::vector<double> rotated_poles(const std::vector<double>& c) {
  if (c.empty()) return {};
  std::vector<double> out(c.size());
  out[0] = c.back();
  for (size_t k = 1; k < c.size(); ++k) out[k] = c[k - 1];
  return out;
}

}  // namespace

RotationPlan rotation_plan(const VectorXd& p) {
  const int g = static_cast<int>(p.size()) - 1;
  if (g < 0) throw std::invalid_argument("rotation_plan: empty vector");
  if (!(p(g) > 0)) throw std::invalid_argument("rotation_plan: p_g must be positive");
  const VectorXd R = tail_norms(p);
  RotationPlan plan;
  plan.sin_phi.resize(g);
  plan.cos_phi.resize(g);
  for (int m = 1; m <= g; ++m) {
    plan.sin_phi(m - 1) = p(m - 1) / R(m - 1);
    plan.cos_phi(m - 1) = R(m) / R(m - 1);
  }
  return plan;
}

Eigen::MatrixXd rotation_U(const VectorXd& p) {
  const int g = static_cast<int>(p.size()) - 1;
  const RotationPlan plan = rotation_plan(p);
  MatrixXd U = MatrixXd::Identity(g + 1, g + 1);
  // U = G_g ... G_1 with G_m acting in coordinates (m-1, m); right-multiply
  // in decreasing m so the rightmost factor lands last.
  for (int m = g; m >= 1; --m) {
    const double s = plan.sin_phi(m - 1), c = plan.cos_phi(m - 1);
    const VectorXd left = U.col(m - 1), right = U.col(m);
    U.col(m - 1) = s * left + c * right;
    U.col(m) = c * left - s * right;
  }
  return U;
}

GsmpWindow flow_O(const GsmpWindow& w, double margin) {
  w.validate();
  require_width(w, "flow_O");
  const int g = w.genus();
  GsmpWindow out = shell_like(w, rotated_poles(w.poles));

  if (g == 0) {  // no rotation planes: the map degenerates to the shift
    for (long j = out.j_min; j <= out.j_max(); ++j) out.at(j) = w.at(j - 1);
    out.validate();
    return out;
  }

  for (long j = out.j_min; j <= out.j_max(); ++j) {
    const BlockPair& L = w.at(j - 1);
    const BlockPair& R = w.at(j);
    const double rL = std::hypot(L.p(g - 1), L.p(g));
    const double rR = std::hypot(R.p(g - 1), R.p(g));
    if (rL < margin || rR < margin)
      throw std::runtime_error("flow_O: rotation norm below margin at block " +
                               std::to_string(j));
    const double sL = L.p(g - 1) / rL, cL = L.p(g) / rL;
    const double sR = R.p(g - 1) / rR, cR = R.p(g) / rR;
    const double gamma = w.poles[static_cast<size_t>(g - 1)];  // the pole moving up front

    BlockPair o;
    o.p.resize(g + 1);
    o.q.resize(g + 1);
    o.p(0) = cL * (sL * gamma + L.p(g) * (L.q(g - 1) * cL - L.q(g) * sL));
    for (int i = 1; i <= g - 1; ++i) o.p(i) = cL * R.p(i - 1);
    o.p(g) = cL * rR;
    o.q(0) = -sL / cL;
    for (int i = 1; i <= g - 1; ++i) o.q(i) = R.q(i - 1) / cL;
    Eigen::Matrix2d G, N;
    G << sR, cR, cR, -sR;
    N << gamma + R.q(g - 1) * R.p(g - 1), R.q(g - 1) * R.p(g), R.q(g - 1) * R.p(g),
        R.q(g) * R.p(g);
    o.q(g) = (G * N * G)(0, 0) / o.p(g);
    out.at(j) = std::move(o);
  }
  out.validate();
  return out;
}

GsmpWindow flow_O_conjugation(const GsmpWindow& w) {
  w.validate();
  const int g = w.genus();
  const int bs = g + 1;
  const long nb = w.j_max() - w.j_min + 1;
  if (nb < 3) throw std::invalid_argument("flow_O_conjugation: window too narrow");

  const MatrixXd A = assemble_window(w, w.j_min, w.j_max());
  MatrixXd O = MatrixXd::Identity(nb * bs, nb * bs);
  if (g >= 1)
    for (long i = 0; i < nb; ++i) {
      const VectorXd& p = w.at(w.j_min + i).p;
      const double r = std::hypot(p(g - 1), p(g));
      const double s = p(g - 1) / r, c = p(g) / r;
      const Eigen::Index off = i * bs + (g - 1);
      O(off, off) = s;
      O(off, off + 1) = c;
      O(off + 1, off) = c;
      O(off + 1, off + 1) = -s;
    }
  const MatrixXd C = O.transpose() * A * O;
  // One-index shift: content moves from (m-1, n-1) to (m, n), so the block
  // section starting at scalar offset bs-1 carries blocks j_min+1..j_max of
  // the image.
  const Eigen::Index sz = (nb - 1) * bs;
  const MatrixXd D = C.block(bs - 1, bs - 1, sz, sz);
  ExtractedWindow ex = window_from_dense(D, rotated_poles(w.poles), w.j_min + 1);
  GsmpWindow out = std::move(ex.window);
  out.t_lo = std::max(w.t_lo + 1, out.j_min);
  out.t_hi = std::min(w.t_hi - 1, out.j_max());
  out.validate();
  return out;
}

GsmpWindow flow_J_fast(const GsmpWindow& w, double margin) {
  w.validate();
  require_width(w, "flow_J_fast");
  const int g = w.genus();
  GsmpWindow out = shell_like(w, w.poles);

  for (long j = out.j_min; j <= out.j_max(); ++j) {
    const BlockPair& cur = w.at(j);
    const BlockPair& nxt = w.at(j + 1);
    if (cur.p(g) < margin || nxt.p(g) < margin)
      throw std::runtime_error("flow_J_fast: p_g below margin at block " + std::to_string(j));
    const VectorXd R = tail_norms(cur.p);
    const double np = R(0);
    const double np1 = nxt.p.norm();

    BlockPair o;
    o.p.resize(g + 1);
    o.q.resize(g + 1);
    if (g > 0) {
      const MatrixXd U = rotation_U(cur.p);
      const MatrixXd B = block_B(cur, w.poles);
      const VectorXd col = U.transpose() * (B * U.col(0));
      for (int i = 0; i < g; ++i) o.p(i) = col(i + 1);
      for (int i = 0; i < g; ++i) o.q(i) = -np * cur.p(i) / (R(i) * R(i + 1));
    }
    o.p(g) = (np1 / np) * cur.p(g);
    const MatrixXd B1 = block_B(nxt, w.poles);
    o.q(g) = (nxt.p.dot(B1 * nxt.p)) * np / (cur.p(g) * np1 * np1 * np1);
    out.at(j) = std::move(o);
  }
  out.validate();
  return out;
}

GsmpWindow flow_J_reference(const GsmpWindow& w, double margin) {
  GsmpWindow cur = w;
  const int g = w.genus();
  for (int t = 0; t < g; ++t) cur = flow_O(cur, margin);
  // undo the g+1 accumulated scalar shifts in one whole-block relabel
  cur.j_min -= 1;
  cur.t_lo -= 1;
  cur.t_hi -= 1;
  if (g == 0) {  // no rotations happened; the relabel is the whole map
    GsmpWindow out = cur;
    out.j_min += 1;
    out.t_lo = w.t_lo + 1;
    out.t_hi = w.t_hi - 1;
    out.blocks.assign(cur.blocks.begin() + 1, cur.blocks.end());
    return out;
  }
  return cur;
}

GsmpWindow flow_J_conjugation(const GsmpWindow& w) {
  w.validate();
  const int bs = w.bs();
  const long nb = w.j_max() - w.j_min + 1;
  if (nb < 3) throw std::invalid_argument("flow_J_conjugation: window too narrow");

  const MatrixXd A = assemble_window(w, w.j_min, w.j_max());
  MatrixXd U = MatrixXd::Zero(nb * bs, nb * bs);
  for (long i = 0; i < nb; ++i)
    U.block(i * bs, i * bs, bs, bs) = rotation_U(w.at(w.j_min + i).p);
  const MatrixXd C = U.transpose() * A * U;
  // Shift against the rotation: content moves from (m+1, n+1) to (m, n).
  const Eigen::Index sz = (nb - 1) * bs;
  const MatrixXd D = C.block(1, 1, sz, sz);
  ExtractedWindow ex = window_from_dense(D, w.poles, w.j_min);
  GsmpWindow out = std::move(ex.window);
  out.t_lo = std::max(w.t_lo + 1, out.j_min);
  out.t_hi = std::min(w.t_hi - 1, out.j_max());
  out.validate();
  return out;
}

double window_max_diff(const GsmpWindow& a, const GsmpWindow& b) {
  if (a.poles != b.poles) throw std::invalid_argument("window_max_diff: pole mismatch");
  const long lo = std::max(a.t_lo, b.t_lo);
  const long hi = std::min(a.t_hi, b.t_hi);
  if (lo > hi) throw std::invalid_argument("window_max_diff: no common trusted range");
  double worst = 0.0;
  for (long j = lo; j <= hi; ++j) {
    worst = std::max(worst, (a.at(j).p - b.at(j).p).cwiseAbs().maxCoeff());
    worst = std::max(worst, (a.at(j).q - b.at(j).q).cwiseAbs().maxCoeff());
  }
  return worst;
}

FlowTrace flow_run(const GsmpWindow& w0, int n_steps, const FlowOptions& opts) {
  w0.validate();
  if (n_steps < 0) throw std::invalid_argument("flow_run: negative step count");
  if (w0.t_lo > -1 || w0.t_hi < 0)
    throw std::invalid_argument("flow_run: trusted range must cover blocks -1..0");

  FlowTrace tr;
  tr.iterates.push_back(w0);
  double pending_dev = 0.0;
  for (long n = 0;; ++n) {
    const GsmpWindow& cur = tr.iterates[static_cast<size_t>(n)];
    FlowStep st;
    st.n = n;
    st.a = cur.at(0).p.norm();
    const BlockPair& prev = cur.at(-1);
    st.b_prev = prev.q(prev.size() - 1) * prev.p(prev.size() - 1);
    const ClassReport rep = check_gsmp_class(cur, opts.class_margin);
    st.min_lambda_sharp = rep.min_lambda_sharp;
    st.dual_max_dev = pending_dev;
    tr.steps.push_back(st);

    if (!rep.certified) {
      tr.early_stop = n + 1;
      break;
    }
    if (n == n_steps) break;
    if (cur.t_lo + 1 > -1 || cur.t_hi - 1 < 0) {
      tr.early_stop = n + 1;
      break;
    }

    GsmpWindow next = flow_J_fast(cur);
    pending_dev = 0.0;
    if (opts.dual_path) {
      const int g = cur.genus();
      if (cur.t_hi - cur.t_lo >= 2 * g + 2 &&
          cur.j_max() - cur.j_min >= 2 * g + 2) {
        const GsmpWindow ref = flow_J_reference(cur);
        pending_dev = window_max_diff(next, ref);
        if (pending_dev > opts.dual_tol)
          throw std::runtime_error("flow_run: dual-path deviation " +
                                   std::to_string(pending_dev) + " at step " +
                                   std::to_string(n + 1));
      }
    }
    tr.iterates.push_back(std::move(next));
  }
  return tr;
}

JacobiWindow extract_jacobi(const FlowTrace& trace) {
  if (trace.iterates.size() < 2)
    throw std::invalid_argument("extract_jacobi: need at least two iterates");
  const size_t n = trace.iterates.size() - 1;
  JacobiWindow jw;
  jw.n_lo = 0;
  jw.a.resize(n);
  jw.b.resize(n);
  for (size_t i = 0; i < n; ++i) {
    jw.a[i] = trace.steps[i].a;
    jw.b[i] = trace.steps[i + 1].b_prev;
    if (!(jw.a[i] > 0)) throw std::runtime_error("extract_jacobi: nonpositive a(n)");
  }
  return jw;
}

}  // namespace gsmp
