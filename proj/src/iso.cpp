#include "gsmp/iso.hpp"

#include <Eigen/LU>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <numbers>

namespace gsmp {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Full coordinate indexing: 0..g-1 -> p_j, g..2g-1 -> q_j, 2g -> p_g,
// 2g+1 -> q_g.  The first 2g are the chart coordinates Pin refers to.
double get_coord(const BlockPair& pq, int c, int g) {
  if (c < g) return pq.p(c);
  if (c < 2 * g) return pq.q(c - g);
  return c == 2 * g ? pq.p(g) : pq.q(g);
}

void set_coord(BlockPair& pq, int c, int g, double v) {
  if (c < g)
    pq.p(c) = v;
  else if (c < 2 * g)
    pq.q(c - g) = v;
  else if (c == 2 * g)
    pq.p(g) = v;
  else
    pq.q(g) = v;
}

// Slot of the same coordinate inside lambda_iso_grad's (p_0..p_g, q_0..q_g)
// layout.
int grad_slot(int c, int g) {
  if (c < g) return c;
  if (c < 2 * g) return (g + 1) + (c - g);
  return c == 2 * g ? g : 2 * g + 1;
}

void require_shapes(const BlockPair& pq, const PotentialV& V) {
  if (pq.size() != static_cast<int>(V.c.size()) + 1)
    throw std::invalid_argument("iso: block pair size does not match the potential genus");
}

void require_unreduced(const PotentialV& V) {
  if (!(V.lambda0 > 0.0))
    throw std::invalid_argument("iso: the surface equations need lambda0 > 0");
}

double lambda_margin(const BlockPair& pq, const PotentialV& V) {
  const int g = static_cast<int>(V.c.size());
  if (g == 0) return std::numeric_limits<double>::infinity();
  double m = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= g; ++k) m = std::min(m, lambda_iso(k, pq, V.c));
  return m;
}

IsoPoint certify(BlockPair pq, const PotentialV& V) {
  normalize_signs(pq);
  IsoPoint pt;
  pt.residual = iso_residuals(pq, V).lpNorm<Eigen::Infinity>();
  pt.margin = lambda_margin(pq, V);
  pt.pair = std::move(pq);
  pt.V = V;
  if (pt.margin <= 0.0)
    throw std::runtime_error("iso: converged to a point violating Lambda positivity");
  return pt;
}

}  // namespace

Eigen::VectorXd iso_residuals(const BlockPair& pq, const PotentialV& V) {
  require_shapes(pq, V);
  const int g = static_cast<int>(V.c.size());
  VectorXd r(g + 2);
  r(0) = pq.p(g) - 1.0 / V.lambda0;
  double s = 0.0;
  for (int j = 0; j < g; ++j) s += pq.p(j) * pq.q(j);
  r(1) = pq.q(g) + V.c0 + V.lambda0 * s;
  for (int k = 1; k <= g; ++k) r(1 + k) = lambda_iso(k, pq, V.c) - V.lambda[k - 1];
  return r;
}

IsoJacobian iso_jacobian(const BlockPair& pq, const PotentialV& V, JacobianMode mode) {
  require_shapes(pq, V);
  const int g = static_cast<int>(V.c.size());
  IsoJacobian J;
  J.mode = mode;
  J.T.resize(g, 2 * g);
  if (mode == JacobianMode::Analytic) {
    for (int k = 1; k <= g; ++k) {
      const VectorXd full = lambda_iso_grad(k, pq, V.c);
      for (int m = 0; m < g; ++m) {
        J.T(k - 1, m) = full(m);
        J.T(k - 1, g + m) = full(g + 1 + m);
      }
    }
  } else {
    for (int c = 0; c < 2 * g; ++c) {
      const double x = get_coord(pq, c, g);
      const double h = 1e-6 * (1.0 + std::abs(x));
      BlockPair hi = pq, lo = pq;
      set_coord(hi, c, g, x + h);
      set_coord(lo, c, g, x - h);
      for (int k = 1; k <= g; ++k)
        J.T(k - 1, c) = (lambda_iso(k, hi, V.c) - lambda_iso(k, lo, V.c)) / (2.0 * h);
    }
  }
  if (g > 0 && !J.T.allFinite())
    throw std::domain_error("iso_jacobian: non-finite entries (pole collision?)");
  return J;
}

IsoPoint solve_iso_point_pinned(const PotentialV& V, const BlockPair& seed,
                                const std::vector<Pin>& pins, double tol, int max_iter) {
  V.validate();
  require_unreduced(V);
  require_shapes(seed, V);
  const int g = static_cast<int>(V.c.size());
  if (static_cast<int>(pins.size()) != g)
    throw std::invalid_argument("solve_iso_point: need exactly g pins");

  std::vector<bool> pinned(static_cast<size_t>(2 * g), false);
  BlockPair x = seed;
  for (const Pin& pin : pins) {
    if (pin.idx < 0 || pin.idx >= 2 * g || pinned[static_cast<size_t>(pin.idx)])
      throw std::invalid_argument("solve_iso_point: bad or duplicate pin index");
    pinned[static_cast<size_t>(pin.idx)] = true;
    set_coord(x, pin.idx, g, pin.value);
  }
  std::vector<int> free_idx;
  for (int c = 0; c < 2 * g; ++c)
    if (!pinned[static_cast<size_t>(c)]) free_idx.push_back(c);
  free_idx.push_back(2 * g);
  free_idx.push_back(2 * g + 1);
  const int n = g + 2;
  if (x.p(g) <= 0.0) x.p(g) = 1.0 / V.lambda0;

  VectorXd r = iso_residuals(x, V);
  double rn = r.lpNorm<Eigen::Infinity>();
  for (int it = 0; it < max_iter && rn > tol; ++it) {
    MatrixXd Jm = MatrixXd::Zero(n, n);
    for (int col = 0; col < n; ++col) {
      const int c = free_idx[static_cast<size_t>(col)];
      if (c == 2 * g) Jm(0, col) = 1.0;
      if (c == 2 * g + 1)
        Jm(1, col) = 1.0;
      else if (c < g)
        Jm(1, col) = V.lambda0 * x.q(c);
      else if (c < 2 * g)
        Jm(1, col) = V.lambda0 * x.p(c - g);
    }
    for (int k = 1; k <= g; ++k) {
      const VectorXd full = lambda_iso_grad(k, x, V.c);
      for (int col = 0; col < n; ++col)
        Jm(1 + k, col) = full(grad_slot(free_idx[static_cast<size_t>(col)], g));
    }
    const VectorXd dx = Jm.fullPivLu().solve(r);
    if (!dx.allFinite()) break;

    bool accepted = false;
    double alpha = 1.0;
    for (int h = 0; h < 60; ++h, alpha *= 0.5) {
      BlockPair trial = x;
      for (int col = 0; col < n; ++col) {
        const int c = free_idx[static_cast<size_t>(col)];
        set_coord(trial, c, g, get_coord(x, c, g) - alpha * dx(col));
      }
      if (trial.p(g) <= 0.0) continue;
      const VectorXd rt = iso_residuals(trial, V);
      const double rtn = rt.lpNorm<Eigen::Infinity>();
      if (rtn <= tol || rtn < rn * (1.0 - 0.25 * alpha)) {
        x = trial;
        r = rt;
        rn = rtn;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // stalled; the residual check below decides
  }
  if (!(rn <= tol))
    throw std::runtime_error("solve_iso_point: Newton did not reach tolerance");
  return certify(std::move(x), V);
}

IsoPoint solve_iso_point(const PotentialV& V, const BlockPair& seed, double tol, int max_iter) {
  const int g = static_cast<int>(V.c.size());
  std::vector<Pin> pins;
  pins.reserve(static_cast<size_t>(g));
  for (int j = 0; j < g; ++j) pins.push_back({g + j, seed.q(j)});
  return solve_iso_point_pinned(V, seed, pins, tol, max_iter);
}

BlockPair anchor_pair(const PotentialV& V) {
  V.validate();
  require_unreduced(V);
  const int g = static_cast<int>(V.c.size());
  BlockPair pq;
  pq.p = VectorXd::Zero(g + 1);
  pq.q = VectorXd::Zero(g + 1);
  for (int k = 1; k <= g; ++k) pq.p(k - 1) = std::sqrt(V.lambda[k - 1] / V.lambda0);
  pq.p(g) = 1.0 / V.lambda0;
  pq.q(g) = -V.c0;
  return pq;
}

void normalize_signs(BlockPair& pq) {
  const int g = pq.size() - 1;
  for (int j = 0; j < g; ++j)
    if (pq.p(j) < 0.0 || (pq.p(j) == 0.0 && pq.q(j) < 0.0)) {
      pq.p(j) = -pq.p(j);
      pq.q(j) = -pq.q(j);
    }
}

std::vector<IsoPoint> sample_torus(const PotentialV& V, int count, Exec exec) {
  V.validate();
  require_unreduced(V);
  if (count <= 0) return {};
  const int g = static_cast<int>(V.c.size());

  if (g == 0) {
    IsoPoint pt = certify(anchor_pair(V), V);
    return std::vector<IsoPoint>(static_cast<size_t>(count), pt);
  }

  std::vector<std::optional<IsoPoint>> slot(static_cast<size_t>(count));

  if (g == 1) {
    // Radial chart in the (p_0, q_0) plane: along each direction the
    // Lambda functional starts below lambda_1 at the origin and grows
    // without bound, so the first crossing exists on every ray.  Half a
    // turn of directions covers the quotient circle.
    const double Q = V.lambda0 > 0 ? std::sqrt(V.lambda0 * V.lambda[0]) : 1.0;
    for_each_index(count, exec, [&](long i) {
      const double phi = std::numbers::pi * (static_cast<double>(i) + 0.5) / static_cast<double>(count);
      const double u0 = std::cos(phi), u1 = std::sin(phi);
      auto at_radius = [&](double rr) {
        BlockPair pq = anchor_pair(V);
        pq.p(0) = rr * u0;
        pq.q(0) = rr * u1;
        pq.q(1) = -V.c0 - V.lambda0 * pq.p(0) * pq.q(0);
        return pq;
      };
      auto psi = [&](double rr) { return lambda_iso(1, at_radius(rr), V.c) - V.lambda[0]; };
      double lo = 0.0, hi = 0.5 * Q;
      int grow = 0;
      while (psi(hi) <= 0.0 && grow++ < 80) hi *= 2.0;
      if (psi(hi) <= 0.0) return;
      for (int b = 0; b < 200; ++b) {
        const double mid = 0.5 * (lo + hi);
        (psi(mid) <= 0.0 ? lo : hi) = mid;
      }
      BlockPair seed = at_radius(0.5 * (lo + hi));
      const Pin pin = std::abs(seed.q(0)) >= std::abs(seed.p(0)) ? Pin{1, seed.q(0)}
                                                                 : Pin{0, seed.p(0)};
      try {
        slot[static_cast<size_t>(i)] = solve_iso_point_pinned(V, seed, {pin});
      } catch (const std::runtime_error&) {
        // chart failure: skip this direction
      }
    });
  } else {
    // Kronecker lattice of pinned q-offsets around the anchor, scaled by
    // the natural q-amplitude sqrt(lambda0 lambda_k) per gap and shrunk
    // toward the anchor when a chart fails.
    static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    const BlockPair anchor = anchor_pair(V);
    for_each_index(count, exec, [&](long i) {
      std::vector<Pin> pins(static_cast<size_t>(g));
      for (int j = 0; j < g; ++j) {
        const double alpha = std::sqrt(static_cast<double>(primes[j % 12]));
        const double t = std::fmod((static_cast<double>(i) + 1.0) * (alpha - std::floor(alpha)),
                                   1.0);
        const double beta = 0.6 * std::sqrt(V.lambda0 * V.lambda[static_cast<size_t>(j)]);
        pins[static_cast<size_t>(j)] = {g + j, beta * (2.0 * t - 1.0)};
      }
      for (int attempt = 0; attempt < 4; ++attempt) {
        try {
          slot[static_cast<size_t>(i)] = solve_iso_point_pinned(V, anchor, pins);
          return;
        } catch (const std::runtime_error&) {
          for (auto& pin : pins) pin.value *= 0.5;
        }
      }
    });
  }

  std::vector<IsoPoint> out;
  out.reserve(static_cast<size_t>(count));
  for (auto& s : slot)
    if (s) out.push_back(std::move(*s));
  return out;
}

GsmpWindow build_periodic(const IsoPoint& pt, long half_width) {
  if (half_width < 1) throw std::invalid_argument("build_periodic: half_width must be >= 1");
  return build_periodic(pt.pair, pt.V.c, -half_width, half_width - 1);
}

}  // namespace gsmp
