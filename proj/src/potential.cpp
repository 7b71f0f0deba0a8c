#include "gsmp/potential.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gsmp {

double PotentialV::eval(double x) const {
  double v = lambda0 * x + c0;
  for (int k = 0; k < genus(); ++k) v += lambda[k] / (c[k] - x);
  return v;
}

double PotentialV::deriv(double x) const {
  double v = lambda0;
  for (int k = 0; k < genus(); ++k) {
    const double d = c[k] - x;
    v += lambda[k] / (d * d);
  }
  return v;
}

std::complex<double> PotentialV::eval(std::complex<double> z) const {
  std::complex<double> v = lambda0 * z + c0;
  for (int k = 0; k < genus(); ++k) v += lambda[k] / (c[k] - z);
  return v;
}

void PotentialV::validate() const {
  if (lambda.size() != c.size())
    throw std::invalid_argument("potential: lambda/pole count mismatch");
  if (lambda0 < 0) throw std::invalid_argument("potential: lambda0 < 0");
  for (int k = 0; k < genus(); ++k) {
    if (!(lambda[k] > 0)) throw std::invalid_argument("potential: lambda_k <= 0");
    if (k > 0 && !(c[k] > c[k - 1]))
      throw std::invalid_argument("potential: poles not ascending");
  }
}

namespace {

// Stacks the 2g+2 boundary defects: V = -2 at each band's left edge, +2 at
// its right edge.
Eigen::VectorXd boundary_residual(const PotentialV& V,
                                  const std::vector<std::array<double, 2>>& bands) {
  Eigen::VectorXd r(2 * static_cast<int>(bands.size()));
  for (std::size_t i = 0; i < bands.size(); ++i) {
    r(2 * i) = V.eval(bands[i][0]) + 2.0;
    r(2 * i + 1) = V.eval(bands[i][1]) - 2.0;
  }
  return r;
}

// Parameters are packed as (lambda0, c0, lambda_1..g, c_1..g).
Eigen::MatrixXd boundary_jacobian(const PotentialV& V,
                                  const std::vector<std::array<double, 2>>& bands) {
  const int g = V.genus();
  Eigen::MatrixXd J(2 * static_cast<int>(bands.size()), 2 * g + 2);
  for (std::size_t i = 0; i < bands.size(); ++i) {
    for (int side = 0; side < 2; ++side) {
      const double x = bands[i][side];
      const int row = 2 * static_cast<int>(i) + side;
      J(row, 0) = x;
      J(row, 1) = 1.0;
      for (int k = 0; k < g; ++k) {
        const double d = V.c[k] - x;
        J(row, 2 + k) = 1.0 / d;
        J(row, 2 + g + k) = -V.lambda[k] / (d * d);
      }
    }
  }
  return J;
}

PotentialV unpack(const Eigen::VectorXd& th, int g) {
  PotentialV V;
  V.lambda0 = th(0);
  V.c0 = th(1);
  V.lambda.assign(th.data() + 2, th.data() + 2 + g);
  V.c.assign(th.data() + 2 + g, th.data() + 2 + 2 * g);
  return V;
}

bool feasible(const Eigen::VectorXd& th, const IntervalSystem& E) {
  const int g = E.genus();
  if (!(th(0) > 0)) return false;
  for (int k = 0; k < g; ++k) {
    if (!(th(2 + k) > 0)) return false;
    if (!(th(2 + g + k) > E.gaps[k][0] && th(2 + g + k) < E.gaps[k][1])) return false;
  }
  return true;
}

}  // namespace

PotentialSolveReport solve_potential(const IntervalSystem& E, double tol, int max_iter) {
  E.validate();
  const int g = E.genus();
  const auto bands = E.bands();

  // Starting guess: poles at gap midpoints, slope matching the outer
  // interval length, residues scaled by gap width, then c0 from the
  // leftmost condition.
  Eigen::VectorXd th(2 * g + 2);
  th(0) = 4.0 / (E.a0 - E.b0);
  for (int k = 0; k < g; ++k) {
    const double w = E.gaps[k][1] - E.gaps[k][0];
    th(2 + k) = th(0) * w * w / 4.0;
    th(2 + g + k) = 0.5 * (E.gaps[k][0] + E.gaps[k][1]);
  }
  th(1) = 0.0;
  {
    PotentialV V0 = unpack(th, g);
    th(1) = -2.0 - (V0.eval(E.b0) - V0.c0);
  }

  PotentialSolveReport rep;
  double rn = boundary_residual(unpack(th, g), bands).lpNorm<Eigen::Infinity>();
  for (int it = 0; it < max_iter; ++it) {
    rep.iterations = it;
    if (rn < tol) break;
    const PotentialV V = unpack(th, g);
    const Eigen::VectorXd r = boundary_residual(V, bands);
    const Eigen::MatrixXd J = boundary_jacobian(V, bands);
    const Eigen::VectorXd step = J.fullPivLu().solve(-r);

    // Backtracking: halve until the iterate stays feasible and the residual
    // decreases.
    double t = 1.0;
    bool moved = false;
    for (int h = 0; h < 60; ++h, t *= 0.5) {
      const Eigen::VectorXd cand = th + t * step;
      if (!feasible(cand, E)) continue;
      const double rc = boundary_residual(unpack(cand, g), bands).lpNorm<Eigen::Infinity>();
      if (rc < rn || rc < tol) {
        th = cand;
        rn = rc;
        moved = true;
        break;
      }
    }
    if (!moved) break;  // stalled; reported below
  }

  rep.V = unpack(th, g);
  rep.residual = rn;
  rep.converged = rn < tol;
  if (!rep.converged)
    throw std::runtime_error("solve_potential: Newton iteration did not reach tolerance (residual " +
                             std::to_string(rn) + ")");
  return rep;
}

PotentialVerifyReport verify_potential(const PotentialV& V, const IntervalSystem& E,
                                       int samples_per_band, Exec exec) {
  V.validate();
  const auto bands = E.bands();
  PotentialVerifyReport rep;

  for (const auto& [l, r] : bands) {
    rep.edge_residual = std::max(rep.edge_residual, std::abs(V.eval(l) + 2.0));
    rep.edge_residual = std::max(rep.edge_residual, std::abs(V.eval(r) - 2.0));
  }

  // Band interiors: |V| must not exceed 2.  Per-sample values land in a
  // buffer so the OpenMP and serial paths reduce identically.
  const int nb = static_cast<int>(bands.size());
  std::vector<double> excess(static_cast<std::size_t>(nb) * samples_per_band);
  for_each_index(static_cast<std::ptrdiff_t>(excess.size()), exec, [&](std::ptrdiff_t i) {
    const int bi = static_cast<int>(i) / samples_per_band;
    const int si = static_cast<int>(i) % samples_per_band;
    const double t = (si + 1.0) / (samples_per_band + 1.0);
    const double x = bands[bi][0] + t * (bands[bi][1] - bands[bi][0]);
    excess[i] = std::abs(V.eval(x)) - 2.0;
  });
  for (double e : excess) rep.interior_excess = std::max(rep.interior_excess, std::max(0.0, e));

  // Gap interiors (away from the poles): |V| must exceed 2.
  rep.exterior_margin = std::numeric_limits<double>::infinity();
  for (int k = 0; k < E.genus(); ++k) {
    for (int si = 0; si < samples_per_band; ++si) {
      const double t = (si + 1.0) / (samples_per_band + 1.0);
      const double x = E.gaps[k][0] + t * (E.gaps[k][1] - E.gaps[k][0]);
      rep.exterior_margin = std::min(rep.exterior_margin, std::abs(V.eval(x)) - 2.0);
    }
  }
  if (E.genus() == 0) rep.exterior_margin = 0.0;

  rep.ok = rep.edge_residual < 1e-8 && rep.interior_excess < 1e-8 &&
           (E.genus() == 0 || rep.exterior_margin > 0.0);
  return rep;
}

namespace {

// One root of V = y inside (lo, hi), where V sweeps from -inf to +inf.
// Endpoints may be poles or +-inf (quiet NaN used for none).  Bisection
// brackets first, Newton polishes.
double root_between(const PotentialV& V, double y, double lo, double hi) {
  const bool lo_open = std::isfinite(lo);
  const bool hi_open = std::isfinite(hi);
  const double width = (lo_open && hi_open) ? hi - lo : 1.0;

  double a, b;
  if (lo_open) {
    double t = 0.25;
    a = lo + t * (hi_open ? width : 1.0);
    while (!(V.eval(a) - y < 0) && t > 1e-300) {
      t *= 0.25;
      a = lo + t * (hi_open ? width : 1.0);
    }
  } else {
    a = hi - 1.0;
    double s = 1.0;
    while (!(V.eval(a) - y < 0) && s < 1e300) {
      s *= 2.0;
      a = hi - s;
    }
  }
  if (hi_open) {
    double t = 0.25;
    b = hi - t * (lo_open ? width : 1.0);
    while (!(V.eval(b) - y > 0) && t > 1e-300) {
      t *= 0.25;
      b = hi - t * (lo_open ? width : 1.0);
    }
  } else {
    b = lo + 1.0;
    double s = 1.0;
    while (!(V.eval(b) - y > 0) && s < 1e300) {
      s *= 2.0;
      b = lo + s;
    }
  }

  for (int it = 0; it < 200 && b - a > 1e-16 * (std::abs(a) + std::abs(b) + 1.0); ++it) {
    const double m = 0.5 * (a + b);
    if (V.eval(m) - y < 0)
      a = m;
    else
      b = m;
  }
  double x = 0.5 * (a + b);
  for (int it = 0; it < 4; ++it) {
    const double dx = (V.eval(x) - y) / V.deriv(x);
    const double xn = x - dx;
    if (xn > a && xn < b) x = xn;
  }
  return x;
}

}  // namespace

std::vector<double> potential_preimage(const PotentialV& V, double y) {
  V.validate();
  const int g = V.genus();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> roots;

  if (V.lambda0 == 0.0) {
    if (y == V.c0)
      throw std::domain_error("potential_preimage: y = c0 is not attained when lambda0 == 0");
    if (g == 0) return roots;
    // Without the linear term V tends to c0 at +-inf: the left unbounded
    // interval carries a root only for y > c0, the right one only for y < c0.
    if (y > V.c0) roots.push_back(root_between(V, y, nan, V.c[0]));
    for (int k = 0; k + 1 < g; ++k) roots.push_back(root_between(V, y, V.c[k], V.c[k + 1]));
    if (y < V.c0) roots.push_back(root_between(V, y, V.c[g - 1], nan));
    return roots;
  }

  if (g == 0) {
    roots.push_back((y - V.c0) / V.lambda0);
    return roots;
  }
  roots.push_back(root_between(V, y, nan, V.c[0]));
  for (int k = 0; k + 1 < g; ++k) roots.push_back(root_between(V, y, V.c[k], V.c[k + 1]));
  roots.push_back(root_between(V, y, V.c[g - 1], nan));
  return roots;
}

}  // namespace gsmp
