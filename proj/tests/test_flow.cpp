#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "gsmp/flow.hpp"
#include "gsmp/iso.hpp"
#include "gsmp/potential.hpp"
#include "gsmp/window.hpp"

using namespace gsmp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

PotentialV two_band_V() {
  return solve_potential(make_interval_system(-2.0, 2.0, {{-1.0, 1.0}})).V;
}

IsoPoint two_band_point() { return solve_iso_point(two_band_V(), anchor_pair(two_band_V())); }

GsmpWindow perturbed_window(const IsoPoint& pt, long hw, double amp, long support,
                            std::uint64_t seed) {
  PerturbationSpec spec;
  spec.family = PerturbationSpec::Family::Compact;
  spec.amplitude = amp;
  spec.support = support;
  spec.seed = seed;
  GsmpWindow w = apply_perturbation(build_periodic(pt, hw), spec);
  REQUIRE(check_gsmp_class(w, 1e-8).certified);
  return w;
}

}  // namespace

TEST_CASE("rotation cascade basics") {
  VectorXd p(3);
  p << 0.6, -0.3, 0.8;
  const MatrixXd U = rotation_U(p);
  CHECK((U * U.transpose() - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);
  const VectorXd e0 = p.transpose() * U;
  CHECK(e0(0) == doctest::Approx(p.norm()).epsilon(1e-14));
  CHECK(std::abs(e0(1)) < 1e-14);
  CHECK(std::abs(e0(2)) < 1e-14);

  VectorXd flat(2);
  flat << 1.0, -0.5;  // p_g <= 0 is inadmissible
  CHECK_THROWS(rotation_plan(flat));
}

// Hand-computed one-step values at the two-band anchor
// p = (sqrt 2, 1/2), q = (0, 0), pole 0.  The rotation angle has
// (sin, cos) = (sqrt 2, 1/2)/1.5, and pushing the formulas through gives
//   rotation step:  p -> (0, 1/2),        q -> (-2 sqrt 2, 0)
//   second J step:  p -> (-sqrt 2, 1/2),  q -> (0, 0)
// so the flow returns to the anchor (up to block-pair sign) with period 2.
TEST_CASE("fixed point steps match hand values") {
  const IsoPoint pt = two_band_point();
  const GsmpWindow w = build_periodic(pt, 8);
  const double r2 = std::sqrt(2.0);

  const GsmpWindow o = flow_O(w);
  for (long j = o.t_lo; j <= o.t_hi; ++j) {
    CHECK(std::abs(o.at(j).p(0)) < 1e-12);
    CHECK(o.at(j).p(1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(o.at(j).q(0) == doctest::Approx(-2.0 * r2).epsilon(1e-12));
    CHECK(std::abs(o.at(j).q(1)) < 1e-12);
  }

  const GsmpWindow j1 = flow_J_fast(w);        // genus one: same pair values as flow_O
  const GsmpWindow j2 = flow_J_fast(j1);
  for (long j = j2.t_lo; j <= j2.t_hi; ++j) {
    CHECK(j2.at(j).p(0) == doctest::Approx(-r2).epsilon(1e-12));
    CHECK(j2.at(j).p(1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(std::abs(j2.at(j).q(0)) < 1e-12);
    CHECK(std::abs(j2.at(j).q(1)) < 1e-12);
  }
}

TEST_CASE("explicit updates against dense conjugation") {
  const IsoPoint pt1 = two_band_point();
  const PotentialV V2 =
      solve_potential(make_interval_system(-2.0, 2.0, {{-1.2, -0.4}, {0.3, 1.1}})).V;
  const IsoPoint pt2 = solve_iso_point(V2, anchor_pair(V2));

  int idx = 0;
  for (const IsoPoint* pt : {&pt1, &pt2}) {
    const GsmpWindow w = perturbed_window(*pt, 10, 0.01, 3, 21 + static_cast<std::uint64_t>(idx++));
    CHECK(window_max_diff(flow_O(w), flow_O_conjugation(w)) < 1e-12);
    CHECK(window_max_diff(flow_J_fast(w), flow_J_conjugation(w)) < 1e-12);
    CHECK(window_max_diff(flow_J_fast(w), flow_J_reference(w)) < 1e-12);
  }
}

TEST_CASE("rotation step commutes with the full step") {
  const IsoPoint pt = two_band_point();
  const GsmpWindow w = perturbed_window(pt, 12, 0.02, 4, 33);
  const GsmpWindow lhs = flow_O(flow_J_fast(w));
  const GsmpWindow rhs = flow_J_fast(flow_O(w));
  CHECK(window_max_diff(lhs, rhs) < 1e-11);
}

TEST_CASE("the step is local") {
  // a(0) and b(-1) of the extraction read blocks -1..1 only; more
  // generally output block j is a function of input blocks j and j+1.
  // Far-away edits must therefore leave near-zero output blocks bitwise
  // unchanged.
  const IsoPoint pt = two_band_point();
  const GsmpWindow base = build_periodic(pt, 12);
  GsmpWindow edited = base;
  edited.at(7).q(0) += 0.3;
  edited.at(-9).p(0) -= 0.2;

  const GsmpWindow fb = flow_J_fast(base);
  const GsmpWindow fe = flow_J_fast(edited);
  for (long j = -3; j <= 3; ++j) {
    CHECK((fb.at(j).p - fe.at(j).p).cwiseAbs().maxCoeff() == 0.0);
    CHECK((fb.at(j).q - fe.at(j).q).cwiseAbs().maxCoeff() == 0.0);
  }
  // and the edit did propagate where it should
  CHECK((fb.at(6).q - fe.at(6).q).cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("genus zero degenerates to the shift") {
  BlockPair pq;
  pq.p = VectorXd::Constant(1, 1.0);
  pq.q = VectorXd::Zero(1);
  GsmpWindow w = build_periodic(pq, {}, -6, 5);
  // make the blocks distinguishable
  for (long j = -6; j <= 5; ++j) w.at(j).q(0) = 0.01 * static_cast<double>(j);
  const GsmpWindow shifted = flow_J_fast(w);
  for (long j = shifted.t_lo; j <= shifted.t_hi; ++j) {
    CHECK(shifted.at(j).q(0) == doctest::Approx(w.at(j + 1).q(0)).epsilon(1e-15));
    CHECK(shifted.at(j).p(0) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("flow run bookkeeping") {
  const IsoPoint pt = two_band_point();

  const FlowTrace full = flow_run(build_periodic(pt, 30), 20, FlowOptions{});
  CHECK(full.early_stop == -1);
  REQUIRE(full.iterates.size() == 21);
  REQUIRE(full.steps.size() == 21);
  CHECK(full.steps[0].a == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(full.steps[1].a == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(full.steps[5].min_lambda_sharp == doctest::Approx(4.0).epsilon(1e-9));

  // narrow window: the run stops once the diagnostics blocks fall out
  const FlowTrace clipped = flow_run(build_periodic(pt, 5), 10, FlowOptions{});
  CHECK(clipped.early_stop == 5);
  CHECK(clipped.iterates.size() == 5);

  // dual-path checking is quiet when fast and reference agree
  FlowOptions opts;
  opts.dual_path = true;
  opts.dual_tol = 1e-9;
  const GsmpWindow wp = perturbed_window(pt, 16, 0.01, 3, 77);
  const FlowTrace dual = flow_run(wp, 6, opts);
  CHECK(dual.early_stop == -1);
  for (size_t i = 1; i < dual.steps.size(); ++i)
    CHECK(dual.steps[i].dual_max_dev < 1e-9);
}

TEST_CASE("coefficient extraction alternates at the two-band anchor") {
  const IsoPoint pt = two_band_point();
  const FlowTrace trace = flow_run(build_periodic(pt, 24), 16, FlowOptions{});
  const JacobiWindow jw = extract_jacobi(trace);
  REQUIRE(jw.a.size() == 16);
  CHECK(jw.n_lo == 0);
  for (size_t n = 0; n < jw.a.size(); ++n) {
    CHECK(jw.a[n] == doctest::Approx(n % 2 == 0 ? 1.5 : 0.5).epsilon(1e-10));
    CHECK(std::abs(jw.b[n]) < 1e-10);
  }

  FlowTrace tiny;
  tiny.iterates.resize(1);
  tiny.steps.resize(1);
  CHECK_THROWS_AS(extract_jacobi(tiny), std::invalid_argument);
}

TEST_CASE("window comparison guards") {
  const IsoPoint pt = two_band_point();
  const GsmpWindow w = build_periodic(pt, 6);
  GsmpWindow other = w;
  other.poles[0] += 0.5;
  CHECK_THROWS(window_max_diff(w, other));
}
