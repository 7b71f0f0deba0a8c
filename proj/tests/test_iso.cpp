#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <set>
#include <stdexcept>

#include "gsmp/iso.hpp"
#include "gsmp/potential.hpp"
#include "gsmp/transfer.hpp"

using namespace gsmp;
using Eigen::VectorXd;

namespace {

PotentialV two_band_V() {
  return solve_potential(make_interval_system(-2.0, 2.0, {{-1.0, 1.0}})).V;
}

PotentialV three_band_V() {
  return solve_potential(make_interval_system(-2.0, 2.0, {{-1.2, -0.4}, {0.3, 1.1}})).V;
}

}  // namespace

TEST_CASE("anchor pair is exact") {
  const PotentialV V1 = two_band_V();
  const BlockPair a1 = anchor_pair(V1);
  // p_0 = sqrt(lambda_1/lambda_0) = sqrt(2), p_1 = 1/lambda_0 = 1/2, q = 0
  CHECK(a1.p(0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(a1.p(1) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::abs(a1.q(0)) < 1e-12);
  CHECK(std::abs(a1.q(1)) < 1e-12);
  CHECK(iso_residuals(a1, V1).cwiseAbs().maxCoeff() < 1e-10);

  const PotentialV V2 = three_band_V();
  const BlockPair a2 = anchor_pair(V2);
  CHECK(iso_residuals(a2, V2).cwiseAbs().maxCoeff() < 1e-10);
  for (int k = 1; k <= 2; ++k)
    CHECK(lambda_iso(k, a2, V2.c) ==
          doctest::Approx(V2.lambda[static_cast<size_t>(k - 1)]).epsilon(1e-10));
}

TEST_CASE("newton recovers the surface from a shaken seed") {
  const PotentialV V = three_band_V();
  BlockPair seed = anchor_pair(V);
  seed.p(0) += 0.11;
  seed.q(1) -= 0.07;
  const IsoPoint pt = solve_iso_point(V, seed);
  CHECK(pt.residual < 1e-10);
  CHECK(pt.margin > 0.0);
  CHECK(iso_residuals(pt.pair, V).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("pins hold") {
  const PotentialV V = three_band_V();
  const BlockPair seed = anchor_pair(V);
  // coordinates 0..g-1 are p_0..p_{g-1}; g..2g-1 are q_0..q_{g-1}
  const std::vector<Pin> pins = {{2, 0.15}, {3, -0.08}};  // q_0 = 0.15, q_1 = -0.08
  const IsoPoint pt = solve_iso_point_pinned(V, seed, pins);
  CHECK(pt.pair.q(0) == doctest::Approx(0.15).epsilon(1e-12));
  CHECK(pt.pair.q(1) == doctest::Approx(-0.08).epsilon(1e-12));
  CHECK(pt.residual < 1e-10);
}

TEST_CASE("torus samples are certified and distinct") {
  const PotentialV V1 = two_band_V();
  const auto pts1 = sample_torus(V1, 8);
  CHECK(pts1.size() == 8);  // the radial chart covers the whole circle
  std::set<long long> signatures;
  for (const IsoPoint& pt : pts1) {
    CHECK(pt.residual < 1e-10);
    CHECK(pt.margin > 0.0);
    signatures.insert(static_cast<long long>(std::floor(pt.pair.q(0) * 1e9)));
  }
  CHECK(signatures.size() == pts1.size());

  const PotentialV V2 = three_band_V();
  const auto pts2 = sample_torus(V2, 6);
  REQUIRE(!pts2.empty());
  for (const IsoPoint& pt : pts2) {
    CHECK(pt.residual < 1e-10);
    CHECK(pt.margin > 0.0);
  }
}

TEST_CASE("surface jacobian: analytic vs finite differences") {
  const PotentialV V = three_band_V();
  BlockPair seed = anchor_pair(V);
  seed.q(0) = 0.12;  // move off the symmetric point so nothing degenerates
  const IsoPoint pt = solve_iso_point(V, seed);
  const IsoJacobian an = iso_jacobian(pt.pair, V, JacobianMode::Analytic);
  const IsoJacobian fd = iso_jacobian(pt.pair, V, JacobianMode::FiniteDifference);
  REQUIRE(an.T.rows() == fd.T.rows());
  REQUIRE(an.T.cols() == fd.T.cols());
  CHECK((an.T - fd.T).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("sign normalization is a quotient map") {
  const PotentialV V = two_band_V();
  const auto pts = sample_torus(V, 5);
  REQUIRE(!pts.empty());
  for (const IsoPoint& pt : pts) {
    BlockPair flipped = pt.pair;
    flipped.p(0) = -flipped.p(0);
    flipped.q(0) = -flipped.q(0);
    // the flip leaves every residue functional unchanged ...
    CHECK(lambda_iso(1, flipped, V.c) ==
          doctest::Approx(lambda_iso(1, pt.pair, V.c)).epsilon(1e-12));
    // ... and normalization undoes it
    normalize_signs(flipped);
    BlockPair canonical = pt.pair;
    normalize_signs(canonical);
    CHECK((flipped.p - canonical.p).cwiseAbs().maxCoeff() == 0.0);
    CHECK((flipped.q - canonical.q).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("periodic windows out of surface points are certified") {
  const PotentialV V = two_band_V();
  const IsoPoint pt = solve_iso_point(V, anchor_pair(V));
  const GsmpWindow w = build_periodic(pt, 12);
  CHECK(w.j_min == -12);
  CHECK(w.j_max() == 11);
  CHECK(w.t_lo == -12);
  CHECK(w.t_hi == 11);
  const ClassReport rep = check_gsmp_class(w, 1e-8);
  CHECK(rep.certified);
  CHECK(rep.min_lambda_sharp == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("reduced potentials are rejected by the surface solvers") {
  PotentialV V;
  V.lambda0 = 0.0;
  V.c0 = 0.0;
  V.lambda = {1.0};
  V.c = {0.0};
  CHECK_THROWS(anchor_pair(V));
}
