#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "gsmp/window.hpp"

using namespace gsmp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

BlockPair two_band_pair() {
  BlockPair pq;
  pq.p = VectorXd(2);
  pq.q = VectorXd(2);
  pq.p << std::sqrt(2.0), 0.5;
  pq.q << 0.0, 0.0;
  return pq;
}

BlockPair generic_pair() {
  BlockPair pq;
  pq.p = VectorXd(3);
  pq.q = VectorXd(3);
  pq.p << 0.7, -0.2, 1.1;
  pq.q << 0.3, 0.9, -0.4;
  return pq;
}

}  // namespace

TEST_CASE("block building rules") {
  const BlockPair pq = generic_pair();
  const std::vector<double> poles = {-0.5, 0.25};

  const MatrixXd A = block_A(pq.p);
  REQUIRE(A.rows() == 3);
  // only the last row carries data, and it is p^T
  CHECK(A.topRows(2).cwiseAbs().maxCoeff() == 0.0);
  CHECK((A.row(2).transpose() - pq.p).cwiseAbs().maxCoeff() == 0.0);

  const MatrixXd B = block_B(pq, poles);
  CHECK((B - B.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double want = (i <= j) ? pq.q(i) * pq.p(j) : pq.p(i) * pq.q(j);
      if (i == j && i < 2) want += poles[static_cast<size_t>(i)];
      CHECK(B(i, j) == doctest::Approx(want).epsilon(1e-15));
    }

  // B minus the rank-one p q^T is upper triangular: the strict lower
  // triangle of B is exactly (p q^T) there.
  const MatrixXd D = B - pq.p * pq.q.transpose();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < i; ++j) CHECK(std::abs(D(i, j)) < 1e-15);
}

TEST_CASE("assembled two-band window matches the hand matrix") {
  const BlockPair pq = two_band_pair();
  const GsmpWindow w = build_periodic(pq, {0.0}, -1, 0);
  const MatrixXd M = assemble_window(w, -1, 0);
  REQUIRE(M.rows() == 4);

  MatrixXd want(4, 4);
  const double r = std::sqrt(2.0);
  want << 0, 0, 0, 0,    //
      0, 0, r, 0.5,      //
      0, r, 0, 0,        //
      0, 0.5, 0, 0;
  CHECK((M - want).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("window indexing and validation") {
  const GsmpWindow w = build_periodic(generic_pair(), {-0.5, 0.25}, -3, 5);
  CHECK(w.j_min == -3);
  CHECK(w.j_max() == 5);
  CHECK(w.bs() == 3);
  CHECK(w.at(2).p(2) == doctest::Approx(1.1));
  CHECK_THROWS_AS(w.at(6), std::out_of_range);

  GsmpWindow bad = w;
  bad.at(0).p(2) = -1.0;  // admissibility requires p_g > 0
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  GsmpWindow shrunk = w;
  shrunk.t_lo = 2;
  shrunk.t_hi = 1;  // empty trusted range is malformed
  CHECK_THROWS_AS(shrunk.validate(), std::invalid_argument);
}

TEST_CASE("dense round trip recovers the generating pairs") {
  GsmpWindow w = build_periodic(generic_pair(), {-0.5, 0.25}, -2, 4);
  PerturbationSpec spec;
  spec.family = PerturbationSpec::Family::PowerDecay;
  spec.amplitude = 0.05;
  spec.exponent = 1.0;
  spec.seed = 7;
  w = apply_perturbation(w, spec);

  const MatrixXd M = assemble_window(w, -2, 4);
  const ExtractedWindow got = window_from_dense(M, w.poles, -2);
  CHECK(got.structure_defect < 1e-14);
  REQUIRE(got.window.j_min == -1);
  REQUIRE(got.window.j_max() == 4);
  for (long j = -1; j <= 4; ++j) {
    CHECK((got.window.at(j).p - w.at(j).p).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((got.window.at(j).q - w.at(j).q).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("perturbations: determinism, support, decay envelope") {
  const GsmpWindow base = build_periodic(two_band_pair(), {0.0}, -20, 19);

  PerturbationSpec none;
  const GsmpWindow same = apply_perturbation(base, none);
  for (long j = -20; j <= 19; ++j)
    CHECK((same.at(j).p - base.at(j).p).cwiseAbs().maxCoeff() == 0.0);

  PerturbationSpec compact;
  compact.family = PerturbationSpec::Family::Compact;
  compact.amplitude = 0.01;
  compact.support = 5;
  compact.seed = 3;
  const GsmpWindow wc1 = apply_perturbation(base, compact);
  const GsmpWindow wc2 = apply_perturbation(base, compact);
  bool touched = false;
  for (long j = -20; j <= 19; ++j) {
    // same seed, same draw
    CHECK((wc1.at(j).p - wc2.at(j).p).cwiseAbs().maxCoeff() == 0.0);
    CHECK((wc1.at(j).q - wc2.at(j).q).cwiseAbs().maxCoeff() == 0.0);
    const double dp = (wc1.at(j).p - base.at(j).p).cwiseAbs().maxCoeff();
    const double dq = (wc1.at(j).q - base.at(j).q).cwiseAbs().maxCoeff();
    if (std::abs(j) > 5) {
      CHECK(dp == 0.0);
      CHECK(dq == 0.0);
    } else if (dp > 0 || dq > 0) {
      touched = true;
      CHECK(dp <= 0.01);
      CHECK(dq <= 0.01);
    }
  }
  CHECK(touched);

  PerturbationSpec decay;
  decay.family = PerturbationSpec::Family::PowerDecay;
  decay.amplitude = 0.05;
  decay.exponent = 1.0;
  decay.seed = 3;
  const GsmpWindow wd = apply_perturbation(base, decay);
  for (long j = -20; j <= 19; ++j) {
    const double cap = 0.05 / std::max<double>(1.0, std::abs(static_cast<double>(j)));
    CHECK((wd.at(j).p - base.at(j).p).cwiseAbs().maxCoeff() <= cap + 1e-18);
    CHECK((wd.at(j).q - base.at(j).q).cwiseAbs().maxCoeff() <= cap + 1e-18);
    CHECK(wd.at(j).p(1) > 0.0);  // admissibility preserved
  }
}
