#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "gsmp/iso.hpp"
#include "gsmp/potential.hpp"
#include "gsmp/resolvent.hpp"
#include "gsmp/window.hpp"

using namespace gsmp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Fixture {
  PotentialV V;
  IsoPoint pt;
  GsmpWindow perturbed;  // certified, off the torus

  explicit Fixture(const IntervalSystem& E, std::uint64_t seed) {
    V = solve_potential(E).V;
    pt = solve_iso_point(V, anchor_pair(V));
    PerturbationSpec spec;
    spec.family = PerturbationSpec::Family::Compact;
    spec.amplitude = 0.01;
    spec.support = 3;
    spec.seed = seed;
    perturbed = apply_perturbation(build_periodic(pt, 8), spec);
    REQUIRE(check_gsmp_class(perturbed, 1e-8).certified);
  }
};

Fixture& two_band() {
  static Fixture fx(make_interval_system(-2.0, 2.0, {{-1.0, 1.0}}), 9);
  return fx;
}

Fixture& three_band() {
  static Fixture fx(make_interval_system(-2.0, 2.0, {{-1.2, -0.4}, {0.3, 1.1}}), 10);
  return fx;
}

}  // namespace

// The dense truncation is the ground truth here: because the exact
// resolvent column is supported on three blocks, interior truncation does
// not disturb it at all, so a plain LU solve on a wide section must
// reproduce the closed-form column to rounding -- and must vanish outside
// blocks j0-1..j0+1, which is precisely the support claim the closed form
// relies on.
TEST_CASE("resolvent column: closed form vs dense truncation, support check") {
  for (Fixture* fx : {&two_band(), &three_band()}) {
    const GsmpWindow& w = fx->perturbed;
    const int g = w.genus();
    const int bs = g + 1;
    const MatrixXd A = assemble_window(w, -8, 7);
    for (int k = 1; k <= g; ++k) {
      const double ck = w.poles[static_cast<size_t>(k - 1)];
      const long j0 = 0;
      const long site0 = (j0 + 8) * bs;  // first scalar row of block j0

      VectorXd e = VectorXd::Zero(A.rows());
      e(site0 + k - 1) = 1.0;
      const MatrixXd lhs = ck * MatrixXd::Identity(A.rows(), A.cols()) - A;
      const VectorXd f = lhs.partialPivLu().solve(e);

      const ResolventColumn cf = resolvent_column_closed_form(w, k, j0);
      CHECK((f.segment(site0 - bs, bs) - cf.f_prev).cwiseAbs().maxCoeff() < 1e-11);
      CHECK((f.segment(site0, bs) - cf.f_mid).cwiseAbs().maxCoeff() < 1e-11);
      CHECK((f.segment(site0 + bs, bs) - cf.f_next).cwiseAbs().maxCoeff() < 1e-11);

      double outside = 0.0;
      for (long r = 0; r < A.rows(); ++r)
        if (r < site0 - bs || r >= site0 + 2 * bs)
          outside = std::max(outside, std::abs(f(r)));
      CHECK(outside < 1e-11);

      // side conditions that close the local system
      CHECK(std::abs(w.at(j0 - 1).p.dot(cf.f_prev)) < 1e-11);
      CHECK(std::abs(cf.f_next(g)) < 1e-11);
    }
  }
}

TEST_CASE("closed form agrees with the least-squares path") {
  for (Fixture* fx : {&two_band(), &three_band()}) {
    const GsmpWindow& w = fx->perturbed;
    for (int k = 1; k <= w.genus(); ++k)
      for (long j0 : {-3L, 0L, 2L}) {
        const ResolventColumn cf = resolvent_column_closed_form(w, k, j0);
        const ResolventColumn ls = resolvent_apply_local(w, k, j0, k - 1);
        CHECK((cf.f_prev - ls.f_prev).cwiseAbs().maxCoeff() < 1e-11);
        CHECK((cf.f_mid - ls.f_mid).cwiseAbs().maxCoeff() < 1e-11);
        CHECK((cf.f_next - ls.f_next).cwiseAbs().maxCoeff() < 1e-11);
        CHECK(ls.residual < 1e-11);
      }
  }
}

TEST_CASE("site addressing matches block addressing") {
  const GsmpWindow& w = two_band().perturbed;
  const int bs = w.bs();
  const long j0 = 1;
  const int pos = 0;
  const ResolventColumn a = resolvent_apply_local(w, 1, j0, pos);
  const ResolventColumn b = resolvent_apply_local(w, 1, j0 * bs + pos);
  CHECK((a.f_mid - b.f_mid).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.j0 == b.j0);
  CHECK(a.pos == b.pos);
}

TEST_CASE("local solves demand trusted neighbours") {
  const GsmpWindow& w = two_band().perturbed;
  CHECK_THROWS_AS(resolvent_apply_local(w, 1, w.j_min, 0), std::out_of_range);
  CHECK_THROWS_AS(resolvent_column_closed_form(w, 1, w.j_max()), std::out_of_range);
}

// On the torus V(A) collapses to the sum of the two outer block shifts:
// every diagonal section block of V(A) vanishes and every coupling is the
// identity.
TEST_CASE("magic identity at a torus point") {
  for (Fixture* fx : {&two_band(), &three_band()}) {
    const GsmpWindow w = build_periodic(fx->pt, 8);
    const VBlocks vb = assemble_v_blocks(w, fx->V, -3, 3);
    CHECK(vb.asymmetry < 1e-10);
    CHECK(vb.triangular_defect < 1e-10);
    const MagicResidual mr = magic_residual(vb);
    CHECK(mr.total < 1e-9);

    double sum = 0.0;
    for (double s : mr.per_block) sum += s;
    CHECK(sum == doctest::Approx(mr.total * mr.total).epsilon(1e-12));
  }
}

TEST_CASE("off-torus sections are symmetric and near-triangular") {
  const Fixture& fx = three_band();
  const VBlocks vb = assemble_v_blocks(fx.perturbed, fx.V, -2, 2);
  CHECK(vb.asymmetry < 1e-9);
  CHECK(vb.triangular_defect < 1e-9);
  // perturbation is visible: the section is not magic any more
  CHECK(magic_residual(vb).total > 1e-4);
}

TEST_CASE("single-column shortcut agrees with the assembled section") {
  const Fixture& fx = two_band();
  const GsmpWindow& w = fx.perturbed;
  const int bs = w.bs();
  const VBlocks vb = assemble_v_blocks(w, fx.V, -2, 2);
  for (long j0 : {-1L, 0L, 1L})
    for (int pos = 0; pos < bs; ++pos) {
      const VColumn col = v_column(w, fx.V, j0, pos);
      REQUIRE(col.j_first == j0 - 1);
      REQUIRE(col.values.size() == 3 * bs);
      CHECK((col.values.segment(0, bs) - vb.vblock(j0).col(pos)).cwiseAbs().maxCoeff() <
            1e-10);
      CHECK((col.values.segment(bs, bs) - vb.wblock(j0).col(pos)).cwiseAbs().maxCoeff() <
            1e-10);
      CHECK((col.values.segment(2 * bs, bs) -
             vb.vblock(j0 + 1).row(pos).transpose())
                .cwiseAbs()
                .maxCoeff() < 1e-10);
    }
}
