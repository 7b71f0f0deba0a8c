#include "doctest.h"

#include <Eigen/Dense>

#include "gsmp/analysis.hpp"
#include "gsmp/fiber.hpp"
#include "gsmp/iso.hpp"
#include "gsmp/potential.hpp"
#include "gsmp/resolvent.hpp"

using namespace gsmp;

// Every parallel kernel writes into per-index slots and reduces serially,
// so the OpenMP path must match the serial one bit for bit -- not just to
// tolerance.  These tests compare with operator== on doubles on purpose.

namespace {

struct Shared {
  IntervalSystem E;
  PotentialV V;
  IsoPoint pt;

  Shared() {
    E = make_interval_system(-2.0, 2.0, {{-1.2, -0.4}, {0.3, 1.1}});
    V = solve_potential(E).V;
    pt = solve_iso_point(V, anchor_pair(V));
  }
};

Shared& fx() {
  static Shared s;
  return s;
}

}  // namespace

TEST_CASE("potential verification is execution-order independent") {
  const PotentialVerifyReport a = verify_potential(fx().V, fx().E, 257, Exec::Serial);
  const PotentialVerifyReport b = verify_potential(fx().V, fx().E, 257, Exec::OpenMP);
  CHECK(a.edge_residual == b.edge_residual);
  CHECK(a.interior_excess == b.interior_excess);
  CHECK(a.exterior_margin == b.exterior_margin);
  CHECK(a.ok == b.ok);
}

TEST_CASE("fiber sweep is execution-order independent") {
  const FiberSweep s = fiber_sweep(fx().pt.pair, fx().V.c, 48, Exec::Serial);
  const FiberSweep p = fiber_sweep(fx().pt.pair, fx().V.c, 48, Exec::OpenMP);
  REQUIRE(s.eigs.size() == p.eigs.size());
  for (size_t t = 0; t < s.eigs.size(); ++t) {
    CHECK(s.theta[t] == p.theta[t]);
    CHECK((s.eigs[t] - p.eigs[t]).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(fiber_magic_check(fx().pt.pair, fx().V.c, fx().V, 48, Exec::Serial) ==
        fiber_magic_check(fx().pt.pair, fx().V.c, fx().V, 48, Exec::OpenMP));
}

TEST_CASE("section assembly is execution-order independent") {
  PerturbationSpec spec;
  spec.family = PerturbationSpec::Family::Compact;
  spec.amplitude = 0.01;
  spec.support = 3;
  spec.seed = 31;
  const GsmpWindow w = apply_perturbation(build_periodic(fx().pt, 8), spec);
  const VBlocks a = assemble_v_blocks(w, fx().V, -3, 3, Exec::Serial);
  const VBlocks b = assemble_v_blocks(w, fx().V, -3, 3, Exec::OpenMP);
  REQUIRE(a.w.size() == b.w.size());
  for (size_t i = 0; i < a.w.size(); ++i)
    CHECK((a.w[i] - b.w[i]).cwiseAbs().maxCoeff() == 0.0);
  for (size_t i = 0; i < a.v.size(); ++i)
    CHECK((a.v[i] - b.v[i]).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.asymmetry == b.asymmetry);
  CHECK(a.triangular_defect == b.triangular_defect);
}

TEST_CASE("spectral quadrature is execution-order independent") {
  JacobiWindow J;
  J.n_lo = 0;
  J.a.assign(600, 1.0);
  J.b.assign(600, 0.0);
  const IntervalSystem free_E = make_interval_system(-2.0, 2.0, {});
  KsSpectralOptions so, po;
  so.exec = Exec::Serial;
  po.exec = Exec::OpenMP;
  const KsSpectralTerms s = ks_spectral_side(J, 500, free_E, so);
  const KsSpectralTerms p = ks_spectral_side(J, 500, free_E, po);
  CHECK(s.ac_term == p.ac_term);
  CHECK(s.ev_term == p.ev_term);
}

TEST_CASE("torus sampling is execution-order independent") {
  const auto a = sample_torus(fx().V, 6, Exec::Serial);
  const auto b = sample_torus(fx().V, 6, Exec::OpenMP);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK((a[i].pair.p - b[i].pair.p).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a[i].pair.q - b[i].pair.q).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a[i].margin == b[i].margin);
  }
}
