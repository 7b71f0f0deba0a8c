#include "doctest.h"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "gsmp/potential.hpp"

using namespace gsmp;

namespace {

// Hand-checkable two-band fixture: E = [-2,-1] u [1,2].  The function
// V(z) = 2z - 4/z maps each band onto [-2, 2]:
//   V(-2) = -4 + 2 = -2,  V(-1) = -2 + 4 = 2,  V(1) = 2 - 4 = -2,
//   V(2) = 4 - 2 = 2.
// So (lambda0, c0, lambda1, c1) = (2, 0, 4, 0) solves the edge
// conditions exactly, and by strict monotonicity between poles it is the
// only Herglotz solution.
const IntervalSystem kTwoBand = make_interval_system(-2.0, 2.0, {{-1.0, 1.0}});

}  // namespace

TEST_CASE("two-band potential solves to the closed form") {
  const PotentialSolveReport rep = solve_potential(kTwoBand);
  REQUIRE(rep.converged);
  CHECK(rep.V.lambda0 == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rep.V.c0 == doctest::Approx(0.0).epsilon(1e-12));
  REQUIRE(rep.V.genus() == 1);
  CHECK(rep.V.lambda[0] == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(rep.V.c[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rep.residual < 1e-10);

  // Edge conditions verbatim, not through the report.
  CHECK(rep.V.eval(-2.0) == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(rep.V.eval(-1.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rep.V.eval(1.0) == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(rep.V.eval(2.0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("generic systems: edge conditions, pole placement, positivity") {
  const IntervalSystem systems[] = {
      make_interval_system(-2.0, 2.0, {{-1.2, -0.4}, {0.3, 1.1}}),
      make_interval_system(-2.5, 2.5, {{-1.6, -1.0}, {-0.3, 0.2}, {0.9, 1.5}}),
      make_interval_system(-1.0, 5.0, {{0.0, 0.25}}),
  };
  for (const IntervalSystem& E : systems) {
    const PotentialSolveReport rep = solve_potential(E);
    REQUIRE(rep.converged);
    const PotentialV& V = rep.V;
    CHECK(V.lambda0 > 0.0);
    for (double l : V.lambda) CHECK(l > 0.0);
    const auto bands = E.bands();
    for (const auto& band : bands) {
      CHECK(std::abs(V.eval(band[0]) + 2.0) < 1e-9);
      CHECK(std::abs(V.eval(band[1]) - 2.0) < 1e-9);
    }
    for (int k = 0; k < V.genus(); ++k) {
      CHECK(V.c[k] > E.gaps[k][0]);
      CHECK(V.c[k] < E.gaps[k][1]);
    }

    const PotentialVerifyReport chk = verify_potential(V, E);
    CHECK(chk.ok);
    CHECK(chk.edge_residual < 1e-9);
    CHECK(chk.interior_excess < 1e-9);
    CHECK(chk.exterior_margin > 0.0);
  }
}

TEST_CASE("derivative matches finite differences") {
  const PotentialV V = solve_potential(kTwoBand).V;
  const double h = 1e-6;
  for (double x : {-1.7, -1.2, 1.3, 1.9, 0.4}) {
    const double fd = (V.eval(x + h) - V.eval(x - h)) / (2.0 * h);
    CHECK(V.deriv(x) == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("complex evaluation agrees with real on the axis") {
  const PotentialV V = solve_potential(kTwoBand).V;
  const std::complex<double> z(1.3, 0.0);
  CHECK(std::abs(V.eval(z) - std::complex<double>(V.eval(1.3))) < 1e-15);
  // Herglotz: upper half plane maps to itself.
  CHECK(V.eval(std::complex<double>(0.3, 0.7)).imag() > 0.0);
}

TEST_CASE("preimages of the two-band potential") {
  const PotentialV V = solve_potential(kTwoBand).V;

  // V(x) = 2x - 4/x = y  <=>  2x^2 - yx - 4 = 0, roots (y +- sqrt(y^2+32))/4.
  for (double y : {0.0, 1.0, -1.7, 2.0}) {
    const auto roots = potential_preimage(V, y);
    REQUIRE(roots.size() == 2);
    const double disc = std::sqrt(y * y + 32.0);
    CHECK(roots[0] == doctest::Approx((y - disc) / 4.0).epsilon(1e-10));
    CHECK(roots[1] == doctest::Approx((y + disc) / 4.0).epsilon(1e-10));
  }
}

TEST_CASE("preimages of a pure-pole potential") {
  // V(x) = 0.5 - 1/x: one branch per side of the pole, horizontal
  // asymptote c0 = 0.5 never attained.
  PotentialV V;
  V.lambda0 = 0.0;
  V.c0 = 0.5;
  V.lambda = {1.0};
  V.c = {0.0};

  auto roots = potential_preimage(V, 1.5);
  REQUIRE(roots.size() == 1);
  CHECK(roots[0] == doctest::Approx(-1.0).epsilon(1e-12));

  roots = potential_preimage(V, -0.5);
  REQUIRE(roots.size() == 1);
  CHECK(roots[0] == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(potential_preimage(V, 0.5), std::domain_error);
}

TEST_CASE("invalid potentials are rejected") {
  PotentialV V;
  V.lambda0 = 1.0;
  V.lambda = {-1.0};
  V.c = {0.0};
  CHECK_THROWS_AS(V.validate(), std::invalid_argument);

  V.lambda = {1.0, 1.0};
  V.c = {0.5, -0.5};  // out of order
  CHECK_THROWS_AS(V.validate(), std::invalid_argument);
}
