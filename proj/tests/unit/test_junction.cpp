#include <cmath>
#include <numbers>

#include "doctest.h"
#include "qwg/error.hpp"
#include "qwg/junction.hpp"

using namespace qwg;

namespace {

const CapSpectrum& reference_cap() {
  static const CapSpectrum cap = cap_spectrum(std::numbers::pi / 3);
  return cap;
}

}  // namespace

TEST_SUITE("junction") {
  TEST_CASE("model solutions on one grid") {
    NarrowSpec n;
    auto s = solve_junction(n, reference_cap(), 0.05, 4.0);
    // Ω is centrally symmetric and so is the meridian grid.
    CHECK(s.left.alpha == doctest::Approx(s.right.alpha).epsilon(1e-8));
    CHECK(s.left.beta == doctest::Approx(s.right.beta).epsilon(1e-8));
    CHECK(s.left.beta > 0.0);
    CHECK(s.left.min_ratio > -1e-10);
    CHECK(s.left.reprojection_error < 1e-2);
    CHECK(s.left.fit_residual < 1e-2);
  }

  TEST_CASE("extrapolated coefficients carry a small error bar") {
    NarrowSpec n;
    auto jc = junction_coefficients(n, reference_cap());
    REQUIRE(jc.ladder.size() == 3);
    CHECK(jc.beta > 0.0);
    CHECK(jc.beta_error < 0.05 * std::abs(jc.beta));
    CHECK(jc.alpha_error < 0.05 * std::abs(jc.alpha));
    CHECK(jc.ladder[2].r_max == doctest::Approx(2 * jc.ladder[1].r_max));
  }

  TEST_CASE("closing the waist decreases beta monotonically") {
    double prev = INFINITY;
    for (double waist : {1.0, 0.6, 0.35}) {
      NarrowSpec n;
      n.neck = HyperboloidNeck{waist, 0.5, 1.0};
      auto s = solve_junction(n, reference_cap(), 0.025, 4.0);
      double beta = 0.5 * (s.left.beta + s.right.beta);
      CHECK(beta > 0.0);
      CHECK(beta < prev);
      prev = beta;
    }
  }

  TEST_CASE("beta below the floor is reported as a closed neck") {
    NarrowSpec n;
    JunctionOptions opt;
    opt.h = 0.2;
    opt.beta_floor = 1.0;
    try {
      junction_coefficients(n, reference_cap(), opt);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::numerical);
      CHECK(std::string(e.what()).find("closed") != std::string::npos);
    }
  }
}
