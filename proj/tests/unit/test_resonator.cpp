#include <cmath>
#include <numbers>

#include "doctest.h"
#include "qwg/error.hpp"
#include "qwg/resonator.hpp"
#include "reference.hpp"

using namespace qwg;

namespace {

// Open chain -d^2 with link phases e^{i phi_j}; gauge-trivial, so the spectrum is
// that of the real chain: 2 - 2 cos(j pi / (n + 1)).
SpMatC phased_chain(int n) {
  std::vector<Eigen::Triplet<cplx>> t;
  for (int i = 0; i < n; ++i) {
    t.emplace_back(i, i, 2.0);
    if (i + 1 < n) {
      cplx u = std::polar(1.0, 0.3 * i + 0.1);
      t.emplace_back(i, i + 1, -u);
      t.emplace_back(i + 1, i, -std::conj(u));
    }
  }
  SpMatC m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

double chain_eigenvalue(int n, int j) { return 2.0 - 2.0 * std::cos(j * std::numbers::pi / (n + 1)); }

struct Reference {
  WaveguideSpec spec = test::reference_spec();
  CapSpectrum cap = cap_spectrum(std::numbers::pi / 3);
  ResonatorSpectrum rs;
  Reference() {
    ResonatorOptions o;
    o.h = 0.0625;
    rs = resonator_eigenpair(spec, cap, Spin::plus, {6.0, 12.0}, o);
  }
};

const Reference& reference() {
  static const Reference r;
  return r;
}

}  // namespace

TEST_SUITE("resonator") {
  TEST_CASE("shift-invert window eigenpair against the analytic chain spectrum") {
    const int n = 400;
    auto op = phased_chain(n);
    double target = chain_eigenvalue(n, 37);
    double lo = 0.5 * (chain_eigenvalue(n, 36) + target), hi = 0.5 * (target + chain_eigenvalue(n, 38));
    auto we = window_eigenpair(op, {lo, hi}, 4, 1e-10);
    CHECK(we.value == doctest::Approx(target).epsilon(1e-10));
    CHECK((op * we.vector - we.value * we.vector).norm() < 1e-8);
    CHECK(we.gap == doctest::Approx(std::min(chain_eigenvalue(n, 38) - target, target - chain_eigenvalue(n, 36))).epsilon(1e-6));
  }

  TEST_CASE("window with two eigenvalues is rejected") {
    const int n = 400;
    auto op = phased_chain(n);
    Window w{chain_eigenvalue(n, 36) - 1e-6, chain_eigenvalue(n, 37) + 1e-6};
    CHECK_THROWS_AS(window_eigenpair(op, w, 6, 1e-10), Error);
  }

  TEST_CASE("field-free resonator eigenpair") {
    const auto& r = reference();
    const auto& rs = r.rs;
    CHECK(rs.k0_sq > 6.0);
    CHECK(rs.k0_sq < 12.0);
    CHECK(rs.gap > 0.5);
    // Extrapolation moves the eigenvalue by much less than the lattice value itself.
    CHECK(std::abs(rs.k0_sq - rs.k0_sq_fine) < 0.05);
    // Mirror symmetry: equal tip amplitudes; phase convention b1 > 0.
    CHECK(std::abs(rs.b[0]) == doctest::Approx(std::abs(rs.b[1])).epsilon(1e-6));
    CHECK(std::abs(rs.b[0].imag()) < 1e-12);
    CHECK(rs.b[0].real() > 0.0);
    // Fit route and Green route.
    for (int j = 0; j < 2; ++j) CHECK(std::abs(rs.b[j] - rs.b_green[j]) < 0.05 * std::abs(rs.b[j]));
    double vol = std::pow(rs.grid.h, 3);
    CHECK(rs.v0.squaredNorm() * vol == doctest::Approx(1.0).epsilon(1e-10));
  }

  TEST_CASE("regularized expansion: singular coefficients and the k -> k0 limit of c_j") {
    const auto& r = reference();
    const auto& rs = r.rs;
    ResonatorOptions o;
    o.h = 0.0625;
    const double dk = 0.05;
    auto ex = regularized_expansion(r.spec, r.cap, rs, std::sqrt(rs.k0_sq_fine + dk), o);
    CHECK(std::abs(ex.n21 - dk) < 0.05 * dk);
    CHECK(std::abs(ex.n22[0] - std::conj(rs.b[1])) < 0.05 * std::abs(rs.b[1]));
    CHECK(std::abs(ex.n22[1] + std::conj(rs.b[0])) < 0.05 * std::abs(rs.b[0]));
    // c_j(k0) = -conj(b1) b_j; the offset contributes O(dk).
    for (int j = 0; j < 2; ++j) {
      cplx expect = -std::conj(rs.b[0]) * rs.b[j];
      CHECK(std::abs(ex.c[j] - expect) < 0.1 * std::abs(expect));
    }
  }

  TEST_CASE("zero field gives a real operator and no Zeeman shift") {
    SolenoidSpec none;
    auto f = resonator_field(none, Spin::minus);
    CHECK_FALSE(f.potential);
    CHECK_FALSE(f.scalar);
    const auto& rs = reference().rs;
    CHECK(zeeman_splitting_oracle(none, rs.grid, rs.v0) == 0.0);
  }

  TEST_CASE("first-order Zeeman oracle for a uniform field over the whole resonator slab") {
    // H uniform inside the solenoid; oracle = 2 H * probability inside it.
    const auto& rs = reference().rs;
    auto sol = test::axial_solenoid(0.5);
    double oracle = zeeman_splitting_oracle(sol, rs.grid, rs.v0);
    double inside = 0.0;
    for (std::size_t id = 0; id < rs.grid.size(); ++id) {
      Point3 p = rs.grid.position(id);
      if (std::hypot(p.x(), p.y()) < 0.3) inside += std::norm(rs.v0[static_cast<Eigen::Index>(id)]);
    }
    inside *= std::pow(rs.grid.h, 3);
    CHECK(oracle == doctest::Approx(2 * 0.5 * inside).epsilon(1e-9));
  }
}
