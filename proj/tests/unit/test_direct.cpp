#include <cmath>

#include "doctest.h"
#include "qwg/direct.hpp"
#include "qwg/dtn.hpp"
#include "qwg/error.hpp"
#include "qwg/gmres.hpp"
#include "reference.hpp"

using namespace qwg;

namespace {

DirectOptions coarse() {
  DirectOptions o;
  o.h = 0.125;
  return o;
}

// Reference geometry with a wider second neck and an off-axis solenoid, so
// neither mirror symmetry nor an axial field makes the checks below trivial.
WaveguideSpec lopsided(double H) {
  auto s = test::reference_spec(0.5);
  s.narrows[1].neck = HyperboloidNeck{1.3, 0.5, 1.0};
  if (H != 0.0) {
    s.solenoid = test::axial_solenoid(H, 0.15);
    s.solenoid.y0 = 0.2;
    s.solenoid.gauge_inner = 0.02;
    s.solenoid.gauge_outer = 0.4;
  }
  return s;
}

}  // namespace

TEST_SUITE("direct") {
  TEST_CASE("plain cylinder: the closures are reflectionless") {
    const double h = 0.1, L = 2.0, k = std::sqrt(8.0);
    VoxelizeOptions vo;
    vo.open_x_lo = vo.open_x_hi = true;
    auto grid = voxelize([](const Point3& p) { return std::hypot(p.y(), p.z()) < 1.0; },
                         {Point3(0.0, -1.1, -1.1), Point3(L, 1.1, 1.1)}, h, vo);
    SpMatC op = laplacian(grid).cast<cplx>();
    SpMatC id(op.rows(), op.cols());
    id.setIdentity();
    op -= k * k * id;
    int last = grid.dims[0] - 1;
    std::vector<EndClosure> ends{dtn_closure(grid, 0, -1.0, k, 6), dtn_closure(grid, last, 1.0, k, 6)};
    auto sys = close_system(op, grid, ends);
    VecC rhs = incident_rhs(sys, 0, 0.0);
    Eigen::SparseLU<SpMatC> lu(sys.matrix);
    REQUIRE(lu.info() == Eigen::Success);
    VecC u = lu.solve(rhs);
    VecC ug = u.head(static_cast<Eigen::Index>(grid.size()));
    const auto& l = sys.ends[0];
    const auto& r = sys.ends[1];
    cplx cl = l.mode_coefficient(ug, 0), cr = r.mode_coefficient(ug, 0);
    // Only the incident wave exp(i q x) with unit slice amplitude.
    CHECK(std::abs(cl - std::polar(1.0, l.q * l.x)) < 1e-10);
    CHECK(std::abs(cr - std::polar(1.0, r.q * r.x)) < 1e-10);
    for (int n = 1; n < r.kept(); ++n) CHECK(std::abs(r.mode_coefficient(ug, n)) < 1e-10);
  }

  TEST_CASE("flux conservation with and without field") {
    for (double H : {0.0, 0.5}) {
      ScatteringProblem p(lopsided(H), Spin::plus, coarse());
      for (double k2 : {7.0, 8.3}) {
        auto r = p.solve(std::sqrt(k2));
        CHECK(r.defect < 1e-10);
        CHECK(r.T + r.R == doctest::Approx(1.0).epsilon(1e-10));
      }
    }
  }

  TEST_CASE("reciprocity without field") {
    ScatteringProblem p(lopsided(0.0), Spin::plus, coarse());
    auto l = p.solve(std::sqrt(8.3), Incidence::left);
    auto r = p.solve(std::sqrt(8.3), Incidence::right);
    CHECK(std::abs(l.s12) == doctest::Approx(std::abs(r.s12)).epsilon(1e-9));
    // |s11| = |s22| for any unitary S; the phases see the lopsided necks.
    CHECK(std::abs(std::arg(l.s11 / r.s11)) > 1e-3);
  }

  TEST_CASE("time reversal: reversing the current and the spin swaps the ends") {
    auto s = lopsided(0.5);
    auto rev = s;
    rev.solenoid = s.solenoid.scaled(-1.0);
    const double k = std::sqrt(8.3);
    auto fwd = ScatteringProblem(s, Spin::plus, coarse()).solve(k, Incidence::left);
    auto back = ScatteringProblem(rev, Spin::minus, coarse()).solve(k, Incidence::right);
    CHECK(fwd.T == doctest::Approx(back.T).epsilon(1e-9));
  }

  TEST_CASE("lattice gauge transformations leave the observables unchanged") {
    auto s = lopsided(0.5);
    const double k = std::sqrt(8.3);
    auto base = ScatteringProblem(s, Spin::plus, coarse()).solve(k);
    auto o = coarse();
    o.extra_gauge = [](const Point3&) { return 0.7; };
    auto same = ScatteringProblem(s, Spin::plus, o).solve(k);
    CHECK(same.T == base.T);
    CHECK(same.s12 == base.s12);
    o.extra_gauge = [](const Point3& p) { return 0.4 * p.x() + 0.3 * std::sin(2 * p.y()) * p.z(); };
    auto moved = ScatteringProblem(s, Spin::plus, o).solve(k);
    CHECK(moved.T == doctest::Approx(base.T).epsilon(1e-10));
    CHECK(moved.R == doctest::Approx(base.R).epsilon(1e-10));
  }

  TEST_CASE("raw and modified gauge agree") {
    auto zero = ScatteringProblem(lopsided(0.0), Spin::plus, coarse()).solve(std::sqrt(8.3));
    auto o = coarse();
    o.gauge = GaugeChoice::raw;
    auto zero_raw = ScatteringProblem(lopsided(0.0), Spin::plus, o).solve(std::sqrt(8.3));
    CHECK(zero.T == zero_raw.T);

    auto g = gauge_check(lopsided(0.5), std::sqrt(8.3), Spin::minus, coarse());
    // Off resonance; only the C^2 cutoff limits the lattice gauge covariance.
    CHECK(g.deviation < 1e-9);
    CHECK(g.field_deviation < 1e-5);
  }

  TEST_CASE("switching the field off reproduces the field-free problem") {
    auto o = coarse();
    o.field = false;
    auto off = ScatteringProblem(lopsided(0.5), Spin::plus, o).solve(std::sqrt(8.3));
    auto none = ScatteringProblem(lopsided(0.0), Spin::plus, coarse()).solve(std::sqrt(8.3));
    CHECK(off.T == doctest::Approx(none.T).epsilon(1e-12));
  }

  TEST_CASE("preconditioned GMRES matches the direct solve") {
    ScatteringProblem p(lopsided(0.5), Spin::plus, coarse());
    p.set_reference(std::sqrt(8.3));
    auto it = p.solve_iterative(std::sqrt(8.31));
    auto lu = p.solve(std::sqrt(8.31));
    CHECK(it.iterations > 0);
    CHECK(std::abs(it.s12 - lu.s12) < 1e-8);
    CHECK(std::abs(it.s11 - lu.s11) < 1e-8);
  }

  TEST_CASE("GMRES solves a small system and gives up when it cannot progress") {
    const int n = 30;
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Random(n, n) + 8.0 * Eigen::MatrixXcd::Identity(n, n);
    Eigen::VectorXcd b = Eigen::VectorXcd::Random(n), x;
    auto apply = [&](const Eigen::VectorXcd& v) { Eigen::VectorXcd r = A * v; return r; };
    auto res = gmres(apply, [](const Eigen::VectorXcd& v) { return v; }, b, x, 10, 200, 1e-12);
    CHECK(res.converged);
    CHECK((A * x - b).norm() / b.norm() < 1e-11);

    // The preconditioner drops one direction of the Krylov space, so nothing
    // reaches b beyond a fixed residual; the stall is detected within a few cycles.
    Eigen::VectorXcd y;
    auto blind = [](const Eigen::VectorXcd& v) { Eigen::VectorXcd w = v; w[0] = 0.0; return w; };
    auto identity = [](const Eigen::VectorXcd& v) { return v; };
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(n);
    e[0] = 1.0;
    auto stalled = gmres(identity, blind, e, y, 10, 200, 1e-12);
    CHECK_FALSE(stalled.converged);
    CHECK(stalled.iterations <= 40);
  }

  TEST_CASE("k^2 outside the single-channel window is rejected") {
    CHECK_THROWS_AS(ScatteringProblem(lopsided(0.0), Spin::plus, coarse()).solve(2.0), Error);
  }

  TEST_CASE("Lorentzian fit recovers synthetic data") {
    std::vector<double> x, t;
    for (int i = 0; i <= 20; ++i) {
      double xi = 2.0 + 0.002 * (i - 10);
      double u = 2 * (xi - 2.0003) / 0.0011;
      x.push_back(xi);
      t.push_back(0.8 / (1 + u * u));
    }
    auto f = fit_lorentzian(x, t, {1.9995, 0.002, 0.5, 0.0});
    CHECK(f.center == doctest::Approx(2.0003).epsilon(1e-10));
    CHECK(f.width == doctest::Approx(0.0011).epsilon(1e-8));
    CHECK(f.height == doctest::Approx(0.8).epsilon(1e-8));
    CHECK(f.residual < 1e-10);
  }

  TEST_CASE("log-log slope of a power law") {
    std::vector<double> x{0.3, 0.25, 0.2, 0.15}, y;
    for (double v : x) y.push_back(3.0 * std::pow(v, 4.55));
    CHECK(loglog_slope(x, y) == doctest::Approx(4.55).epsilon(1e-12));
    CHECK_THROWS_AS(loglog_slope({1.0}, {1.0}), Error);
  }
}
