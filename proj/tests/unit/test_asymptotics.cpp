#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "qwg/asymptotics.hpp"
#include "qwg/error.hpp"

using namespace qwg;

namespace {

// Synthetic coefficients with Im a = |A|^2 exactly.
AsymptoticModel synthetic(cplx b2 = std::polar(3.7, 0.3)) {
  AsymptoticModel m;
  m.mu1 = 1.7772882702;
  m.mu2 = 3.1956911510;
  m.alpha = 0.19;
  m.beta = 0.003;
  m.A = {2.0, 1.0};
  m.a = {0.7, std::norm(m.A)};
  m.lambda1_sq = 5.783;
  m.d = 2.5;
  m.channel.k0_sq = 8.5;
  m.channel.b = {cplx(3.7, 0.0), b2};
  return m;
}

double bb(const AsymptoticModel& m) { return std::norm(m.channel.b[0]) + std::norm(m.channel.b[1]); }

}  // namespace

TEST_SUITE("asymptotics") {
  TEST_CASE("matching solution satisfies its own equations and unitarity") {
    auto m = synthetic();
    auto gd = gamma_delta(m, 0.3);
    for (double k2 : {8.3, 8.45, 8.478, 8.49, 8.6}) {
      auto s = matching_solve(m, k2, 0.3);
      CHECK(s.residual < 1e-12);
      // Rounding relative to |delta gamma|.
      CHECK(std::abs(s.lemma_defect) < 1e-14 * std::abs(gd.delta * gd.gamma));
      CHECK(std::norm(s.s11) + std::norm(s.s12) == doctest::Approx(1.0).epsilon(1e-10));
    }
  }

  TEST_CASE("leading pole formulas agree with the fixed point to the next order") {
    auto m = synthetic();
    std::vector<double> e{0.3, 0.2, 0.1}, rel;
    for (double eps : e) {
      auto p = resonance_pole(m, eps);
      double p1 = std::pow(eps, 2 * m.mu1 + 1);
      CHECK(p.k_r_sq_leading == doctest::Approx(8.5 - 0.19 * bb(m) * p1).epsilon(1e-14));
      CHECK(p.k_i_sq_leading == doctest::Approx(0.003 * 0.003 * bb(m) * 5.0 * p1 * p1).epsilon(1e-14));
      CHECK(p.k_i_sq > 0.0);
      CHECK(p.pole_residual < 1e-12);
      rel.push_back(std::abs(p.k_r_sq - p.k_r_sq_leading) / (8.5 - p.k_r_sq_leading));
      CHECK(std::abs(p.k_i_sq - p.k_i_sq_leading) < 0.05 * p.k_i_sq_leading);
    }
    // Relative remainder is O(eps^{2 mu1 + 1}).
    double slope = std::log(rel[0] / rel[2]) / std::log(e[0] / e[2]);
    CHECK(slope > 2 * m.mu1 + 1 - 0.5);
  }

  TEST_CASE("symmetric tips transmit fully at the peak; Lorentzian half height at k_r +- width/2") {
    auto m = synthetic(cplx(0.0, 3.7));
    const double eps = 0.2;
    auto pk = peak_characteristics(m, eps);
    CHECK(pk.q == doctest::Approx(1.0));
    CHECK(pk.t_max == doctest::Approx(1.0));
    CHECK(lorentzian(pk, eps, m.mu1, pk.k_r_sq) == doctest::Approx(1.0).epsilon(1e-14));
    // k^2 rounding is ~1e-15 against a width of ~1e-8.
    CHECK(lorentzian(pk, eps, m.mu1, pk.k_r_sq + 0.5 * pk.width) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(lorentzian(pk, eps, m.mu1, pk.k_r_sq - 0.5 * pk.width) == doctest::Approx(0.5).epsilon(1e-6));
    // Width is twice the leading imaginary part of the pole.
    CHECK(pk.width == doctest::Approx(2 * resonance_pole(m, eps).k_i_sq_leading).epsilon(1e-12));
  }

  TEST_CASE("asymmetric tips: T_max = 4/(q + 1/q)^2 and the matching peak sits at k_r") {
    auto m = synthetic(cplx(2.0, -1.0));
    const double eps = 0.15;
    auto pk = peak_characteristics(m, eps);
    double q = 3.7 / std::sqrt(5.0);
    CHECK(pk.q == doctest::Approx(q).epsilon(1e-14));
    CHECK(pk.t_max == doctest::Approx(4.0 / ((q + 1 / q) * (q + 1 / q))).epsilon(1e-14));
    CHECK(pk.t_max < 1.0);

    auto grid = peak_grid(pk, 3.0, 1201);
    auto tp = transmission_profile(m, eps, grid);
    auto it = std::max_element(tp.t_matching.begin(), tp.t_matching.end());
    double k_arg = grid[static_cast<std::size_t>(it - tp.t_matching.begin())];
    CHECK(std::abs(k_arg - pk.k_r_sq) < 0.05 * pk.width);
    CHECK(*it == doctest::Approx(pk.t_max).epsilon(0.02));
    for (std::size_t i = 0; i < grid.size(); i += 100)
      CHECK(std::abs(tp.t_matching[i] - tp.t_lorentz[i]) < 0.02 * pk.t_max);
  }

  TEST_CASE("peak grid is centred and symmetric") {
    PeakCharacteristics pk;
    pk.k_r_sq = 8.4;
    pk.width = 1e-6;
    auto g = peak_grid(pk, 5.0, 11);
    CHECK(g.front() == doctest::Approx(8.4 - 5e-6).epsilon(1e-15));
    CHECK(g.back() == doctest::Approx(8.4 + 5e-6).epsilon(1e-15));
    CHECK(g[5] == 8.4);
  }

  TEST_CASE("no field: spin channels coincide and polarization vanishes identically") {
    auto m = synthetic();
    const double eps = 0.2;
    auto grid = peak_grid(peak_characteristics(m, eps), 4.0, 81);
    auto sc = spin_characteristics(m, m, eps, grid);
    for (double p : sc.polarization) CHECK(p == 0.0);
    CHECK(sc.separation == 0.0);
    CHECK_FALSE(sc.resolvable);
  }

  TEST_CASE("relabelling the spins negates the polarization") {
    auto plus = synthetic(), minus = synthetic();
    minus.channel.k0_sq = 8.5 + 3e-7;
    minus.channel.b[1] = std::polar(3.1, -0.2);
    const double eps = 0.2;
    auto grid = peak_grid(peak_characteristics(plus, eps), 20.0, 101);
    auto a = spin_characteristics(plus, minus, eps, grid);
    auto b = spin_characteristics(minus, plus, eps, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(a.polarization[i] == -b.polarization[i]);
    CHECK(a.separation == -b.separation);
  }

  TEST_CASE("well separated peaks are resolved with polarization near +-1 at each peak") {
    auto plus = synthetic(cplx(0.0, 3.7)), minus = synthetic(cplx(0.0, 3.7));
    const double eps = 0.2;
    auto pk = peak_characteristics(plus, eps);
    minus.channel.k0_sq += 10 * pk.width;
    auto pm = peak_characteristics(minus, eps);
    auto sc = spin_characteristics(plus, minus, eps, {pk.k_r_sq, pm.k_r_sq});
    CHECK(sc.resolvable);
    CHECK(sc.separation == doctest::Approx(-10 * pk.width).epsilon(1e-6));
    // Direct Lorentzian: T = 1 / (1 + (2 (k^2 - k_r^2) / width)^2) for q = 1.
    double dx = 2 * (pk.k_r_sq - pm.k_r_sq) / pm.width;
    double t_other = 1.0 / (1.0 + dx * dx);
    CHECK(sc.polarization[0] == doctest::Approx((1 - t_other) / (1 + t_other)).epsilon(1e-6));
    CHECK(sc.polarization[1] == doctest::Approx(-(1 - t_other) / (1 + t_other)).epsilon(1e-6));
    CHECK(sc.polarization[0] > 0.99);
  }

  TEST_CASE("degenerate coefficients are rejected") {
    auto m = synthetic();
    m.beta = 0.0;
    CHECK_THROWS_AS(m.validate(), Error);
    m = synthetic();
    m.A = 0.0;
    CHECK_THROWS_AS(matching_solve(m, 8.4, 0.2), Error);
    m = synthetic();
    m.channel.b[1] = 0.0;
    CHECK_THROWS_AS(resonance_pole(m, 0.2), Error);
    m = synthetic();
    m.mode = ModelMode::full;
    CHECK_THROWS_AS(m.validate(), Error);
  }

  TEST_CASE("regime warning above the threshold only") {
    auto m = synthetic();
    CHECK(m.warnings(0.2).empty());
    CHECK_FALSE(m.warnings(0.6).empty());
  }

  TEST_CASE("tip coefficients: leading closed form and linear interpolation in full mode") {
    auto m = synthetic();
    auto t = tip_coefficients(m, 8.4);
    for (int j = 0; j < 2; ++j) {
      CHECK(t.c[j] == -std::conj(m.channel.b[0]) * m.channel.b[j]);
      CHECK(t.d[j] == 0.0);
    }
    m.mode = ModelMode::full;
    m.channel.samples = {{8.6, {cplx(3, 0), cplx(0, 1)}, {cplx(1, 1), cplx(2, 0)}},
                         {8.4, {cplx(1, 0), cplx(0, -1)}, {cplx(1, -1), cplx(0, 0)}}};
    auto mid = tip_coefficients(m, 8.45);
    CHECK(std::abs(mid.c[0] - cplx(1.5, 0)) < 1e-12);
    CHECK(std::abs(mid.c[1] - cplx(0, -0.5)) < 1e-12);
    CHECK(std::abs(mid.d[0] - cplx(1, -0.5)) < 1e-12);
    CHECK(std::abs(mid.d[1] - cplx(0.5, 0)) < 1e-12);
  }

  TEST_CASE("tau caps the remainder exponent") {
    auto m = synthetic();
    CHECK(m.tau() == doctest::Approx(std::min(1.9, m.mu2 - m.mu1)));
  }
}
