#include "qwg/resonator.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/UmfPackSupport>

#include "qwg/channel.hpp"
#include "qwg/error.hpp"
#include "qwg/lanczos.hpp"
#include "qwg/special.hpp"
#include "qwg/tip_fit.hpp"

namespace qwg {

WindowEigen window_eigenpair(const SpMatC& op, const Window& window, int nev, double tol) {
  const double sigma = 0.5 * (window.lo + window.hi);
  SpMatC shifted = op;
  for (Eigen::Index i = 0; i < shifted.rows(); ++i) shifted.coeffRef(i, i) -= sigma;
  Eigen::UmfPackLU<SpMatC> lu(shifted);
  if (lu.info() != Eigen::Success) throw numerical_error("resonator", "shift-invert factorization failed");
  LanczosOptions lo;
  lo.nev = std::min<int>(nev, static_cast<int>(op.rows()));
  lo.tol = tol;
  auto pairs = shift_invert_lanczos<cplx>([&](const VecC& x) { return VecC(op * x); },
                                          [&](const VecC& x) { return VecC(lu.solve(x)); }, op.rows(), sigma, lo);
  WindowEigen we;
  int pick = -1;
  for (Eigen::Index e = 0; e < pairs.values.size(); ++e)
    if (pairs.values[e] > window.lo && pairs.values[e] < window.hi) {
      we.inside.push_back(pairs.values[e]);
      pick = static_cast<int>(e);
    }
  if (we.inside.size() != 1) {
    std::string list;
    for (double v : we.inside) list += " " + std::to_string(v);
    throw numerical_error("resonator", "no simple resonator mode in window [" + std::to_string(window.lo) + ", " +
                                           std::to_string(window.hi) + "]; eigenvalues inside:" +
                                           (list.empty() ? " none" : list));
  }
  we.value = pairs.values[pick];
  we.vector = pairs.vectors.col(pick);
  we.residual = pairs.residuals[pick];
  we.gap = INFINITY;
  for (Eigen::Index e = 0; e < pairs.values.size(); ++e)
    if (e != pick) we.gap = std::min(we.gap, std::abs(pairs.values[e] - we.value));
  return we;
}

LatticeField resonator_field(const SolenoidSpec& sol, Spin spin) {
  LatticeField f;
  if (!sol.active()) return f;
  f.potential = [sol](const Point3& p) { return gauge_modified_potential(sol, p); };
  const double s = spin_sign(spin);
  f.scalar = [sol, s](const Point3& p) { return s * sol.field(std::hypot(p.x() - sol.x0, p.y() - sol.y0)); };
  return f;
}

double zeeman_splitting_oracle(const SolenoidSpec& sol, const VoxelGrid& grid, const VecC& v0) {
  double acc = 0.0;
  for (std::size_t id = 0; id < grid.size(); ++id) {
    Point3 p = grid.position(id);
    acc += sol.field(std::hypot(p.x() - sol.x0, p.y() - sol.y0)) * std::norm(v0[static_cast<Eigen::Index>(id)]);
  }
  return 2.0 * acc * cell_volume(grid);
}

namespace {

double cutoff_radius(const WaveguideSpec& spec, const ResonatorOptions& opt) {
  double limit = std::min(conical_radius(spec, 0), conical_radius(spec, 1));
  // The two cutoff balls must not overlap.
  limit = std::min(limit, 0.5 * spec.d());
  double delta = opt.cutoff > 0 ? opt.cutoff : 0.8 * limit;
  if (delta > limit) throw config_error("resonator", "cutoff radius leaves the conical region");
  return delta;
}

TipFrame resonator_tip(const WaveguideSpec& spec, int j) {
  return {Point3(spec.narrows[j].tip_x, 0.0, 0.0), j == 0 ? 1.0 : -1.0};
}

RadialFit tip_fit(const VoxelGrid& g, const VecC& u, const TipFrame& tip, const CapSpectrum& cap, double k,
                  double delta, const ResonatorOptions& opt) {
  SingularRadialPair pair(cap.mu1, k);
  auto radii = probe_radii(std::max(opt.probe_min_h * g.h, 0.05 * delta), 0.45 * delta, opt.probes);
  std::vector<cplx> proj;
  for (double r : radii) proj.push_back(cap_projection(g, u, tip, cap, r));
  return fit_radial(radii, proj,
                    {[&](double r) { return pair.regular(r).value; }, [&](double r) { return pair.singular(r).value; }});
}

SpMatC resonator_operator(const VoxelGrid& g, const WaveguideSpec& spec, Spin spin) {
  return magnetic_operator(g, resonator_field(spec.solenoid, spin));
}

}  // namespace

ResonatorSpectrum resonator_eigenpair(const WaveguideSpec& spec, const CapSpectrum& cap, Spin spin,
                                      const Window& window, const ResonatorOptions& opt) {
  if (!(window.hi > window.lo)) throw config_error("resonator", "empty energy window");
  const double delta = cutoff_radius(spec, opt);
  ResonatorSpectrum rs;
  rs.spin = spin;
  rs.cutoff = delta;
  rs.grid = voxelize_domain(spec, Domain::resonator, opt.h, {0.0, 0.0}, {false, false});
  SpMatC op = resonator_operator(rs.grid, spec, spin);
  WindowEigen we = window_eigenpair(op, window, opt.nev, opt.eig_tol);
  rs.k0_sq_fine = we.value;
  rs.k0_sq = we.value;
  rs.gap = we.gap;
  rs.residual = we.residual;
  if (opt.coarse_factor > 1.0) {
    VoxelGrid gc = voxelize_domain(spec, Domain::resonator, opt.h * opt.coarse_factor, {0.0, 0.0}, {false, false});
    WindowEigen wc = window_eigenpair(resonator_operator(gc, spec, spin), window, opt.nev, opt.eig_tol);
    rs.k0_sq_coarse = wc.value;
    double r2 = opt.coarse_factor * opt.coarse_factor;
    rs.k0_sq = (r2 * we.value - wc.value) / (r2 - 1.0);
  }

  VecC v = we.vector / std::sqrt(cell_volume(rs.grid));  // h^3 sum |v|^2 = 1
  const double k0 = std::sqrt(rs.k0_sq_fine);
  for (int j = 0; j < 2; ++j) {
    auto fit = tip_fit(rs.grid, v, resonator_tip(spec, j), cap, k0, delta, opt);
    rs.b[j] = fit.coefficients[0];
    rs.fit_residual[j] = fit.residual;
  }
  if (std::abs(rs.b[0]) < opt.b_min)
    throw numerical_error("resonator", "Aharonov-Bohm degenerate tip coefficient (|b_1| = " +
                                           std::to_string(std::abs(rs.b[0])) + ")");
  // Phase convention: b_1 real positive.
  cplx phase = std::conj(rs.b[0]) / std::abs(rs.b[0]);
  v *= phase;
  rs.b[0] *= phase;
  rs.b[1] *= phase;
  if (std::abs(rs.b[1]) < opt.b_min)
    throw numerical_error("resonator", "Aharonov-Bohm degenerate tip coefficient (|b_2| = " +
                                           std::to_string(std::abs(rs.b[1])) + ")");
  for (int j = 0; j < 2; ++j)
    if (rs.fit_residual[j] > opt.fit_tol)
      throw numerical_error("resonator", "tip expansion not resolved at tip " + std::to_string(j + 1) +
                                             " (misfit " + std::to_string(rs.fit_residual[j]) + ")");
  for (int j = 0; j < 2; ++j) {
    VecC g = commutator_source(rs.grid, resonator_tip(spec, j), cap, k0, delta);
    rs.b_green[j] = cell_volume(rs.grid) * (g.transpose() * v)(0);
  }
  rs.v0 = std::move(v);
  return rs;
}

RegularizedExpansion regularized_expansion(const WaveguideSpec& spec, const CapSpectrum& cap,
                                           const ResonatorSpectrum& rs, double k, const ResonatorOptions& opt) {
  const double k2 = k * k;
  const double k02 = rs.k0_sq_fine;
  const double shift = k2 - k02;
  if (std::abs(shift) < opt.deflation_floor)
    throw config_error("resonator", "k^2 within the deflation floor of k0^2");
  const double delta = rs.cutoff;
  const VoxelGrid& g = rs.grid;
  const double vol = cell_volume(g);
  SpMatC op = resonator_operator(g, spec, rs.spin);
  for (Eigen::Index i = 0; i < op.rows(); ++i) op.coeffRef(i, i) -= k2;
  Eigen::UmfPackLU<SpMatC> lu(op);
  if (lu.info() != Eigen::Success) throw numerical_error("resonator", "regularized solve factorization failed");

  const VecC& v0 = rs.v0;
  auto inner = [&](const VecC& a, const VecC& b) { return vol * b.dot(a); };  // int a conj(b)
  std::array<VecC, 2> w;
  std::array<cplx, 2> gv;
  for (int j = 0; j < 2; ++j) {
    VecC src = commutator_source(g, resonator_tip(spec, j), cap, k, delta);
    gv[j] = inner(src, v0);
    VecC rhs = src - gv[j] * v0;
    VecC sol = lu.solve(rhs);
    if (!sol.allFinite()) throw numerical_error("resonator", "regularized solve did not converge");
    sol -= inner(sol, v0) * v0;
    w[j] = std::move(sol);
  }
  // Bounded parts (the Theta v_j terms are carried analytically).
  // v21 = (k^2 - k0^2) v01, v01 = Theta v_1 + w_1 + (g_1, v0) / (k0^2 - k^2) v0.
  VecC b21 = shift * w[0] - gv[0] * v0;
  // v22 = conj(b2) v01 - conj(b1) v02 with conj(b_j) = (g_j, v0) so the v0 poles cancel.
  cplx cb1 = gv[0], cb2 = gv[1];
  VecC b22 = cb2 * w[0] - cb1 * w[1];

  RegularizedExpansion re;
  re.k = k;
  double worst = 0.0;
  for (int j = 0; j < 2; ++j) {
    auto f21 = tip_fit(g, b21, resonator_tip(spec, j), cap, k, delta, opt);
    auto f22 = tip_fit(g, b22, resonator_tip(spec, j), cap, k, delta, opt);
    re.c[j] = f21.coefficients[0];
    re.d[j] = f22.coefficients[0];
    if (j == 0) re.n21 = shift + f21.coefficients[1];
    re.n22[j] = (j == 0 ? cb2 : -cb1) + f22.coefficients[1];
    worst = std::max({worst, f21.residual, f22.residual});
  }
  re.fit_residual = worst;
  return re;
}

}  // namespace qwg
