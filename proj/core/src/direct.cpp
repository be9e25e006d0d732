#include "qwg/direct.hpp"

#include <cmath>
#include <numeric>

#include <Eigen/UmfPackSupport>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "qwg/dtn.hpp"
#include "qwg/error.hpp"
#include "qwg/gmres.hpp"
#include "qwg/resonator.hpp"

namespace qwg {

struct ScatteringProblem::Impl {
  WaveguideSpec spec;
  Spin spin = Spin::plus;
  DirectOptions opt;
  VoxelGrid grid;
  SpMatC base;
  std::array<VecC, 2> node_gauge;
  std::array<VecC, 2> ghost_gauge;
  double k_ref = 0.0;
  std::unique_ptr<Eigen::UmfPackLU<SpMatC>> pre;
  SpMatC pre_matrix;
  VecC warm;
  VecC last;

  ClosedSystem assemble(double k) const {
    SpMatC shifted = base;
    for (Eigen::Index i = 0; i < shifted.rows(); ++i) shifted.coeffRef(i, i) -= k * k;
    std::vector<EndClosure> ends;
    for (int e = 0; e < 2; ++e) {
      EndClosure c = dtn_closure(grid, e == 0 ? 0 : grid.dims[0] - 1, e == 0 ? -1.0 : 1.0, k, opt.n_evanescent);
      c.node_gauge = node_gauge[e];
      c.ghost_gauge = ghost_gauge[e];
      ends.push_back(std::move(c));
    }
    return close_system(shifted, grid, std::move(ends));
  }

  ScatteringResult finish(const ClosedSystem& sys, const VecC& sol, double k, Incidence inc) {
    const int in = inc == Incidence::left ? 0 : 1;
    const int out = 1 - in;
    const auto& ei = sys.ends[in];
    const auto& eo = sys.ends[out];
    const double x_ref = opt.x_ref;
    cplx c_in = sol[static_cast<Eigen::Index>(sys.offsets[in])];
    cplx c_out = sol[static_cast<Eigen::Index>(sys.offsets[out])];
    cplx inc_end = std::polar(1.0, -ei.outward * ei.q * (ei.x - x_ref));
    ScatteringResult r;
    r.k = k;
    r.eps = spec.epsilon;
    r.spin_sign = spin_sign(spin);
    r.incidence = inc;
    r.s11 = (c_in - inc_end) / std::polar(1.0, ei.outward * ei.q * (ei.x - x_ref));
    r.s12 = c_out / std::polar(1.0, eo.outward * eo.q * (eo.x - x_ref));
    r.R = std::norm(r.s11);
    r.T = std::norm(r.s12) * eo.velocity / ei.velocity;
    r.defect = std::abs(r.R + r.T - 1.0);
    r.h = grid.h;
    r.unknowns = static_cast<std::size_t>(sys.matrix.rows());
    last = sol.head(static_cast<Eigen::Index>(grid.size()));
    return r;
  }
};

namespace {

LatticeField direct_field(const SolenoidSpec& sol, Spin spin, const DirectOptions& opt) {
  if (!opt.field || !sol.active()) return {};
  LatticeField f = resonator_field(sol, spin);
  if (opt.gauge == GaugeChoice::raw) f.potential = [sol](const Point3& p) { return vector_potential(sol, p); };
  return f;
}

}  // namespace

ScatteringProblem::ScatteringProblem(const WaveguideSpec& spec, Spin spin, const DirectOptions& opt)
    : impl_(std::make_unique<Impl>()) {
  spec.require_valid();
  auto& m = *impl_;
  m.spec = spec;
  m.spin = spin;
  m.opt = opt;
  const double lo = spec.narrows[0].tip_x - spec.cone_length(0) - opt.length;
  const double hi = spec.narrows[1].tip_x + spec.cone_length(1) + opt.length;
  const auto& sol = spec.solenoid;
  if (opt.field && sol.active())
    for (double xe : {lo, hi})
      if (std::abs(xe - sol.x0) < sol.radius + sol.gauge_outer)
        throw config_error("direct", "closure plane inside the gauge transition slab; increase the channel length");
  m.grid = voxelize_domain(spec, Domain::full, opt.h, {lo, hi}, {true, true}, 0.0, opt.min_waist_voxels);
  LatticeField field = direct_field(sol, spin, opt);
  m.base = magnetic_operator(m.grid, field);

  std::vector<double> chi;
  if (opt.extra_gauge) {
    chi.resize(m.grid.size());
    for (std::size_t id = 0; id < m.grid.size(); ++id) chi[id] = opt.extra_gauge(m.grid.position(id));
    for (int col = 0; col < m.base.outerSize(); ++col)
      for (SpMatC::InnerIterator it(m.base, col); it; ++it)
        if (it.row() != col) it.valueRef() *= std::polar(1.0, chi[static_cast<std::size_t>(col)] - chi[it.row()]);
  }
  const bool raw = opt.gauge == GaugeChoice::raw && opt.field && sol.active();
  if (raw || opt.extra_gauge) {
    for (int e = 0; e < 2; ++e) {
      const int slice = e == 0 ? 0 : m.grid.dims[0] - 1;
      const double outward = e == 0 ? -1.0 : 1.0;
      auto ids = m.grid.slice(slice);
      Point3 centre = m.grid.position(ids.front());
      centre.y() = 0.0;
      centre.z() = 0.0;
      const double chi_ref = opt.extra_gauge ? opt.extra_gauge(centre) : 0.0;
      auto F = [&](const Point3& p) {
        double v = raw ? gauge_function(sol, p) : 0.0;
        if (opt.extra_gauge) v += opt.extra_gauge(p) - chi_ref;
        return v;
      };
      VecC node(static_cast<Eigen::Index>(ids.size())), ghost(static_cast<Eigen::Index>(ids.size()));
      for (std::size_t a = 0; a < ids.size(); ++a) {
        Point3 p = m.grid.position(static_cast<std::size_t>(ids[a]));
        Point3 g = p + Point3(outward * m.grid.h, 0.0, 0.0);
        double link = field.potential ? link_phase(field.potential, p, g) : 0.0;
        if (opt.extra_gauge) link += opt.extra_gauge(g) - opt.extra_gauge(p);
        node[static_cast<Eigen::Index>(a)] = std::polar(1.0, F(p));
        ghost[static_cast<Eigen::Index>(a)] = std::polar(1.0, link) * std::polar(1.0, -F(g));
      }
      m.node_gauge[e] = std::move(node);
      m.ghost_gauge[e] = std::move(ghost);
    }
  }
}

ScatteringProblem::~ScatteringProblem() = default;
ScatteringProblem::ScatteringProblem(ScatteringProblem&&) noexcept = default;
ScatteringProblem& ScatteringProblem::operator=(ScatteringProblem&&) noexcept = default;

const VoxelGrid& ScatteringProblem::grid() const { return impl_->grid; }
const VecC& ScatteringProblem::field() const { return impl_->last; }
const WaveguideSpec& ScatteringProblem::spec() const { return impl_->spec; }

ScatteringResult ScatteringProblem::solve(double k, Incidence inc) {
  auto& m = *impl_;
  ClosedSystem sys = m.assemble(k);
  VecC rhs = incident_rhs(sys, inc == Incidence::left ? 0 : 1, m.opt.x_ref);
  Eigen::UmfPackLU<SpMatC> lu(sys.matrix);
  if (lu.info() != Eigen::Success) throw numerical_error("direct", "sparse LU failed at k = " + std::to_string(k));
  VecC sol = lu.solve(rhs);
  double amp = sys.matrix.cwiseAbs().sum() / static_cast<double>(sys.matrix.rows()) * sol.norm() / rhs.norm();
  if (!sol.allFinite() || !(amp < m.opt.amplification_ceiling))
    throw numerical_error("direct", "linear solve failed at k = " + std::to_string(k) + " (amplification " +
                                        std::to_string(amp) + ")");
  auto r = m.finish(sys, sol, k, inc);
  r.amplification = amp;
  return r;
}

void ScatteringProblem::set_reference(double k_ref) {
  auto& m = *impl_;
  ClosedSystem sys = m.assemble(k_ref);
  m.pre_matrix = sys.matrix;
  m.pre = std::make_unique<Eigen::UmfPackLU<SpMatC>>(m.pre_matrix);
  if (m.pre->info() != Eigen::Success) throw numerical_error("direct", "preconditioner factorization failed");
  m.k_ref = k_ref;
  m.warm.resize(0);
}

ScatteringResult ScatteringProblem::solve_iterative(double k, Incidence inc) {
  auto& m = *impl_;
  if (!m.pre) set_reference(k);
  ClosedSystem sys = m.assemble(k);
  VecC rhs = incident_rhs(sys, inc == Incidence::left ? 0 : 1, m.opt.x_ref);
  VecC x = m.warm.size() == rhs.size() ? m.warm : VecC::Zero(rhs.size());
  auto res = gmres([&](const VecC& v) { return VecC(sys.matrix * v); },
                   [&](const VecC& v) { return VecC(m.pre->solve(v)); }, rhs, x, m.opt.gmres_restart,
                   m.opt.gmres_max_iterations, m.opt.gmres_tol);
  // Very close to a narrow pole the preconditioned residual can stall above
  // tolerance; a fresh factorization at k is then the cheaper way out.
  if (!res.converged) {
    auto r = solve(k, inc);
    r.iterations = res.iterations;
    return r;
  }
  m.warm = x;
  auto r = m.finish(sys, x, k, inc);
  r.iterations = res.iterations;
  return r;
}

ScatteringResult scattering_solve(const WaveguideSpec& spec, double k, Spin spin, const DirectOptions& opt) {
  return ScatteringProblem(spec, spin, opt).solve(k);
}

GaugeCheck gauge_check(const WaveguideSpec& spec, double k, Spin spin, const DirectOptions& opt) {
  DirectOptions mo = opt, ro = opt;
  mo.gauge = GaugeChoice::modified;
  ro.gauge = GaugeChoice::raw;
  ScatteringProblem pm(spec, spin, mo), pr(spec, spin, ro);
  GaugeCheck g;
  g.t_modified = pm.solve(k).T;
  g.t_raw = pr.solve(k).T;
  g.deviation = std::abs(g.t_modified - g.t_raw);
  const VecC& um = pm.field();
  const VecC& ur = pr.field();
  double num = 0.0;
  for (std::size_t id = 0; id < pm.grid().size(); ++id) {
    auto i = static_cast<Eigen::Index>(id);
    num += std::norm(um[i] - std::polar(1.0, gauge_function(spec.solenoid, pm.grid().position(id))) * ur[i]);
  }
  g.field_deviation = std::sqrt(num) / um.norm();
  return g;
}

namespace {

struct LorentzFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  const std::vector<double>& x;
  const std::vector<double>& t;
  double c0, w0;
  LorentzFunctor(const std::vector<double>& x_, const std::vector<double>& t_, double c, double w)
      : x(x_), t(t_), c0(c), w0(w) {}
  int inputs() const { return 3; }
  int values() const { return static_cast<int>(x.size()); }
  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& f) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
      double u = 2.0 * ((x[i] - c0) / w0 - p[0]) / p[1];
      f[static_cast<Eigen::Index>(i)] = p[2] / (1.0 + u * u) - t[i];
    }
    return 0;
  }
};

}  // namespace

LorentzFit fit_lorentzian(const std::vector<double>& x, const std::vector<double>& t, const LorentzFit& start) {
  if (x.size() < 3 || x.size() != t.size()) throw numerical_error("direct", "Lorentzian fit needs >= 3 samples");
  if (!(start.width > 0)) throw numerical_error("direct", "Lorentzian fit needs a positive starting width");
  LorentzFunctor fn(x, t, start.center, start.width);
  Eigen::NumericalDiff<LorentzFunctor> nd(fn);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<LorentzFunctor>> lm(nd);
  Eigen::VectorXd p(3);
  p << 0.0, 1.0, start.height;
  lm.parameters.xtol = 1e-14;
  lm.parameters.ftol = 1e-14;
  lm.minimize(p);
  LorentzFit fit;
  fit.center = start.center + p[0] * start.width;
  fit.width = std::abs(p[1]) * start.width;
  fit.height = p[2];
  Eigen::VectorXd f(static_cast<Eigen::Index>(x.size()));
  fn(p, f);
  fit.residual = std::sqrt(f.squaredNorm() / static_cast<double>(x.size())) / std::abs(fit.height);
  return fit;
}

ResonanceScan resonance_scan(ScatteringProblem& problem, double guess, const ScanOptions& opt) {
  ResonanceScan scan;
  auto inv = [&](double k2) {
    if (!(k2 > 0)) throw numerical_error("direct", "secant left the positive energy axis");
    auto r = problem.solve(std::sqrt(k2));
    ++scan.solves;
    scan.max_defect = std::max(scan.max_defect, r.defect);
    return 1.0 / r.s12;
  };
  auto fail = [&](const std::string& why) {
    std::string trace;
    for (cplx z : scan.trace) trace += " (" + std::to_string(z.real()) + ", " + std::to_string(z.imag()) + ")";
    return numerical_error("direct", "no resonance peak near k^2 = " + std::to_string(guess) + ": " + why +
                                         "; secant trace:" + trace);
  };
  double z0 = guess - opt.secant_step, z1 = guess + opt.secant_step;
  cplx f0 = inv(z0), f1 = inv(z1);
  cplx z2;
  bool converged = false;
  for (int it = 0; it < opt.max_secant; ++it) {
    if (f1 == f0) throw fail("flat secant");
    z2 = z1 - f1 * (z1 - z0) / (f1 - f0);
    scan.trace.push_back(z2);
    if (!std::isfinite(z2.real()) || std::abs(z2 - guess) > opt.search_radius) throw fail("pole left the search disk");
    double step = std::abs(z2.real() - z1);
    if (z2.imag() != 0.0 && step <= opt.secant_tol * std::abs(z2.imag())) {
      converged = true;
      break;
    }
    z0 = z1;
    f0 = f1;
    z1 = z2.real();
    f1 = inv(z1);
  }
  if (!converged) throw fail("secant did not converge");
  scan.pole = z2;
  if (!(z2.imag() < 0.0)) throw fail("pole not in the lower half-plane");

  const double c = z2.real();
  const double w = 2.0 * std::abs(z2.imag());
  problem.set_reference(std::sqrt(c));
  for (int i = 0; i < opt.points; ++i) {
    double k2 = c + opt.span * w * (opt.points == 1 ? 0.0 : 2.0 * i / (opt.points - 1) - 1.0);
    auto r = problem.solve_iterative(std::sqrt(k2));
    ++scan.solves;
    scan.k_sq.push_back(k2);
    scan.t.push_back(r.T);
    scan.defect.push_back(r.defect);
    scan.max_defect = std::max(scan.max_defect, r.defect);
  }
  double tmax = *std::max_element(scan.t.begin(), scan.t.end());
  scan.fit = fit_lorentzian(scan.k_sq, scan.t, {c, w, tmax, 0.0});
  if (scan.fit.center < scan.k_sq.front() || scan.fit.center > scan.k_sq.back())
    throw fail("fitted centre outside the scanned interval");
  return scan;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2 || x.size() != y.size()) throw numerical_error("direct", "regression needs >= 2 points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double lx = std::log(x[i]), ly = std::log(std::abs(y[i]));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace qwg
