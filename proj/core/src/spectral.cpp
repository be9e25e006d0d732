#include "qwg/spectral.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/SparseCholesky>
#include <boost/math/tools/roots.hpp>

#include "qwg/error.hpp"
#include "qwg/lanczos.hpp"
#include "qwg/lattice.hpp"

namespace qwg {

std::optional<double> ModeBasis::nu1(double k) const {
  double v = k * k - lambda1_sq();
  if (v <= 0) return std::nullopt;
  return std::sqrt(v);
}

bool ModeBasis::single_channel(double k) const {
  double k2 = k * k;
  return k2 > lambda1_sq() && k2 < lambda2_sq();
}

double ModeBasis::psi1_at(double y, double z) const { return grid.sample(psi1, Point3(grid.origin.x(), y, z)); }

PlanarModes planar_modes(const SpMatR& op, int count, double tol) {
  Eigen::SimplicialLDLT<SpMatR> ldlt(op);
  if (ldlt.info() != Eigen::Success) throw numerical_error("spectral", "factorization of the cross-section operator failed");
  LanczosOptions opt;
  opt.nev = count;
  opt.tol = tol;
  opt.max_basis = std::max(60, 8 * count);
  auto pairs = shift_invert_lanczos<double>([&](const VecR& x) { return VecR(op * x); },
                                            [&](const VecR& x) { return VecR(ldlt.solve(x)); }, op.rows(), 0.0, opt);
  return {pairs.values, pairs.vectors};
}

ModeBasis cross_section_modes(const CrossSectionSpec& cs, double h, int count, const ModeOptions& options) {
  if (count < 2) throw config_error("spectral", "need at least two cross-section modes");
  if (options.levels < 2) throw config_error("spectral", "Richardson extrapolation needs at least two grid levels");
  if (auto issues = cs.validate(); !issues.empty()) throw config_error("spectral", issues.front());

  ModeBasis mb;
  PlanarModes finest;
  for (int l = 0; l < options.levels; ++l) {
    double hl = h / std::pow(2.0, l);
    VoxelGrid g = voxelize_cross_section(cs, hl);
    if (static_cast<int>(g.size()) < 4 * count) throw config_error("spectral", "grid does not resolve the cross-section");
    PlanarModes pm = planar_modes(laplacian(g), count, options.eig_tol);
    mb.spacings.push_back(hl);
    mb.ladder.emplace_back(pm.values.data(), pm.values.data() + pm.values.size());
    if (l + 1 == options.levels) {
      finest = std::move(pm);
      mb.grid = std::move(g);
    }
  }
  const auto& fine = mb.ladder[options.levels - 1];
  const auto& coarse = mb.ladder[options.levels - 2];
  for (int n = 0; n < count; ++n) {
    double ext = (4.0 * fine[n] - coarse[n]) / 3.0;
    mb.thresholds.push_back(ext);
    mb.errors.push_back(std::abs(fine[n] - ext));
  }
  if ((fine[1] - fine[0]) < options.degeneracy_tol * fine[0])
    throw numerical_error("spectral", "degenerate ground transverse mode (lambda_1^2 = " + std::to_string(fine[0]) + ")");

  Eigen::VectorXd psi = finest.vectors.col(0);
  if (psi.sum() < 0) psi = -psi;
  psi /= std::sqrt(cell_volume(mb.grid)) * psi.norm();
  mb.psi1 = std::move(psi);
  return mb;
}

// ---------------------------------------------------------------------------

namespace {

struct CapOde {
  double lambda;
  double m2;
  Eigen::Vector2d operator()(double phi, const Eigen::Vector2d& y) const {
    double s = std::sin(phi);
    return {y[1], -std::cos(phi) / s * y[1] - (lambda - m2 / (s * s)) * y[0]};
  }
};

// Integrates the regular pole solution over [h, theta] with uniform RK4 steps h = theta/steps,
// starting from the two-term series phi^m (1 + a2 phi^2). Samples at the grid nodes if requested.
double integrate_cap(double theta, int m, double mu, int steps, std::vector<double>* samples) {
  const double lambda = mu * (mu + 1.0);
  const double a2 = -(lambda - m * (m + 1.0) / 3.0) / (4.0 * (m + 1.0));
  const double h = theta / steps;
  CapOde f{lambda, static_cast<double>(m * m)};
  double phi = h;
  Eigen::Vector2d y(std::pow(phi, m) * (1.0 + a2 * phi * phi),
                    (m == 0 ? 0.0 : m * std::pow(phi, m - 1)) + a2 * (m + 2.0) * std::pow(phi, m + 1));
  if (samples) {
    samples->assign(steps + 1, 0.0);
    (*samples)[0] = (m == 0) ? 1.0 : 0.0;
    (*samples)[1] = y[0];
  }
  for (int i = 1; i < steps; ++i) {
    Eigen::Vector2d k1 = f(phi, y);
    Eigen::Vector2d k2 = f(phi + 0.5 * h, y + 0.5 * h * k1);
    Eigen::Vector2d k3 = f(phi + 0.5 * h, y + 0.5 * h * k2);
    Eigen::Vector2d k4 = f(phi + h, y + h * k3);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    phi = h * (i + 1);
    if (samples) (*samples)[i + 1] = y[0];
    // Keep the amplitude bounded for large Lambda; only the sign pattern matters.
    double scale = std::abs(y[0]) + std::abs(y[1]) * h;
    if (scale > 1e100 && !samples) y /= scale;
  }
  return y[0];
}

std::vector<double> cap_roots(double theta, int m, int wanted, const CapOptions& opt) {
  std::vector<double> roots;
  // Root spacing in mu grows like 1/theta, so the scan step does too.
  const double step = opt.scan_step * 0.5 * std::numbers::pi / theta;
  double mu = step;
  double f0 = cap_shoot(theta, m, mu, opt.steps);
  while (static_cast<int>(roots.size()) < wanted && mu < opt.mu_max) {
    double mu1 = mu + step;
    double f1 = cap_shoot(theta, m, mu1, opt.steps);
    if (f0 == 0.0) {
      roots.push_back(mu);
    } else if (f0 * f1 < 0) {
      std::uintmax_t iters = 200;
      auto tol = [&](double a, double b) { return std::abs(b - a) <= opt.root_tol * std::max(1.0, std::abs(a)); };
      auto r = boost::math::tools::toms748_solve([&](double x) { return cap_shoot(theta, m, x, opt.steps); }, mu, mu1,
                                                 f0, f1, tol, iters);
      roots.push_back(0.5 * (r.first + r.second));
    }
    mu = mu1;
    f0 = f1;
  }
  return roots;
}

}  // namespace

double cap_shoot(double theta, int m, double mu, int steps) { return integrate_cap(theta, m, mu, steps, nullptr); }

double CapSpectrum::operator()(double polar) const {
  if (polar < 0 || polar >= theta || phi.size() < 2) return 0.0;
  double u = polar / theta * static_cast<double>(phi.size() - 1);
  std::size_t i = std::min(static_cast<std::size_t>(u), phi.size() - 2);
  double a = u - static_cast<double>(i);
  return (1.0 - a) * profile[i] + a * profile[i + 1];
}

CapSpectrum cap_spectrum(double theta, const CapOptions& opt) {
  if (!(theta > 0 && theta <= 0.5 * std::numbers::pi + 1e-12))
    throw config_error("spectral", "cap half-angle must lie in (0, pi/2]");
  CapSpectrum cs;
  cs.theta = theta;
  auto r0 = cap_roots(theta, 0, 2, opt);
  if (r0.empty()) throw numerical_error("spectral", "no cap exponent below mu_max = " + std::to_string(opt.mu_max));
  cs.mu1 = r0[0];
  cs.mu2 = r0.size() > 1 ? r0[1] : INFINITY;
  for (int m = 1; m <= opt.m_max; ++m) {
    auto rm = cap_roots(theta, m, 1, opt);
    if (!rm.empty() && rm[0] < cs.mu2) {
      cs.mu2 = rm[0];
      cs.mu2_order = m;
    }
  }
  if (!std::isfinite(cs.mu2)) throw numerical_error("spectral", "second cap exponent not bracketed below mu_max");
  if (!(cs.mu1 < cs.mu2)) throw numerical_error("spectral", "cap exponents not strictly ordered");

  std::vector<double> prof;
  integrate_cap(theta, 0, cs.mu1, opt.steps, &prof);
  prof.back() = 0.0;
  const double h = theta / opt.steps;
  // Composite Simpson for int Theta^2 sin(phi) dphi (steps is even by construction below).
  double acc = 0.0;
  int n = opt.steps - (opt.steps % 2);
  for (int i = 0; i <= n; ++i) {
    double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * prof[i] * prof[i] * std::sin(h * i);
  }
  acc *= h / 3.0;
  double norm = std::sqrt((2.0 * cs.mu1 + 1.0) * 2.0 * std::numbers::pi * acc);
  for (double& v : prof) v /= norm;
  cs.profile = std::move(prof);
  cs.phi.resize(cs.profile.size());
  for (std::size_t i = 0; i < cs.phi.size(); ++i) cs.phi[i] = h * static_cast<double>(i);
  return cs;
}

}  // namespace qwg
