#include "qwg/tip_fit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

#include "qwg/error.hpp"
#include "qwg/special.hpp"

namespace qwg {

namespace {

constexpr int kPolar = 20;
constexpr int kAzimuth = 32;

template <class F>
cplx project(const F& sample, const TipFrame& tip, const CapSpectrum& cap, double r) {
  using Gauss = boost::math::quadrature::gauss<double, kPolar>;
  const auto& x = Gauss::abscissa();
  const auto& w = Gauss::weights();
  const double half = 0.5 * cap.theta;
  cplx acc(0.0);
  auto node = [&](double phi, double weight) {
    double s = std::sin(phi), c = std::cos(phi);
    double ang = weight * s * cap(phi) * half;
    cplx ring(0.0);
    for (int a = 0; a < kAzimuth; ++a) {
      double psi = 2.0 * std::numbers::pi * (a + 0.5) / kAzimuth;
      Point3 p = tip.vertex + r * Point3(tip.axis_sign * c, s * std::cos(psi), s * std::sin(psi));
      ring += sample(p);
    }
    acc += ang * ring * (2.0 * std::numbers::pi / kAzimuth);
  };
  // Boost stores the non-negative abscissae of the symmetric rule.
  for (std::size_t i = 0; i < x.size(); ++i) {
    node(half * (1.0 + x[i]), w[i]);
    if (x[i] != 0.0) node(half * (1.0 - x[i]), w[i]);
  }
  return (2.0 * cap.mu1 + 1.0) * acc;
}

}  // namespace

cplx cap_projection(const VoxelGrid& grid, const VecC& field, const TipFrame& tip, const CapSpectrum& cap, double r) {
  return project([&](const Point3& p) { return grid.sample(field, p); }, tip, cap, r);
}

cplx cap_projection(const std::function<cplx(const Point3&)>& field, const TipFrame& tip, const CapSpectrum& cap,
                    double r) {
  return project(field, tip, cap, r);
}

RadialFit fit_radial(const std::vector<double>& radii, const std::vector<cplx>& values,
                     const std::vector<std::function<double(double)>>& basis) {
  const auto n = static_cast<Eigen::Index>(radii.size());
  const auto m = static_cast<Eigen::Index>(basis.size());
  if (n < m || static_cast<Eigen::Index>(values.size()) != n)
    throw numerical_error("tip_fit", "need at least as many probe radii as basis functions");
  Eigen::MatrixXd B(n, m);
  Eigen::VectorXcd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) B(i, j) = basis[j](radii[i]);
    y[i] = values[i];
  }
  // Column scaling keeps r^{-mu-1} and r^{mu} columns comparable.
  Eigen::VectorXd scale = B.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < m; ++j) B.col(j) /= scale[j];
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(B);
  Eigen::VectorXcd c(m);
  c.real() = qr.solve(Eigen::VectorXd(y.real()));
  c.imag() = qr.solve(Eigen::VectorXd(y.imag()));
  RadialFit fit;
  double data = y.norm();
  fit.residual = data > 0 ? (B.cast<cplx>() * c - y).norm() / data : 0.0;
  for (Eigen::Index j = 0; j < m; ++j) fit.coefficients.push_back(c[j] / scale[j]);
  return fit;
}

VecC commutator_source(const VoxelGrid& grid, const TipFrame& tip, const CapSpectrum& cap, double k, double delta) {
  SingularRadialPair pair(cap.mu1, k);
  VecC g = VecC::Zero(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t id = 0; id < grid.size(); ++id) {
    Point3 rel = grid.position(id) - tip.vertex;
    double r = rel.norm();
    if (r <= 0.5 * delta || r >= delta) continue;
    double ang = cap(std::acos(std::clamp(tip.axis_sign * rel.x() / r, -1.0, 1.0)));
    if (ang == 0.0) continue;
    RadialValue n = pair.singular(r);
    double t1 = -smoothstep_d1(r, 0.5 * delta, delta);
    double t2 = -smoothstep_d2(r, 0.5 * delta, delta);
    g[static_cast<Eigen::Index>(id)] = ((t2 + 2.0 * t1 / r) * n.value + 2.0 * t1 * n.d1) * ang;
  }
  return g;
}

std::vector<double> probe_radii(double r_min, double r_max, int count) {
  std::vector<double> r(count);
  for (int i = 0; i < count; ++i) r[i] = count == 1 ? r_min : r_min + (r_max - r_min) * i / (count - 1);
  return r;
}

}  // namespace qwg
