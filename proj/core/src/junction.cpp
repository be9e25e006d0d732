#include "qwg/junction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <boost/math/quadrature/gauss.hpp>

#include "qwg/error.hpp"
#include "qwg/tip_fit.hpp"

namespace qwg {

namespace {

using Gauss = boost::math::quadrature::gauss<double, 20>;

struct Meridian {
  double h = 0.0;
  double r = 0.0;
  int n = 0;  // xi index runs over [0, 2n]
  int m = 0;  // s index runs over [0, m)
  std::vector<int> index;
  std::vector<std::array<int, 2>> nodes;

  double xi(int i) const { return (i - n) * h; }
  double s(int j) const { return (j + 0.5) * h; }
  int find(int i, int j) const {
    if (i < 0 || i > 2 * n || j < 0 || j >= m) return -1;
    return index[static_cast<std::size_t>(j) * (2 * n + 1) + i];
  }
};

// Value of a nodal field at (xi, s); w is even in s and zero outside.
double interpolate(const Meridian& g, const Eigen::VectorXd& w, double xi, double s) {
  double u = xi / g.h + g.n;
  double v = s / g.h - 0.5;
  int i0 = static_cast<int>(std::floor(u));
  int j0 = static_cast<int>(std::floor(v));
  double a = u - i0, b = v - j0;
  double acc = 0.0;
  for (int di = 0; di < 2; ++di)
    for (int dj = 0; dj < 2; ++dj) {
      int j = j0 + dj;
      if (j < 0) j = -j - 1;
      int id = g.find(i0 + di, j);
      if (id >= 0) acc += (di ? a : 1 - a) * (dj ? b : 1 - b) * w[id];
    }
  return acc;
}

double project(const Meridian& g, const Eigen::VectorXd& w, const CapSpectrum& cap, Side side, double rho) {
  const auto& x = Gauss::abscissa();
  const auto& wt = Gauss::weights();
  const double half = 0.5 * cap.theta;
  const double dir = side == Side::left ? -1.0 : 1.0;
  double acc = 0.0;
  auto node = [&](double phi, double weight) {
    acc += weight * half * std::sin(phi) * cap(phi) * interpolate(g, w, dir * rho * std::cos(phi), rho * std::sin(phi));
  };
  for (std::size_t i = 0; i < x.size(); ++i) {
    node(half * (1.0 + x[i]), wt[i]);
    if (x[i] != 0.0) node(half * (1.0 - x[i]), wt[i]);
  }
  return (2.0 * cap.mu1 + 1.0) * 2.0 * std::numbers::pi * acc;
}

struct FarField {
  double growth = 0.0;
  double decay = 0.0;
  double residual = 0.0;
};

FarField fit_far_field(const std::vector<double>& radii, const std::vector<double>& proj, double mu) {
  std::vector<cplx> vals(proj.begin(), proj.end());
  auto fit = fit_radial(radii, vals,
                        {[mu](double r) { return std::pow(r, mu); }, [mu](double r) { return std::pow(r, -mu - 1.0); }});
  return {fit.coefficients[0].real(), fit.coefficients[1].real(), fit.residual};
}

}  // namespace

JunctionSolve solve_junction(const NarrowSpec& narrow, const CapSpectrum& cap, double h, double r_max,
                             const JunctionOptions& opt) {
  const double sc = opt.scale;
  const double match = sc * narrow.match_radius();
  if (r_max < 2.0 * match * (1.0 - 1e-12))
    throw config_error("junction", "truncation radius " + std::to_string(r_max) + " below twice the match radius " +
                                       std::to_string(match));
  if (std::abs(cap.theta - narrow.half_angle) > 1e-12) throw config_error("junction", "cap angle differs from cone angle");

  auto wall = [&](double xi, double s) { return s < sc * narrow.wall_radius(std::abs(xi) / sc); };
  Meridian g;
  g.h = h;
  g.r = r_max;
  g.n = static_cast<int>(std::ceil(r_max / h));
  g.m = g.n;
  g.index.assign(static_cast<std::size_t>(2 * g.n + 1) * g.m, -1);
  for (int j = 0; j < g.m; ++j)
    for (int i = 0; i <= 2 * g.n; ++i) {
      double xi = g.xi(i), s = g.s(j);
      if (wall(xi, s) && xi * xi + s * s < r_max * r_max) {
        g.index[static_cast<std::size_t>(j) * (2 * g.n + 1) + i] = static_cast<int>(g.nodes.size());
        g.nodes.push_back({i, j});
      }
    }
  const auto nu = static_cast<Eigen::Index>(g.nodes.size());
  if (narrow.waist_diameter() * sc < 2.0 * h) throw config_error("junction", "grid too coarse to resolve the neck waist");

  // Boundary data: Phi_1 on the left or right truncation cap.
  auto data = [&](Side side, double xi, double s) {
    double dir = side == Side::left ? -1.0 : 1.0;
    if (dir * xi <= 0) return 0.0;
    return cap(std::atan2(s, dir * xi));
  };

  std::vector<Eigen::Triplet<double>> trip;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nu, 2);
  const double ih2 = 1.0 / (h * h);
  for (Eigen::Index id = 0; id < nu; ++id) {
    auto [i, j] = g.nodes[id];
    double xi = g.xi(i), s = g.s(j);
    double diag = 0.0;
    const int di[4] = {-1, 1, 0, 0}, dj[4] = {0, 0, -1, 1};
    for (int d = 0; d < 4; ++d) {
      double c = (d < 2) ? s * ih2 : (s + 0.5 * dj[d] * h) * ih2;
      if (c == 0.0) continue;  // no flux through the axis
      int nb = g.find(i + di[d], j + dj[d]);
      if (nb >= 0) {
        diag += c;
        trip.emplace_back(static_cast<int>(id), nb, -c);
        continue;
      }
      double qx = xi + di[d] * h, qs = s + dj[d] * h;
      double t_wall = 2.0, t_sph = 2.0;
      if (!wall(qx, qs)) {
        double a = 0.0, b = 1.0;
        for (int it = 0; it < 40; ++it) {
          double mid = 0.5 * (a + b);
          (wall(xi + mid * di[d] * h, s + mid * dj[d] * h) ? a : b) = mid;
        }
        t_wall = 0.5 * (a + b);
      }
      if (qx * qx + qs * qs >= r_max * r_max) {
        // |p + t e h| = R along the link.
        double ex = di[d] * h, es = dj[d] * h;
        double A = ex * ex + es * es, B = 2.0 * (xi * ex + s * es), C = xi * xi + s * s - r_max * r_max;
        t_sph = (-B + std::sqrt(B * B - 4.0 * A * C)) / (2.0 * A);
      }
      double t = std::max(std::min(t_wall, t_sph), 1e-3);
      diag += c / t;
      if (t_sph < t_wall) {
        double bx = xi + t * di[d] * h, bs = s + t * dj[d] * h;
        rhs(id, 0) += c / t * data(Side::left, bx, bs);
        rhs(id, 1) += c / t * data(Side::right, bx, bs);
      }
    }
    trip.emplace_back(static_cast<int>(id), static_cast<int>(id), diag);
  }
  Eigen::SparseMatrix<double> op(nu, nu);
  op.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(op);
  if (ldlt.info() != Eigen::Success) throw numerical_error("junction", "factorization failed");
  Eigen::MatrixXd sol = ldlt.solve(rhs);

  const double mu = cap.mu1;
  auto radii = probe_radii(opt.probe_lo * match, opt.probe_hi * r_max, opt.probes);
  // far[basis][side]
  FarField far[2][2];
  for (int b = 0; b < 2; ++b)
    for (int sd = 0; sd < 2; ++sd) {
      std::vector<double> p;
      for (double r : radii) p.push_back(project(g, sol.col(b), cap, sd ? Side::right : Side::left, r));
      far[b][sd] = fit_far_field(radii, p, mu);
    }

  JunctionSolve out;
  out.h = h;
  out.r_max = r_max;
  out.unknowns = g.nodes.size();
  Eigen::Matrix2d G;
  G << far[0][0].growth, far[1][0].growth, far[0][1].growth, far[1][1].growth;
  for (int sd = 0; sd < 2; ++sd) {
    Eigen::Vector2d target = sd == 0 ? Eigen::Vector2d(1, 0) : Eigen::Vector2d(0, 1);
    Eigen::Vector2d xy = G.fullPivLu().solve(target);
    ModelSolution ms;
    ms.side = sd ? Side::right : Side::left;
    double decay_l = xy[0] * far[0][0].decay + xy[1] * far[1][0].decay;
    double decay_r = xy[0] * far[0][1].decay + xy[1] * far[1][1].decay;
    ms.alpha = sd == 0 ? decay_l : decay_r;
    ms.beta = sd == 0 ? decay_r : decay_l;
    ms.fit_residual = 0.0;
    for (int b = 0; b < 2; ++b)
      for (int s2 = 0; s2 < 2; ++s2) ms.fit_residual = std::max(ms.fit_residual, far[b][s2].residual);
    Eigen::VectorXd w = xy[0] * sol.col(0) + xy[1] * sol.col(1);
    ms.min_ratio = w.minCoeff() / w.maxCoeff();
    Side own = ms.side;
    double rho = 0.5 * r_max;
    double pr = project(g, w, cap, own, rho);
    double model = std::pow(rho, mu) + ms.alpha * std::pow(rho, -mu - 1.0);
    ms.reprojection_error = std::abs(pr - model) / std::abs(model);
    (sd == 0 ? out.left : out.right) = ms;
  }
  return out;
}

JunctionCoefficients junction_coefficients(const NarrowSpec& narrow, const CapSpectrum& cap,
                                           const JunctionOptions& opt) {
  if (auto issues = narrow.validate(); !issues.empty()) throw config_error("junction", issues.front());
  double r = opt.r_max > 0 ? opt.r_max : 2.0 * opt.scale * narrow.match_radius();
  JunctionCoefficients jc;
  jc.r_max = r;
  jc.ladder.push_back(solve_junction(narrow, cap, opt.h, r, opt));
  jc.ladder.push_back(solve_junction(narrow, cap, 0.5 * opt.h, r, opt));
  jc.ladder.push_back(solve_junction(narrow, cap, 0.5 * opt.h, 2.0 * r, opt));
  // Average of the left and right model solutions (equal for centrally symmetric Ω).
  auto alpha = [](const JunctionSolve& s) { return 0.5 * (s.left.alpha + s.right.alpha); };
  auto beta = [](const JunctionSolve& s) { return 0.5 * (s.left.beta + s.right.beta); };
  const auto& c = jc.ladder[0];
  const auto& f = jc.ladder[1];
  const auto& w = jc.ladder[2];
  jc.alpha = (4.0 * alpha(f) - alpha(c)) / 3.0;
  jc.beta = (4.0 * beta(f) - beta(c)) / 3.0;
  jc.alpha_error = std::max(std::abs(alpha(f) - jc.alpha), std::abs(alpha(w) - alpha(f)));
  jc.beta_error = std::max(std::abs(beta(f) - jc.beta), std::abs(beta(w) - beta(f)));
  if (std::abs(jc.beta) < opt.beta_floor)
    throw numerical_error("junction", "neck numerically closed (|beta| = " + std::to_string(std::abs(jc.beta)) + ")");
  return jc;
}

}  // namespace qwg
