#include "qwg/lattice.hpp"

#include <unordered_map>

#include <boost/math/quadrature/gauss.hpp>

namespace qwg {

namespace {

constexpr int kStep[kDirections][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};

bool is_planar(const VoxelGrid& g) { return !g.link.empty() && g.link[0][0] == kAbsentLink; }

}  // namespace

double cell_volume(const VoxelGrid& grid) {
  return is_planar(grid) ? grid.h * grid.h : grid.h * grid.h * grid.h;
}

cplx grid_dot(const VoxelGrid& grid, const VecC& a, const VecC& b) { return cell_volume(grid) * a.dot(b); }

double link_phase(const std::function<Point3(const Point3&)>& potential, const Point3& p, const Point3& q) {
  if (!potential) return 0.0;
  // Four-point Gauss-Legendre: exact to O(h^8) for smooth gradients, so gauge
  // transforms by smooth functions survive the discretization.
  using Gauss = boost::math::quadrature::gauss<double, 4>;
  const Point3 mid = 0.5 * (p + q), half = 0.5 * (q - p);
  const auto& x = Gauss::abscissa();
  const auto& w = Gauss::weights();
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double f = potential(mid + x[i] * half).dot(half);
    if (x[i] != 0.0) f += potential(mid - x[i] * half).dot(half);
    acc += w[i] * f;
  }
  return acc;
}

SpMatC magnetic_operator(const VoxelGrid& g, const LatticeField& field) {
  const double ih2 = 1.0 / (g.h * g.h);
  std::vector<Eigen::Triplet<cplx>> t;
  t.reserve(g.size() * 7);
  for (std::size_t id = 0; id < g.size(); ++id) {
    auto [i, j, k] = g.cells[id];
    Point3 p = g.position(i, j, k);
    double diag = field.scalar ? field.scalar(p) : 0.0;
    for (int d = 0; d < kDirections; ++d) {
      double w = g.link[id][d];
      if (w == kAbsentLink) continue;
      if (w == kOpenLink || w >= 1.0) {
        diag += ih2;
        if (w >= 1.0) {
          int nb = g.find(i + kStep[d][0], j + kStep[d][1], k + kStep[d][2]);
          Point3 q = g.position(i + kStep[d][0], j + kStep[d][1], k + kStep[d][2]);
          double phi = link_phase(field.potential, p, q);
          t.emplace_back(static_cast<int>(id), nb, -ih2 * std::polar(1.0, phi));
        }
      } else {
        diag += ih2 / w;
      }
    }
    t.emplace_back(static_cast<int>(id), static_cast<int>(id), cplx(diag, 0.0));
  }
  SpMatC m(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(g.size()));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SpMatR laplacian(const VoxelGrid& g) {
  const double ih2 = 1.0 / (g.h * g.h);
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(g.size() * 7);
  for (std::size_t id = 0; id < g.size(); ++id) {
    auto [i, j, k] = g.cells[id];
    double diag = 0.0;
    for (int d = 0; d < kDirections; ++d) {
      double w = g.link[id][d];
      if (w == kAbsentLink) continue;
      if (w == kOpenLink || w >= 1.0) {
        diag += ih2;
        if (w >= 1.0) t.emplace_back(static_cast<int>(id), g.find(i + kStep[d][0], j + kStep[d][1], k + kStep[d][2]), -ih2);
      } else {
        diag += ih2 / w;
      }
    }
    t.emplace_back(static_cast<int>(id), static_cast<int>(id), diag);
  }
  SpMatR m(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(g.size()));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

SpMatR slice_operator(const VoxelGrid& g, const std::vector<int>& ids) {
  const double ih2 = 1.0 / (g.h * g.h);
  std::unordered_map<int, int> local;
  for (std::size_t a = 0; a < ids.size(); ++a) local[ids[a]] = static_cast<int>(a);
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t a = 0; a < ids.size(); ++a) {
    int id = ids[a];
    auto [i, j, k] = g.cells[id];
    double diag = 0.0;
    for (int d = 2; d < kDirections; ++d) {
      double w = g.link[id][d];
      if (w >= 1.0) {
        diag += ih2;
        int nb = g.find(i + kStep[d][0], j + kStep[d][1], k + kStep[d][2]);
        t.emplace_back(static_cast<int>(a), local.at(nb), -ih2);
      } else if (w > 0.0) {
        diag += ih2 / w;
      }
    }
    t.emplace_back(static_cast<int>(a), static_cast<int>(a), diag);
  }
  SpMatR m(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(ids.size()));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace qwg
