#include "qwg/voxel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "qwg/error.hpp"

namespace qwg {

namespace {

constexpr int kStep[kDirections][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};

// Smallest link fraction kept; closer crossings would make the diagonal blow up.
constexpr double kMinFraction = 1e-3;

}  // namespace

Point3 VoxelGrid::position(int i, int j, int k) const {
  return origin + h * Point3(i, j, k);
}

Point3 VoxelGrid::position(std::size_t id) const {
  const auto& c = cells[id];
  return position(c[0], c[1], c[2]);
}

int VoxelGrid::find(int i, int j, int k) const {
  if (i < 0 || j < 0 || k < 0 || i >= dims[0] || j >= dims[1] || k >= dims[2]) return -1;
  return index[(static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i];
}

std::vector<int> VoxelGrid::slice(int i) const {
  std::vector<int> ids;
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      if (int id = find(i, j, k); id >= 0) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<std::uint8_t> VoxelGrid::mask() const {
  std::vector<std::uint8_t> m(index.size(), 0);
  for (std::size_t c = 0; c < index.size(); ++c) {
    int id = index[c];
    if (id < 0) continue;
    bool cut = std::any_of(link[id].begin(), link[id].end(), [](double v) { return v > 0 && v < 1; });
    m[c] = cut ? 2 : 1;
  }
  return m;
}

namespace {

template <class Vec>
typename Vec::Scalar trilinear(const VoxelGrid& g, const Vec& f, const Point3& p) {
  Point3 u = (p - g.origin) / g.h;
  int i0 = static_cast<int>(std::floor(u.x())), j0 = static_cast<int>(std::floor(u.y())),
      k0 = static_cast<int>(std::floor(u.z()));
  double a = u.x() - i0, b = u.y() - j0, c = u.z() - k0;
  typename Vec::Scalar acc(0);
  for (int di = 0; di < 2; ++di)
    for (int dj = 0; dj < 2; ++dj)
      for (int dk = 0; dk < 2; ++dk) {
        double w = (di ? a : 1 - a) * (dj ? b : 1 - b) * (dk ? c : 1 - c);
        if (w == 0.0) continue;
        int id = g.find(i0 + di, j0 + dj, k0 + dk);
        if (id >= 0) acc += w * f[id];
      }
  return acc;
}

}  // namespace

std::complex<double> VoxelGrid::sample(const Eigen::VectorXcd& field, const Point3& p) const {
  return trilinear(*this, field, p);
}

double VoxelGrid::sample(const Eigen::VectorXd& field, const Point3& p) const {
  return trilinear(*this, field, p);
}

VoxelGrid voxelize(const Membership& inside, const Box& box, double h, const VoxelizeOptions& options) {
  if (!(h > 0)) throw config_error("geometry", "grid spacing must be positive");
  VoxelGrid g;
  g.h = h;
  std::array<int, 3> lo{}, hi{};
  for (int a = 0; a < 3; ++a) {
    lo[a] = static_cast<int>(std::ceil(box.lo[a] / h - 1e-9));
    hi[a] = static_cast<int>(std::floor(box.hi[a] / h + 1e-9));
    if (hi[a] < lo[a]) throw config_error("geometry", "empty voxel box");
    g.dims[a] = hi[a] - lo[a] + 1;
  }
  if (options.planar) g.dims[0] = 1;
  g.origin = Point3(lo[0] * h, lo[1] * h, lo[2] * h);
  if (options.planar) g.origin.x() = box.lo.x();
  std::size_t ncell = static_cast<std::size_t>(g.dims[0]) * g.dims[1] * g.dims[2];
  if (ncell > 400'000'000u) throw config_error("geometry", "voxel grid too large");
  g.index.assign(ncell, -1);

  std::size_t c = 0;
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i, ++c)
        if (inside(g.position(i, j, k))) {
          g.index[c] = static_cast<int>(g.cells.size());
          g.cells.push_back({i, j, k});
        }

  g.link.resize(g.cells.size());
  for (std::size_t id = 0; id < g.cells.size(); ++id) {
    auto [i, j, k] = g.cells[id];
    Point3 p = g.position(i, j, k);
    for (int d = 0; d < kDirections; ++d) {
      if (options.planar && d < 2) {
        g.link[id][d] = kAbsentLink;
        continue;
      }
      int ni = i + kStep[d][0], nj = j + kStep[d][1], nk = k + kStep[d][2];
      if (g.find(ni, nj, nk) >= 0) {
        g.link[id][d] = 1.0;
        continue;
      }
      if ((options.open_x_lo && ni < 0) || (options.open_x_hi && ni >= g.dims[0])) {
        g.link[id][d] = kOpenLink;
        continue;
      }
      Point3 q = g.position(ni, nj, nk);
      if (inside(q)) {
        // Neighbour clipped by the box: the box face acts as the wall.
        g.link[id][d] = 1.0 - 1e-12;
        continue;
      }
      double a = 0.0, b = 1.0;
      for (int it = 0; it < options.bisection_steps; ++it) {
        double m = 0.5 * (a + b);
        (inside(p + m * (q - p)) ? a : b) = m;
      }
      g.link[id][d] = std::max(0.5 * (a + b), kMinFraction);
    }
  }
  return g;
}

VoxelGrid voxelize_domain(const WaveguideSpec& spec, Domain domain, double h, std::array<double, 2> x_range,
                          std::array<bool, 2> open_ends, double truncation, int min_waist_voxels) {
  double waist = std::min(spec.narrows[0].waist_diameter(), spec.narrows[1].waist_diameter());
  if (domain == Domain::full && waist * spec.epsilon < min_waist_voxels * h)
    throw config_error("geometry", "grid too coarse to resolve the neck: waist " +
                                       std::to_string(waist * spec.epsilon) + " < " +
                                       std::to_string(min_waist_voxels) + " x h = " + std::to_string(min_waist_voxels * h));
  if (domain == Domain::neck && spec.narrows[0].waist_diameter() < min_waist_voxels * h)
    throw config_error("geometry", "grid too coarse to resolve the unit neck waist");

  Box box;
  if (domain == Domain::neck) {
    box.lo = Point3::Constant(-truncation);
    box.hi = Point3::Constant(truncation);
  } else {
    auto b = spec.cross_section.bounds();
    double x1 = spec.narrows[0].tip_x, x2 = spec.narrows[1].tip_x;
    double xl = x_range[0], xr = x_range[1];
    if (domain == Domain::resonator) xl = x1, xr = x2;
    if (domain == Domain::left_channel) xr = x1;
    if (domain == Domain::right_channel) xl = x2;
    box.lo = Point3(xl, b[0].x(), b[0].y());
    box.hi = Point3(xr, b[1].x(), b[1].y());
  }
  VoxelizeOptions opt;
  opt.open_x_lo = open_ends[0];
  opt.open_x_hi = open_ends[1];
  return voxelize([&](const Point3& p) { return point_in_domain(spec, domain, p, truncation); }, box, h, opt);
}

VoxelGrid voxelize_cross_section(const CrossSectionSpec& cs, double h) {
  auto b = cs.bounds();
  Box box{Point3(0.0, b[0].x(), b[0].y()), Point3(0.0, b[1].x(), b[1].y())};
  VoxelizeOptions opt;
  opt.planar = true;
  return voxelize([&](const Point3& p) { return cs.contains(p.y(), p.z()); }, box, h, opt);
}

namespace {

static_assert(std::endian::native == std::endian::little, "binary export assumes a little-endian host");

void write_header(std::ofstream& out, const VoxelGrid& g, std::uint32_t kind) {
  char header[64] = {};
  std::memcpy(header, "QWGVOX01", 8);
  std::uint32_t dims[4] = {static_cast<std::uint32_t>(g.dims[0]), static_cast<std::uint32_t>(g.dims[1]),
                           static_cast<std::uint32_t>(g.dims[2]), kind};
  std::memcpy(header + 8, dims, sizeof dims);
  double geo[4] = {g.h, g.origin.x(), g.origin.y(), g.origin.z()};
  std::memcpy(header + 24, geo, sizeof geo);
  out.write(header, 64);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw config_error("geometry", "cannot open " + path + " for writing");
  return out;
}

}  // namespace

void write_voxel_mask(const std::string& path, const VoxelGrid& grid) {
  auto out = open_out(path);
  write_header(out, grid, 0);
  auto m = grid.mask();
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size()));
}

void write_voxel_field(const std::string& path, const VoxelGrid& grid, const Eigen::VectorXcd& field) {
  auto out = open_out(path);
  write_header(out, grid, 1);
  std::vector<float> v(grid.index.size(), 0.0f);
  for (std::size_t c = 0; c < v.size(); ++c)
    if (grid.index[c] >= 0) v[c] = static_cast<float>(std::abs(field[grid.index[c]]));
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
}

}  // namespace qwg
