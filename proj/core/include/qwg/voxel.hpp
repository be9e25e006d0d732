#pragma once

// Cartesian lattice restricted to a domain. Lattice points sit at integer
// multiples of h so grids of mirror-symmetric domains are mirror-symmetric.
// Each unknown records, per direction, whether its neighbour is an interior
// point, lies past the boundary (with the fractional distance to the
// crossing), lies on an open x-end, or is absent (2-D slices).

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qwg/geometry.hpp"

namespace qwg {

/// Direction order for VoxelGrid::link: -x, +x, -y, +y, -z, +z.
inline constexpr int kDirections = 6;
inline constexpr double kOpenLink = -1.0;
inline constexpr double kAbsentLink = -2.0;

struct Box {
  Point3 lo = Point3::Zero();
  Point3 hi = Point3::Zero();
};

struct VoxelGrid {
  double h = 0.0;
  std::array<int, 3> dims{0, 0, 0};
  /// Coordinates of lattice index (0, 0, 0).
  Point3 origin = Point3::Zero();
  /// Unknown id per lattice cell (x fastest), -1 when outside.
  std::vector<int> index;
  std::vector<std::array<int, 3>> cells;
  /// 1 for an interior neighbour, (0, 1) for a boundary crossing at that
  /// fraction of the link, kOpenLink or kAbsentLink.
  std::vector<std::array<double, kDirections>> link;

  std::size_t size() const { return cells.size(); }
  Point3 position(std::size_t id) const;
  Point3 position(int i, int j, int k) const;
  /// Unknown id at lattice index, -1 when outside or out of range.
  int find(int i, int j, int k) const;
  /// Ids of the unknowns in x-slice i (sorted).
  std::vector<int> slice(int i) const;
  /// 0 outside, 1 interior, 2 boundary (some link is cut).
  std::vector<std::uint8_t> mask() const;
  /// Trilinear interpolation of a nodal field; points outside read as zero.
  std::complex<double> sample(const Eigen::VectorXcd& field, const Point3& p) const;
  double sample(const Eigen::VectorXd& field, const Point3& p) const;
};

struct VoxelizeOptions {
  /// Treat neighbours beyond the first / last x-slice as open (closure-coupled).
  bool open_x_lo = false;
  bool open_x_hi = false;
  /// Only y and z links (single x-slice cross-section grids).
  bool planar = false;
  /// Bisection steps for the boundary crossing.
  int bisection_steps = 40;
};

using Membership = std::function<bool(const Point3&)>;

VoxelGrid voxelize(const Membership& inside, const Box& box, double h, const VoxelizeOptions& options = {});

/// Grid for one of the named domains. `x_range` bounds the axial extent of
/// unbounded channel domains; `truncation` is the radius for Domain::neck.
/// Throws a config error when the waist is resolved by fewer than
/// `min_waist_voxels` spacings.
VoxelGrid voxelize_domain(const WaveguideSpec& spec, Domain domain, double h, std::array<double, 2> x_range,
                          std::array<bool, 2> open_ends, double truncation = 0.0, int min_waist_voxels = 4);

/// Planar grid on the cross-section D (placed in the x = 0 plane).
VoxelGrid voxelize_cross_section(const CrossSectionSpec& cs, double h);

/// Binary export: 64-byte little-endian header then payload.
/// Header: magic[8], nx, ny, nz, kind (uint32), spacing, origin[3] (double), reserved[8].
/// kind 0: one mask byte per cell; kind 1: |u| as float32 per cell (0 outside).
void write_voxel_mask(const std::string& path, const VoxelGrid& grid);
void write_voxel_field(const std::string& path, const VoxelGrid& grid, const Eigen::VectorXcd& field);

}  // namespace qwg
