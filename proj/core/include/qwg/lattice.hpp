#pragma once

// Finite-difference operators on a VoxelGrid.
//
// (L u)_p = h^-2 sum_q w_pq (u_p - U_pq u_q) + V_p u_p, U_pq = exp(i int_p^q A.dl),
// which approximates (-i grad + A)^2 + V. A Dirichlet wall crossed at fraction
// theta of a link contributes 1/(theta h^2) to the diagonal (symmetric
// ghost-fluid treatment, second order). Open x-links contribute 1/h^2 to the
// diagonal; their coupling to the exterior is left to a boundary closure.

#include <complex>
#include <functional>

#include <Eigen/Sparse>

#include "qwg/voxel.hpp"

namespace qwg {

using cplx = std::complex<double>;
using SpMatC = Eigen::SparseMatrix<cplx>;
using SpMatR = Eigen::SparseMatrix<double>;
using VecC = Eigen::VectorXcd;
using VecR = Eigen::VectorXd;

struct LatticeField {
  /// Vector potential; empty means A = 0.
  std::function<Point3(const Point3&)> potential;
  /// Scalar potential on the diagonal (e.g. the Zeeman term); may be empty.
  std::function<double(const Point3&)> scalar;
};

/// int_p^q A.dl by four-point Gauss-Legendre quadrature.
double link_phase(const std::function<Point3(const Point3&)>& potential, const Point3& p, const Point3& q);

SpMatC magnetic_operator(const VoxelGrid& grid, const LatticeField& field);
/// Field-free operator (real symmetric).
SpMatR laplacian(const VoxelGrid& grid);
/// y-z part of the field-free operator restricted to the given unknowns
/// (one x-slice), indexed by position in `ids`.
SpMatR slice_operator(const VoxelGrid& grid, const std::vector<int>& ids);

/// Grid inner product h^dim sum conj(a) b (dim = 2 for planar grids).
cplx grid_dot(const VoxelGrid& grid, const VecC& a, const VecC& b);
double cell_volume(const VoxelGrid& grid);

}  // namespace qwg
