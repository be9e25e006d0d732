#pragma once

// Radiation closure for a uniform cylinder end on the lattice.
//
// Beyond an open x-end the discrete field separates exactly into slice modes
// psi_n (eigenvectors of the y-z slice operator, eigenvalue lambda_{n,h}^2)
// times zeta_n^j, where zeta_n + 1/zeta_n = 2 - (k^2 - lambda_{n,h}^2) h^2.
// Propagating modes take the outgoing root |zeta| = 1, evanescent modes the
// decaying root |zeta| < 1. The ghost value behind the end slice is
// sum_n zeta_n psi_n (psi_n . u_end) over the kept modes; discarded modes get
// zeta = 0 (a Dirichlet ghost), which is real and so keeps the closure
// flux-conserving.
//
// Kept modes enter as extra unknowns c_n = psi_n . u_end so the system stays sparse.

#include <vector>

#include "qwg/lattice.hpp"

namespace qwg {

struct EndClosure {
  int slice = 0;
  double x = 0.0;
  /// -1 for the left end (outgoing means towards -x), +1 for the right end.
  double outward = -1.0;
  std::vector<int> ids;
  /// Euclidean-orthonormal slice modes (columns), ascending lambda_{n,h}^2.
  Eigen::MatrixXd modes;
  Eigen::VectorXd lambda2;
  Eigen::VectorXcd zeta;
  /// Lattice wavenumber of the propagating mode: 2 (1 - cos qh) / h^2 = k^2 - lambda_{1,h}^2.
  double q = 0.0;
  /// Lattice group velocity sin(qh) / h.
  double velocity = 0.0;
  double h = 0.0;
  /// Optional gauge factors for ends where the grid field is not in the
  /// field-free gauge: exp(iF) on the end nodes (u' = exp(iF) u) and the
  /// ghost-link factor U(p, ghost) exp(-iF(ghost)). Empty means identity.
  VecC node_gauge;
  VecC ghost_gauge;

  int kept() const { return static_cast<int>(zeta.size()); }
  /// Euclidean slice-mode coefficient of a grid field.
  cplx mode_coefficient(const VecC& u, int n) const;
};

/// Builds the closure on x-slice `slice` of an open-ended grid.
/// Throws if k^2 is not strictly between the first two lattice thresholds.
EndClosure dtn_closure(const VoxelGrid& grid, int slice, double outward, double k, int n_evanescent);

/// Ghost value mismatch (for tests): residual of the closure relation for a
/// field given on the end slice and on the ghost slice.
cplx closure_residual(const EndClosure& end, const VecC& end_values, const VecC& ghost_values, int n);

/// A - k^2 with the closures appended as extra unknowns.
struct ClosedSystem {
  SpMatC matrix;
  std::size_t grid_size = 0;
  std::vector<EndClosure> ends;
  std::vector<std::size_t> offsets;  // first extra unknown per end
};

ClosedSystem close_system(const SpMatC& shifted_operator, const VoxelGrid& grid, std::vector<EndClosure> ends);

/// Right-hand side for a unit incoming propagating wave exp(-i outward q (x - x_ref)) psi_1
/// entering through `end`.
VecC incident_rhs(const ClosedSystem& sys, std::size_t end, double x_ref);

}  // namespace qwg
