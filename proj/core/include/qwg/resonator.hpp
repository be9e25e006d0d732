#pragma once

// First-kind limit problem in the closed resonator G2:
//   (-i grad + A')^2 u +- H u = k^2 u,  u = 0 on the boundary,
// for either spin channel. Provides the simple eigenpair (k0^2, v0) in an
// energy window, the tip coefficients b_j of v0 ~ b_j r^{-1/2} Jt(k0 r) Phi_1,
// and the regularized solutions v21, v22 with their tip coefficients c_j, d_j.

#include <array>

#include "qwg/lattice.hpp"
#include "qwg/spectral.hpp"

namespace qwg {

struct ResonatorOptions {
  double h = 0.05;
  /// Second grid h * coarse_factor for Richardson extrapolation of k0^2; <= 1 disables.
  double coarse_factor = 1.25;
  /// Eigenvalues nearest the window centre that are inspected.
  int nev = 4;
  double eig_tol = 1e-10;
  /// Smallest acceptable |b_j| (relative to the unit-norm eigenfunction).
  double b_min = 1e-6;
  /// Cutoff radius delta (0: 0.8 of the conical radius).
  double cutoff = 0.0;
  int probes = 8;
  double probe_min_h = 3.0;
  /// Largest acceptable relative misfit of a tip fit.
  double fit_tol = 0.05;
  /// Smallest |k^2 - k0^2| for the regularized solve.
  double deflation_floor = 1e-8;
};

struct Window {
  double lo = 0.0;
  double hi = 0.0;
};

/// Eigenvalues of a Hermitian lattice operator inside a window (shift-invert at its centre).
struct WindowEigen {
  std::vector<double> inside;
  /// Distance from the selected eigenvalue to the nearest other computed one.
  double gap = 0.0;
  double residual = 0.0;
  double value = 0.0;
  VecC vector;
};
WindowEigen window_eigenpair(const SpMatC& op, const Window& window, int nev, double tol);

/// Lattice field of the resonator problem: A' and the Zeeman term sign(spin) H.
LatticeField resonator_field(const SolenoidSpec& sol, Spin spin);

struct ResonatorSpectrum {
  Spin spin = Spin::plus;
  /// Extrapolated eigenvalue, and the values on the fine / coarse grids.
  double k0_sq = 0.0;
  double k0_sq_fine = 0.0;
  double k0_sq_coarse = 0.0;
  double gap = 0.0;
  double residual = 0.0;
  VoxelGrid grid;
  /// Unit-norm (h^3 sum |v|^2 = 1) eigenfunction on `grid`, phase fixed by b_1 > 0.
  VecC v0;
  /// Tip coefficients from the cap-projection fit and from the Green identity b_j = (g_j, v0).
  std::array<cplx, 2> b{};
  std::array<cplx, 2> b_green{};
  std::array<double, 2> fit_residual{};
  double cutoff = 0.0;
};

ResonatorSpectrum resonator_eigenpair(const WaveguideSpec& spec, const CapSpectrum& cap, Spin spin,
                                      const Window& window, const ResonatorOptions& options = {});

struct RegularizedExpansion {
  double k = 0.0;
  std::array<cplx, 2> c{};
  std::array<cplx, 2> d{};
  /// Nt coefficients: v21 at tip 1 (expected k^2 - k0^2), v22 at tips 1, 2 (expected conj b2, -conj b1).
  cplx n21;
  std::array<cplx, 2> n22{};
  double fit_residual = 0.0;
};

RegularizedExpansion regularized_expansion(const WaveguideSpec& spec, const CapSpectrum& cap,
                                           const ResonatorSpectrum& spectrum, double k,
                                           const ResonatorOptions& options = {});

/// First-order Zeeman oracle 2 int H |v0|^2 dV on the resonator grid.
double zeeman_splitting_oracle(const SolenoidSpec& sol, const VoxelGrid& grid, const VecC& v0);

}  // namespace qwg
