#pragma once

// Second-kind limit problem: Laplace's equation in the unit-scale neck Ω with
// Dirichlet walls. The model solutions
//   w^l ~ rho^mu Phi_1 + alpha rho^{-mu-1} Phi_1   (left half-cone),
//         beta rho^{-mu-1} Phi_1                  (right half-cone),
// and its mirror image w^r define the coupling coefficients alpha, beta.
//
// Ω is axisymmetric, so the problem is solved on the meridian half-plane
// (xi along the axis, s >= 0 the distance from it) with a finite-volume
// stencil weighted by s. The domain is truncated on the sphere |xi| = R with
// Dirichlet data Phi_1 on one cap; growth/decay amplitudes are read off by
// projecting onto Phi_1 on interior spheres and fitting rho^mu, rho^{-mu-1}.

#include <vector>

#include <Eigen/Core>

#include "qwg/geometry.hpp"
#include "qwg/spectral.hpp"

namespace qwg {

enum class Side { left, right };

struct JunctionOptions {
  double h = 0.1;
  /// Truncation radius; 0 means 2 * match radius.
  double r_max = 0.0;
  /// Probe spheres span [probe_lo * match radius, probe_hi * r_max].
  double probe_lo = 1.25;
  double probe_hi = 0.75;
  int probes = 8;
  /// Geometric scale factor s: the solve is done for s * Ω.
  double scale = 1.0;
  /// Error if |beta| falls below this.
  double beta_floor = 1e-10;
  /// Acceptable relative error bar across the extrapolation ladder.
  double error_bar_tol = 0.05;
};

struct ModelSolution {
  Side side = Side::left;
  /// Same-side and opposite-side decay amplitudes.
  double alpha = 0.0;
  double beta = 0.0;
  /// Worst relative misfit of the two-term far-field fits.
  double fit_residual = 0.0;
  /// Smallest nodal value divided by the largest (maximum-principle check).
  double min_ratio = 0.0;
  /// Self-test: Phi_1 projection at r_max / 2 against the fitted far field.
  double reprojection_error = 0.0;
};

struct JunctionSolve {
  double h = 0.0;
  double r_max = 0.0;
  std::size_t unknowns = 0;
  ModelSolution left;
  ModelSolution right;
};

struct JunctionCoefficients {
  double alpha = 0.0;
  double beta = 0.0;
  double alpha_error = 0.0;
  double beta_error = 0.0;
  double r_max = 0.0;
  /// Solves at (h, R), (h/2, R), (h/2, 2R).
  std::vector<JunctionSolve> ladder;
};

/// One truncated solve on the meridian grid.
JunctionSolve solve_junction(const NarrowSpec& narrow, const CapSpectrum& cap, double h, double r_max,
                             const JunctionOptions& options = {});

/// alpha, beta extrapolated in h (Richardson, second order) with the R-doubling
/// and h-halving deviations as error bars.
JunctionCoefficients junction_coefficients(const NarrowSpec& narrow, const CapSpectrum& cap,
                                           const JunctionOptions& options = {});

}  // namespace qwg
