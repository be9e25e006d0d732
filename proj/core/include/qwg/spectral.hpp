#pragma once

// Low-dimensional eigenproblems: Dirichlet modes of the cross-section and the
// Laplace-Beltrami problem on the spherical cap cut out by a circular cone.

#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "qwg/geometry.hpp"
#include "qwg/voxel.hpp"

namespace qwg {

struct ModeOptions {
  /// Number of grids h, h/2, ..., h/2^(levels-1).
  int levels = 3;
  /// Relative gap below which lambda_1^2 counts as degenerate.
  double degeneracy_tol = 1e-6;
  double eig_tol = 1e-10;
};

struct ModeBasis {
  /// Extrapolated Dirichlet eigenvalues lambda_n^2, ascending.
  std::vector<double> thresholds;
  /// |finest - extrapolated| per eigenvalue.
  std::vector<double> errors;
  /// Raw eigenvalues per grid level, spacings per level.
  std::vector<std::vector<double>> ladder;
  std::vector<double> spacings;
  /// Ground mode on the finest planar grid; h^2 sum psi^2 = 1, positive inside.
  VoxelGrid grid;
  Eigen::VectorXd psi1;

  double lambda1_sq() const { return thresholds.at(0); }
  double lambda2_sq() const { return thresholds.at(1); }
  /// sqrt(k^2 - lambda_1^2) when real.
  std::optional<double> nu1(double k) const;
  /// k^2 in (lambda_1^2, lambda_2^2).
  bool single_channel(double k) const;
  /// Psi_1 at a cross-section point (bilinear, zero outside).
  double psi1_at(double y, double z) const;
};

ModeBasis cross_section_modes(const CrossSectionSpec& cs, double h, int count, const ModeOptions& options = {});

/// Lowest `count` Dirichlet eigenpairs of a planar (or slice) operator on one grid.
struct PlanarModes {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;  // Euclidean-normalized columns
};
PlanarModes planar_modes(const Eigen::SparseMatrix<double>& op, int count, double tol = 1e-10);

struct CapOptions {
  int m_max = 2;
  double mu_max = 200.0;
  int steps = 20000;
  /// Scan step in mu for the hemisphere; scaled by (pi/2)/theta.
  double scan_step = 0.1;
  double root_tol = 1e-12;
};

struct CapSpectrum {
  double theta = 0.0;
  double mu1 = 0.0;
  double mu2 = 0.0;
  /// Azimuthal order of the mode behind mu2.
  int mu2_order = 0;
  /// Phi_1 samples on a uniform polar grid over [0, theta], normalized by
  /// (2 mu1 + 1) * 2 pi * int Phi_1^2 sin(phi) dphi = 1.
  std::vector<double> phi;
  std::vector<double> profile;

  double operator()(double polar) const;
};

CapSpectrum cap_spectrum(double theta, const CapOptions& options = {});

/// Value at the cap edge of the regular pole solution of the azimuthal-order-m
/// Legendre equation with Lambda = mu (mu + 1); its zeros in mu are the exponents.
double cap_shoot(double theta, int m, double mu, int steps);

}  // namespace qwg
