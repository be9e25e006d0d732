#pragma once

// Cone-tip expansions: project a grid field onto the cap mode Phi_1 on spheres
// around a vertex and least-squares fit the radial profile against a small basis.

#include <complex>
#include <functional>
#include <vector>

#include "qwg/lattice.hpp"
#include "qwg/spectral.hpp"

namespace qwg {

/// Vertex of a cone and the x-direction (+1 or -1) of the half that is sampled.
struct TipFrame {
  Point3 vertex = Point3::Zero();
  double axis_sign = 1.0;
};

/// (2 mu1 + 1) int_{S} u(r, omega) Phi_1(omega) d omega over the cap.
cplx cap_projection(const VoxelGrid& grid, const VecC& field, const TipFrame& tip, const CapSpectrum& cap, double r);
/// Same for an analytically known field.
cplx cap_projection(const std::function<cplx(const Point3&)>& field, const TipFrame& tip, const CapSpectrum& cap,
                    double r);

struct RadialFit {
  std::vector<cplx> coefficients;
  /// RMS misfit relative to the RMS of the data.
  double residual = 0.0;
};

RadialFit fit_radial(const std::vector<double>& radii, const std::vector<cplx>& values,
                     const std::vector<std::function<double(double)>>& basis);

/// [Delta, Theta] v on the grid nodes, where v = r^{-1/2} Nt(kr) Phi_1 around
/// `tip` and Theta = 1 - smoothstep(r; delta/2, delta).
VecC commutator_source(const VoxelGrid& grid, const TipFrame& tip, const CapSpectrum& cap, double k, double delta);

/// Evenly spaced radii in [r_min, r_max].
std::vector<double> probe_radii(double r_min, double r_max, int count);

}  // namespace qwg
