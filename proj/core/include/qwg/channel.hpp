#pragma once

// First-kind limit problem in a half-infinite channel G1 (or its mirror G3):
// the special solution
//   V = Theta(r) r^{-1/2} Nt(kr) Phi_1 + Vt,   Vt ~ a r^{-1/2} Jt(kr) Phi_1 near the tip,
//   V ~ A exp(-i nu_1 (x - x_tip)) Psi_1 far down the channel,
// with Psi_1 flux-normalized. Vt solves (-Delta - k^2) Vt = [Delta, Theta] v.

#include "qwg/dtn.hpp"
#include "qwg/spectral.hpp"

namespace qwg {

struct ChannelOptions {
  double h = 0.05;
  /// Uniform cylinder length kept between the cone and the closure.
  double length = 1.5;
  int n_evanescent = 8;
  /// Outer radius delta of the cutoff Theta (inner radius delta / 2); 0 picks
  /// 0.8 of the largest radius on which G1 is still exactly conical.
  double cutoff = 0.0;
  int probes = 8;
  /// Smallest probe radius in units of h.
  double probe_min_h = 3.0;
  /// Lower bound on the condition number above which the solve is rejected.
  double amplification_ceiling = 1e12;
};

struct ChannelConstants {
  double k = 0.0;
  /// Tip index 0 (left channel G1) or 1 (right channel G3).
  int tip = 0;
  cplx a;
  cplx A;
  /// | |A|^2 - Im a |.
  double lemma_residual = 0.0;
  /// Nt coefficient of the bounded part (should vanish) and fit misfit.
  cplx singular_leak;
  double fit_residual = 0.0;
  double cutoff = 0.0;
  double length = 0.0;
  double h = 0.0;
  std::size_t unknowns = 0;
};

ChannelConstants channel_constants(const WaveguideSpec& spec, const CapSpectrum& cap, double k, int tip,
                                   const ChannelOptions& options = {});

/// Largest distance from a tip over which its channel domain is exactly conical.
double conical_radius(const WaveguideSpec& spec, int tip);

}  // namespace qwg
