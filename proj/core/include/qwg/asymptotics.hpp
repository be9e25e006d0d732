#pragma once

// Asymptotic scattering model near a resonance. Assembles the limit-problem
// coefficients (mu, alpha, beta, a, A, k0^2, b_j, c_j, d_j) into the matching
// system at the narrows and evaluates s11, s12, the complex pole, the
// Lorentzian transmission profile and the spin-resolved characteristics.

#include <array>
#include <complex>
#include <string>
#include <vector>

#include "qwg/geometry.hpp"

namespace qwg {

using cplx = std::complex<double>;

/// c_j, d_j sampled by the regularized solve at one real k^2.
struct ExpansionSample {
  double k_sq = 0.0;
  std::array<cplx, 2> c{};
  std::array<cplx, 2> d{};
};

enum class ModelMode { leading, full };

struct SpinChannelModel {
  Spin spin = Spin::plus;
  double k0_sq = 0.0;
  std::array<cplx, 2> b{};
  /// Used in full mode; c_j, d_j are interpolated linearly in k^2 between samples.
  std::vector<ExpansionSample> samples;
};

struct AsymptoticModel {
  double mu1 = 0.0;
  double mu2 = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  /// Channel constants frozen at real k near k0.
  cplx a;
  cplx A;
  double lambda1_sq = 0.0;
  double d = 0.0;
  SpinChannelModel channel;
  ModelMode mode = ModelMode::leading;
  /// eps^{2 mu1 + 1} above this triggers a regime warning.
  double regime_threshold = 0.05;
  double tau_delta = 0.1;

  /// tau = min(2 - delta, mu2 - mu1).
  double tau() const;
  double nu1(double k_sq) const;
  /// Throws on beta = 0, A = 0, b_j = 0 or inconsistent mu.
  void validate() const;
  std::vector<std::string> warnings(double eps) const;
};

struct TipCoefficients {
  std::array<cplx, 2> c{};
  std::array<cplx, 2> d{};
};
/// c_j, d_j at real k^2 for the model's mode (leading: c_j = -conj(b1) b_j, d_j = 0).
TipCoefficients tip_coefficients(const AsymptoticModel& model, double k_sq);

struct GammaDelta {
  cplx gamma;
  cplx delta;
};
GammaDelta gamma_delta(const AsymptoticModel& model, double eps);

struct MatchingSolution {
  cplx s11;
  cplx s12;
  cplx C1;
  cplx C2;
  /// Largest residual of the four matching equations relative to their term scale.
  double residual = 0.0;
  /// Im(delta conj(gamma)) - 1; vanishes when |A|^2 = Im a holds exactly.
  double lemma_defect = 0.0;
};
/// Solves the 2x2 matching system at real k^2. The numerator 2i of the closed
/// form is kept as 2i Im(delta conj(gamma)) so the solution is exact for the
/// supplied coefficients.
MatchingSolution matching_solve(const AsymptoticModel& model, double k_sq, double eps);
/// Same at k^2 = k0^2 + offset. Near k0^2 at small eps the width falls below
/// the spacing of doubles around k^2, so sweeps across a peak go through here.
MatchingSolution matching_solve_offset(const AsymptoticModel& model, double offset, double eps);

struct PoleOptions {
  int max_iterations = 60;
  double tol = 1e-15;
};

struct ResonancePole {
  double k_r_sq = 0.0;
  double k_i_sq = 0.0;
  /// Pole minus k0^2, carried at full relative precision.
  cplx offset;
  /// Leading-order values k0^2 - alpha(|b1|^2 + |b2|^2) eps^{2mu1+1} and
  /// beta^2 (|b1|^2 + |b2|^2) |A|^2 eps^{4mu1+2}.
  double k_r_sq_leading = 0.0;
  double k_i_sq_leading = 0.0;
  /// Successive k^2 - k0^2 iterates.
  std::vector<cplx> trace;
  /// |denominator at the pole| relative to the sum of its term magnitudes.
  double pole_residual = 0.0;
};
ResonancePole resonance_pole(const AsymptoticModel& model, double eps, const PoleOptions& options = {});

struct PeakCharacteristics {
  double k_r_sq = 0.0;
  double t_max = 0.0;
  double width = 0.0;
  double q = 0.0;
  double P = 0.0;
};

/// Lorentzian transmission at k^2 for the given peak.
double lorentzian(const PeakCharacteristics& peak, double eps, double mu1, double k_sq);

struct TransmissionProfile {
  PeakCharacteristics peak;
  std::vector<double> k_sq;
  /// Lorentzian approximation and |s12|^2 from the matching solution.
  std::vector<double> t_lorentz;
  std::vector<double> t_matching;
};
PeakCharacteristics peak_characteristics(const AsymptoticModel& model, double eps);
TransmissionProfile transmission_profile(const AsymptoticModel& model, double eps, const std::vector<double>& k_sq);

struct SpinCharacteristics {
  std::vector<double> k_sq;
  std::vector<double> t_plus;
  std::vector<double> t_minus;
  std::vector<double> polarization;
  PeakCharacteristics peak_plus;
  PeakCharacteristics peak_minus;
  double separation = 0.0;
  bool resolvable = false;
};
SpinCharacteristics spin_characteristics(const AsymptoticModel& plus, const AsymptoticModel& minus, double eps,
                                         const std::vector<double>& k_sq);

/// Evenly spaced k^2 grid over k_r^2 +- half_widths * width.
std::vector<double> peak_grid(const PeakCharacteristics& peak, double half_widths, int count);

}  // namespace qwg
