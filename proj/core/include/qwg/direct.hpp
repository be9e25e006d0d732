#pragma once

// Scattering on the full waveguide G(eps) at finite eps:
//   (-i grad + A)^2 u +- H u = k^2 u,
// truncated by DtN closures on both uniform ends. The incoming mode enters
// through one closure; s11 and s12 are read off the propagating mode
// coefficients at the two ends with the phase origin at x_ref.

#include <functional>
#include <memory>
#include <vector>

#include "qwg/lattice.hpp"

namespace qwg {

enum class GaugeChoice { modified, raw };
enum class Incidence { left, right };

struct DirectOptions {
  double h = 0.0625;
  /// Uniform cylinder kept beyond each cone before the closure.
  double length = 1.5;
  int n_evanescent = 8;
  int min_waist_voxels = 4;
  double x_ref = 0.0;
  /// A' (vanishing on the ends) or the raw solenoid potential A, in which
  /// case the ends are transformed back to the field-free gauge.
  GaugeChoice gauge = GaugeChoice::modified;
  /// Additional gauge chi applied through the link phase differences chi(q) - chi(p).
  std::function<double(const Point3&)> extra_gauge;
  /// Solenoid on/off switch for validation runs (geometry unchanged).
  bool field = true;
  double amplification_ceiling = 1e14;
  int gmres_restart = 40;
  int gmres_max_iterations = 400;
  double gmres_tol = 1e-11;
};

struct ScatteringResult {
  double k = 0.0;
  double eps = 0.0;
  double spin_sign = 1.0;
  Incidence incidence = Incidence::left;
  /// Reflection into the incident end and transmission to the other end.
  cplx s11;
  cplx s12;
  double T = 0.0;
  double R = 0.0;
  double defect = 0.0;
  double h = 0.0;
  std::size_t unknowns = 0;
  /// GMRES iterations (0 for a direct solve).
  int iterations = 0;
  double amplification = 0.0;
};

class ScatteringProblem {
 public:
  ScatteringProblem(const WaveguideSpec& spec, Spin spin, const DirectOptions& options = {});
  ~ScatteringProblem();
  ScatteringProblem(ScatteringProblem&&) noexcept;
  ScatteringProblem& operator=(ScatteringProblem&&) noexcept;

  /// Sparse LU solve at k.
  ScatteringResult solve(double k, Incidence incidence = Incidence::left);
  /// GMRES preconditioned by the LU factorization at the reference k, warm
  /// started from the previous iterative solution.
  void set_reference(double k_ref);
  ScatteringResult solve_iterative(double k, Incidence incidence = Incidence::left);

  const VoxelGrid& grid() const;
  /// Grid part of the last solution.
  const VecC& field() const;
  const WaveguideSpec& spec() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

ScatteringResult scattering_solve(const WaveguideSpec& spec, double k, Spin spin, const DirectOptions& options = {});

struct GaugeCheck {
  double t_modified = 0.0;
  double t_raw = 0.0;
  /// |T_A - T_A'|.
  double deviation = 0.0;
  /// ||u_A' - exp(i tau f) u_A|| / ||u_A'|| over the grid.
  double field_deviation = 0.0;
};
GaugeCheck gauge_check(const WaveguideSpec& spec, double k, Spin spin, const DirectOptions& options = {});

struct LorentzFit {
  double center = 0.0;
  double width = 0.0;
  double height = 0.0;
  /// RMS misfit divided by the fitted height.
  double residual = 0.0;
};
/// Least-squares fit of height / (1 + (2 (x - center) / width)^2).
LorentzFit fit_lorentzian(const std::vector<double>& x, const std::vector<double>& t, const LorentzFit& start);

struct ScanOptions {
  int points = 17;
  /// Sampled interval k_r^2 +- span * width.
  double span = 1.0;
  int max_secant = 30;
  /// Secant stop: step below this fraction of the pole's imaginary part.
  double secant_tol = 1e-3;
  /// Initial secant spacing in k^2.
  double secant_step = 2e-3;
  /// The pole must stay within this distance of the starting guess.
  double search_radius = 0.5;
};

struct ResonanceScan {
  std::vector<double> k_sq;
  std::vector<double> t;
  std::vector<double> defect;
  /// Secant iterates on 1 / s12 (k^2 values, complex) and the converged pole.
  std::vector<cplx> trace;
  cplx pole;
  LorentzFit fit;
  int solves = 0;
  double max_defect = 0.0;
};
ResonanceScan resonance_scan(ScatteringProblem& problem, double k_sq_guess, const ScanOptions& options = {});

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace qwg
