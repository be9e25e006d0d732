#pragma once

// Scalar special functions shared by the limit-problem solvers.

namespace qwg {

/// C^2 quintic bridge: 0 for t <= a, 1 for t >= b.
double smoothstep(double t, double a, double b);
/// d/dt and d^2/dt^2 of smoothstep.
double smoothstep_d1(double t, double a, double b);
double smoothstep_d2(double t, double a, double b);

/// Radial factor f(r) = r^{-1/2} F(kr) and its first two r-derivatives.
struct RadialValue {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

/// Pair of cone solutions of order nu = mu + 1/2 rescaled so that
/// Jt(kr) = r^nu (1 + o(1)) and Nt(kr) = r^-nu (1 + o(1)) as r -> 0.
class SingularRadialPair {
 public:
  SingularRadialPair(double mu, double k);

  double mu() const { return mu_; }
  double k() const { return k_; }
  double order() const { return nu_; }

  /// Rescaled Bessel / Neumann functions Jt_nu(kr), Nt_nu(kr).
  double jt(double r) const;
  double nt(double r) const;

  /// r^{-1/2} Jt(kr) ~ r^mu and r^{-1/2} Nt(kr) ~ r^{-mu-1}, with derivatives.
  RadialValue regular(double r) const;
  RadialValue singular(double r) const;

  /// Wronskian W[Jt, Nt](r) = Jt Nt' - Jt' Nt = -2 nu / r.
  double wronskian(double r) const;

  double j_scale() const { return cj_; }
  double n_scale() const { return cn_; }

 private:
  double mu_, k_, nu_, cj_, cn_;
};

}  // namespace qwg
