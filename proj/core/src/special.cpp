#include "qwg/special.hpp"

#include <cmath>
#include <numbers>

#include "qwg/error.hpp"

namespace qwg {

namespace {

double unit(double t, double a, double b) {
  if (t <= a) return 0.0;
  if (t >= b) return 1.0;
  return (t - a) / (b - a);
}

bool inside(double t, double a, double b) { return t > a && t < b; }

}  // namespace

double smoothstep(double t, double a, double b) {
  const double x = unit(t, a, b);
  return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

double smoothstep_d1(double t, double a, double b) {
  if (!inside(t, a, b)) return 0.0;
  const double x = unit(t, a, b);
  return 30.0 * x * x * (1.0 - x) * (1.0 - x) / (b - a);
}

double smoothstep_d2(double t, double a, double b) {
  if (!inside(t, a, b)) return 0.0;
  const double x = unit(t, a, b);
  return 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x) / ((b - a) * (b - a));
}

SingularRadialPair::SingularRadialPair(double mu, double k) : mu_(mu), k_(k), nu_(mu + 0.5) {
  if (!(k > 0.0) || !(mu > -0.5)) {
    throw numerical_error("spectral", "singular_radial_pair requires k > 0 and mu > -1/2");
  }
  const double ln2 = std::numbers::ln2;
  cj_ = std::exp(nu_ * ln2 + std::lgamma(nu_ + 1.0) - nu_ * std::log(k_));
  cn_ = -std::numbers::pi * std::exp(nu_ * std::log(k_) - nu_ * ln2 - std::lgamma(nu_));
  if (!std::isfinite(cj_) || !std::isfinite(cn_)) {
    throw numerical_error("spectral", "Bessel rescaling constants overflow for mu=" + std::to_string(mu));
  }
}

namespace {

struct BesselTriple {
  double f, d1, d2;
};

// F(z), F'(z), F''(z) for F in {J_nu, Y_nu}, using only orders nu and nu+1.
BesselTriple bessel_triple(double nu, double z, bool neumann) {
  const double f = neumann ? std::cyl_neumann(nu, z) : std::cyl_bessel_j(nu, z);
  const double f1 = neumann ? std::cyl_neumann(nu + 1.0, z) : std::cyl_bessel_j(nu + 1.0, z);
  const double d1 = nu / z * f - f1;
  const double d2 = -d1 / z - (1.0 - nu * nu / (z * z)) * f;
  return {f, d1, d2};
}

RadialValue radial(double nu, double k, double scale, double r, bool neumann) {
  const double z = k * r;
  if (!(r > 0.0)) throw numerical_error("spectral", "radial pair evaluated at r <= 0");
  if (z > 1e6) throw numerical_error("spectral", "radial pair argument kr too large");
  const BesselTriple b = bessel_triple(nu, z, neumann);
  const double s = std::sqrt(r);
  RadialValue out;
  out.value = scale * b.f / s;
  out.d1 = scale * (-0.5 * b.f / (s * r) + k * b.d1 / s);
  out.d2 = scale * (0.75 * b.f / (s * r * r) - k * b.d1 / (s * r) + k * k * b.d2 / s);
  if (!std::isfinite(out.value) || !std::isfinite(out.d1) || !std::isfinite(out.d2)) {
    throw numerical_error("spectral", "radial pair overflow at r=" + std::to_string(r));
  }
  return out;
}

}  // namespace

double SingularRadialPair::jt(double r) const { return cj_ * std::cyl_bessel_j(nu_, k_ * r); }
double SingularRadialPair::nt(double r) const { return cn_ * std::cyl_neumann(nu_, k_ * r); }

RadialValue SingularRadialPair::regular(double r) const { return radial(nu_, k_, cj_, r, false); }
RadialValue SingularRadialPair::singular(double r) const { return radial(nu_, k_, cn_, r, true); }

double SingularRadialPair::wronskian(double r) const { return -2.0 * nu_ / r; }

}  // namespace qwg
