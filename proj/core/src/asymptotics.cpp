#include "qwg/asymptotics.hpp"

#include <algorithm>
#include <cmath>

#include "qwg/error.hpp"

namespace qwg {

double AsymptoticModel::tau() const { return std::min(2.0 - tau_delta, mu2 - mu1); }

double AsymptoticModel::nu1(double k_sq) const {
  if (k_sq <= lambda1_sq) throw config_error("asymptotics", "k^2 below the first threshold");
  return std::sqrt(k_sq - lambda1_sq);
}

void AsymptoticModel::validate() const {
  if (!(mu1 > 0.0) || !(mu2 > mu1)) throw config_error("asymptotics", "cap exponents must satisfy 0 < mu1 < mu2");
  if (beta == 0.0) throw numerical_error("asymptotics", "junction coefficient beta vanishes");
  if (std::abs(A) == 0.0) throw numerical_error("asymptotics", "channel amplitude A(k0) vanishes");
  for (int j = 0; j < 2; ++j)
    if (std::abs(channel.b[j]) == 0.0)
      throw numerical_error("asymptotics", "tip coefficient b_" + std::to_string(j + 1) + " vanishes");
  if (mode == ModelMode::full && channel.samples.empty())
    throw config_error("asymptotics", "full mode needs regularized-expansion samples");
}

std::vector<std::string> AsymptoticModel::warnings(double eps) const {
  std::vector<std::string> w;
  double small = std::pow(eps, 2.0 * mu1 + 1.0);
  if (small > regime_threshold)
    w.push_back("eps^(2mu1+1) = " + std::to_string(small) + " exceeds the regime threshold " +
                std::to_string(regime_threshold));
  return w;
}

TipCoefficients tip_coefficients(const AsymptoticModel& model, double k_sq) {
  TipCoefficients t;
  const auto& ch = model.channel;
  if (model.mode == ModelMode::leading) {
    for (int j = 0; j < 2; ++j) t.c[j] = -std::conj(ch.b[0]) * ch.b[j];
    return t;
  }
  std::vector<ExpansionSample> s = ch.samples;
  if (s.size() == 1) return {s[0].c, s[0].d};
  std::sort(s.begin(), s.end(), [](const auto& x, const auto& y) { return x.k_sq < y.k_sq; });
  std::size_t i = 0;
  while (i + 2 < s.size() && s[i + 1].k_sq < k_sq) ++i;
  const auto& p = s[i];
  const auto& q = s[i + 1];
  double w = (k_sq - p.k_sq) / (q.k_sq - p.k_sq);
  for (int j = 0; j < 2; ++j) {
    t.c[j] = (1.0 - w) * p.c[j] + w * q.c[j];
    t.d[j] = (1.0 - w) * p.d[j] + w * q.d[j];
  }
  return t;
}

GammaDelta gamma_delta(const AsymptoticModel& m, double eps) {
  cplx ab = m.A * m.beta;
  if (std::abs(ab) == 0.0) throw numerical_error("asymptotics", "A beta vanishes");
  double p = std::pow(eps, 2.0 * m.mu1 + 1.0);
  return {(1.0 / p - m.a * m.alpha) / ab, (m.alpha + m.a * (m.beta * m.beta - m.alpha * m.alpha) * p) / ab};
}

namespace {

struct Denominator {
  cplx value;
  double scale;
};

// Closed-form s12 denominator without the 2i b1 c2 prefactor: vanishes at the pole.
Denominator denominator(const AsymptoticModel& m, const GammaDelta& gd, const TipCoefficients& t, cplx z) {
  cplx b1 = std::conj(m.channel.b[0]), b2 = std::conj(m.channel.b[1]);
  cplx g = gd.gamma, d = gd.delta;
  cplx t1 = -z * b1 * g * g;
  cplx t2 = -(z * t.d[1] - b1 * t.c[0] - b2 * t.c[1]) * g * d;
  cplx t3 = (t.c[0] * t.d[1] - t.c[1] * t.d[0]) * d * d;
  return {t1 + t2 + t3, std::abs(t1) + std::abs(t2) + std::abs(t3)};
}

}  // namespace

MatchingSolution matching_solve(const AsymptoticModel& m, double k_sq, double eps) {
  return matching_solve_offset(m, k_sq - m.channel.k0_sq, eps);
}

MatchingSolution matching_solve_offset(const AsymptoticModel& m, double offset, double eps) {
  m.validate();
  const double k_sq = m.channel.k0_sq + offset;
  const GammaDelta gd = gamma_delta(m, eps);
  const TipCoefficients t = tip_coefficients(m, k_sq);
  const cplx g = gd.gamma, d = gd.delta;
  const cplx b1 = std::conj(m.channel.b[0]), b2 = std::conj(m.channel.b[1]);
  const cplx z = offset;
  const cplx phase = std::polar(1.0, m.nu1(k_sq) * m.d);  // exp(i nu1 d)
  if (std::abs(b1 * t.c[1]) == 0.0) throw numerical_error("asymptotics", "b1 c2 vanishes");

  // C1 = X1 s12, C2 = X2 s12 from the equations at the second narrow.
  cplx X1 = (g * b1 + d * t.d[1]) * phase / (b1 * t.c[1]);
  cplx X2 = -d * phase / b1;
  cplx X = X1 * t.c[0] + X2 * t.d[0];
  cplx Y = X1 * z + X2 * b2;
  cplx num = d * std::conj(g) - g * std::conj(d);
  cplx den = d * X - g * Y;
  double floor = 1e-300 + 1e-14 * (std::abs(d * X) + std::abs(g * Y));
  if (std::abs(den) <= floor) throw numerical_error("asymptotics", "matching system degenerate at real k");

  MatchingSolution s;
  s.s12 = num / den;
  s.s11 = (X * s.s12 - std::conj(g)) / g;
  s.C1 = X1 * s.s12;
  s.C2 = X2 * s.s12;
  s.lemma_defect = std::imag(d * std::conj(g)) - 1.0;

  cplx em = std::conj(phase);
  auto rel = [](cplx r, std::initializer_list<cplx> terms) {
    double sc = 0.0;
    for (cplx v : terms) sc += std::abs(v);
    return sc > 0 ? std::abs(r) / sc : 0.0;
  };
  std::array<double, 4> res = {
      rel(g * s.s11 + std::conj(g) - s.C1 * t.c[0] - s.C2 * t.d[0],
          {g * s.s11, std::conj(g), s.C1 * t.c[0], s.C2 * t.d[0]}),
      rel(d * s.s11 + std::conj(d) - s.C1 * z - s.C2 * b2, {d * s.s11, std::conj(d), s.C1 * z, s.C2 * b2}),
      rel(g * s.s12 - (s.C1 * t.c[1] + s.C2 * t.d[1]) * em, {g * s.s12, s.C1 * t.c[1] * em, s.C2 * t.d[1] * em}),
      rel(d * s.s12 + s.C2 * b1 * em, {d * s.s12, s.C2 * b1 * em})};
  s.residual = *std::max_element(res.begin(), res.end());
  return s;
}

ResonancePole resonance_pole(const AsymptoticModel& m, double eps, const PoleOptions& opt) {
  m.validate();
  const GammaDelta gd = gamma_delta(m, eps);
  const cplx b1 = std::conj(m.channel.b[0]), b2 = std::conj(m.channel.b[1]);
  const double k0 = m.channel.k0_sq;
  const cplx g = gd.gamma, d = gd.delta;

  ResonancePole p;
  cplx z = 0.0;
  p.trace.push_back(z);
  double last_step = INFINITY;
  int growing = 0;
  bool converged = false;
  for (int it = 0; it < opt.max_iterations; ++it) {
    // Coefficients frozen at the real part of the current iterate.
    TipCoefficients t = tip_coefficients(m, k0 + z.real());
    cplx den = b1 * g * g + t.d[1] * g * d;
    if (std::abs(den) == 0.0) throw numerical_error("asymptotics", "pole iteration denominator vanishes");
    cplx next = ((b1 * t.c[0] + b2 * t.c[1]) * g * d + (t.c[0] * t.d[1] - t.c[1] * t.d[0]) * d * d) / den;
    double step = std::abs(next - z);
    z = next;
    p.trace.push_back(z);
    if (step <= opt.tol * std::max(std::abs(z), 1e-300) || step == 0.0) {
      converged = true;
      break;
    }
    growing = step > last_step ? growing + 1 : 0;
    if (growing >= 3) break;
    last_step = step;
  }
  if (!converged)
    throw numerical_error("asymptotics", "pole iteration not contracting at eps = " + std::to_string(eps) +
                                             ": outside asymptotic regime");
  p.offset = z;
  p.k_r_sq = k0 + z.real();
  p.k_i_sq = -z.imag();
  double bb = std::norm(m.channel.b[0]) + std::norm(m.channel.b[1]);
  double e = std::pow(eps, 2.0 * m.mu1 + 1.0);
  p.k_r_sq_leading = k0 - m.alpha * bb * e;
  p.k_i_sq_leading = m.beta * m.beta * bb * std::norm(m.A) * e * e;
  auto den = denominator(m, gd, tip_coefficients(m, p.k_r_sq), z);
  p.pole_residual = den.scale > 0 ? std::abs(den.value) / den.scale : 0.0;
  return p;
}

PeakCharacteristics peak_characteristics(const AsymptoticModel& m, double eps) {
  PeakCharacteristics pk;
  pk.k_r_sq = resonance_pole(m, eps).k_r_sq;
  double b1 = std::abs(m.channel.b[0]), b2 = std::abs(m.channel.b[1]);
  pk.q = b1 / b2;
  pk.P = 1.0 / (2.0 * b1 * b2 * m.beta * m.beta * std::norm(m.A));
  double s = pk.q + 1.0 / pk.q;
  pk.t_max = 4.0 / (s * s);
  pk.width = s / pk.P * std::pow(eps, 4.0 * m.mu1 + 2.0);
  return pk;
}

double lorentzian(const PeakCharacteristics& pk, double eps, double mu1, double k_sq) {
  double s = pk.q + 1.0 / pk.q;
  double x = pk.P * (k_sq - pk.k_r_sq) / std::pow(eps, 4.0 * mu1 + 2.0);
  return 1.0 / (0.25 * s * s + x * x);
}

TransmissionProfile transmission_profile(const AsymptoticModel& m, double eps, const std::vector<double>& k_sq) {
  TransmissionProfile tp;
  tp.peak = peak_characteristics(m, eps);
  tp.k_sq = k_sq;
  for (double k2 : k_sq) {
    tp.t_lorentz.push_back(lorentzian(tp.peak, eps, m.mu1, k2));
    tp.t_matching.push_back(std::norm(matching_solve(m, k2, eps).s12));
  }
  return tp;
}

SpinCharacteristics spin_characteristics(const AsymptoticModel& plus, const AsymptoticModel& minus, double eps,
                                         const std::vector<double>& k_sq) {
  SpinCharacteristics sc;
  sc.peak_plus = peak_characteristics(plus, eps);
  sc.peak_minus = peak_characteristics(minus, eps);
  sc.k_sq = k_sq;
  for (double k2 : k_sq) {
    double tp = lorentzian(sc.peak_plus, eps, plus.mu1, k2);
    double tm = lorentzian(sc.peak_minus, eps, minus.mu1, k2);
    sc.t_plus.push_back(tp);
    sc.t_minus.push_back(tm);
    sc.polarization.push_back((tp - tm) / (tp + tm));
  }
  sc.separation = sc.peak_plus.k_r_sq - sc.peak_minus.k_r_sq;
  sc.resolvable = std::abs(sc.separation) > std::max(sc.peak_plus.width, sc.peak_minus.width);
  return sc;
}

std::vector<double> peak_grid(const PeakCharacteristics& pk, double half_widths, int count) {
  std::vector<double> g(count);
  for (int i = 0; i < count; ++i)
    g[i] = pk.k_r_sq + half_widths * pk.width * (count == 1 ? 0.0 : 2.0 * i / (count - 1) - 1.0);
  return g;
}

}  // namespace qwg
