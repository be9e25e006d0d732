#include "qwg/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qwg/error.hpp"
#include "qwg/special.hpp"

namespace qwg {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

bool segments_cross(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  auto orient = [](const Point2& p, const Point2& q, const Point2& r) {
    double v = (q - p).x() * (r - p).y() - (q - p).y() * (r - p).x();
    return (v > 0) - (v < 0);
  };
  int o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
  return o1 * o2 < 0 && o3 * o4 < 0;
}

// Axial extent of the non-conical part of the unit neck.
double neck_extent(const NarrowSpec& n) {
  return std::visit(overloaded{[](const HyperboloidNeck& h) { return h.blend_end; },
                               [](const CustomNeck& c) { return c.t.empty() ? 0.0 : c.t.back(); }},
                    n.neck);
}

}  // namespace

// ---------------------------------------------------------------------------

bool CrossSectionSpec::contains(double y, double z) const {
  return std::visit(
      overloaded{[&](const Disk& d) { return y * y + z * z < d.radius * d.radius; },
                 [&](const Rectangle& r) { return std::abs(y) < 0.5 * r.a && std::abs(z) < 0.5 * r.b; },
                 [&](const Polygon& p) {
                   bool in = false;
                   const auto& v = p.vertices;
                   for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
                     if ((v[i].y() > z) != (v[j].y() > z) &&
                         y < (v[j].x() - v[i].x()) * (z - v[i].y()) / (v[j].y() - v[i].y()) + v[i].x())
                       in = !in;
                   }
                   return in;
                 }},
      shape);
}

double CrossSectionSpec::max_axis_distance() const {
  return std::visit(overloaded{[](const Disk& d) { return d.radius; },
                               [](const Rectangle& r) { return 0.5 * std::hypot(r.a, r.b); },
                               [](const Polygon& p) {
                                 double m = 0.0;
                                 for (const auto& v : p.vertices) m = std::max(m, v.norm());
                                 return m;
                               }},
                    shape);
}

double CrossSectionSpec::min_axis_distance() const {
  return std::visit(overloaded{[](const Disk& d) { return d.radius; },
                               [](const Rectangle& r) { return 0.5 * std::min(r.a, r.b); },
                               [](const Polygon& p) {
                                 double m = INFINITY;
                                 const auto& v = p.vertices;
                                 for (std::size_t i = 0; i < v.size(); ++i) {
                                   Point2 a = v[i], b = v[(i + 1) % v.size()];
                                   double t = std::clamp(-a.dot(b - a) / (b - a).squaredNorm(), 0.0, 1.0);
                                   m = std::min(m, (a + t * (b - a)).norm());
                                 }
                                 return m;
                               }},
                    shape);
}

std::array<Point2, 2> CrossSectionSpec::bounds() const {
  return std::visit(
      overloaded{[](const Disk& d) {
                   return std::array<Point2, 2>{Point2(-d.radius, -d.radius), Point2(d.radius, d.radius)};
                 },
                 [](const Rectangle& r) {
                   return std::array<Point2, 2>{Point2(-0.5 * r.a, -0.5 * r.b), Point2(0.5 * r.a, 0.5 * r.b)};
                 },
                 [](const Polygon& p) {
                   Point2 lo = Point2::Constant(0.0), hi = Point2::Constant(0.0);
                   for (const auto& v : p.vertices) {
                     lo = lo.cwiseMin(v);
                     hi = hi.cwiseMax(v);
                   }
                   return std::array<Point2, 2>{lo, hi};
                 }},
      shape);
}

std::vector<std::string> CrossSectionSpec::validate() const {
  std::vector<std::string> issues;
  std::visit(overloaded{[&](const Disk& d) {
                          if (!(d.radius > 0)) issues.push_back("disk radius must be positive");
                        },
                        [&](const Rectangle& r) {
                          if (!(r.a > 0 && r.b > 0)) issues.push_back("rectangle sides must be positive");
                        },
                        [&](const Polygon& p) {
                          const auto& v = p.vertices;
                          if (v.size() < 3) {
                            issues.push_back("polygon needs at least 3 vertices");
                            return;
                          }
                          std::size_t n = v.size();
                          for (std::size_t i = 0; i < n; ++i)
                            for (std::size_t j = i + 2; j < n; ++j) {
                              if (i == 0 && j == n - 1) continue;
                              if (segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]))
                                issues.push_back("polygon edges " + std::to_string(i) + " and " +
                                                 std::to_string(j) + " intersect");
                            }
                          if (!contains(0.0, 0.0)) issues.push_back("polygon must contain the axis y = z = 0");
                        }},
             shape);
  return issues;
}

// ---------------------------------------------------------------------------

double NarrowSpec::wall_radius(double t) const {
  t = std::abs(t);
  const double tn = std::tan(half_angle);
  return std::visit(overloaded{[&](const HyperboloidNeck& h) {
                                 double w = h.waist / (2.0 * tn);
                                 double s = smoothstep(t, h.blend_start, h.blend_end);
                                 return tn * ((1.0 - s) * std::sqrt(t * t + w * w) + s * t);
                               },
                               [&](const CustomNeck& c) {
                                 if (t >= c.t.back()) return tn * t;
                                 auto it = std::upper_bound(c.t.begin(), c.t.end(), t);
                                 std::size_t i = std::max<std::ptrdiff_t>(it - c.t.begin(), 1) - 1;
                                 double a = (t - c.t[i]) / (c.t[i + 1] - c.t[i]);
                                 return (1.0 - a) * c.radius[i] + a * c.radius[i + 1];
                               }},
                    neck);
}

bool NarrowSpec::in_neck(const Point3& xi) const {
  double rho = std::hypot(xi.y(), xi.z());
  return rho < wall_radius(xi.x());
}

bool NarrowSpec::in_cone(const Point3& rel) const {
  return std::hypot(rel.y(), rel.z()) < std::tan(half_angle) * std::abs(rel.x());
}

double NarrowSpec::match_radius() const { return neck_extent(*this) / std::cos(half_angle); }

double NarrowSpec::waist_diameter() const { return 2.0 * wall_radius(0.0); }

std::vector<std::string> NarrowSpec::validate() const {
  std::vector<std::string> issues;
  if (!(half_angle > 0 && half_angle < 0.5 * std::numbers::pi))
    issues.push_back("cone half-angle must lie in (0, pi/2)");
  std::visit(overloaded{[&](const HyperboloidNeck& h) {
                          if (!(h.waist > 0)) issues.push_back("neck waist must be positive");
                          if (!(h.blend_start >= 0 && h.blend_end > h.blend_start))
                            issues.push_back("neck blend interval must satisfy 0 <= start < end");
                        },
                        [&](const CustomNeck& c) {
                          if (c.t.size() < 2 || c.t.size() != c.radius.size()) {
                            issues.push_back("custom neck needs >= 2 matching (t, radius) samples");
                            return;
                          }
                          if (c.t.front() != 0.0) issues.push_back("custom neck samples must start at t = 0");
                          for (std::size_t i = 1; i < c.t.size(); ++i)
                            if (!(c.t[i] > c.t[i - 1])) issues.push_back("custom neck t must increase");
                          for (double r : c.radius)
                            if (!(r > 0)) issues.push_back("custom neck radius must be positive");
                          double cone = std::tan(half_angle) * c.t.back();
                          if (std::abs(c.radius.back() - cone) > 1e-6 * std::max(1.0, cone))
                            issues.push_back("custom neck must end on the cone wall");
                        }},
             neck);
  return issues;
}

// ---------------------------------------------------------------------------

bool SolenoidSpec::active() const { return radius > 0 && !profile.empty(); }

double SolenoidSpec::field(double rho) const {
  if (!active() || rho < 0 || rho >= radius) return 0.0;
  if (profile.size() == 1) return profile[0];
  double u = rho / radius * static_cast<double>(profile.size() - 1);
  std::size_t i = std::min(static_cast<std::size_t>(u), profile.size() - 2);
  double a = u - static_cast<double>(i);
  return (1.0 - a) * profile[i] + a * profile[i + 1];
}

double SolenoidSpec::flux_integral(double rho) const {
  if (!active() || rho <= 0) return 0.0;
  double c = std::min(rho, radius);
  if (profile.size() == 1) return 0.5 * profile[0] * c * c;
  std::size_t n = profile.size() - 1;
  double dt = radius / static_cast<double>(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double a = dt * static_cast<double>(i);
    if (a >= c) break;
    double b = std::min(dt * static_cast<double>(i + 1), c);
    double slope = (profile[i + 1] - profile[i]) / dt;
    total += (profile[i] - slope * a) * 0.5 * (b * b - a * a) + slope * (b * b * b - a * a * a) / 3.0;
  }
  return total;
}

SolenoidSpec SolenoidSpec::scaled(double s) const {
  SolenoidSpec out = *this;
  for (double& v : out.profile) v *= s;
  return out;
}

std::vector<std::string> SolenoidSpec::validate() const {
  std::vector<std::string> issues;
  if (radius < 0) issues.push_back("solenoid radius must be non-negative");
  if (radius > 0 && profile.empty()) issues.push_back("solenoid profile is empty");
  for (double v : profile)
    if (!std::isfinite(v)) issues.push_back("solenoid profile has a non-finite sample");
  if (!(gauge_inner >= 0 && gauge_outer > gauge_inner))
    issues.push_back("gauge cutoff margins must satisfy 0 <= inner < outer");
  return issues;
}

// ---------------------------------------------------------------------------

double WaveguideSpec::d() const { return std::abs(narrows[1].tip_x - narrows[0].tip_x); }

double WaveguideSpec::cone_length(int j) const {
  return cross_section.max_axis_distance() / std::tan(narrows[j].half_angle);
}

std::vector<std::string> WaveguideSpec::validate() const {
  std::vector<std::string> issues = cross_section.validate();
  for (int j = 0; j < 2; ++j)
    for (auto& s : narrows[j].validate()) issues.push_back("narrow " + std::to_string(j + 1) + ": " + s);
  for (auto& s : solenoid.validate()) issues.push_back(s);
  if (!(epsilon > 0)) issues.push_back("epsilon must be positive");
  if (!issues.empty()) return issues;

  if (!(narrows[0].tip_x < narrows[1].tip_x)) issues.push_back("narrow 1 must lie left of narrow 2");
  if (cone_length(0) + cone_length(1) >= d())
    issues.push_back("cones overlap: d must exceed the sum of the cone lengths");
  for (int j = 0; j < 2; ++j)
    if (epsilon * neck_extent(narrows[j]) >= cone_length(j))
      issues.push_back("narrow " + std::to_string(j + 1) + ": scaled neck does not fit inside its cone");
  if (solenoid.active()) {
    double reach = solenoid.radius + solenoid.gauge_outer;
    double lo = narrows[0].tip_x + epsilon * neck_extent(narrows[0]);
    double hi = narrows[1].tip_x - epsilon * neck_extent(narrows[1]);
    if (solenoid.x0 - reach < lo || solenoid.x0 + reach > hi)
      issues.push_back("gauge cutoff region [x0 - R - outer, x0 + R + outer] must stay clear of both necks");
  }
  return issues;
}

void WaveguideSpec::require_valid() const {
  auto issues = validate();
  if (issues.empty()) return;
  std::ostringstream os;
  for (std::size_t i = 0; i < issues.size(); ++i) os << (i ? "; " : "") << issues[i];
  throw config_error("geometry", os.str());
}

bool point_in_waveguide(const WaveguideSpec& spec, const Point3& p) {
  if (!spec.cross_section.contains(p.y(), p.z())) return false;
  for (const auto& n : spec.narrows) {
    Point3 xi((p.x() - n.tip_x) / spec.epsilon, p.y() / spec.epsilon, p.z() / spec.epsilon);
    if (!n.in_neck(xi)) return false;
  }
  return true;
}

bool point_in_domain(const WaveguideSpec& spec, Domain domain, const Point3& p, double truncation) {
  if (domain == Domain::full) return point_in_waveguide(spec, p);
  if (domain == Domain::neck) return spec.narrows[0].in_neck(p) && p.norm() < truncation;
  if (!spec.cross_section.contains(p.y(), p.z())) return false;
  const double x1 = spec.narrows[0].tip_x, x2 = spec.narrows[1].tip_x;
  for (const auto& n : spec.narrows)
    if (!n.in_cone(Point3(p.x() - n.tip_x, p.y(), p.z()))) return false;
  switch (domain) {
    case Domain::left_channel: return p.x() < x1;
    case Domain::resonator: return p.x() > x1 && p.x() < x2;
    case Domain::right_channel: return p.x() > x2;
    default: return false;
  }
}

// ---------------------------------------------------------------------------

Point3 vector_potential(const SolenoidSpec& sol, const Point3& p) {
  double dx = p.x() - sol.x0, dy = p.y() - sol.y0;
  double r2 = dx * dx + dy * dy;
  if (!sol.active() || r2 == 0.0) return Point3::Zero();
  double f = sol.flux_integral(std::sqrt(r2)) / r2;
  return Point3(-dy * f, dx * f, 0.0);
}

namespace {

double tau(const SolenoidSpec& sol, double s) {
  return smoothstep(s, sol.radius + sol.gauge_inner, sol.radius + sol.gauge_outer);
}

double branch_angle(double dx, double dy) {
  double psi = std::atan2(dy, dx);
  if (psi < -0.5 * std::numbers::pi) psi += 2.0 * std::numbers::pi;
  return psi;
}

}  // namespace

double gauge_function(const SolenoidSpec& sol, const Point3& p) {
  if (!sol.active()) return 0.0;
  double dx = p.x() - sol.x0, dy = p.y() - sol.y0;
  double t = tau(sol, std::abs(dx));
  if (t == 0.0) return 0.0;
  return t * sol.flux_constant() * branch_angle(dx, dy);
}

Point3 gauge_gradient(const SolenoidSpec& sol, const Point3& p) {
  if (!sol.active()) return Point3::Zero();
  double dx = p.x() - sol.x0, dy = p.y() - sol.y0;
  double s = std::abs(dx);
  double t = tau(sol, s);
  if (t == 0.0) return Point3::Zero();
  double c = sol.flux_constant();
  double r2 = dx * dx + dy * dy;
  double dt = smoothstep_d1(s, sol.radius + sol.gauge_inner, sol.radius + sol.gauge_outer) * (dx < 0 ? -1.0 : 1.0);
  return Point3(dt * c * branch_angle(dx, dy) - t * c * dy / r2, t * c * dx / r2, 0.0);
}

Point3 gauge_modified_potential(const SolenoidSpec& sol, const Point3& p) {
  if (!sol.active()) return Point3::Zero();
  double s = std::abs(p.x() - sol.x0);
  if (s >= sol.radius + sol.gauge_outer) return Point3::Zero();
  return vector_potential(sol, p) - gauge_gradient(sol, p);
}

}  // namespace qwg
