#pragma once

// Declarative description of the waveguide G(eps) = G ∩ Ω1(eps) ∩ Ω2(eps),
// its eps-independent limit domains and the solenoid that sources the field.
//
// Units: hbar^2/2m = 1 so that energy = k^2; lengths are measured in units of
// the cross-section's characteristic radius. The waveguide axis is x.

#include <array>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace qwg {

using Point3 = Eigen::Vector3d;
using Point2 = Eigen::Vector2d;

// ---------------------------------------------------------------------------
// Cross-section D (in the (y, z) plane, containing the axis y = z = 0).

struct Disk {
  double radius = 1.0;
};

/// Axis-centred rectangle [-a/2, a/2] x [-b/2, b/2].
struct Rectangle {
  double a = 2.0;
  double b = 2.0;
};

/// Simple closed polygon (first vertex is not repeated).
struct Polygon {
  std::vector<Point2> vertices;
};

struct CrossSectionSpec {
  std::variant<Disk, Rectangle, Polygon> shape = Disk{};

  bool contains(double y, double z) const;
  /// Largest distance from the axis to a point of D.
  double max_axis_distance() const;
  /// Radius of the largest axis-centred disk inside D.
  double min_axis_distance() const;
  /// Bounding box {ymin, zmin}, {ymax, zmax}.
  std::array<Point2, 2> bounds() const;
  /// Human-readable problems; empty when valid.
  std::vector<std::string> validate() const;
};

// ---------------------------------------------------------------------------
// Narrows: a circular double cone K of half-angle theta around the x-axis,
// smoothed near the vertex into the neck domain Ω (unit scale).

/// One-sheet hyperboloid rho = tan(theta) sqrt(t^2 + w^2), w chosen so the
/// waist diameter equals `waist`, blended into the cone on [blend_start, blend_end].
struct HyperboloidNeck {
  double waist = 1.0;
  double blend_start = 0.5;
  double blend_end = 1.0;
};

/// Wall radius samples (t_i, r_i) over the axial distance t = |xi| from the
/// vertex; linear in between, conical beyond the last sample.
struct CustomNeck {
  std::vector<double> t;
  std::vector<double> radius;
};

struct NarrowSpec {
  double tip_x = 0.0;
  double half_angle = 1.0471975511965976;  // pi/3
  std::variant<HyperboloidNeck, CustomNeck> neck = HyperboloidNeck{};

  /// Unit-scale wall radius of Ω at axial distance t >= 0 from the vertex.
  double wall_radius(double t) const;
  /// Membership of the unit-scale point xi (relative to the vertex) in Ω.
  bool in_neck(const Point3& xi) const;
  /// Membership of p (relative to the vertex) in the double cone K.
  bool in_cone(const Point3& rel) const;
  /// Radius beyond which Ω coincides with K.
  double match_radius() const;
  /// Unit-scale neck diameter at the vertex plane.
  double waist_diameter() const;
  std::vector<std::string> validate() const;
};

// ---------------------------------------------------------------------------
// Solenoid along z through (x0, y0) with field profile H(rho), rho < radius.

enum class Spin { plus, minus };

inline int spin_sign(Spin s) { return s == Spin::plus ? 1 : -1; }
inline Spin flipped(Spin s) { return s == Spin::plus ? Spin::minus : Spin::plus; }

struct SolenoidSpec {
  double x0 = 0.0;
  double y0 = 0.0;
  double radius = 0.0;
  /// H samples on a uniform grid over [0, radius]; one sample means uniform.
  /// Units 1/length^2 with the charge factor absorbed.
  std::vector<double> profile;
  /// The gauge cutoff tau rises from 0 to 1 on |x - x0| in [radius + gauge_inner, radius + gauge_outer].
  double gauge_inner = 1.0;
  double gauge_outer = 2.0;

  bool active() const;
  /// H(rho); zero outside the solenoid.
  double field(double rho) const;
  /// int_0^min(rho, R) t H(t) dt.
  double flux_integral(double rho) const;
  /// c = int_0^R t H(t) dt (total flux / 2 pi).
  double flux_constant() const { return flux_integral(radius); }
  /// Copy with H -> s H (s = -1 reverses the current).
  SolenoidSpec scaled(double s) const;
  std::vector<std::string> validate() const;
};

// ---------------------------------------------------------------------------

struct WaveguideSpec {
  CrossSectionSpec cross_section;
  std::array<NarrowSpec, 2> narrows;
  double epsilon = 0.3;
  SolenoidSpec solenoid;

  /// Tip separation |x1 - x2|.
  double d() const;
  /// Axial distance from a tip to the plane where its cone reaches the wall.
  double cone_length(int j) const;
  std::vector<std::string> validate() const;
  /// Throws a config error listing every problem.
  void require_valid() const;
};

/// Limit-domain selector. `full` is G(eps); `left_channel`, `resonator`,
/// `right_channel` are G1, G2, G3 of G(0) = G ∩ K1 ∩ K2; `neck` is the
/// unit-scale Ω of narrow 0 truncated at a radius.
enum class Domain { full, left_channel, resonator, right_channel, neck };

/// p ∈ G(eps): inside the cylinder and (p - r_j)/eps ∈ Ω for both narrows.
bool point_in_waveguide(const WaveguideSpec& spec, const Point3& p);
bool point_in_domain(const WaveguideSpec& spec, Domain domain, const Point3& p,
                     double truncation = 0.0);

/// A(rho) e_psi of the solenoid.
Point3 vector_potential(const SolenoidSpec& sol, const Point3& p);
/// tau(|x - x0|) f with f = c psi, psi in (-pi/2, 3pi/2).
double gauge_function(const SolenoidSpec& sol, const Point3& p);
/// grad(tau f).
Point3 gauge_gradient(const SolenoidSpec& sol, const Point3& p);
/// A' = A - grad(tau f); exactly zero for |x - x0| >= R + gauge_outer.
Point3 gauge_modified_potential(const SolenoidSpec& sol, const Point3& p);

}  // namespace qwg
