#include "qwg/channel.hpp"

#include <cmath>

#include <Eigen/UmfPackSupport>

#include "qwg/error.hpp"
#include "qwg/special.hpp"
#include "qwg/tip_fit.hpp"

namespace qwg {

double conical_radius(const WaveguideSpec& spec, int tip) {
  return spec.cross_section.min_axis_distance() / std::sin(spec.narrows[tip].half_angle);
}

ChannelConstants channel_constants(const WaveguideSpec& spec, const CapSpectrum& cap, double k, int tip,
                                   const ChannelOptions& opt) {
  if (tip != 0 && tip != 1) throw config_error("channel", "tip index must be 0 or 1");
  const auto& narrow = spec.narrows[tip];
  if (std::abs(cap.theta - narrow.half_angle) > 1e-12) throw config_error("channel", "cap angle differs from cone angle");
  const double xt = narrow.tip_x;
  // Direction pointing from the tip into the channel.
  const double dir = tip == 0 ? -1.0 : 1.0;
  const double delta = opt.cutoff > 0 ? opt.cutoff : 0.8 * conical_radius(spec, tip);
  if (delta > conical_radius(spec, tip)) throw config_error("channel", "cutoff radius leaves the conical region");

  const double x_end = xt + dir * (spec.cone_length(tip) + opt.length);
  Domain dom = tip == 0 ? Domain::left_channel : Domain::right_channel;
  std::array<double, 2> range = tip == 0 ? std::array<double, 2>{x_end, xt} : std::array<double, 2>{xt, x_end};
  VoxelGrid g = voxelize_domain(spec, dom, opt.h, range, {tip == 0, tip == 1});
  const int end_slice = tip == 0 ? 0 : g.dims[0] - 1;
  EndClosure end = dtn_closure(g, end_slice, dir, k, opt.n_evanescent);

  SpMatC op = laplacian(g).cast<cplx>();
  for (Eigen::Index i = 0; i < op.rows(); ++i) op.coeffRef(i, i) -= k * k;
  ClosedSystem sys = close_system(op, g, {end});

  TipFrame frame{Point3(xt, 0.0, 0.0), dir};
  VecC rhs = VecC::Zero(sys.matrix.rows());
  rhs.head(static_cast<Eigen::Index>(g.size())) = commutator_source(g, frame, cap, k, delta);

  Eigen::UmfPackLU<SpMatC> lu(sys.matrix);
  if (lu.info() != Eigen::Success) throw numerical_error("channel", "sparse LU failed");
  VecC sol = lu.solve(rhs);
  // ||A|| ||x|| / ||b|| bounds the condition number from below.
  double amp = sys.matrix.cwiseAbs().sum() / static_cast<double>(sys.matrix.rows()) * sol.norm() / rhs.norm();
  if (!std::isfinite(amp) || amp > opt.amplification_ceiling)
    throw numerical_error("channel", "near-trapped mode of the truncated channel at k = " + std::to_string(k) +
                                         " (amplification " + std::to_string(amp) + ")");
  VecC vt = sol.head(static_cast<Eigen::Index>(g.size()));

  ChannelConstants out;
  out.k = k;
  out.tip = tip;
  out.cutoff = delta;
  out.length = opt.length;
  out.h = opt.h;
  out.unknowns = g.size();

  SingularRadialPair pair(cap.mu1, k);
  auto radii = probe_radii(std::max(opt.probe_min_h * opt.h, 0.05 * delta), 0.45 * delta, opt.probes);
  std::vector<cplx> proj;
  for (double r : radii) proj.push_back(cap_projection(g, vt, frame, cap, r));
  auto fit = fit_radial(radii, proj,
                        {[&](double r) { return pair.regular(r).value; }, [&](double r) { return pair.singular(r).value; }});
  out.a = fit.coefficients[0];
  out.singular_leak = fit.coefficients[1];
  out.fit_residual = fit.residual;

  const auto& e = sys.ends[0];
  cplx c1 = sol[static_cast<Eigen::Index>(sys.offsets[0])];
  out.A = c1 * e.h * std::sqrt(e.velocity) * std::polar(1.0, -dir * e.q * (e.x - xt));
  out.lemma_residual = std::abs(std::norm(out.A) - out.a.imag());
  return out;
}

}  // namespace qwg
