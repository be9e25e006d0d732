#include "qwg/dtn.hpp"

#include <cmath>

#include "qwg/error.hpp"
#include "qwg/spectral.hpp"

namespace qwg {

cplx EndClosure::mode_coefficient(const VecC& u, int n) const {
  cplx acc(0.0);
  for (std::size_t a = 0; a < ids.size(); ++a) {
    const auto i = static_cast<Eigen::Index>(a);
    acc += modes(i, n) * u[ids[a]] * (node_gauge.size() ? node_gauge[i] : cplx(1.0));
  }
  return acc;
}

EndClosure dtn_closure(const VoxelGrid& grid, int slice, double outward, double k, int n_evanescent) {
  if (n_evanescent < 0) throw config_error("channel", "number of evanescent modes must be non-negative");
  EndClosure e;
  e.slice = slice;
  e.outward = outward;
  e.h = grid.h;
  e.ids = grid.slice(slice);
  if (e.ids.empty()) throw config_error("channel", "empty end slice");
  e.x = grid.position(static_cast<std::size_t>(e.ids.front())).x();
  const int count = std::min<int>(2 + n_evanescent, static_cast<int>(e.ids.size()) - 1);
  PlanarModes pm = planar_modes(slice_operator(grid, e.ids), count, 1e-11);
  // Phase convention: modes positive on average.
  for (int n = 0; n < count; ++n)
    if (pm.vectors.col(n).sum() < 0) pm.vectors.col(n) *= -1.0;

  const double h = grid.h;
  const double k2 = k * k;
  if (!(k2 > pm.values[0] && k2 < pm.values[1]))
    throw config_error("channel", "outside single-channel window: k^2 = " + std::to_string(k2) + " not in (" +
                                      std::to_string(pm.values[0]) + ", " + std::to_string(pm.values[1]) + ")");
  const int kept = std::min(1 + n_evanescent, count);
  e.modes = pm.vectors.leftCols(kept);
  e.lambda2 = pm.values.head(kept);
  e.zeta.resize(kept);
  for (int n = 0; n < kept; ++n) {
    double c = 1.0 - 0.5 * (k2 - e.lambda2[n]) * h * h;
    if (n == 0) {
      if (!(c > -1.0)) throw config_error("channel", "lattice too coarse for k (above the discrete band)");
      double qh = std::acos(c);
      e.q = qh / h;
      e.velocity = std::sin(qh) / h;
      e.zeta[n] = std::polar(1.0, qh);
    } else {
      e.zeta[n] = c - std::sqrt(c * c - 1.0);
    }
  }
  return e;
}

cplx closure_residual(const EndClosure& end, const VecC& end_values, const VecC& ghost_values, int n) {
  cplx ce(0.0), cg(0.0);
  for (Eigen::Index a = 0; a < end_values.size(); ++a) {
    ce += end.modes(a, n) * end_values[a];
    cg += end.modes(a, n) * ghost_values[a];
  }
  return cg - end.zeta[n] * ce;
}

ClosedSystem close_system(const SpMatC& shifted, const VoxelGrid& grid, std::vector<EndClosure> ends) {
  ClosedSystem sys;
  sys.grid_size = grid.size();
  std::size_t total = grid.size();
  for (const auto& e : ends) {
    sys.offsets.push_back(total);
    total += static_cast<std::size_t>(e.kept());
  }
  std::vector<Eigen::Triplet<cplx>> t;
  t.reserve(static_cast<std::size_t>(shifted.nonZeros()) + 4 * total);
  for (int col = 0; col < shifted.outerSize(); ++col)
    for (SpMatC::InnerIterator it(shifted, col); it; ++it) t.emplace_back(static_cast<int>(it.row()), col, it.value());
  const double ih2 = 1.0 / (grid.h * grid.h);
  for (std::size_t b = 0; b < ends.size(); ++b) {
    const auto& e = ends[b];
    for (int n = 0; n < e.kept(); ++n) {
      int cn = static_cast<int>(sys.offsets[b] + n);
      t.emplace_back(cn, cn, cplx(1.0));
      for (std::size_t a = 0; a < e.ids.size(); ++a) {
        double psi = e.modes(static_cast<Eigen::Index>(a), n);
        if (psi == 0.0) continue;
        const auto i = static_cast<Eigen::Index>(a);
        cplx ghost = e.ghost_gauge.size() ? e.ghost_gauge[i] : cplx(1.0);
        cplx node = e.node_gauge.size() ? e.node_gauge[i] : cplx(1.0);
        t.emplace_back(e.ids[a], cn, -ih2 * e.zeta[n] * psi * ghost);
        t.emplace_back(cn, e.ids[a], -psi * node);
      }
    }
  }
  sys.matrix.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
  sys.matrix.setFromTriplets(t.begin(), t.end());
  sys.matrix.makeCompressed();
  sys.ends = std::move(ends);
  return sys;
}

VecC incident_rhs(const ClosedSystem& sys, std::size_t end, double x_ref) {
  const auto& e = sys.ends.at(end);
  VecC rhs = VecC::Zero(sys.matrix.rows());
  const double ih2 = 1.0 / (e.h * e.h);
  cplx inc_at_end = std::polar(1.0, -e.outward * e.q * (e.x - x_ref));
  cplx jump = inc_at_end * (1.0 / e.zeta[0] - e.zeta[0]);
  for (std::size_t a = 0; a < e.ids.size(); ++a) {
    const auto i = static_cast<Eigen::Index>(a);
    cplx ghost = e.ghost_gauge.size() ? e.ghost_gauge[i] : cplx(1.0);
    rhs[e.ids[a]] += ih2 * jump * e.modes(i, 0) * ghost;
  }
  return rhs;
}

}  // namespace qwg
