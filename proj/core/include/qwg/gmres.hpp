#pragma once

// Restarted GMRES with right preconditioning (Givens-rotation least squares).

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace qwg {

struct GmresResult {
  int iterations = 0;
  double residual = 0.0;  // ||b - A x|| / ||b||
  bool converged = false;
};

/// Solves A x = b; x holds the initial guess on entry.
inline GmresResult gmres(const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& apply,
                         const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& precondition,
                         const Eigen::VectorXcd& b, Eigen::VectorXcd& x, int restart, int max_iterations, double tol) {
  using C = std::complex<double>;
  GmresResult out;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero();
    out.converged = true;
    return out;
  }
  if (x.size() != b.size()) x = Eigen::VectorXcd::Zero(b.size());
  double previous = INFINITY;
  while (out.iterations < max_iterations) {
    Eigen::VectorXcd r = b - apply(x);
    double beta = r.norm();
    out.residual = beta / bnorm;
    if (out.residual <= tol) {
      out.converged = true;
      return out;
    }
    // A restart cycle that did not halve the true residual: the attainable
    // accuracy is below tol (ill-conditioned preconditioner), stop here.
    if (!(out.residual <= 0.5 * previous)) return out;
    previous = out.residual;
    const int m = restart;
    std::vector<Eigen::VectorXcd> V{r / beta};
    std::vector<Eigen::VectorXcd> Z;
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(m + 1, m);
    std::vector<C> cs(m), sn(m);
    Eigen::VectorXcd g = Eigen::VectorXcd::Zero(m + 1);
    g[0] = beta;
    int j = 0;
    for (; j < m && out.iterations < max_iterations; ++j) {
      ++out.iterations;
      Z.push_back(precondition(V[j]));
      Eigen::VectorXcd w = apply(Z[j]);
      for (int i = 0; i <= j; ++i) {
        H(i, j) = V[i].dot(w);
        w -= H(i, j) * V[i];
      }
      // One reorthogonalization pass.
      for (int i = 0; i <= j; ++i) {
        C c = V[i].dot(w);
        H(i, j) += c;
        w -= c * V[i];
      }
      H(j + 1, j) = w.norm();
      if (std::abs(H(j + 1, j)) > 0.0) V.push_back(w / H(j + 1, j));
      for (int i = 0; i < j; ++i) {
        C t = std::conj(cs[i]) * H(i, j) + std::conj(sn[i]) * H(i + 1, j);
        H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
        H(i, j) = t;
      }
      double den = std::hypot(std::abs(H(j, j)), std::abs(H(j + 1, j)));
      cs[j] = den > 0 ? H(j, j) / den : C(1.0);
      sn[j] = den > 0 ? H(j + 1, j) / den : C(0.0);
      H(j, j) = den;
      H(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = std::conj(cs[j]) * g[j];
      out.residual = std::abs(g[j + 1]) / bnorm;
      if (out.residual <= tol || static_cast<int>(V.size()) == j + 1) {
        ++j;
        break;
      }
    }
    Eigen::VectorXcd y = H.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
    for (int i = 0; i < j; ++i) x += y[i] * Z[i];
    if (out.residual <= tol) {
      // Confirm with the true residual.
      out.residual = (b - apply(x)).norm() / bnorm;
      if (out.residual <= 10.0 * tol) {
        out.converged = true;
        return out;
      }
    }
  }
  return out;
}

}  // namespace qwg
