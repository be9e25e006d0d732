#pragma once

// Shift-invert Lanczos with full reorthogonalization for Hermitian operators.
// The caller supplies x -> (A - sigma)^{-1} x and x -> A x; the eigenvalues of
// A nearest sigma come out first.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "qwg/error.hpp"

namespace qwg {

struct LanczosOptions {
  int nev = 1;
  int max_basis = 160;
  /// Relative residual |A x - lambda x| / max(1, |lambda|).
  double tol = 1e-9;
  int check_every = 8;
  unsigned seed = 20240917u;
};

template <class Scalar>
struct EigenPairs {
  Eigen::VectorXd values;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> vectors;  // unit Euclidean norm
  Eigen::VectorXd residuals;
};

template <class Scalar, class Apply, class Solve>
EigenPairs<Scalar> shift_invert_lanczos(const Apply& apply, const Solve& solve, Eigen::Index n, double sigma,
                                        const LanczosOptions& opt) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const int mmax = static_cast<int>(std::min<Eigen::Index>(opt.max_basis, n));
  if (opt.nev < 1 || opt.nev > mmax) throw numerical_error("lanczos", "requested more eigenpairs than the basis allows");

  Mat Q(n, mmax);
  std::vector<double> alpha, beta;
  std::mt19937 rng(opt.seed);
  std::normal_distribution<double> nd;
  Vec q(n);
  for (Eigen::Index i = 0; i < n; ++i) q[i] = Scalar(nd(rng));
  q.normalize();

  EigenPairs<Scalar> out;
  for (int m = 0; m < mmax; ++m) {
    Q.col(m) = q;
    Vec w = solve(q);
    double a = std::real(q.dot(w));
    alpha.push_back(a);
    // Two passes of classical Gram-Schmidt against the whole basis.
    for (int pass = 0; pass < 2; ++pass) w -= Q.leftCols(m + 1) * (Q.leftCols(m + 1).adjoint() * w);
    double b = w.norm();

    bool last = (m + 1 == mmax) || b < 1e-14;
    if (m + 1 >= opt.nev && ((m + 1) % opt.check_every == 0 || last)) {
      int k = m + 1;
      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k, k);
      for (int i = 0; i < k; ++i) {
        T(i, i) = alpha[i];
        if (i + 1 < k) T(i, i + 1) = T(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
      std::vector<int> order(k);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(),
                [&](int x, int y) { return std::abs(es.eigenvalues()[x]) > std::abs(es.eigenvalues()[y]); });
      out.values.resize(opt.nev);
      out.vectors.resize(n, opt.nev);
      out.residuals.resize(opt.nev);
      bool ok = true;
      for (int e = 0; e < opt.nev; ++e) {
        double theta = es.eigenvalues()[order[e]];
        double lam = sigma + 1.0 / theta;
        Vec x = Q.leftCols(k) * es.eigenvectors().col(order[e]).template cast<Scalar>();
        x.normalize();
        double res = (apply(x) - Scalar(lam) * x).norm() / std::max(1.0, std::abs(lam));
        out.values[e] = lam;
        out.vectors.col(e) = x;
        out.residuals[e] = res;
        if (!(res < opt.tol)) ok = false;
      }
      if (ok) {
        std::vector<int> idx(opt.nev);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](int x, int y) { return out.values[x] < out.values[y]; });
        EigenPairs<Scalar> sorted;
        sorted.values.resize(opt.nev);
        sorted.vectors.resize(n, opt.nev);
        sorted.residuals.resize(opt.nev);
        for (int e = 0; e < opt.nev; ++e) {
          sorted.values[e] = out.values[idx[e]];
          sorted.vectors.col(e) = out.vectors.col(idx[e]);
          sorted.residuals[e] = out.residuals[idx[e]];
        }
        return sorted;
      }
    }
    if (last) break;
    beta.push_back(b);
    q = w / b;
  }
  throw numerical_error("lanczos", "no convergence: worst residual " +
                                       std::to_string(out.residuals.size() ? out.residuals.maxCoeff() : NAN) +
                                       " after " + std::to_string(alpha.size()) + " steps");
}

}  // namespace qwg
