#pragma once

// Restarted GMRES on complex vectors with a caller-supplied operator.
// Kept in-house so the solvers can record residual histories and work in the
// quadrature-weighted inner product via a plain change of variable.

#include <functional>
#include <vector>

#include "delta3b/common.hpp"

namespace delta3b {

struct GmresOptions {
  int restart = 60;
  int max_iterations = 600;
  double tolerance = 1e-8;  // relative residual
};

struct GmresReport {
  bool converged = false;
  int iterations = 0;
  std::vector<double> residuals;  // relative residual after each iteration
};

inline GmresReport gmres(const std::function<VectorXcd(const VectorXcd&)>& op,
                         const VectorXcd& b, VectorXcd& x,
                         const GmresOptions& opts = {}) {
  GmresReport report;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero(b.size());
    report.converged = true;
    return report;
  }
  if (x.size() != b.size()) x = VectorXcd::Zero(b.size());

  const int m = opts.restart;
  while (report.iterations < opts.max_iterations) {
    VectorXcd r = b - op(x);
    double beta = r.norm();
    if (beta / bnorm < opts.tolerance) {
      report.converged = true;
      return report;
    }
    std::vector<VectorXcd> basis;
    basis.reserve(m + 1);
    basis.push_back(r / beta);
    MatrixXcd hess = MatrixXcd::Zero(m + 1, m);
    VectorXcd g = VectorXcd::Zero(m + 1);
    g[0] = beta;
    std::vector<Complex> cs(m), sn(m);
    int k = 0;
    for (; k < m && report.iterations < opts.max_iterations; ++k) {
      ++report.iterations;
      VectorXcd w = op(basis[k]);
      for (int i = 0; i <= k; ++i) {
        hess(i, k) = basis[i].dot(w);
        w -= hess(i, k) * basis[i];
      }
      double wn = w.norm();
      hess(k + 1, k) = wn;
      // apply the accumulated Givens rotations, then a new one
      for (int i = 0; i < k; ++i) {
        Complex t = std::conj(cs[i]) * hess(i, k) + std::conj(sn[i]) * hess(i + 1, k);
        hess(i + 1, k) = -sn[i] * hess(i, k) + cs[i] * hess(i + 1, k);
        hess(i, k) = t;
      }
      double denom = std::sqrt(std::norm(hess(k, k)) + std::norm(hess(k + 1, k)));
      if (denom == 0.0) {
        cs[k] = 1.0;
        sn[k] = 0.0;
      } else {
        cs[k] = hess(k, k) / denom;
        sn[k] = hess(k + 1, k) / denom;
      }
      hess(k, k) = std::conj(cs[k]) * hess(k, k) + std::conj(sn[k]) * hess(k + 1, k);
      hess(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = std::conj(cs[k]) * g[k];
      double rel = std::abs(g[k + 1]) / bnorm;
      report.residuals.push_back(rel);
      if (rel < opts.tolerance || wn == 0.0) {
        ++k;
        break;
      }
      basis.push_back(w / wn);
    }
    // back-substitution for the minimizer in the k-dim space
    VectorXcd y = VectorXcd::Zero(k);
    for (int i = k - 1; i >= 0; --i) {
      Complex s = g[i];
      for (int jj = i + 1; jj < k; ++jj) s -= hess(i, jj) * y[jj];
      y[i] = s / hess(i, i);
    }
    for (int i = 0; i < k; ++i) x += y[i] * basis[i];
    if (!report.residuals.empty() &&
        report.residuals.back() < opts.tolerance) {
      report.converged = true;
      return report;
    }
  }
  return report;
}

}  // namespace delta3b
