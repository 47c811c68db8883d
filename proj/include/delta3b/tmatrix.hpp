#pragma once

// Two-body machinery on the momentum grid: the Lippmann-Schwinger kernel
//   t(k,k') = vhat(eps(k-k'))/sqrt(2pi)
//           - 1/sqrt(2pi) \int dq vhat(eps(k-q)) (q^2/(2m) + lambda)^-1 t(q,k')
// solved by Nystrom collocation (one LU, many right-hand sides), its
// zero-range limit tau(lambda), the bound-state pole locator, and the
// weighted-difference diagnostic used by the scaling tests.

#include <cmath>
#include <utility>
#include <vector>

#include "delta3b/grid.hpp"
#include "delta3b/potential.hpp"

namespace delta3b {

// zero-range limit of the t-matrix kernel:
//   tau(lambda) = (1/2pi) alpha / (1 + alpha sqrt(m/(2 lambda)))
inline double tau(double lambda, double alpha, double m_gamma) {
  if (!(lambda > 0.0)) throw InvalidInput("tau: lambda must be > 0");
  double den = 1.0 + alpha * std::sqrt(m_gamma / (2.0 * lambda));
  if (std::abs(den) < 1e-12)
    throw NearSingularError("tau: lambda at the two-body pole", lambda);
  return alpha / (2.0 * kPi * den);
}

// pole of tau for attractive coupling: lambda = m alpha^2 / 2
inline double tau_pole_lambda(double alpha, double m_gamma) {
  if (!(alpha < 0.0)) throw InvalidInput("tau_pole_lambda: needs alpha < 0");
  return m_gamma * alpha * alpha / 2.0;
}

struct TMatrixKernel {
  double lambda = 0.0;
  double eps = 0.0;
  GridPtr grid;
  MatrixXd values;  // t(k_i, k_j) on the grid nodes

  double sup_abs() const { return values.cwiseAbs().maxCoeff(); }
};

// Nystrom solver for one (potential, eps, lambda, pair mass). Keeps the LU
// factorization so the kernel can be evaluated at off-grid argument pairs,
// which the three-body coupling terms need.
class TwoBodySolver {
 public:
  TwoBodySolver(const Potential& pot, double eps, double lambda, GridPtr grid,
                double m_gamma)
      : pot_(pot), eps_(eps), lambda_(lambda), grid_(std::move(grid)),
        m_gamma_(m_gamma) {
    if (!(lambda > 0.0)) throw InvalidInput("TwoBodySolver: lambda must be > 0");
    const int n = grid_->size();
    const auto& q = grid_->nodes();
    resw_.resize(n);
    for (int i = 0; i < n; ++i)
      resw_[i] = grid_->weight(i) / (q[i] * q[i] / (2.0 * m_gamma_) + lambda_);
    born_.resize(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        born_(i, j) = pot_.fourier(eps_ * (q[i] - q[j])) / kSqrt2Pi;
    MatrixXd sys = born_ * resw_.asDiagonal();
    sys += MatrixXd::Identity(n, n);
    lu_.compute(sys);
    if (lu_.rcond() < 1e-13)
      throw NearSingularError(
          "TwoBodySolver: discretized system is singular (two-body bound "
          "state at this energy)",
          lambda_);
  }

  double lambda() const { return lambda_; }
  const MomentumGrid& grid() const { return *grid_; }

  TMatrixKernel kernel() const {
    return {lambda_, eps_, grid_, lu_.solve(born_)};
  }

  // t(q_i, k') for all grid rows at one off-grid column
  VectorXd half_off_shell(double kprime) const {
    const int n = grid_->size();
    VectorXd b(n);
    for (int i = 0; i < n; ++i)
      b[i] = pot_.fourier(eps_ * (grid_->node(i) - kprime)) / kSqrt2Pi;
    return lu_.solve(b);
  }

  // t(kout_i, kin_j) for arbitrary argument vectors: solve the half-off-shell
  // columns, then extend off the grid with the equation itself.
  MatrixXd eval_block(const VectorXd& kout, const VectorXd& kin) const {
    const int n = grid_->size();
    const auto& q = grid_->nodes();
    MatrixXd rhs(n, kin.size());
    for (int j = 0; j < kin.size(); ++j)
      for (int i = 0; i < n; ++i)
        rhs(i, j) = pot_.fourier(eps_ * (q[i] - kin[j])) / kSqrt2Pi;
    MatrixXd hos = lu_.solve(rhs);
    MatrixXd vout(kout.size(), n);
    for (int m = 0; m < n; ++m)
      for (int i = 0; i < kout.size(); ++i)
        vout(i, m) =
            pot_.fourier(eps_ * (kout[i] - q[m])) / kSqrt2Pi * resw_[m];
    MatrixXd cross(kout.size(), kin.size());
    for (int j = 0; j < kin.size(); ++j)
      for (int i = 0; i < kout.size(); ++i)
        cross(i, j) = pot_.fourier(eps_ * (kout[i] - kin[j])) / kSqrt2Pi;
    cross.noalias() -= vout * hos;
    return cross;
  }

  double eval(double k, double kprime) const {
    VectorXd a(1), b(1);
    a[0] = k;
    b[0] = kprime;
    return eval_block(a, b)(0, 0);
  }

  // spectral radius estimate of the discretized Neumann operator, by power
  // iteration; < 1 marks the a-priori contraction regime
  double neumann_spectral_radius(int iters = 60) const {
    const int n = grid_->size();
    MatrixXd op = born_ * resw_.asDiagonal();
    VectorXd v = VectorXd::Ones(n).normalized();
    double r = 0.0;
    for (int it = 0; it < iters; ++it) {
      VectorXd u = op * v;
      r = u.norm();
      if (r == 0.0) return 0.0;
      v = u / r;
    }
    return r;
  }

 private:
  Potential pot_;
  double eps_, lambda_;
  GridPtr grid_;
  double m_gamma_;
  VectorXd resw_;  // w_i / (q_i^2/(2m) + lambda)
  MatrixXd born_;
  Eigen::PartialPivLU<MatrixXd> lu_;
};

inline TMatrixKernel solve_tmatrix(const Potential& pot, double eps,
                                   double lambda, GridPtr grid,
                                   double m_gamma) {
  return TwoBodySolver(pot, eps, lambda, std::move(grid), m_gamma).kernel();
}

// max over grid pairs of |t(k,k') - tau(lambda)| / (|k|^b + |k'|^b + 1)
inline double weighted_sup_diff(const TMatrixKernel& t, double tau_value,
                                double b) {
  const auto& q = t.grid->nodes();
  const int n = t.grid->size();
  double sup = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      double w = std::pow(std::abs(q[i]), b) + std::pow(std::abs(q[j]), b) + 1.0;
      sup = std::max(sup, std::abs(t.values(i, j) - tau_value) / w);
    }
  return sup;
}

namespace detail {

// sign and log-magnitude of det(I + C(lambda)) for the pole search
inline std::pair<double, double> logdet_system(const Potential& pot, double eps,
                                               double lambda,
                                               const MomentumGrid& g,
                                               double m_gamma) {
  const int n = g.size();
  const auto& q = g.nodes();
  MatrixXd sys(n, n);
  for (int j = 0; j < n; ++j) {
    double rw = g.weight(j) / (q[j] * q[j] / (2.0 * m_gamma) + lambda);
    for (int i = 0; i < n; ++i)
      sys(i, j) = pot.fourier(eps * (q[i] - q[j])) / kSqrt2Pi * rw;
  }
  sys += MatrixXd::Identity(n, n);
  Eigen::PartialPivLU<MatrixXd> lu(sys);
  double sign = lu.permutationP().determinant();
  double logabs = 0.0;
  for (int i = 0; i < n; ++i) {
    double d = lu.matrixLU()(i, i);
    if (d < 0.0) sign = -sign;
    logabs += std::log(std::abs(d));
  }
  return {sign, logabs};
}

}  // namespace detail

// Locates the energy where the discretized two-body system is singular, i.e.
// the bound state of the rescaled potential; converges to tau's pole
// m alpha^2/2 as eps -> 0.
inline double tmatrix_pole(const Potential& pot, double eps, GridPtr grid,
                           double m_gamma, double lambda_lo, double lambda_hi,
                           double tol = 1e-10) {
  auto sgn = [&](double lam) {
    return detail::logdet_system(pot, eps, lam, *grid, m_gamma).first;
  };
  double slo = sgn(lambda_lo), shi = sgn(lambda_hi);
  if (slo == shi)
    throw SolverError("tmatrix_pole: no sign change in the search bracket");
  while (lambda_hi - lambda_lo > tol) {
    double mid = 0.5 * (lambda_lo + lambda_hi);
    if (sgn(mid) == slo)
      lambda_lo = mid;
    else
      lambda_hi = mid;
  }
  return 0.5 * (lambda_lo + lambda_hi);
}

}  // namespace delta3b
