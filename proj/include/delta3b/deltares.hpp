#pragma once

// The zero-range (delta interaction) three-body resolvent.
//
// The singular part of (H + lambda)^-1 is generated by three charge
// functions xi^(l) on the coincidence lines, solving the coupled system
//
//   xi^(l)(p) = -tau_g(lambda + p^2/(2 mu_l)) [ \int dq' f^(l)(q',p)/D_A
//             + \int dq' xi^(next l)(q')/D_A + \int dq' xi^(prev l)(q')/D_B ],
//
// with D_A/D_B the free energy denominators in the natural coordinates.
// The full resolvent at a physical point P is then
//   psi(P) = [ f(P) + xi^(1)(p_1) + xi^(2)(p_2) + xi^(3)(p_3) ] / (E(P)+lambda).
//
// A second, algebraically independent assembly goes through the trace
// operator breve_G, the charge-to-potential operator G and the 3x3 block
// operator M (diagonal blocks are multiplication symbols, off-diagonal
// blocks dense kernels); bound states are the energies where 1 + A M(lambda)
// becomes singular.

#include <array>
#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "delta3b/field.hpp"
#include "delta3b/grid.hpp"
#include "delta3b/tmatrix.hpp"

namespace delta3b {

struct CouplingMatrix {
  std::array<double, 3> alpha{0.0, 0.0, 0.0};  // indexed by spectator

  static CouplingMatrix uniform(double a) { return {{a, a, a}}; }
  bool is_zero() const {
    return alpha[0] == 0.0 && alpha[1] == 0.0 && alpha[2] == 0.0;
  }
};

struct ChargeVector {
  double lambda = 0.0;
  std::array<GridFunction1D, 3> xi;

  double norm_sum() const {
    return xi[0].norm_l2() + xi[1].norm_l2() + xi[2].norm_l2();
  }
};

// division by (kinetic + lambda) in the function's own coordinate system
inline GridFunction2D apply_free_resolvent(const GridFunction2D& f,
                                           double lambda,
                                           const MassConfig& mc) {
  GridFunction2D out = f;
  const int n = f.grid->size();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      out.values(i, j) /=
          kinetic_spectator(f.spectator, f.grid->node(i), f.grid->node(j), mc) +
          lambda;
  return out;
}

// trace of the free resolvent on the coincidence line of pair g:
//   (1/sqrt(2pi)) \int dq' f^(l)(q', p) / (E(q',p) + lambda)
inline GridFunction1D breve_g(const PhysicalField& f, double lambda,
                              PairIndex g, const GridPtr& grid,
                              const MassConfig& mc) {
  const int ell = g.spectator, n = grid->size();
  GridFunction1D out = GridFunction1D::zero(grid);
  for (int j = 0; j < n; ++j) {
    double p = grid->node(j);
    Complex s = 0.0;
    for (int i = 0; i < n; ++i) {
      double q = grid->node(i);
      s += grid->weight(i) * f.at_spectator(ell, q, p) /
           (kinetic_spectator(ell, q, p, mc) + lambda);
    }
    out.values[j] = s / kSqrt2Pi;
  }
  return out;
}

// potential generated by a charge on the line of pair g, sampled in the
// natural coordinates of its spectator:
//   (1/sqrt(2pi)) qhat(p) / (E(q,p) + lambda)
inline GridFunction2D g_potential(const GridFunction1D& q, double lambda,
                                  PairIndex g, const MassConfig& mc) {
  const int ell = g.spectator, n = q.grid->size();
  GridFunction2D out = GridFunction2D::zero(q.grid, ell);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      out.values(i, j) =
          q.values[j] / kSqrt2Pi /
          (kinetic_spectator(ell, q.grid->node(i), q.grid->node(j), mc) +
           lambda);
  return out;
}

// diagonal block of M: multiplication by (1/2) sqrt(2 m_g / (p^2/(2 mu_l) + lambda))
inline double m_diag_symbol(double p, double lambda, PairIndex g,
                            const MassConfig& mc) {
  int ell = g.spectator;
  return 0.5 * std::sqrt(2.0 * mc.pair_mass(g) /
                         (p * p / (2.0 * mc.mu_of(ell)) + lambda));
}

inline GridFunction1D m_diag(const GridFunction1D& q, double lambda,
                             PairIndex g, const MassConfig& mc) {
  GridFunction1D out = q;
  for (int j = 0; j < q.grid->size(); ++j)
    out.values[j] *= m_diag_symbol(q.grid->node(j), lambda, g, mc);
  return out;
}

// off-diagonal block of M, mapping a charge on the line of `from` to the
// line of `to`:  (1/2pi) \int dq' qhat(q') / (E(q' as from, p as to) + lambda)
inline GridFunction1D m_offdiag(const GridFunction1D& q, double lambda,
                                PairIndex from, PairIndex to,
                                const MassConfig& mc) {
  if (from == to) throw InvalidInput("m_offdiag: needs from != to");
  const int lf = from.spectator, lt = to.spectator, n = q.grid->size();
  GridFunction1D out = GridFunction1D::zero(q.grid);
  for (int j = 0; j < n; ++j) {
    double p = q.grid->node(j);
    Complex s = 0.0;
    for (int i = 0; i < n; ++i)
      s += q.grid->weight(i) * q.values[i] /
           (kinetic_pair_form(lf, lt, q.grid->node(i), p, mc) + lambda);
    out.values[j] = s / (2.0 * kPi);
  }
  return out;
}

// dense node-space matrix of one off-diagonal M block (columns carry the
// quadrature weights)
inline MatrixXd m_offdiag_matrix(double lambda, PairIndex from, PairIndex to,
                                 const MomentumGrid& g, const MassConfig& mc) {
  const int n = g.size();
  MatrixXd out(n, n);
  for (int i = 0; i < n; ++i) {
    double qi = g.node(i);
    for (int j = 0; j < n; ++j)
      out(j, i) = g.weight(i) /
                  (kinetic_pair_form(from.spectator, to.spectator, qi,
                                     g.node(j), mc) +
                   lambda) /
                  (2.0 * kPi);
  }
  return out;
}

// L2 operator norm of a node-space kernel matrix: similarity-transform by
// sqrt of the quadrature weights, then the spectral norm
inline double l2_operator_norm(const MatrixXd& kernel_with_weights,
                               const MomentumGrid& g) {
  VectorXd sw = g.weights().cwiseSqrt();
  MatrixXd sym = sw.asDiagonal() * kernel_with_weights *
                 sw.cwiseInverse().asDiagonal();
  return sym.jacobiSvd().singularValues()[0];
}

struct LimitSolution {
  GridFunction2D psi;  // in the natural coordinates of spectator 1, (p2, p1)
  ChargeVector charges;
  PhysicalField source;  // the f that produced this solve
  double condition = 0.0;
  std::shared_ptr<ClampStats> clamps;
};

// Assembled zero-range solver at fixed (lambda, couplings, masses, grid).
class LimitResolvent {
 public:
  LimitResolvent(double lambda, const CouplingMatrix& a, const MassConfig& mc,
                 GridPtr grid)
      : lambda_(lambda), a_(a), mc_(mc), grid_(std::move(grid)),
        clamps_(std::make_shared<ClampStats>()) {
    if (!(lambda > 0.0)) throw InvalidInput("LimitResolvent: lambda must be > 0");
    const int n = grid_->size();
    tau_.resize(3);
    for (int ell = 0; ell < 3; ++ell) {
      tau_[ell].resize(n);
      for (int j = 0; j < n; ++j) {
        double lam_p = lambda_ + grid_->node(j) * grid_->node(j) /
                                     (2.0 * mc_.mu_of(ell));
        tau_[ell][j] = tau(lam_p, a_.alpha[ell], mc_.pair[ell]);
      }
    }
    MatrixXd sys = MatrixXd::Identity(3 * n, 3 * n);
    for (int ell = 0; ell < 3; ++ell) {
      sys.block(ell * n, next_of(ell) * n, n, n) = coupling_block(ell, next_of(ell));
      sys.block(ell * n, prev_of(ell) * n, n, n) = coupling_block(ell, prev_of(ell));
    }
    lu_.compute(sys);
    condition_ = 1.0 / lu_.rcond();
    if (lu_.rcond() < 1e-13)
      throw NearSingularError(
          "LimitResolvent: charge system is singular (three-body bound state "
          "at this energy)",
          lambda_);
  }

  double lambda() const { return lambda_; }
  double condition() const { return condition_; }
  const GridPtr& grid() const { return grid_; }
  const std::shared_ptr<ClampStats>& clamp_stats() const { return clamps_; }

  ChargeVector solve_charges(const PhysicalField& f) const {
    const int n = grid_->size();
    VectorXcd rhs(3 * n);
    for (int ell = 0; ell < 3; ++ell) {
      GridFunction1D src = breve_g(f, lambda_, PairIndex{ell}, grid_, mc_);
      for (int j = 0; j < n; ++j)
        rhs[ell * n + j] = -tau_[ell][j] * kSqrt2Pi * src.values[j];
    }
    VectorXcd sol = apply_real_lu(rhs);
    ChargeVector out;
    out.lambda = lambda_;
    for (int ell = 0; ell < 3; ++ell) {
      out.xi[ell] = GridFunction1D::zero(grid_);
      out.xi[ell].values = sol.segment(ell * n, n);
    }
    return out;
  }

  // psi = R0 f + G qhat with qhat = sqrt(2pi) xi, assembled pointwise
  GridFunction2D assemble_psi(const PhysicalField& f,
                              const ChargeVector& xi) const {
    const int n = grid_->size();
    GridFunction2D psi = GridFunction2D::zero(grid_, 0);
    for (int j = 0; j < n; ++j) {
      double p1 = grid_->node(j);
      for (int i = 0; i < n; ++i) {
        double p2 = grid_->node(i);
        double p3 = -p1 - p2;
        Complex num = f.at_spectator(0, p2, p1) + xi.xi[0].values[j] +
                      xi.xi[1].values[i] +
                      grid_->interpolate_clamped(xi.xi[2].values, p3,
                                                 clamps_.get());
        psi.values(i, j) = num / (kinetic_spectator(0, p2, p1, mc_) + lambda_);
      }
    }
    return psi;
  }

  LimitSolution solve(const PhysicalField& f) const {
    ChargeVector xi = solve_charges(f);
    return {assemble_psi(f, xi), std::move(xi), f, condition_, clamps_};
  }

  GridFunction2D apply(const PhysicalField& f) const { return solve(f).psi; }

  // Independent assembly through the operator form
  //   R(lambda) f = R0 f - G (1 + A M)^-1 A breve_G f.
  GridFunction2D apply_operator_form(const PhysicalField& f) const {
    const int n = grid_->size();
    MatrixXd sys = MatrixXd::Identity(3 * n, 3 * n);
    for (int ell = 0; ell < 3; ++ell) {
      PairIndex to{ell};
      for (int j = 0; j < n; ++j)
        sys(ell * n + j, ell * n + j) +=
            a_.alpha[ell] * m_diag_symbol(grid_->node(j), lambda_, to, mc_);
      for (int other : {next_of(ell), prev_of(ell)})
        sys.block(ell * n, other * n, n, n) =
            a_.alpha[ell] *
            m_offdiag_matrix(lambda_, PairIndex{other}, to, *grid_, mc_);
    }
    Eigen::PartialPivLU<MatrixXd> lu(sys);
    VectorXcd rhs(3 * n);
    for (int ell = 0; ell < 3; ++ell) {
      GridFunction1D tr = breve_g(f, lambda_, PairIndex{ell}, grid_, mc_);
      for (int j = 0; j < n; ++j)
        rhs[ell * n + j] = -a_.alpha[ell] * tr.values[j];
    }
    VectorXcd qhat(3 * n);
    qhat.real() = lu.solve(rhs.real().eval());
    qhat.imag() = lu.solve(rhs.imag().eval());
    ChargeVector xi;
    xi.lambda = lambda_;
    for (int ell = 0; ell < 3; ++ell) {
      xi.xi[ell] = GridFunction1D::zero(grid_);
      xi.xi[ell].values = qhat.segment(ell * n, n) / kSqrt2Pi;
    }
    return assemble_psi(f, xi);
  }

  // Residual of the momentum-space boundary relation per pair:
  //   || sqrt(2pi) xi^(l) + alpha_g * trace_g(psi) || / || xi^(l) ||.
  // The trace (1/sqrt(2pi)) \int dk_g psi(k_g, p) is evaluated by quadrature
  // on a refinement of the same compactified map. psi splits into its source
  // and three charge terms; each charge term is integrated in the variable
  // carrying that charge's own momentum (an exact unit-Jacobian change of
  // variables), since the shifted peak of the neighbouring charge otherwise
  // falls between the far nodes. The residual then measures the genuine
  // discretization error of the solve, not a quadrature artefact.
  std::array<double, 3> check_boundary(const LimitSolution& sol,
                                       int refine = 4) const {
    const auto& xi = sol.charges;
    auto fine = make_grid(refine * grid_->size(), grid_->scale());
    const int n = grid_->size(), m = fine->size();
    std::array<double, 3> res{};
    for (int ell = 0; ell < 3; ++ell) {
      if (a_.alpha[ell] == 0.0 && xi.xi[ell].norm_l2() == 0.0) {
        res[ell] = 0.0;
        continue;
      }
      const int nx = next_of(ell), pv = prev_of(ell);
      GridFunction1D mismatch = GridFunction1D::zero(grid_);
      for (int j = 0; j < n; ++j) {
        double p = grid_->node(j);
        Complex tr = 0.0;
        for (int i = 0; i < m; ++i) {
          double u = fine->node(i), w = fine->weight(i);
          double da = kinetic_pair_form(nx, ell, u, p, mc_) + lambda_;
          double db = kinetic_pair_form(pv, ell, u, p, mc_) + lambda_;
          tr += w / da *
                (sol.source.at_spectator(ell, u, p) + xi.xi[ell].values[j] +
                 grid_->interpolate_clamped(xi.xi[nx].values, u, clamps_.get()));
          tr += w / db *
                grid_->interpolate_clamped(xi.xi[pv].values, u, clamps_.get());
        }
        tr /= kSqrt2Pi;
        mismatch.values[j] =
            kSqrt2Pi * xi.xi[ell].values[j] + a_.alpha[ell] * tr;
      }
      res[ell] = mismatch.norm_l2() / xi.xi[ell].norm_l2();
    }
    return res;
  }

 private:
  MatrixXd coupling_block(int ell, int other) const {
    // kernel tau_g(lambda_p) * w / D against xi^(other); D uses the pair form
    // with the integration variable carrying p_other
    const int n = grid_->size();
    MatrixXd out(n, n);
    for (int i = 0; i < n; ++i) {
      double qi = grid_->node(i);
      for (int j = 0; j < n; ++j)
        out(j, i) =
            tau_[ell][j] * grid_->weight(i) /
            (kinetic_pair_form(other, ell, qi, grid_->node(j), mc_) + lambda_);
    }
    return out;
  }

  VectorXcd apply_real_lu(const VectorXcd& rhs) const {
    VectorXcd out(rhs.size());
    out.real() = lu_.solve(rhs.real().eval());
    out.imag() = lu_.solve(rhs.imag().eval());
    return out;
  }

  double lambda_;
  CouplingMatrix a_;
  MassConfig mc_;
  GridPtr grid_;
  std::shared_ptr<ClampStats> clamps_;
  std::vector<VectorXd> tau_;  // tau_g(lambda + p^2/(2 mu_l)) per spectator
  Eigen::PartialPivLU<MatrixXd> lu_;
  double condition_;
};

struct BoundStateDet {
  double det = 0.0;        // sign * exp(log|det|), clamped on overflow
  double sign = 0.0;
  double log_abs = 0.0;
  double sigma_min = 0.0;  // smallest singular value of 1 + A M(lambda)
};

namespace detail {

// 1 + A M(lambda) in the L2-symmetrized node basis (sqrt-weight similarity);
// identical spectrum, better scaled
inline MatrixXd one_plus_am(double lambda, const CouplingMatrix& a,
                            const MassConfig& mc, const MomentumGrid& g) {
  const int n = g.size();
  VectorXd sw = g.weights().cwiseSqrt();
  MatrixXd sys = MatrixXd::Identity(3 * n, 3 * n);
  for (int ell = 0; ell < 3; ++ell) {
    PairIndex to{ell};
    for (int j = 0; j < n; ++j)
      sys(ell * n + j, ell * n + j) +=
          a.alpha[ell] * m_diag_symbol(g.node(j), lambda, to, mc);
    for (int other : {next_of(ell), prev_of(ell)}) {
      MatrixXd blk = m_offdiag_matrix(lambda, PairIndex{other}, to, g, mc);
      blk = sw.asDiagonal() * blk * sw.cwiseInverse().asDiagonal();
      sys.block(ell * n, other * n, n, n) = a.alpha[ell] * blk;
    }
  }
  return sys;
}

inline double smallest_singular_value(const MatrixXd& s, int iters = 40) {
  Eigen::PartialPivLU<MatrixXd> lu(s);
  Eigen::PartialPivLU<MatrixXd> lut(s.transpose().eval());
  VectorXd v = VectorXd::Ones(s.rows());
  v.normalize();
  double growth = 0.0;
  for (int it = 0; it < iters; ++it) {
    VectorXd w = lut.solve(v);
    VectorXd u = lu.solve(w);
    growth = u.norm();
    if (!(growth > 0.0) || !std::isfinite(growth)) return 0.0;
    v = u / growth;
  }
  return 1.0 / std::sqrt(growth);
}

}  // namespace detail

inline BoundStateDet bound_state_det(double lambda, const CouplingMatrix& a,
                                     const MassConfig& mc,
                                     const MomentumGrid& g,
                                     bool with_sigma = true) {
  MatrixXd sys = detail::one_plus_am(lambda, a, mc, g);
  Eigen::PartialPivLU<MatrixXd> lu(sys);
  BoundStateDet out;
  out.sign = lu.permutationP().determinant();
  for (int i = 0; i < sys.rows(); ++i) {
    double d = lu.matrixLU()(i, i);
    if (d < 0.0) out.sign = -out.sign;
    out.log_abs += std::log(std::abs(d));
  }
  out.det = std::abs(out.log_abs) < 600.0 ? out.sign * std::exp(out.log_abs)
                                          : out.sign * (out.log_abs > 0 ? 1e300 : 0.0);
  if (with_sigma) out.sigma_min = detail::smallest_singular_value(sys);
  return out;
}

struct BoundStateRoot {
  double lambda_det = 0.0;    // det sign-change location
  double lambda_sigma = 0.0;  // sigma_min minimizer
  double sigma_min = 0.0;
};

// Scan det(1 + A M) over [lambda_lo, lambda_hi]; each sign change is refined
// by bisection on a grid frozen at the bracket (the lambda-adaptive grid
// scale would otherwise wobble the objective), then cross-checked against
// the sigma_min minimizer by golden-section.
inline std::vector<BoundStateRoot> scan_bound_states(
    const CouplingMatrix& a, const MassConfig& mc, int n, double lambda_lo,
    double lambda_hi, int steps = 32) {
  if (!(lambda_lo > 0.0) || !(lambda_hi > lambda_lo) || steps < 2)
    throw InvalidInput("scan_bound_states: bad scan range");
  std::vector<double> lams(steps), signs(steps);
  double ratio = std::pow(lambda_hi / lambda_lo, 1.0 / (steps - 1));
  for (int i = 0; i < steps; ++i) {
    lams[i] = lambda_lo * std::pow(ratio, i);
    auto g = grid_for_lambda(n, lams[i], mc);
    signs[i] = bound_state_det(lams[i], a, mc, *g).sign;
  }
  std::vector<BoundStateRoot> roots;
  for (int i = 0; i + 1 < steps; ++i) {
    if (signs[i] == signs[i + 1]) continue;
    double lo = lams[i], hi = lams[i + 1];
    auto g = grid_for_lambda(n, 0.5 * (lo + hi), mc);
    auto det_sign = [&](double lam) {
      return bound_state_det(lam, a, mc, *g, false).sign;
    };
    double slo = det_sign(lo);
    while (hi - lo > 1e-9 * hi) {
      double mid = 0.5 * (lo + hi);
      if (det_sign(mid) == slo)
        lo = mid;
      else
        hi = mid;
    }
    BoundStateRoot root;
    root.lambda_det = 0.5 * (lo + hi);

    auto sig = [&](double lam) { return bound_state_det(lam, a, mc, *g).sigma_min; };
    double gl = root.lambda_det * (1.0 - 1e-3), gh = root.lambda_det * (1.0 + 1e-3);
    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = gh - inv_phi * (gh - gl), x2 = gl + inv_phi * (gh - gl);
    double f1 = sig(x1), f2 = sig(x2);
    while (gh - gl > 1e-8 * root.lambda_det) {
      if (f1 < f2) {
        gh = x2;
        x2 = x1;
        f2 = f1;
        x1 = gh - inv_phi * (gh - gl);
        f1 = sig(x1);
      } else {
        gl = x1;
        x1 = x2;
        f1 = f2;
        x2 = gl + inv_phi * (gh - gl);
        f2 = sig(x2);
      }
    }
    root.lambda_sigma = 0.5 * (gl + gh);
    root.sigma_min = sig(root.lambda_sigma);
    roots.push_back(root);
  }
  return roots;
}

}  // namespace delta3b
