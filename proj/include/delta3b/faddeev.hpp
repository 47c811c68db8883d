#pragma once

// The finite-range three-body resolvent via the momentum-space component
// equations. For each spectator l, in natural coordinates (q, p),
//
//   rho^(l)(q,p) = - \int dq' K_A(q,q';p) [ f^(l)(q',p) + rho^(next)(-p-q',q') ]
//                  - \int dq' K_B(q,q';p) rho^(prev)(p,q'),
//
//   K_A = t_g(lambda + p^2/(2 mu_l); k_out(q,p), k_A(q',p)) / D_A(q',p),
//   K_B = t_g(lambda + p^2/(2 mu_l); k_out(q,p), k_B(q',p)) / D_B(q',p),
//
// with the two-body kernel at the shifted energy evaluated off-grid through
// its own integral equation. The resolvent is then
//   R^eps f = R0 f + R0 (rho^(1) + rho^(2) + rho^(3)).
//
// Per (l, p-node) the two N x N coupling blocks are assembled once; the
// coupled system on the stacked unknown (3 N^2 values) is solved matrix-free
// by restarted GMRES in the quadrature-weighted norm. The per-component
// diagonal of the stacked system is exactly 1 (each equation couples only
// the other two components), so there is nothing to precondition with a
// diagonal; GMRES runs unpreconditioned.

#include <array>
#include <memory>
#include <mutex>
#include <optional>
#include <utility>
#include <vector>

#include "delta3b/field.hpp"
#include "delta3b/gmres.hpp"
#include "delta3b/grid.hpp"
#include "delta3b/potential.hpp"
#include "delta3b/tmatrix.hpp"

namespace delta3b {

// Two-body kernels at energies shifted by the spectator kinetic term,
// one slice per p-node, built lazily and cached.
class EmbeddedTMatrix {
 public:
  EmbeddedTMatrix(Potential pot, double eps, double lambda, GridPtr grid,
                  PairIndex pair, const MassConfig& mc)
      : pot_(std::move(pot)), eps_(eps), lambda_(lambda), grid_(std::move(grid)),
        pair_(pair), mc_(mc), slices_(grid_->size()),
        flags_(grid_->size()) {}

  double shifted_lambda(double p) const {
    return lambda_ + p * p / (2.0 * mc_.mu_of(pair_.spectator));
  }

  // kernel at the energy shifted by the p-node's kinetic term
  const TwoBodySolver& slice(int p_index) const {
    std::call_once(flags_[p_index], [&] {
      slices_[p_index] = std::make_unique<TwoBodySolver>(
          pot_, eps_, shifted_lambda(grid_->node(p_index)), grid_,
          mc_.pair_mass(pair_));
    });
    return *slices_[p_index];
  }

  TMatrixKernel slice_at(double p) const {
    return TwoBodySolver(pot_, eps_, shifted_lambda(p), grid_,
                         mc_.pair_mass(pair_))
        .kernel();
  }

 private:
  Potential pot_;
  double eps_, lambda_;
  GridPtr grid_;
  PairIndex pair_;
  MassConfig mc_;
  mutable std::vector<std::unique_ptr<TwoBodySolver>> slices_;
  mutable std::vector<std::once_flag> flags_;
};

struct FaddeevComponents {
  double lambda = 0.0;
  double eps = 0.0;
  std::array<GridFunction2D, 3> rho;  // natural coordinates per spectator
  GmresReport report;
  long clamped = 0;
  long interpolations = 0;
};

class EpsResolvent {
 public:
  EpsResolvent(const PairPotentials& pots, double lambda, double eps,
               GridPtr grid, const MassConfig& mc, GmresOptions opts = {},
               std::optional<double> spectral_floor = std::nullopt)
      : lambda_(lambda), eps_(eps), grid_(std::move(grid)), mc_(mc),
        opts_(opts), clamps_(std::make_shared<ClampStats>()) {
    if (!(lambda > 0.0)) throw InvalidInput("EpsResolvent: lambda must be > 0");
    if (spectral_floor && lambda <= 1.05 * std::abs(*spectral_floor))
      throw InvalidInput(
          "EpsResolvent: lambda inside the spectral margin of the estimated "
          "ground state");
    const int n = grid_->size();
    sqrt_w_.resize(n);
    for (int i = 0; i < n; ++i) sqrt_w_[i] = std::sqrt(grid_->weight(i));

    for (int ell = 0; ell < 3; ++ell) {
      if (pots[ell].is_none()) continue;
      ma_[ell].resize(n);
      mb_[ell].resize(n);
      EmbeddedTMatrix embedded(pots[ell], eps_, lambda_, grid_, PairIndex{ell},
                               mc_);
      const int nx = next_of(ell), pv = prev_of(ell);
      const double cn = mc_.m[nx] / (mc_.m[nx] + mc_.m[pv]);
      const double cp = mc_.m[pv] / (mc_.m[nx] + mc_.m[pv]);
      parallel_for(n, [&](int j) {
        const double p = grid_->node(j);
        const TwoBodySolver& tb = embedded.slice(j);
        VectorXd kout(n), kin_b(n);
        for (int i = 0; i < n; ++i) {
          kout[i] = -grid_->node(i) - cn * p;
          kin_b[i] = grid_->node(i) + cp * p;
        }
        // k_A coincides with k_out on the tensor grid
        MatrixXd ta = tb.eval_block(kout, kout);
        MatrixXd tbm = tb.eval_block(kout, kin_b);
        for (int l = 0; l < n; ++l) {
          double q = grid_->node(l);
          double da = kinetic_pair_form(nx, ell, q, p, mc_) + lambda_;
          double db = kinetic_pair_form(pv, ell, q, p, mc_) + lambda_;
          ta.col(l) *= grid_->weight(l) / da;
          tbm.col(l) *= grid_->weight(l) / db;
        }
        ma_[ell][j] = std::move(ta);
        mb_[ell][j] = std::move(tbm);
      });
    }
  }

  double lambda() const { return lambda_; }
  double eps() const { return eps_; }
  const GridPtr& grid() const { return grid_; }
  const std::shared_ptr<ClampStats>& clamp_stats() const { return clamps_; }

  FaddeevComponents solve_components(const PhysicalField& f) const {
    const int n = grid_->size();
    std::array<MatrixXcd, 3> source;
    for (int ell = 0; ell < 3; ++ell) {
      source[ell] = MatrixXcd::Zero(n, n);
      if (ma_[ell].empty()) continue;
      GridFunction2D fs = sample(f, grid_, ell);
      for (int j = 0; j < n; ++j)
        source[ell].col(j) = -apply_real(ma_[ell][j], VectorXcd(fs.values.col(j)));
    }

    VectorXcd b = pack(source);
    VectorXcd x = b;
    auto op = [&](const VectorXcd& u) { return apply_system(u); };
    GmresReport report = gmres(op, b, x, opts_);
    if (!report.converged)
      throw SolverError("EpsResolvent: GMRES did not reach tolerance " +
                        std::to_string(opts_.tolerance) + " after " +
                        std::to_string(report.iterations) + " iterations");

    FaddeevComponents out;
    out.lambda = lambda_;
    out.eps = eps_;
    out.report = std::move(report);
    unpack_into(x, out.rho);
    out.clamped = clamps_->clamped.load();
    out.interpolations = clamps_->total.load();
    return out;
  }

  // R^eps f on the (p2, p1) grid: the components re-expressed in the output
  // coordinates via single-axis interpolation, then smoothed by R0
  GridFunction2D assemble_psi(const PhysicalField& f,
                              const std::array<GridFunction2D, 3>& rho) const {
    const int n = grid_->size();
    GridFunction2D psi = GridFunction2D::zero(grid_, 0);
    MatrixXcd rho3t = rho[2].values.transpose();
    for (int j = 0; j < n; ++j) {
      double p1 = grid_->node(j);
      for (int i = 0; i < n; ++i) {
        double p2 = grid_->node(i);
        double p3 = -p1 - p2;
        Complex num = f.at_spectator(0, p2, p1) + rho[0].values(i, j);
        num += grid_->interpolate_clamped(rho[1].values.col(i), p3,
                                          clamps_.get());
        num += grid_->interpolate_clamped(rho3t.col(j), p3, clamps_.get());
        psi.values(i, j) = num / (kinetic_spectator(0, p2, p1, mc_) + lambda_);
      }
    }
    return psi;
  }

  GridFunction2D apply(const PhysicalField& f) const {
    return assemble_psi(f, solve_components(f).rho);
  }

 private:
  VectorXcd pack(const std::array<MatrixXcd, 3>& comps) const {
    const int n = grid_->size();
    VectorXcd out(3 * n * n);
    for (int ell = 0; ell < 3; ++ell)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
          out[ell * n * n + j * n + i] =
              comps[ell](i, j) * sqrt_w_[i] * sqrt_w_[j];
    return out;
  }

  void unpack_into(const VectorXcd& u, std::array<GridFunction2D, 3>& rho) const {
    const int n = grid_->size();
    for (int ell = 0; ell < 3; ++ell) {
      rho[ell] = GridFunction2D::zero(grid_, ell);
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
          rho[ell].values(i, j) =
              u[ell * n * n + j * n + i] / (sqrt_w_[i] * sqrt_w_[j]);
    }
  }

  // (1 + K) on the weighted stacked unknown
  VectorXcd apply_system(const VectorXcd& u) const {
    const int n = grid_->size();
    std::array<GridFunction2D, 3> rho;
    unpack_into(u, rho);
    VectorXcd out = u;
    for (int ell = 0; ell < 3; ++ell) {
      if (ma_[ell].empty()) continue;
      const int nx = next_of(ell), pv = prev_of(ell);
      // rho^(next) at (-p_j - q_l, q_l): interpolate column l along axis 1
      MatrixXcd ua(n, n);  // (l, j)
      for (int l = 0; l < n; ++l) {
        auto col = rho[nx].values.col(l);
        for (int j = 0; j < n; ++j)
          ua(l, j) = grid_->interpolate_clamped(
              col, -grid_->node(j) - grid_->node(l), clamps_.get());
      }
      for (int j = 0; j < n; ++j) {
        VectorXcd ub = rho[pv].values.row(j).transpose();
        VectorXcd add = apply_real(ma_[ell][j], VectorXcd(ua.col(j))) +
                        apply_real(mb_[ell][j], ub);
        for (int i = 0; i < n; ++i)
          out[ell * n * n + j * n + i] += add[i] * sqrt_w_[i] * sqrt_w_[j];
      }
    }
    return out;
  }

  double lambda_, eps_;
  GridPtr grid_;
  MassConfig mc_;
  GmresOptions opts_;
  std::shared_ptr<ClampStats> clamps_;
  VectorXd sqrt_w_;
  std::array<std::vector<MatrixXd>, 3> ma_, mb_;
};

}  // namespace delta3b
