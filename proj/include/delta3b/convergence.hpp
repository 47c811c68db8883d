#pragma once

// Norm-resolvent convergence experiments: a power-iteration estimate of
// || R^eps(lambda) - R(lambda) ||, least-squares rate fits of log(norm)
// against log(eps) with a grid-resolution floor check, and the position-space
// trace inequality diagnostic.

#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "delta3b/deltares.hpp"
#include "delta3b/faddeev.hpp"
#include "delta3b/oracle.hpp"

namespace delta3b {

struct NormDiffEstimate {
  double value = 0.0;
  // per probe, the sequence ||D f_k|| / ||f_k|| (non-decreasing for a
  // self-adjoint difference)
  std::vector<std::vector<double>> iterates;
  int applications = 0;
};

// Power iteration on D = R^eps - R, self-adjoint at real lambda, in the
// quadrature-weighted norm; best of `probes` random restarts with a fixed
// seed, each capped at `iters` applications and stopped early on stagnation.
inline NormDiffEstimate estimate_norm_diff(const EpsResolvent& eps_solver,
                                           const LimitResolvent& limit_solver,
                                           int probes, std::uint64_t seed,
                                           int iters = 50) {
  if (eps_solver.lambda() != limit_solver.lambda())
    throw InvalidInput("estimate_norm_diff: solvers at different lambda");
  const GridPtr& grid = eps_solver.grid();
  const int n = grid->size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const double scale2 =
      grid->scale() * grid->scale();  // probe envelope ~ kernel width

  NormDiffEstimate out;
  for (int probe = 0; probe < probes; ++probe) {
    GridFunction2D f = GridFunction2D::zero(grid, 0);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        double q = grid->node(i), p = grid->node(j);
        f.values(i, j) =
            nd(rng) * std::exp(-(q * q + p * p) / (2.0 * scale2));
      }
    std::vector<double> seq;
    int stagnant = 0;
    for (int it = 0; it < iters; ++it) {
      double fn = f.norm_l2();
      auto field = PhysicalField::from_grid(f);
      GridFunction2D df = eps_solver.apply(field);
      GridFunction2D lf = limit_solver.apply(field);
      df.values -= lf.values;
      ++out.applications;
      double dn = df.norm_l2();
      seq.push_back(dn / fn);
      if (dn == 0.0) break;
      df.values /= dn;
      f = std::move(df);
      if (seq.size() >= 2) {
        double prev = seq[seq.size() - 2];
        stagnant = std::abs(seq.back() - prev) <= 1e-9 * seq.back()
                       ? stagnant + 1
                       : 0;
        if (stagnant >= 3) break;
      }
    }
    out.value = std::max(out.value, seq.empty() ? 0.0 : seq.back());
    out.iterates.push_back(std::move(seq));
  }
  return out;
}

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
  std::vector<double> leverage;
};

// least-squares slope of log(norm) against log(eps)
inline FitResult fit_rate(const std::vector<double>& eps_list,
                          const std::vector<double>& norms) {
  const int n = static_cast<int>(eps_list.size());
  if (n < 3 || norms.size() != eps_list.size())
    throw InvalidInput("fit_rate: need at least 3 points");
  std::vector<double> x(n), y(n);
  for (int i = 0; i < n; ++i) {
    if (!(eps_list[i] > 0.0) || !(norms[i] > 0.0))
      throw InvalidInput("fit_rate: eps and norms must be positive");
    x[i] = std::log(eps_list[i]);
    y[i] = std::log(norms[i]);
  }
  double sx = 0, sy = 0;
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  double xbar = sx / n, ybar = sy / n, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (x[i] - xbar) * (x[i] - xbar);
    sxy += (x[i] - xbar) * (y[i] - ybar);
  }
  if (sxx == 0.0) throw InvalidInput("fit_rate: degenerate abscissae");
  FitResult fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  double ss = 0.0;
  fit.leverage.resize(n);
  for (int i = 0; i < n; ++i) {
    double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss += r * r;
    fit.leverage[i] = 1.0 / n + (x[i] - xbar) * (x[i] - xbar) / sxx;
  }
  fit.residual_rms = std::sqrt(ss / n);
  return fit;
}

struct RateExperiment {
  std::string family;
  double lambda = 0.0;
  int n = 0;
  int probes = 0;
  std::uint64_t seed = 0;
  std::vector<double> eps_list;
  std::vector<double> norms;
  std::vector<int> gmres_iterations;
  bool floor_checked = false;
  double floor_change = 0.0;   // relative change of the smallest-eps norm
                               // when the momentum grid doubles
  int truncated = 0;           // eps points dropped by the floor check
  FitResult fit;
};

struct RateOptions {
  double lambda = 5.0;
  int n = 64;
  std::vector<double> eps_list = {0.4, 0.2, 0.1, 0.05};
  int probes = 3;
  int iters = 50;
  std::uint64_t seed = 12345;
  bool floor_check = true;
  double floor_tolerance = 0.10;
  GmresOptions gmres;
};

// one norm estimate at fixed eps and grid size
inline std::pair<double, int> norm_diff_at(const PairPotentials& pots,
                                           const CouplingMatrix& a,
                                           const MassConfig& mc, double lambda,
                                           double eps, int n,
                                           const RateOptions& opts) {
  auto grid = grid_for_lambda(n, lambda, mc);
  EpsResolvent eps_solver(pots, lambda, eps, grid, mc, opts.gmres);
  LimitResolvent limit_solver(lambda, a, mc, grid);
  auto est = estimate_norm_diff(eps_solver, limit_solver, opts.probes,
                                opts.seed, opts.iters);
  return {est.value, est.applications};
}

inline RateExperiment run_rate_experiment(const PairPotentials& pots,
                                          const MassConfig& mc,
                                          const RateOptions& opts,
                                          const std::string& family_label) {
  CouplingMatrix a;
  for (int ell = 0; ell < 3; ++ell) a.alpha[ell] = pots[ell].coupling();

  RateExperiment exp;
  exp.family = family_label;
  exp.lambda = opts.lambda;
  exp.n = opts.n;
  exp.probes = opts.probes;
  exp.seed = opts.seed;
  exp.eps_list = opts.eps_list;
  for (std::size_t i = 1; i < exp.eps_list.size(); ++i)
    if (!(exp.eps_list[i] < exp.eps_list[i - 1]))
      throw InvalidInput("run_rate_experiment: eps list must decrease");

  // grid-resolution floor: the smallest eps must give the same norm when the
  // momentum grid doubles, else that point measures discretization error
  if (opts.floor_check) {
    exp.floor_checked = true;
    while (exp.eps_list.size() >= 3) {
      double eps = exp.eps_list.back();
      double coarse =
          norm_diff_at(pots, a, mc, opts.lambda, eps, opts.n, opts).first;
      double fine =
          norm_diff_at(pots, a, mc, opts.lambda, eps, 2 * opts.n, opts).first;
      exp.floor_change = std::abs(fine - coarse) / fine;
      if (exp.floor_change < opts.floor_tolerance) break;
      exp.eps_list.pop_back();
      ++exp.truncated;
    }
    if (exp.eps_list.size() < 3)
      throw SolverError(
          "run_rate_experiment: floor check left fewer than 3 eps points");
  }

  for (double eps : exp.eps_list) {
    auto [value, apps] =
        norm_diff_at(pots, a, mc, opts.lambda, eps, opts.n, opts);
    exp.norms.push_back(value);
    exp.gmres_iterations.push_back(apps);
  }
  exp.fit = fit_rate(exp.eps_list, exp.norms);
  return exp;
}

// ---------------------------------------------------------------------------
// position-space trace inequality:
//   sup_x \int |psi(x,y)|^2 dy <= eta ||d_x psi||^2 + (1/eta) ||psi||^2

struct PositionField {
  PositionGrid grid;
  MatrixXcd values;
};

inline double trace_inequality_margin(const PositionField& psi, double eta) {
  if (!(eta > 0.0)) throw InvalidInput("trace_inequality_margin: eta > 0");
  const int n = psi.grid.n;
  const double dx = psi.grid.dx();
  Fft2D fft(n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      fft.data()[size_t(i) * n + j] = psi.values(i, j);
  fft.forward();
  for (int i = 0; i < n; ++i) {
    int m = i <= n / 2 ? i : i - n;
    Complex ik(0.0, psi.grid.dk() * m);
    for (int j = 0; j < n; ++j) fft.data()[size_t(i) * n + j] *= ik;
  }
  fft.backward();
  double grad2 = 0.0, norm2 = 0.0, sup_slice = 0.0;
  for (int i = 0; i < n; ++i) {
    double slice = 0.0;
    for (int j = 0; j < n; ++j) {
      grad2 += std::norm(fft.data()[size_t(i) * n + j] / double(n * n));
      double a2 = std::norm(psi.values(i, j));
      norm2 += a2;
      slice += a2;
    }
    sup_slice = std::max(sup_slice, slice * dx);
  }
  grad2 *= dx * dx;
  norm2 *= dx * dx;
  return eta * grad2 + norm2 / eta - sup_slice;
}

}  // namespace delta3b
