#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "delta3b/faddeev.hpp"

using namespace delta3b;

namespace {

const MassConfig kUnit = derive_masses(1.0, 1.0, 1.0);

PhysicalField gaussian_field() {
  return PhysicalField::from_spectator(0, [](double q, double p) {
    return Complex(std::exp(-(q * q + p * p) / 2.0), 0.0);
  });
}

PairPotentials square_wells(double depth, double width) {
  auto p = Potential::square_well(depth, width);
  return {p, p, p};
}

}  // namespace

TEST_CASE("gmres solves a random dense system") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  const int n = 40;
  MatrixXcd a = MatrixXcd::Identity(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      a(i, j) += 0.1 * Complex(nd(rng), nd(rng));
  VectorXcd b(n);
  for (int i = 0; i < n; ++i) b[i] = Complex(nd(rng), nd(rng));
  VectorXcd x;
  GmresOptions opts;
  opts.tolerance = 1e-12;
  auto rep = gmres([&](const VectorXcd& v) { return VectorXcd(a * v); }, b, x,
                   opts);
  CHECK(rep.converged);
  CHECK((a * x - b).norm() / b.norm() < 1e-11);
  // residual history is recorded and non-increasing to the end
  REQUIRE(!rep.residuals.empty());
  CHECK(rep.residuals.back() < 1e-12);
}

TEST_CASE("gmres restarts still converge") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  const int n = 60;
  MatrixXcd a = 2.0 * MatrixXcd::Identity(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) a(i, j) += 0.5 / n * Complex(nd(rng), nd(rng));
  VectorXcd b = VectorXcd::Ones(n);
  VectorXcd x;
  GmresOptions opts;
  opts.restart = 8;
  opts.tolerance = 1e-10;
  auto rep = gmres([&](const VectorXcd& v) { return VectorXcd(a * v); }, b, x,
                   opts);
  CHECK(rep.converged);
  CHECK((a * x - b).norm() / b.norm() < 1e-9);
}

TEST_CASE("embedded kernel slices match the shifted two-body solves") {
  auto g = make_grid(48, 3.0);
  auto pot = Potential::square_well(8.0, 0.25);
  double lam = 6.0;
  EmbeddedTMatrix emb(pot, 0.4, lam, g, PairIndex::p23(), kUnit);

  // zero shift reproduces the base kernel
  auto base = solve_tmatrix(pot, 0.4, lam, g, kUnit.pair_mass(PairIndex::p23()));
  auto at0 = emb.slice_at(0.0);
  CHECK((at0.values - base.values).cwiseAbs().maxCoeff() < 1e-14);

  // cached slice at a node equals a fresh solve at the shifted energy
  int j = 40;
  double shifted = lam + g->node(j) * g->node(j) / (2.0 * kUnit.mu_of(0));
  auto fresh = solve_tmatrix(pot, 0.4, shifted, g,
                             kUnit.pair_mass(PairIndex::p23()));
  CHECK((emb.slice(j).kernel().values - fresh.values).cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("embedded slice sup-norm is non-increasing in |p| at large lambda") {
  auto g = make_grid(48, 3.0);
  auto pot = Potential::square_well(8.0, 0.25);
  EmbeddedTMatrix emb(pot, 0.4, 40.0, g, PairIndex::p23(), kUnit);
  const int n = g->size();
  double prev = 1e300;
  for (int j = n / 2; j < n; ++j) {  // p >= 0, increasing
    double sup = emb.slice(j).kernel().sup_abs();
    CHECK(sup <= prev * (1.0 + 1e-12));
    prev = sup;
  }
}

TEST_CASE("zero potentials give vanishing components and the free resolvent") {
  auto g = make_grid(32, 2.0);
  PairPotentials none = {Potential::none(), Potential::none(), Potential::none()};
  EpsResolvent solver(none, 4.0, 0.5, g, kUnit);
  auto f = gaussian_field();
  auto comps = solver.solve_components(f);
  for (int ell = 0; ell < 3; ++ell) CHECK(comps.rho[ell].norm_l2() == 0.0);
  auto psi = solver.apply(f);
  for (int j = 0; j < g->size(); j += 5)
    for (int i = 0; i < g->size(); i += 5) {
      double q = g->node(i), p = g->node(j);
      Complex expect =
          f.at_spectator(0, q, p) / (kinetic_spectator(0, q, p, kUnit) + 4.0);
      CHECK(std::abs(psi.values(i, j) - expect) < 1e-12);
    }
}

TEST_CASE("single-pair case matches a direct per-column momentum solve") {
  // with v_31 = v_12 = 0 the problem is separable: each spectator-momentum
  // column solves a one-dimensional Lippmann-Schwinger problem, which we
  // solve here directly for psi (no transition-kernel algebra)
  const double lam = 5.0, eps = 0.5;
  auto g = grid_for_lambda(48, lam, kUnit);
  const int n = g->size();
  auto pot = Potential::square_well(8.0, 0.25);
  PairPotentials pots = {pot, Potential::none(), Potential::none()};
  EpsResolvent solver(pots, lam, eps, g, kUnit);
  auto f = gaussian_field();
  auto psi = solver.apply(f);

  const double m = kUnit.pair_mass(PairIndex::p23());
  const double mu = kUnit.mu_of(0);
  const double cn = 0.5;  // m2/(m2+m3) at equal masses
  double worst = 0.0;
  for (int j = 0; j < n; ++j) {
    double p = g->node(j);
    VectorXd k(n);
    for (int i = 0; i < n; ++i) k[i] = -g->node(i) - cn * p;
    MatrixXcd sys = MatrixXcd::Identity(n, n);
    VectorXcd rhs(n);
    for (int i = 0; i < n; ++i) {
      double res_i = 1.0 / (k[i] * k[i] / (2.0 * m) + p * p / (2.0 * mu) + lam);
      for (int l = 0; l < n; ++l)
        sys(i, l) += res_i * pot.fourier(eps * (k[i] - k[l])) / kSqrt2Pi *
                     g->weight(l);
      rhs[i] = res_i * f.at_spectator(0, g->node(i), p);
    }
    VectorXcd col = sys.partialPivLu().solve(rhs);
    for (int i = 0; i < n; ++i)
      worst = std::max(worst, std::abs(col[i] - psi.values(i, j)));
  }
  // the two routes discretize the k'-integral on shifted vs unshifted nodes,
  // so they agree to quadrature accuracy, not roundoff
  CHECK(worst < 1e-7);
}

TEST_CASE("identical particles: components coincide under cyclic relabeling") {
  const double lam = 5.0, eps = 0.5;
  auto g = grid_for_lambda(40, lam, kUnit);
  EpsResolvent solver(square_wells(8.0, 0.25), lam, eps, g, kUnit);
  // f symmetric under particle exchange: a function of the kinetic energy
  auto f = PhysicalField([&](const MomentumPoint& pt) {
    return Complex(std::exp(-kinetic_energy(pt, kUnit)), 0.0);
  });
  auto comps = solver.solve_components(f);
  double scale = comps.rho[0].norm_l2();
  CHECK(scale > 0.0);
  for (int ell : {1, 2}) {
    double diff = 0.0;
    for (int j = 0; j < g->size(); ++j)
      for (int i = 0; i < g->size(); ++i)
        diff = std::max(diff, std::abs(comps.rho[ell].values(i, j) -
                                       comps.rho[0].values(i, j)));
    CHECK(diff < 1e-7 * scale);
  }
}

TEST_CASE("eps resolvent is symmetric on smooth fields") {
  const double lam = 5.0, eps = 0.5;
  auto g = grid_for_lambda(64, lam, kUnit);
  EpsResolvent solver(square_wells(8.0, 0.25), lam, eps, g, kUnit);
  auto f = gaussian_field();
  auto h = PhysicalField::from_spectator(0, [](double q, double p) {
    return Complex(std::exp(-((q - 0.3) * (q - 0.3) + (p + 0.2) * (p + 0.2)) / 1.8),
                   0.0);
  });
  auto rf = solver.apply(f), rh = solver.apply(h);
  auto fs = sample(f, g, 0), hs = sample(h, g, 0);
  Complex lhs = inner_product(hs, rf), rhs = inner_product(rh, fs);
  CHECK(std::abs(lhs - rhs) <= 1e-6 * std::abs(lhs));
}

TEST_CASE("solver reports non-convergence with residual history") {
  auto g = make_grid(32, 2.0);
  GmresOptions opts;
  opts.max_iterations = 2;  // far too few on purpose
  opts.tolerance = 1e-14;
  EpsResolvent solver(square_wells(8.0, 0.25), 5.0, 0.5, g, kUnit, opts);
  CHECK_THROWS_AS(solver.solve_components(gaussian_field()), SolverError);
}

TEST_CASE("spectral floor guard refuses lambda inside the margin") {
  auto g = make_grid(32, 2.0);
  CHECK_THROWS_AS(EpsResolvent(square_wells(8.0, 0.25), 4.0, 0.5, g, kUnit,
                               GmresOptions{}, -4.0),
                  InvalidInput);
}
