#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "delta3b/deltares.hpp"

using namespace delta3b;

namespace {

const MassConfig kUnit = derive_masses(1.0, 1.0, 1.0);

PhysicalField gaussian_field(double width = 1.0) {
  return PhysicalField::from_spectator(0, [width](double q, double p) {
    return Complex(std::exp(-(q * q + p * p) / (2.0 * width * width)), 0.0);
  });
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = x.size();
  for (int i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("free resolvent: constructed inverse and spot values") {
  auto g = make_grid(32, 1.5);
  GridFunction2D f = GridFunction2D::zero(g, 0);
  for (int j = 0; j < 32; ++j)
    for (int i = 0; i < 32; ++i) {
      double q = g->node(i), p = g->node(j);
      double e = kinetic_spectator(0, q, p, kUnit);
      f.values(i, j) = (e + 2.0) * std::exp(-(q * q + p * p));
    }
  auto r = apply_free_resolvent(f, 2.0, kUnit);
  for (int j = 0; j < 32; j += 7)
    for (int i = 0; i < 32; i += 7) {
      double q = g->node(i), p = g->node(j);
      CHECK(std::abs(r.values(i, j) - std::exp(-(q * q + p * p))) < 1e-14);
    }
  // f == 1 at the origin with lambda = 2 gives 1/2; at (1,1), lambda=1: 1/4
  CHECK(1.0 / (kinetic_spectator(0, 0.0, 0.0, kUnit) + 2.0) == 0.5);
  CHECK(1.0 / (kinetic_spectator(0, 1.0, 1.0, kUnit) + 1.0) == 0.25);
}

TEST_CASE("breve_g: zero input, constructed inverse, dense oracle") {
  auto g = make_grid(96, 1.0);
  CHECK(breve_g(PhysicalField::from_spectator(0, [](double, double) {
                  return Complex(0.0);
                }),
                1.0, PairIndex::p23(), g, kUnit)
            .norm_l2() == 0.0);

  // f = (E + lambda) g(p) h(k) with \int h dk = sqrt(2pi) collapses to g(p)
  double lam = 1.3;
  auto f = PhysicalField([&](const MomentumPoint& pt) {
    double k = pt.pair_momentum(PairIndex::p23(), kUnit);
    double p = pt.spectator_momentum(0);
    double e = kinetic_jacobi(PairIndex::p23(), k, p, kUnit);
    return Complex((e + lam) * std::exp(-p * p) * std::exp(-k * k / 2.0), 0.0);
  });
  auto tr = breve_g(f, lam, PairIndex::p23(), g, kUnit);
  for (int j = 0; j < g->size(); j += 9) {
    double p = g->node(j);
    CHECK(std::abs(tr.values[j] - std::exp(-p * p)) < 1e-9);
  }

  // gaussian input against a dense 2d quadrature at double resolution
  auto gf = gaussian_field();
  auto coarse = breve_g(gf, lam, PairIndex::p31(), g, kUnit);
  auto fine_grid = make_grid(192, 1.0);
  auto fine = breve_g(gf, lam, PairIndex::p31(), fine_grid, kUnit);
  for (int j = 0; j < g->size(); j += 9) {
    double p = g->node(j);
    Complex a = coarse.values[j];
    Complex b = fine_grid->interpolate(fine.values, p);
    CHECK(std::abs(a - b) < 1e-8 * std::max(1.0, std::abs(b)));
  }
}

TEST_CASE("g_potential: zero charge, adjoint duality, spot value") {
  auto g = make_grid(64, 1.0);
  auto zero = g_potential(GridFunction1D::zero(g), 1.0, PairIndex::p23(), kUnit);
  CHECK(zero.norm_l2() == 0.0);

  // <G q, f> = <q, breve_G f> with both sides in the pair's natural frame
  std::mt19937_64 rng(21);
  std::normal_distribution<double> nd;
  for (int ell = 0; ell < 3; ++ell) {
    PairIndex pair{ell};
    GridFunction1D q = GridFunction1D::zero(g);
    for (int i = 0; i < g->size(); ++i) {
      double x = g->node(i);
      q.values[i] = Complex(nd(rng), nd(rng)) * std::exp(-x * x / 4.0);
    }
    auto f = gaussian_field();
    double lam = 2.0;
    GridFunction2D gq = g_potential(q, lam, pair, kUnit);
    GridFunction2D fs = sample(f, g, ell);
    Complex lhs = inner_product(gq, fs);
    Complex rhs = inner_product(q, breve_g(f, lam, pair, g, kUnit));
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(rhs));
  }

  // qhat == 1 at (p2,p1) = (1,1), lambda = 1: (1/sqrt(2pi)) * 1/4
  GridFunction1D ones = GridFunction1D::zero(g);
  ones.values.setOnes();
  auto pot = g_potential(ones, 1.0, PairIndex::p23(), kUnit);
  double v = interpolate2d(pot, 1.0, 1.0).real();
  CHECK(v == Catch::Approx(0.25 / kSqrt2Pi).epsilon(1e-6));
}

TEST_CASE("m_diag: spot value and lambda scaling") {
  // equal unit masses, p = 0, lambda = 1/4: (1/2) sqrt(2*0.5/0.25) = 1
  CHECK(m_diag_symbol(0.0, 0.25, PairIndex::p23(), kUnit) == Catch::Approx(1.0));
  CHECK(m_diag_symbol(0.0, 1.0, PairIndex::p23(), kUnit) /
            m_diag_symbol(0.0, 4.0, PairIndex::p23(), kUnit) ==
        Catch::Approx(2.0).epsilon(1e-12));
  auto g = make_grid(32, 1.0);
  CHECK(m_diag(GridFunction1D::zero(g), 1.0, PairIndex::p23(), kUnit).norm_l2() ==
        0.0);
}

TEST_CASE("m_offdiag: zero input, joint parity, norm decay in lambda") {
  auto g = make_grid(64, 2.0);
  CHECK(m_offdiag(GridFunction1D::zero(g), 1.0, PairIndex::p31(),
                  PairIndex::p23(), kUnit)
            .norm_l2() == 0.0);
  CHECK_THROWS_AS(m_offdiag(GridFunction1D::zero(g), 1.0, PairIndex::p23(),
                            PairIndex::p23(), kUnit),
                  InvalidInput);

  // equal masses: flipping the charge argument flips the output argument
  GridFunction1D q = GridFunction1D::zero(g);
  for (int i = 0; i < g->size(); ++i) {
    double x = g->node(i);
    q.values[i] = std::exp(-(x - 0.4) * (x - 0.4));
  }
  GridFunction1D qflip = GridFunction1D::zero(g);
  for (int i = 0; i < g->size(); ++i)
    qflip.values[i] = q.values[g->size() - 1 - i];
  auto out = m_offdiag(q, 2.0, PairIndex::p31(), PairIndex::p23(), kUnit);
  auto outflip = m_offdiag(qflip, 2.0, PairIndex::p31(), PairIndex::p23(), kUnit);
  for (int i = 0; i < g->size(); ++i)
    CHECK(std::abs(out.values[i] - outflip.values[g->size() - 1 - i]) < 1e-12);

  // || M_offdiag(lambda) || ~ lambda^{-1/2}
  std::vector<double> lx, ly;
  for (double lam : {10.0, 40.0, 160.0}) {
    auto gl = grid_for_lambda(64, lam, kUnit);
    double nrm = l2_operator_norm(
        m_offdiag_matrix(lam, PairIndex::p31(), PairIndex::p23(), *gl, kUnit),
        *gl);
    lx.push_back(std::log(lam));
    ly.push_back(std::log(nrm));
  }
  double slope = fit_slope(lx, ly);
  INFO("slope = " << slope);
  CHECK(slope == Catch::Approx(-0.5).margin(0.1));
}

TEST_CASE("remark-style tau bound: |tau| <= |alpha|/pi above twice the pole") {
  for (double alpha : {-0.5, -2.0, -4.0}) {
    for (double m : {0.5, 1.0, 2.0}) {
      double thresh = 2.0 * alpha * alpha * m;
      for (double lam = thresh * 1.0001; lam < thresh * 50; lam *= 1.7)
        CHECK(std::abs(tau(lam, alpha, m)) <= std::abs(alpha) / kPi + 1e-14);
    }
  }
  // repulsive couplings obey tau <= alpha / (2 pi) at every lambda
  for (double lam : {0.1, 1.0, 100.0})
    CHECK(tau(lam, 1.7, 0.8) <= 1.7 / (2.0 * kPi) + 1e-14);
}

TEST_CASE("charges vanish for zero source or zero coupling") {
  auto g = make_grid(48, 2.0);
  LimitResolvent solver(5.0, CouplingMatrix::uniform(1.0), kUnit, g);
  auto zero_f = PhysicalField::from_spectator(
      0, [](double, double) { return Complex(0.0); });
  CHECK(solver.solve_charges(zero_f).norm_sum() == 0.0);

  LimitResolvent free_solver(5.0, CouplingMatrix{}, kUnit, g);
  CHECK(free_solver.solve_charges(gaussian_field()).norm_sum() == 0.0);
}

TEST_CASE("charge solve is self-convergent in N") {
  double lam = 5.0;
  auto cfg = CouplingMatrix::uniform(1.0);
  auto g1 = grid_for_lambda(128, lam, kUnit);
  auto g2 = grid_for_lambda(256, lam, kUnit);
  auto xi1 = LimitResolvent(lam, cfg, kUnit, g1).solve_charges(gaussian_field());
  auto xi2 = LimitResolvent(lam, cfg, kUnit, g2).solve_charges(gaussian_field());
  for (int ell = 0; ell < 3; ++ell) {
    double num = 0.0, den = 0.0;
    for (int j = 0; j < g1->size(); ++j) {
      Complex fine = g2->interpolate(xi2.xi[ell].values, g1->node(j));
      num += g1->weight(j) * std::norm(xi1.xi[ell].values[j] - fine);
      den += g1->weight(j) * std::norm(fine);
    }
    CHECK(std::sqrt(num / den) < 1e-6);
  }
}

TEST_CASE("zero coupling reduces the resolvent to R0") {
  auto g = make_grid(48, 2.0);
  double lam = 3.0;
  LimitResolvent solver(lam, CouplingMatrix{}, kUnit, g);
  auto f = gaussian_field();
  auto sol = solver.solve(f);
  auto bres = solver.check_boundary(sol);
  CHECK((bres[0] == 0.0 && bres[1] == 0.0 && bres[2] == 0.0));
  auto psi = solver.apply(f);
  for (int j = 0; j < g->size(); j += 5)
    for (int i = 0; i < g->size(); i += 5) {
      double q = g->node(i), p = g->node(j);
      Complex expect = f.at_spectator(0, q, p) /
                       (kinetic_spectator(0, q, p, kUnit) + lam);
      CHECK(std::abs(psi.values(i, j) - expect) < 1e-12);
    }
}

TEST_CASE("charge path and operator path agree") {
  auto g = grid_for_lambda(64, 5.0, kUnit);
  LimitResolvent solver(5.0, CouplingMatrix::uniform(1.0), kUnit, g);
  auto f = gaussian_field();
  auto a = solver.apply(f);
  auto b = solver.apply_operator_form(f);
  double num = 0.0, den = 0.0;
  for (int j = 0; j < g->size(); ++j)
    for (int i = 0; i < g->size(); ++i) {
      num += g->weight(i) * g->weight(j) * std::norm(a.values(i, j) - b.values(i, j));
      den += g->weight(i) * g->weight(j) * std::norm(b.values(i, j));
    }
  CHECK(std::sqrt(num / den) < 1e-8);
}

TEST_CASE("limit resolvent is self-adjoint on smooth fields") {
  auto g = grid_for_lambda(96, 4.0, kUnit);
  LimitResolvent solver(4.0, CouplingMatrix::uniform(0.8), kUnit, g);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> cdist(-1.0, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    double c1 = cdist(rng), c2 = cdist(rng), w1 = 1.2 + 0.3 * cdist(rng),
           w2 = 1.5 + 0.4 * cdist(rng);
    auto f = PhysicalField::from_spectator(0, [=](double q, double p) {
      return Complex(std::exp(-(q * q + p * p) / (2 * w1 * w1)) +
                         c1 * std::exp(-((q - 0.5) * (q - 0.5) + p * p) / 2.0),
                     0.0);
    });
    auto h = PhysicalField::from_spectator(0, [=](double q, double p) {
      return Complex(std::exp(-(q * q + p * p) / (2 * w2 * w2)) +
                         c2 * std::exp(-(q * q + (p + 0.4) * (p + 0.4)) / 2.2),
                     0.0);
    });
    auto rf = solver.apply(f), rh = solver.apply(h);
    auto fs = sample(f, g, 0), hs = sample(h, g, 0);
    Complex lhs = inner_product(hs, rf);
    Complex rhs = inner_product(rh, fs);
    CHECK(std::abs(lhs - rhs) <= 1e-8 * std::abs(lhs));
  }
}

TEST_CASE("boundary relation residual is small and shrinks with N") {
  double lam = 5.0;
  auto cfg = CouplingMatrix::uniform(1.0);
  double prev = 1e9;
  for (int n : {64, 128, 256}) {
    auto g = grid_for_lambda(n, lam, kUnit);
    LimitResolvent solver(lam, cfg, kUnit, g);
    auto sol = solver.solve(gaussian_field());
    auto res = solver.check_boundary(sol);
    double worst = std::max({res[0], res[1], res[2]});
    INFO("N = " << n << " residual = " << worst);
    if (n == 128) CHECK(worst <= 1e-5);
    CHECK(worst < prev);
    prev = worst;
  }
}

TEST_CASE("charge norms: saturating probe decays like lambda^{-3/4}") {
  // f_lambda = (E + lambda)^{-1} (normalized) saturates the Cauchy-Schwarz
  // step in the charge-norm bound; a fixed smooth f decays faster (~1/lambda)
  auto cfg = CouplingMatrix::uniform(1.0);
  std::vector<double> lx, ly;
  for (double lam : {20.0, 80.0, 320.0}) {
    auto g = grid_for_lambda(96, lam, kUnit);
    auto probe_raw = PhysicalField([&](const MomentumPoint& pt) {
      return Complex(1.0 / (kinetic_energy(pt, kUnit) + lam), 0.0);
    });
    double nrm = sample(probe_raw, g, 0).norm_l2();
    auto probe = PhysicalField([&, nrm](const MomentumPoint& pt) {
      return Complex(1.0 / (kinetic_energy(pt, kUnit) + lam) / nrm, 0.0);
    });
    LimitResolvent solver(lam, cfg, kUnit, g);
    lx.push_back(std::log(lam));
    ly.push_back(std::log(solver.solve_charges(probe).norm_sum()));
  }
  double slope = fit_slope(lx, ly);
  INFO("saturating-probe slope = " << slope);
  CHECK(slope == Catch::Approx(-0.75).margin(0.1));
}

TEST_CASE("charge norms: fixed gaussian source decays ~ 1/lambda") {
  auto cfg = CouplingMatrix::uniform(1.0);
  std::vector<double> lx, ly;
  for (double lam : {20.0, 80.0, 320.0}) {
    auto g = grid_for_lambda(96, lam, kUnit);
    LimitResolvent solver(lam, cfg, kUnit, g);
    lx.push_back(std::log(lam));
    ly.push_back(std::log(solver.solve_charges(gaussian_field()).norm_sum()));
  }
  double slope = fit_slope(lx, ly);
  INFO("gaussian slope = " << slope);
  // consistent with the upper bound (must not decay slower than -3/4 + 0.1)
  CHECK(slope <= -0.65);
  CHECK(slope == Catch::Approx(-1.0).margin(0.1));
}

TEST_CASE("bound state determinant: identity and large-lambda limits") {
  auto g = make_grid(48, 2.0);
  auto d0 = bound_state_det(3.0, CouplingMatrix{}, kUnit, *g);
  CHECK(d0.det == 1.0);
  CHECK(d0.sigma_min == Catch::Approx(1.0).epsilon(1e-10));
  auto dinf = bound_state_det(1e10, CouplingMatrix::uniform(-2.0), kUnit, *g);
  CHECK(dinf.det == Catch::Approx(1.0).margin(0.01));
}

TEST_CASE("norm of A M(lambda) decays as lambda grows") {
  double prev = 1e9;
  for (double lam : {10.0, 40.0, 160.0}) {
    auto g = grid_for_lambda(48, lam, kUnit);
    MatrixXd am = detail::one_plus_am(lam, CouplingMatrix::uniform(1.0), kUnit, *g) -
                  MatrixXd::Identity(3 * 48, 3 * 48);
    double nrm = am.jacobiSvd().singularValues()[0];
    CHECK(nrm < prev);
    prev = nrm;
  }
  CHECK(prev < 1.0);
}

TEST_CASE("three equal-mass bosons with alpha = -2 bind at lambda = 4") {
  auto roots = scan_bound_states(CouplingMatrix::uniform(-2.0), kUnit, 128,
                                 1.3, 8.0, 24);
  REQUIRE(roots.size() == 1);
  INFO("root = " << roots[0].lambda_det);
  CHECK(roots[0].lambda_det == Catch::Approx(4.0).margin(0.05));
  CHECK(std::abs(roots[0].lambda_det - roots[0].lambda_sigma) <= 1e-6);
}
