#pragma once

// Brute-force reference resolvent on a uniform position grid in the Jacobi
// coordinates (x_23, y_1): the kinetic term is applied spectrally, the
// rescaled pair potentials pointwise with cell-averaged samples (the
// averages keep \int v exact even when a narrow well falls between nodes;
// the arguments of the other two pairs are the linear combinations
// x_31 = y - m2/(m2+m3) x and x_12 = -y - m3/(m2+m3) x). Solved by conjugate
// gradients preconditioned with the free resolvent, so the iteration count
// stays flat in the grid cutoff.

#include <complex>
#include <utility>
#include <vector>

#include <fftw3.h>

#include "delta3b/field.hpp"
#include "delta3b/grid.hpp"
#include "delta3b/potential.hpp"

namespace delta3b {

struct PositionGrid {
  int n = 0;        // points per axis (even)
  double box = 0.0; // domain is [-box, box)^2
  double dx() const { return 2.0 * box / n; }
  double dk() const { return kPi / box; }
  double x(int i) const { return -box + i * dx(); }
  // ascending momentum value of sorted index s
  double k_sorted(int s) const { return dk() * (s - n / 2); }
  double k_max() const { return dk() * (n / 2 - 1); }
};

class Fft2D {
 public:
  explicit Fft2D(int n) : n_(n), buf_(fftw_alloc_complex(size_t(n) * n)) {
    auto* b = buf_;
    fwd_ = fftw_plan_dft_2d(n, n, b, b, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_2d(n, n, b, b, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Fft2D() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }
  Fft2D(const Fft2D&) = delete;
  Fft2D& operator=(const Fft2D&) = delete;

  // in-place transforms on the internal buffer, exposed as a complex span
  Complex* data() { return reinterpret_cast<Complex*>(buf_); }
  void forward() { fftw_execute(fwd_); }
  // unnormalized inverse; caller divides by n^2
  void backward() { fftw_execute(bwd_); }
  int size() const { return n_; }

 private:
  int n_;
  fftw_complex* buf_;
  fftw_plan fwd_, bwd_;
};

struct OracleSolution {
  PositionGrid grid;
  MatrixXcd psi_pos;      // psi(x_i, y_j)
  MatrixXcd psi_hat;      // continuum-normalized psi(k, p), both axes sorted
  int cg_iterations = 0;
  double cg_residual = 0.0;
  double norm_l2 = 0.0;   // position-space L2 norm of psi
};

class DirectResolvent {
 public:
  DirectResolvent(const PairPotentials& pots, double eps, const MassConfig& mc,
                  PositionGrid grid)
      : mc_(mc), grid_(grid), fft_(grid.n) {
    if (grid.n < 8 || grid.n % 2 != 0 || !(grid.box > 0.0))
      throw InvalidInput("DirectResolvent: bad position grid");
    const int n = grid_.n;
    const double c2 = mc_.m[1] / (mc_.m[1] + mc_.m[2]);
    const double c3 = mc_.m[2] / (mc_.m[1] + mc_.m[2]);
    const double dx = grid_.dx();
    v_.resize(n, n);
    for (int j = 0; j < n; ++j) {
      double y = grid_.x(j);
      for (int i = 0; i < n; ++i) {
        double x = grid_.x(i);
        double v = pots[0].scaled_sample(eps, x, dx);
        v += pots[1].scaled_sample(eps, y - c2 * x, (1.0 + c2) * dx);
        v += pots[2].scaled_sample(eps, -y - c3 * x, (1.0 + c3) * dx);
        v_(i, j) = v;
      }
    }
    kin_.resize(n, n);
    for (int j = 0; j < n; ++j) {
      double p = fft_freq(j);
      for (int i = 0; i < n; ++i) {
        double k = fft_freq(i);
        kin_(i, j) = k * k / (2.0 * mc_.pair_mass(PairIndex::p23())) +
                     p * p / (2.0 * mc_.mu_of(0));
      }
    }
  }

  const PositionGrid& grid() const { return grid_; }
  const MatrixXd& potential() const { return v_; }

  // sample a momentum-space field on the (k_23, p_1) lattice and transform
  // to the position grid
  MatrixXcd source_from_momentum_field(const PhysicalField& f) const {
    const int n = grid_.n;
    MatrixXcd fhat(n, n);
    for (int j = 0; j < n; ++j) {
      double p = fft_freq(j);
      for (int i = 0; i < n; ++i) {
        double k = fft_freq(i);
        fhat(i, j) = f(MomentumPoint::from_jacobi(PairIndex::p23(), k, p, mc_));
      }
    }
    // continuum inverse transform: phases shift the origin to -box
    MatrixXcd fpos = fhat;
    apply_modulation(fpos, -1.0);
    to_buffer(fpos);
    fft_.backward();
    from_buffer(fpos);
    double scale = grid_.dk() * grid_.dk() / (2.0 * kPi);
    fpos *= scale;
    return fpos;
  }

  // solve (H^eps + lambda) psi = f by preconditioned conjugate gradients
  OracleSolution solve(const MatrixXcd& f_pos, double lambda,
                       double tol = 1e-10, int max_iter = 2000) const {
    const int n = grid_.n;
    MatrixXcd x = MatrixXcd::Zero(n, n);
    MatrixXcd r = f_pos;
    MatrixXcd z = precondition(r, lambda);
    MatrixXcd p = z;
    Complex rz = dot(r, z);
    double fnorm = std::sqrt(std::abs(dot(f_pos, f_pos).real()));
    int it = 0;
    double rel = 1.0;
    for (; it < max_iter; ++it) {
      MatrixXcd ap = apply_h(p, lambda);
      Complex alpha = rz / dot(p, ap);
      x += alpha * p;
      r -= alpha * ap;
      rel = std::sqrt(std::abs(dot(r, r).real())) / fnorm;
      if (rel < tol) break;
      MatrixXcd z2 = precondition(r, lambda);
      Complex rz2 = dot(r, z2);
      p = z2 + (rz2 / rz) * p;
      rz = rz2;
    }
    if (rel >= tol)
      throw SolverError("DirectResolvent: CG did not converge, residual " +
                        std::to_string(rel));
    OracleSolution out;
    out.grid = grid_;
    out.psi_pos = x;
    out.cg_iterations = it + 1;
    out.cg_residual = rel;
    out.norm_l2 = std::sqrt(std::abs(dot(x, x).real())) * grid_.dx();
    out.psi_hat = to_momentum(x);
    return out;
  }

  OracleSolution solve_from_momentum_field(const PhysicalField& f,
                                           double lambda, double tol = 1e-10,
                                           int max_iter = 2000) const {
    return solve(source_from_momentum_field(f), lambda, tol, max_iter);
  }

  // ground-state estimate by inverse power iteration on (H + shift)^-1,
  // used for spectral-floor margins
  double estimate_ground_state(double shift, int iters = 12,
                               double cg_tol = 1e-8) const {
    const int n = grid_.n;
    MatrixXcd v(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        double x = grid_.x(i), y = grid_.x(j);
        v(i, j) = std::exp(-(x * x + y * y));
      }
    double mu = 0.0;
    for (int it = 0; it < iters; ++it) {
      OracleSolution s = solve(v, shift, cg_tol, 5000);
      double nrm = std::sqrt(std::abs(dot(s.psi_pos, s.psi_pos).real()));
      mu = nrm;  // eigenvalue of (H + shift)^-1
      v = s.psi_pos / nrm;
    }
    return 1.0 / mu - shift;
  }

 private:
  double fft_freq(int idx) const {
    int m = idx <= grid_.n / 2 ? idx : idx - grid_.n;
    return grid_.dk() * m;
  }

  void to_buffer(const MatrixXcd& m) const {
    const int n = grid_.n;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) fft_.data()[size_t(i) * n + j] = m(i, j);
  }
  void from_buffer(MatrixXcd& m) const {
    const int n = grid_.n;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) m(i, j) = fft_.data()[size_t(i) * n + j];
  }

  // multiply by e^{sign * i (k + p) * box} on FFT-ordered axes
  void apply_modulation(MatrixXcd& m, double sign) const {
    const int n = grid_.n;
    for (int j = 0; j < n; ++j) {
      double p = fft_freq(j);
      for (int i = 0; i < n; ++i) {
        double k = fft_freq(i);
        m(i, j) *= std::exp(Complex(0.0, sign * (k + p) * grid_.box));
      }
    }
  }

  MatrixXcd apply_h(const MatrixXcd& psi, double lambda) const {
    MatrixXcd out = psi;
    to_buffer(out);
    fft_.forward();
    {
      const int n = grid_.n;
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
          fft_.data()[size_t(i) * n + j] *= kin_(i, j);
    }
    fft_.backward();
    from_buffer(out);
    out /= double(grid_.n) * grid_.n;
    out.array() += (v_.array() + lambda).cast<Complex>() * psi.array();
    return out;
  }

  MatrixXcd precondition(const MatrixXcd& r, double lambda) const {
    MatrixXcd out = r;
    to_buffer(out);
    fft_.forward();
    {
      const int n = grid_.n;
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
          fft_.data()[size_t(i) * n + j] /= kin_(i, j) + lambda;
    }
    fft_.backward();
    from_buffer(out);
    out /= double(grid_.n) * grid_.n;
    return out;
  }

  Complex dot(const MatrixXcd& a, const MatrixXcd& b) const {
    return (a.conjugate().cwiseProduct(b)).sum();
  }

  // continuum-normalized momentum representation, axes sorted ascending
  MatrixXcd to_momentum(const MatrixXcd& psi_pos) const {
    const int n = grid_.n;
    MatrixXcd hat = psi_pos;
    to_buffer(hat);
    fft_.forward();
    from_buffer(hat);
    apply_modulation(hat, +1.0);
    hat *= grid_.dx() * grid_.dx() / (2.0 * kPi);
    MatrixXcd sorted(n, n);
    for (int j = 0; j < n; ++j) {
      int js = (j + n / 2) % n;  // FFT index -> sorted position
      for (int i = 0; i < n; ++i) sorted((i + n / 2) % n, js) = hat(i, j);
    }
    return sorted;
  }

  MassConfig mc_;
  PositionGrid grid_;
  mutable Fft2D fft_;
  MatrixXd v_;
  MatrixXd kin_;
};

// Relative L2 difference on the oracle's momentum window [-kmax, kmax]^2
// between the oracle solution and a mapped-grid field in (p2, p1) coords.
inline double relative_l2_momentum_window(const OracleSolution& oracle,
                                          const GridFunction2D& psi,
                                          const MassConfig& mc,
                                          double window_kmax) {
  const auto& g = oracle.grid;
  const double c2 = mc.m[1] / (mc.m[1] + mc.m[2]);
  double num = 0.0, den = 0.0;
  for (int j = 0; j < g.n; ++j) {
    double p = g.k_sorted(j);
    if (std::abs(p) > window_kmax) continue;
    for (int i = 0; i < g.n; ++i) {
      double k = g.k_sorted(i);
      if (std::abs(k) > window_kmax) continue;
      Complex a = oracle.psi_hat(i, j);
      Complex b = interpolate2d(psi, -k - c2 * p, p);
      num += std::norm(a - b);
      den += std::norm(a);
    }
  }
  if (den == 0.0) throw InvalidInput("relative_l2_momentum_window: empty window");
  return std::sqrt(num / den);
}

// Oracle momentum data interpolated onto a mapped grid in (p2,p1) coords;
// lattice points outside the oracle window evaluate to zero.
inline GridFunction2D oracle_to_gridfunction(const OracleSolution& oracle,
                                             const GridPtr& grid,
                                             const MassConfig& mc) {
  const auto& pg = oracle.grid;
  const double c2 = mc.m[1] / (mc.m[1] + mc.m[2]);
  auto sample_lattice = [&](double k, double p) -> Complex {
    double si = k / pg.dk() + pg.n / 2, sj = p / pg.dk() + pg.n / 2;
    int i0 = static_cast<int>(std::floor(si)), j0 = static_cast<int>(std::floor(sj));
    if (i0 < 1 || j0 < 1 || i0 + 2 >= pg.n || j0 + 2 >= pg.n) return 0.0;
    double fi = si - i0, fj = sj - j0;
    auto cr = [](Complex m1, Complex p0, Complex p1, Complex p2, double t) {
      return p0 + 0.5 * t * (p1 - m1 + t * (2.0 * m1 - 5.0 * p0 + 4.0 * p1 - p2 +
                                            t * (3.0 * (p0 - p1) + p2 - m1)));
    };
    Complex rows[4];
    for (int r = -1; r <= 2; ++r)
      rows[r + 1] = cr(oracle.psi_hat(i0 - 1, j0 + r), oracle.psi_hat(i0, j0 + r),
                       oracle.psi_hat(i0 + 1, j0 + r), oracle.psi_hat(i0 + 2, j0 + r),
                       fi);
    return cr(rows[0], rows[1], rows[2], rows[3], fj);
  };
  GridFunction2D out = GridFunction2D::zero(grid, 0);
  for (int j = 0; j < grid->size(); ++j) {
    double p1 = grid->node(j);
    for (int i = 0; i < grid->size(); ++i) {
      double k = -grid->node(i) - c2 * p1;
      out.values(i, j) = sample_lattice(k, p1);
    }
  }
  return out;
}

}  // namespace delta3b
