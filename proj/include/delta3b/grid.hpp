#pragma once

// Discretization of the momentum line by mapped Gauss-Legendre quadrature.
//
// Gauss-Legendre nodes t_i on (-1,1) are sent to q = L t / (1 - t^2), which
// covers all of R with algebraic node accumulation at infinity; the weights
// pick up the Jacobian L (1 + t^2) / (1 - t^2)^2. Kernels of the form
// 1/(q^2 + p^2 + C*lambda) are then integrable without an artificial cutoff,
// and L ~ sqrt(C*lambda) matches the grid scale to the kernel width.
//
// Off-grid values are recovered by barycentric interpolation in the mapped
// variable t, which is exact on the nodes.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <utility>

#include "delta3b/common.hpp"
#include "delta3b/kinematics.hpp"

namespace delta3b {

class MomentumGrid {
 public:
  enum class MapKind { RationalCompactified };

  MomentumGrid(int n, double scale) : n_(n), scale_(scale) {
    if (n < 8 || n % 2 != 0)
      throw InvalidInput("MomentumGrid: node count must be even and >= 8");
    if (!(scale > 0.0)) throw InvalidInput("MomentumGrid: scale must be > 0");
    gauss_legendre(n, t_, wgl_);
    // enforce exact reflection symmetry lost to eigensolver roundoff
    for (int i = 0; i < n / 2; ++i) {
      double t = 0.5 * (t_[n - 1 - i] - t_[i]);
      t_[i] = -t;
      t_[n - 1 - i] = t;
      double w = 0.5 * (wgl_[i] + wgl_[n - 1 - i]);
      wgl_[i] = w;
      wgl_[n - 1 - i] = w;
    }
    nodes_.resize(n);
    weights_.resize(n);
    bary_.resize(n);
    for (int i = 0; i < n; ++i) {
      double t = t_[i], om = 1.0 - t * t;
      nodes_[i] = scale * t / om;
      weights_[i] = wgl_[i] * scale * (1.0 + t * t) / (om * om);
      // barycentric weights for Gauss-Legendre nodes (Wang-Xiang form)
      bary_[i] = (i % 2 == 0 ? 1.0 : -1.0) * std::sqrt(om * wgl_[i]);
    }
  }

  int size() const { return n_; }
  double scale() const { return scale_; }
  MapKind map_kind() const { return MapKind::RationalCompactified; }
  const VectorXd& nodes() const { return nodes_; }
  const VectorXd& weights() const { return weights_; }
  double node(int i) const { return nodes_[i]; }
  double weight(int i) const { return weights_[i]; }
  double q_max() const { return nodes_[n_ - 1]; }

  // inverse of the node map, exact: q = L t/(1-t^2)  =>  q t^2 + L t - q = 0
  double to_mapped(double q) const {
    if (q == 0.0) return 0.0;
    return (-scale_ + std::sqrt(scale_ * scale_ + 4.0 * q * q)) / (2.0 * q);
  }

  template <typename Vec>
  auto interpolate(const Vec& values, double q) const ->
      typename Vec::Scalar {
    if (std::abs(q) > q_max())
      throw ExtrapolationError("interpolate: point outside resolved range");
    return interpolate_unchecked(values, q);
  }

  // Clamps the argument to the outermost node instead of extrapolating and
  // records how often that happened; the integrand weights suppress the
  // clamped region in every solver that relies on this.
  template <typename Vec>
  auto interpolate_clamped(const Vec& values, double q,
                           ClampStats* stats = nullptr) const ->
      typename Vec::Scalar {
    if (stats) stats->total.fetch_add(1, std::memory_order_relaxed);
    if (std::abs(q) > q_max()) {
      if (stats) stats->clamped.fetch_add(1, std::memory_order_relaxed);
      q = q > 0.0 ? q_max() : -q_max();
    }
    return interpolate_unchecked(values, q);
  }

  template <typename Vec>
  auto interpolate_unchecked(const Vec& values, double q) const ->
      typename Vec::Scalar {
    using Scalar = typename Vec::Scalar;
    // exact node hit (the t-roundtrip would smear it by an ulp)
    const double* lo = std::lower_bound(nodes_.data(), nodes_.data() + n_, q);
    if (lo != nodes_.data() + n_ && *lo == q) return values[lo - nodes_.data()];
    double t = to_mapped(q);
    Scalar num = Scalar(0);
    double den = 0.0;
    for (int i = 0; i < n_; ++i) {
      double d = t - t_[i];
      if (d == 0.0) return values[i];
      double c = bary_[i] / d;
      num += c * values[i];
      den += c;
    }
    return num / den;
  }

  bool operator==(const MomentumGrid& o) const {
    return n_ == o.n_ && scale_ == o.scale_;
  }

 private:
  // Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix, weights
  // follow from the first eigenvector components.
  static void gauss_legendre(int n, VectorXd& t, VectorXd& w) {
    MatrixXd jac = MatrixXd::Zero(n, n);
    for (int j = 1; j < n; ++j) {
      double b = j / std::sqrt(4.0 * j * j - 1.0);
      jac(j, j - 1) = b;
      jac(j - 1, j) = b;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(jac);
    t = es.eigenvalues();
    w.resize(n);
    for (int i = 0; i < n; ++i) {
      double v0 = es.eigenvectors()(0, i);
      w[i] = 2.0 * v0 * v0;
    }
  }

  int n_;
  double scale_;
  VectorXd t_, wgl_;      // Gauss-Legendre nodes/weights on (-1,1)
  VectorXd nodes_, weights_, bary_;
};

using GridPtr = std::shared_ptr<const MomentumGrid>;

inline GridPtr make_grid(int n, double scale) {
  return std::make_shared<const MomentumGrid>(n, scale);
}

// Default scale for a solve at energy lambda: sqrt(C123 * lambda) with
// C_gamma = 2 max of the two masses carried by the natural coordinates.
inline double kernel_constant(const MassConfig& mc) {
  double c = std::numeric_limits<double>::max();
  for (int ell = 0; ell < 3; ++ell) {
    int a = next_of(ell);
    c = std::min(c, 2.0 * std::max(mc.m[a], mc.m[ell]));
  }
  return c;
}

inline GridPtr grid_for_lambda(int n, double lambda, const MassConfig& mc) {
  return make_grid(n, std::sqrt(kernel_constant(mc) * lambda));
}

struct GridFunction1D {
  GridPtr grid;
  VectorXcd values;

  GridFunction1D() = default;
  GridFunction1D(GridPtr g, VectorXcd v) : grid(std::move(g)), values(std::move(v)) {}
  static GridFunction1D zero(GridPtr g) {
    VectorXcd v = VectorXcd::Zero(g->size());
    return {std::move(g), std::move(v)};
  }

  Complex operator()(double q) const { return grid->interpolate(values, q); }
  double norm_l2() const {
    double s = 0.0;
    for (int i = 0; i < grid->size(); ++i)
      s += grid->weight(i) * std::norm(values[i]);
    return std::sqrt(s);
  }
};

inline Complex integrate(const GridFunction1D& f) {
  Complex s = 0.0;
  for (int i = 0; i < f.grid->size(); ++i) s += f.grid->weight(i) * f.values[i];
  return s;
}

// Coordinate system of a 2D momentum function: the natural spectator
// coordinates (p_next(ell), p_ell); values(i, j) = f(q_i, p_j).
struct GridFunction2D {
  GridPtr grid;   // same 1D grid on both axes
  int spectator;  // 0-based ell
  MatrixXcd values;

  GridFunction2D() = default;
  GridFunction2D(GridPtr g, int ell, MatrixXcd v)
      : grid(std::move(g)), spectator(ell), values(std::move(v)) {}
  static GridFunction2D zero(GridPtr g, int ell) {
    MatrixXcd v = MatrixXcd::Zero(g->size(), g->size());
    return {std::move(g), ell, std::move(v)};
  }

  double norm_l2() const {
    double s = 0.0;
    const int n = grid->size();
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        s += grid->weight(i) * grid->weight(j) * std::norm(values(i, j));
    return std::sqrt(s);
  }
};

inline Complex inner_product(const GridFunction2D& a, const GridFunction2D& b) {
  const int n = a.grid->size();
  Complex s = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      s += a.grid->weight(i) * a.grid->weight(j) *
           std::conj(a.values(i, j)) * b.values(i, j);
  return s;
}

inline Complex inner_product(const GridFunction1D& a, const GridFunction1D& b) {
  Complex s = 0.0;
  for (int i = 0; i < a.grid->size(); ++i)
    s += a.grid->weight(i) * std::conj(a.values[i]) * b.values[i];
  return s;
}

// Tensor-product barycentric interpolation; first along axis 1 (q) at fixed
// columns, then along axis 2 (p).
inline Complex interpolate2d(const GridFunction2D& f, double q, double p,
                             ClampStats* stats = nullptr) {
  const auto& g = *f.grid;
  const int n = g.size();
  VectorXcd col(n);
  for (int j = 0; j < n; ++j)
    col[j] = g.interpolate_clamped(f.values.col(j), q, stats);
  return g.interpolate_clamped(col, p, stats);
}

}  // namespace delta3b
