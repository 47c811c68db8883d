#pragma once

// Two-body potential families and their unitary Fourier transforms
//   vhat(k) = (2 pi)^{-1/2} \int e^{-ikx} v(x) dx,
// so the coupling constant alpha = \int v = sqrt(2 pi) vhat(0).
//
// Families (all even in x):
//   square-well   v(x) = -v0 on |x| <= a/2          vhat in closed form
//   gaussian      v(x) = A exp(-x^2 / (2 w^2))      vhat in closed form
//   power-tail    v(x) = c (1 + |x|)^{-1-s-eta}     vhat by quadrature
//
// The power-tail transform reduces to I_nu(k) = \int_0^inf cos(kx) (1+x)^-nu dx
// with nu = 1 + s + eta. It is evaluated by half-period segmentation with
// alternating-series averaging for moderate k, by an exact descent recursion
// for large k, and served through a cubic table in log k (the k=0 cusp
// |k|^{nu-1} is smooth in that variable), since the three-body solvers
// request millions of values.

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "delta3b/common.hpp"

namespace delta3b {

namespace detail {

// 16-point Gauss-Legendre rule on (-1,1), fixed table.
inline const std::array<std::pair<double, double>, 8>& gl16_half() {
  static const std::array<std::pair<double, double>, 8> tbl = {{
      {0.0950125098376374, 0.1894506104550685},
      {0.2816035507792589, 0.1826034150449236},
      {0.4580167776572274, 0.1691565193950025},
      {0.6178762444026438, 0.1495959888165767},
      {0.7554044083550030, 0.1246289712555339},
      {0.8656312023878318, 0.0951585116824928},
      {0.9445750230732326, 0.0622535239386479},
      {0.9894009349916499, 0.0271524594117541},
  }};
  return tbl;
}

template <typename F>
double gl16(F&& f, double a, double b) {
  double c = 0.5 * (a + b), h = 0.5 * (b - a), s = 0.0;
  for (const auto& [x, w] : gl16_half()) s += w * (f(c + h * x) + f(c - h * x));
  return s * h;
}

// I_nu(k) = \int_0^inf cos(kx) (1+x)^{-nu} dx for k > 0, 1 < nu < 3.
// Head segment up to the first zero of cos, then half-period segments summed
// with repeated averaging of partial sums (the segment signs alternate under
// a monotone envelope). Segments are integrated in u = log(1+x) so the first
// one stays benign even for tiny k.
inline double power_tail_cos_integral_direct(double nu, double k) {
  if (k == 0.0) return 1.0 / (nu - 1.0);
  k = std::abs(k);
  auto seg = [&](double xa, double xb) {
    double ua = std::log1p(xa), ub = std::log1p(xb);
    // panels of bounded log-width keep the rule accurate when the first
    // segment spans many decades (tiny k)
    int panels = 1 + static_cast<int>((ub - ua) / 2.0);
    double s = 0.0, step = (ub - ua) / panels;
    for (int p = 0; p < panels; ++p)
      s += gl16(
          [&](double u) {
            double opx = std::exp(u);  // 1 + x
            return std::cos(k * (opx - 1.0)) * std::pow(opx, 1.0 - nu);
          },
          ua + p * step, ua + (p + 1) * step);
    return s;
  };
  const double x0 = 0.5 * kPi / k;
  double head = seg(0.0, x0);

  constexpr int kTerms = 40;
  double partial[kTerms];
  double sum = 0.0, xa = x0;
  for (int j = 0; j < kTerms; ++j) {
    double xb = x0 + (j + 1) * kPi / k;
    sum += seg(xa, xb);
    partial[j] = sum;
    xa = xb;
  }
  for (int m = kTerms - 1; m > 0; --m)
    for (int j = 0; j < m; ++j) partial[j] = 0.5 * (partial[j] + partial[j + 1]);
  return head + partial[0];
}

// Exact descent I_nu(k) = nu/k^2 - nu(nu+1)/k^2 I_{nu+2}(k); after enough
// levels the remainder is bounded by 1/(nu' - 1) and negligible for k >~ 40.
inline double power_tail_cos_integral_asymptotic(double nu, double k) {
  constexpr int kDepth = 7;
  double coef[kDepth], nus[kDepth];
  double v = nu;
  for (int d = 0; d < kDepth; ++d) {
    coef[d] = v * (v + 1.0) / (k * k);
    nus[d] = v;
    v += 2.0;
  }
  double val = 0.0;  // remainder estimate dropped; bounded by 1/(v-1)
  for (int d = kDepth - 1; d >= 0; --d) val = nus[d] / (k * k) - coef[d] * val;
  return val;
}

class PowerTailTable {
 public:
  explicit PowerTailTable(double nu) : nu_(nu) {
    u0_ = -32.0;
    u1_ = std::log(kAsympt);
    n_ = static_cast<int>((u1_ - u0_) / 0.005) + 2;
    h_ = (u1_ - u0_) / (n_ - 1);
    vals_.resize(n_ + 2);
    for (int i = 0; i < n_; ++i)
      vals_[i + 1] = power_tail_cos_integral_direct(nu_, std::exp(u0_ + i * h_));
    vals_[0] = vals_[1];            // pad for the cubic stencil
    vals_[n_ + 1] = vals_[n_];
  }

  double eval(double k) const {
    k = std::abs(k);
    if (k == 0.0) return 1.0 / (nu_ - 1.0);
    if (k >= kAsympt) return power_tail_cos_integral_asymptotic(nu_, k);
    double u = std::log(k);
    if (u <= u0_) return 1.0 / (nu_ - 1.0);
    double s = (u - u0_) / h_;
    int i = std::min(static_cast<int>(s), n_ - 2);
    double f = s - i;
    // Catmull-Rom through the four surrounding samples
    double pm1 = vals_[i], p0 = vals_[i + 1], p1 = vals_[i + 2],
           p2 = vals_[i + 3];
    return p0 + 0.5 * f * (p1 - pm1 +
                           f * (2.0 * pm1 - 5.0 * p0 + 4.0 * p1 - p2 +
                                f * (3.0 * (p0 - p1) + p2 - pm1)));
  }

  static constexpr double kAsympt = 48.0;

 private:
  double nu_, u0_, u1_, h_;
  int n_;
  std::vector<double> vals_;
};

inline const PowerTailTable& power_tail_table(double nu) {
  static std::map<double, std::unique_ptr<PowerTailTable>> registry;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = registry.find(nu);
  if (it == registry.end())
    it = registry.emplace(nu, std::make_unique<PowerTailTable>(nu)).first;
  return *it->second;
}

}  // namespace detail

class Potential {
 public:
  enum class Family { None, SquareWell, Gaussian, PowerTail };

  static Potential none() { return Potential(Family::None, 0, 0, 0); }
  static Potential square_well(double depth, double width) {
    if (!(width > 0.0)) throw InvalidInput("square_well: width must be > 0");
    return Potential(Family::SquareWell, depth, width, 0);
  }
  static Potential gaussian(double amplitude, double width) {
    if (!(width > 0.0)) throw InvalidInput("gaussian: width must be > 0");
    return Potential(Family::Gaussian, amplitude, width, 0);
  }
  static Potential power_tail(double c, double s, double eta = 0.1) {
    if (!(s > 0.0) || !(eta > 0.0))
      throw InvalidInput("power_tail: s and eta must be > 0");
    return Potential(Family::PowerTail, c, s, eta);
  }

  Family family() const { return family_; }
  bool is_none() const { return family_ == Family::None; }
  double param_a() const { return a_; }
  double param_b() const { return b_; }
  double param_eta() const { return eta_; }
  // moment exponent s such that (1+|x|)^s v is integrable
  double moment_exponent() const {
    return family_ == Family::PowerTail ? b_ : 1.0;
  }

  double value(double x) const {
    switch (family_) {
      case Family::None:
        return 0.0;
      case Family::SquareWell:
        return std::abs(x) <= 0.5 * b_ ? -a_ : 0.0;
      case Family::Gaussian:
        return a_ * std::exp(-x * x / (2.0 * b_ * b_));
      case Family::PowerTail:
        return a_ * std::pow(1.0 + std::abs(x), -1.0 - b_ - eta_);
    }
    return 0.0;
  }

  // unitary Fourier transform of the unscaled profile; the rescaled potential
  // eps^-1 v(x/eps) transforms to fourier(eps * k)
  double fourier(double k) const {
    switch (family_) {
      case Family::None:
        return 0.0;
      case Family::SquareWell: {
        double u = 0.5 * k * b_;
        double sinc = std::abs(u) < 1e-8 ? 1.0 - u * u / 6.0 : std::sin(u) / u;
        return -a_ * b_ / kSqrt2Pi * sinc;
      }
      case Family::Gaussian:
        return a_ * b_ * std::exp(-0.5 * k * k * b_ * b_);
      case Family::PowerTail:
        return 2.0 * a_ / kSqrt2Pi *
               detail::power_tail_table(1.0 + b_ + eta_).eval(k);
    }
    return 0.0;
  }

  // same value without the log-k table, for cross-checks
  double fourier_direct(double k) const {
    if (family_ != Family::PowerTail) return fourier(k);
    double nu = 1.0 + b_ + eta_;
    double i = std::abs(k) >= detail::PowerTailTable::kAsympt
                   ? detail::power_tail_cos_integral_asymptotic(nu, std::abs(k))
                   : detail::power_tail_cos_integral_direct(nu, std::abs(k));
    return 2.0 * a_ / kSqrt2Pi * i;
  }

  // alpha = \int v dx = sqrt(2 pi) vhat(0), in closed form per family
  double coupling() const {
    switch (family_) {
      case Family::None:
        return 0.0;
      case Family::SquareWell:
        return -a_ * b_;
      case Family::Gaussian:
        return kSqrt2Pi * a_ * b_;
      case Family::PowerTail:
        return 2.0 * a_ / (b_ + eta_);
    }
    return 0.0;
  }

  // antiderivative \int_0^x v, extended oddly; closed form per family
  double antiderivative(double x) const {
    double ax = std::abs(x), v = 0.0;
    switch (family_) {
      case Family::None:
        break;
      case Family::SquareWell:
        v = -a_ * std::min(ax, 0.5 * b_);
        break;
      case Family::Gaussian:
        v = a_ * b_ * std::sqrt(kPi / 2.0) * std::erf(ax / (std::sqrt(2.0) * b_));
        break;
      case Family::PowerTail: {
        double nu = 1.0 + b_ + eta_;
        v = a_ * (1.0 - std::pow(1.0 + ax, 1.0 - nu)) / (nu - 1.0);
        break;
      }
    }
    return x >= 0.0 ? v : -v;
  }

  // average of the rescaled potential eps^-1 v(x/eps) over [x-w/2, x+w/2];
  // keeps \int v exact on coarse grids (matters for the discontinuous well)
  double scaled_cell_average(double eps, double x, double w) const {
    if (family_ == Family::None) return 0.0;
    double lo = (x - 0.5 * w) / eps, hi = (x + 0.5 * w) / eps;
    return (antiderivative(hi) - antiderivative(lo)) / w;
  }

  double scaled_value(double eps, double x) const { return value(x / eps) / eps; }

  // grid sample of the rescaled potential: point values where the profile is
  // smooth and resolved (spectrally accurate), cell averages otherwise (the
  // average keeps \int v exact; point-sampling a jump or a sub-cell feature
  // would misrepresent the coupling by O(w / feature))
  double scaled_sample(double eps, double x, double w) const {
    switch (family_) {
      case Family::None:
        return 0.0;
      case Family::SquareWell:
        return scaled_cell_average(eps, x, w);
      case Family::Gaussian:
        return eps * b_ >= 3.0 * w ? scaled_value(eps, x)
                                   : scaled_cell_average(eps, x, w);
      case Family::PowerTail:
        return eps >= 3.0 * w ? scaled_value(eps, x)
                              : scaled_cell_average(eps, x, w);
    }
    return 0.0;
  }

 private:
  Potential(Family f, double a, double b, double eta)
      : family_(f), a_(a), b_(b), eta_(eta) {}
  Family family_;
  double a_, b_, eta_;
};

using PairPotentials = std::array<Potential, 3>;  // indexed by spectator

}  // namespace delta3b
