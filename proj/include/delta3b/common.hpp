#pragma once

#include <atomic>
#include <complex>
#include <memory>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace delta3b {

using Complex = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2Pi = 2.50662827463100050241;

struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ExtrapolationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a discretized linear system is (numerically) singular,
// e.g. lambda sits on a two- or three-body bound state.
struct NearSingularError : std::runtime_error {
  double lambda;
  NearSingularError(const std::string& msg, double lam)
      : std::runtime_error(msg), lambda(lam) {}
};

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Global worker cap, set once by the CLI (--threads); default single-threaded
// so results are bitwise reproducible.
inline std::atomic<int>& thread_cap() {
  static std::atomic<int> cap{1};
  return cap;
}

// Static partition over [0, n); each worker writes only its own indices, so
// multi-threaded runs stay deterministic as long as outputs are per-index.
template <typename Fn>
void parallel_for(int n, Fn&& fn) {
  int workers = std::min(thread_cap().load(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([=, &fn] {
      for (int i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

// Counts off-range interpolation arguments that were clamped to the grid edge.
struct ClampStats {
  std::atomic<long> clamped{0};
  std::atomic<long> total{0};
  double fraction() const {
    long t = total.load();
    return t == 0 ? 0.0 : double(clamped.load()) / double(t);
  }
  void reset() {
    clamped = 0;
    total = 0;
  }
};

inline MatrixXcd apply_real(const MatrixXd& m, const MatrixXcd& v) {
  MatrixXcd out(m.rows(), v.cols());
  out.real() = m * v.real();
  out.imag() = m * v.imag();
  return out;
}

inline VectorXcd apply_real(const MatrixXd& m, const VectorXcd& v) {
  VectorXcd out(m.rows());
  out.real() = m * v.real();
  out.imag() = m * v.imag();
  return out;
}

}  // namespace delta3b
