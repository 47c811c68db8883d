#pragma once

// PhysicalField: a function of the physical momentum configuration,
// evaluable in any spectator coordinate system. Grid-backed fields go
// through barycentric interpolation in their own coordinates, so the same
// physical function can be sampled consistently on all three natural grids.

#include <functional>
#include <memory>
#include <utility>

#include "delta3b/grid.hpp"
#include "delta3b/kinematics.hpp"

namespace delta3b {

class PhysicalField {
 public:
  using Fn = std::function<Complex(const MomentumPoint&)>;

  PhysicalField() = default;
  explicit PhysicalField(Fn fn) : fn_(std::move(fn)) {}

  // Interpret callable(q, p) in the natural coordinates of `spectator`.
  static PhysicalField from_spectator(int spectator,
                                      std::function<Complex(double, double)> f) {
    return PhysicalField([spectator, f = std::move(f)](const MomentumPoint& pt) {
      return f(pt.p[next_of(spectator)], pt.p[spectator]);
    });
  }

  static PhysicalField from_grid(GridFunction2D gf,
                                 std::shared_ptr<ClampStats> stats = nullptr) {
    auto data = std::make_shared<GridFunction2D>(std::move(gf));
    return PhysicalField([data, stats](const MomentumPoint& pt) {
      double q = pt.p[next_of(data->spectator)];
      double p = pt.p[data->spectator];
      return interpolate2d(*data, q, p, stats.get());
    });
  }

  Complex operator()(const MomentumPoint& pt) const { return fn_(pt); }

  Complex at_spectator(int ell, double q, double p) const {
    return fn_(MomentumPoint::from_spectator(ell, q, p));
  }

  explicit operator bool() const { return static_cast<bool>(fn_); }

 private:
  Fn fn_;
};

// Sample a physical field on the tensor grid in the natural coordinates of
// `spectator`. Exact (no interpolation) when the field is grid-backed in the
// same coordinates.
inline GridFunction2D sample(const PhysicalField& f, const GridPtr& grid,
                             int spectator) {
  const int n = grid->size();
  MatrixXcd v(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      v(i, j) = f.at_spectator(spectator, grid->node(i), grid->node(j));
  return {grid, spectator, std::move(v)};
}

}  // namespace delta3b
