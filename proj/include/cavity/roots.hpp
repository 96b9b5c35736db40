#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <stdexcept>
#include <string>
#include <utility>

namespace cavity {

class RootFindingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RootResult {
  double root = 0.0;
  int iterations = 0;
};

/// Value and derivative of a scalar function.
struct ValueAndSlope {
  double value;
  double slope;
};

template <typename F>
concept ScalarWithSlope = requires(F f, double x) {
  { f(x) } -> std::convertible_to<ValueAndSlope>;
};

/// Root of `f` inside [lo, hi] where f(lo) and f(hi) have opposite signs.
///
/// Bisection until the bracket has shrunk to `coarse_fraction` of its initial
/// width, then Newton steps polished inside the bracket; any Newton step that
/// leaves the bracket or stalls falls back to bisection. Stops when the step
/// is below rel_tol * |x| + abs_tol.
template <ScalarWithSlope F>
RootResult bracketed_newton(F&& f, double lo, double hi, double rel_tol = 1e-15,
                            double abs_tol = 0.0, double coarse_fraction = 1e-3,
                            int max_iterations = 400) {
  ValueAndSlope flo = f(lo);
  ValueAndSlope fhi = f(hi);
  if (flo.value == 0.0) return {lo, 0};
  if (fhi.value == 0.0) return {hi, 0};
  if ((flo.value > 0.0) == (fhi.value > 0.0)) {
    throw RootFindingError("root is not bracketed");
  }
  // Orient so that f(a) < 0 < f(b).
  double a = lo;
  double b = hi;
  if (flo.value > 0.0) std::swap(a, b);

  const double coarse_width = std::abs(hi - lo) * coarse_fraction;
  int it = 0;
  double x = 0.5 * (lo + hi);
  while (std::abs(b - a) > coarse_width && it < max_iterations) {
    ++it;
    x = 0.5 * (a + b);
    const double fx = f(x).value;
    if (fx == 0.0) return {x, it};
    (fx < 0.0 ? a : b) = x;
  }

  x = 0.5 * (a + b);
  ValueAndSlope fx = f(x);
  double dx_old = std::abs(b - a);
  double dx = dx_old;
  for (; it < max_iterations; ++it) {
    const double lo_b = std::min(a, b);
    const double hi_b = std::max(a, b);
    const double newton = x - fx.value / fx.slope;
    const bool newton_ok = std::isfinite(newton) && newton > lo_b && newton < hi_b &&
                           std::abs(2.0 * fx.value) <= std::abs(dx_old * fx.slope);
    dx_old = dx;
    if (newton_ok) {
      dx = newton - x;
      x = newton;
    } else {
      // dx measures the remaining bracket half-width, not the move.
      dx = 0.5 * (hi_b - lo_b);
      x = lo_b + dx;
    }
    if (std::abs(dx) <= rel_tol * std::abs(x) + abs_tol) return {x, it + 1};
    fx = f(x);
    if (fx.value == 0.0) return {x, it + 1};
    (fx.value < 0.0 ? a : b) = x;
    if (std::abs(b - a) <= rel_tol * std::abs(x) + abs_tol) return {x, it + 1};
  }
  throw RootFindingError("bracketed_newton exceeded " + std::to_string(max_iterations) +
                         " iterations");
}

}  // namespace cavity
