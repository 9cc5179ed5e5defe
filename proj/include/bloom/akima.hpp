#pragma once

#include <vector>

namespace bloom {

/// Akima's locally weighted cubic Hermite interpolant. Reproduces linear data
/// exactly and avoids the overshoot of global cubic splines near outliers.
class AkimaSpline {
 public:
  AkimaSpline() = default;
  /// x strictly increasing, at least one knot. Fewer than three knots
  /// degrade to constant / linear interpolation.
  AkimaSpline(std::vector<double> x, std::vector<double> y);

  /// Evaluates the interpolant; arguments outside the knot range are clamped
  /// to the end knots.
  double operator()(double x) const;

  const std::vector<double>& knots() const { return x_; }

 private:
  std::vector<double> x_, y_, slope_;
};

}  // namespace bloom
