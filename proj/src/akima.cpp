#include "bloom/akima.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bloom {

AkimaSpline::AkimaSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n == 0 || n != y_.size()) throw std::invalid_argument("Akima: need matching non-empty knots");
  for (std::size_t i = 1; i < n; ++i)
    if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("Akima: knots must be strictly increasing");
  slope_.assign(n, 0.0);
  if (n == 1) return;

  // Secant slopes with two extrapolated slopes on each side; m[i + 2] is the
  // slope of interval i.
  std::vector<double> m(n + 3);
  for (std::size_t i = 0; i + 1 < n; ++i) m[i + 2] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
  if (n == 2) {
    slope_[0] = slope_[1] = m[2];
    return;
  }
  m[1] = 2.0 * m[2] - m[3];
  m[0] = 2.0 * m[1] - m[2];
  m[n + 1] = 2.0 * m[n] - m[n - 1];
  m[n + 2] = 2.0 * m[n + 1] - m[n];

  for (std::size_t i = 0; i < n; ++i) {
    const double w_left = std::abs(m[i + 3] - m[i + 2]);
    const double w_right = std::abs(m[i + 1] - m[i]);
    const double denom = w_left + w_right;
    slope_[i] = denom > 0.0 ? (w_left * m[i + 1] + w_right * m[i + 2]) / denom
                            : 0.5 * (m[i + 1] + m[i + 2]);
  }
}

double AkimaSpline::operator()(double x) const {
  if (x_.empty()) throw std::logic_error("Akima: empty spline");
  if (x <= x_.front()) return y_.front();
  if (x >= x_.back()) return y_.back();
  const auto it = std::upper_bound(x_.begin(), x_.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
  const double h = x_[i + 1] - x_[i];
  const double s = (x - x_[i]) / h;
  const double s2 = s * s, s3 = s2 * s;
  // Cubic Hermite basis.
  return (2 * s3 - 3 * s2 + 1) * y_[i] + (s3 - 2 * s2 + s) * h * slope_[i] +
         (-2 * s3 + 3 * s2) * y_[i + 1] + (s3 - s2) * h * slope_[i + 1];
}

}  // namespace bloom
