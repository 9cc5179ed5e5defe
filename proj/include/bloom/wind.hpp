#pragma once

#include <functional>
#include <istream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bloom/akima.hpp"

namespace bloom {

inline constexpr double kSecondsPerDay = 86400.0;
/// Interpolated wind speeds above this are capped (direction preserved).
inline constexpr double kMaxWindSpeed = 5.0;  // m/s

/// Time series of horizontal wind. Times are days since the start of the
/// record; u (east) and v (north) are in m/s. Immutable once built.
class WindSeries {
 public:
  WindSeries(std::vector<double> times, std::vector<double> u, std::vector<double> v);

  const std::vector<double>& times() const { return times_; }
  const std::vector<double>& u() const { return u_; }
  const std::vector<double>& v() const { return v_; }
  std::size_t size() const { return times_.size(); }

  /// Akima-interpolated wind in m/day, speed capped at kMaxWindSpeed before
  /// conversion. Times outside the record are clamped to its ends.
  Eigen::Vector2d at(double t) const;

 private:
  std::vector<double> times_, u_, v_;
  AkimaSpline spline_u_, spline_v_;
};

/// Reads `timestamp,u_mps,v_mps` CSV. Timestamps are either fractional day
/// numbers or ISO-8601 date-times (converted to days since 00:00 UTC of the
/// earliest record's date). Rows are sorted; duplicate timestamps, malformed
/// rows (reported with line number) and fewer than two rows are errors.
WindSeries parse_wind_records(std::istream& in);
WindSeries load_wind_records(const std::string& path);

/// Mean of each calendar day's records, placed at the day centre (d + 0.5).
/// Days without records repeat the previous day's mean, with a warning.
WindSeries aggregate_daily(const WindSeries& series);

/// Same as series.at(t).
Eigen::Vector2d wind_at(const WindSeries& series, double t);

/// amplitude (sin(2 pi t / period + phase), cos(2 pi t / period + phase)).
/// Amplitude is in m/day, like every evaluated wind.
std::function<Eigen::Vector2d(double)> synthetic_wind(double amplitude, double period, double phase);

/// Wind as seen by a solver: a callable returning m/day.
using WindField = std::function<Eigen::Vector2d(double)>;

WindField no_wind();
WindField constant_wind(const Eigen::Vector2d& velocity);
WindField series_wind(WindSeries series);

}  // namespace bloom
