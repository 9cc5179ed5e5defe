#include "bloom/wind.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "bloom/diagnostics.hpp"
#include "bloom/errors.hpp"

namespace bloom {
namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return s.substr(first, last - first + 1);
}

bool parse_number(const std::string& text, double& out) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

// Seconds since the Unix epoch of "YYYY-MM-DD[(T| )hh:mm[:ss[.fff]]][Z|(+|-)hh:mm]".
bool parse_iso8601(const std::string& text, double& seconds) {
  int year, month, day, hour = 0, minute = 0;
  double second = 0.0;
  char sep;
  std::istringstream in(text);
  in >> year >> sep;
  if (!in || sep != '-') return false;
  in >> month >> sep;
  if (!in || sep != '-') return false;
  in >> day;
  if (!in) return false;
  double offset = 0.0;
  if (in.peek() == 'T' || in.peek() == ' ') {
    in.get();
    in >> hour >> sep >> minute;
    if (!in || sep != ':') return false;
    if (in.peek() == ':') {
      in.get();
      in >> second;
      if (!in) return false;
    }
    const int zone = in.peek();
    if (zone == 'Z') {
      in.get();
    } else if (zone == '+' || zone == '-') {
      in.get();
      int oh, om = 0;
      in >> oh;
      if (in.peek() == ':') in.get();
      if (std::isdigit(in.peek())) in >> om;
      offset = (zone == '+' ? 1.0 : -1.0) * (oh * 3600.0 + om * 60.0);
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) return false;
  const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                                        std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour < 0 || hour > 23 || minute < 0 || minute > 59 || second < 0.0 || second >= 61.0)
    return false;
  const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
  seconds = days * kSecondsPerDay + hour * 3600.0 + minute * 60.0 + second - offset;
  return true;
}

}  // namespace

WindSeries::WindSeries(std::vector<double> times, std::vector<double> u, std::vector<double> v)
    : times_(std::move(times)), u_(std::move(u)), v_(std::move(v)) {
  if (times_.empty() || times_.size() != u_.size() || times_.size() != v_.size())
    throw DomainError("wind series needs matching, non-empty columns");
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!std::isfinite(times_[i]) || !std::isfinite(u_[i]) || !std::isfinite(v_[i]))
      throw DomainError("wind series contains non-finite values");
    if (i > 0 && !(times_[i] > times_[i - 1])) throw DomainError("wind times must be strictly increasing");
  }
  spline_u_ = AkimaSpline(times_, u_);
  spline_v_ = AkimaSpline(times_, v_);
}

Eigen::Vector2d WindSeries::at(double t) const {
  Eigen::Vector2d w(spline_u_(t), spline_v_(t));
  const double speed = w.norm();
  if (speed > kMaxWindSpeed) w *= kMaxWindSpeed / speed;
  return w * kSecondsPerDay;
}

Eigen::Vector2d wind_at(const WindSeries& series, double t) { return series.at(t); }

WindSeries parse_wind_records(std::istream& in) {
  std::string line;
  int line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = true;
      break;
    }
  }
  if (!header) throw ConfigError("wind CSV: missing header row");
  {
    std::istringstream cols(line);
    std::string name;
    std::vector<std::string> names;
    while (std::getline(cols, name, ',')) names.push_back(trim(name));
    if (names.size() != 3) throw ConfigError("wind CSV: header must have 3 columns (timestamp,u_mps,v_mps)");
  }

  struct Row {
    double t, u, v;
    int line;
  };
  std::vector<Row> rows;
  int iso_rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::istringstream cols(line);
    std::string field;
    std::vector<std::string> f;
    while (std::getline(cols, field, ',')) f.push_back(trim(field));
    Row row{0, 0, 0, line_no};
    bool ok = f.size() == 3 && parse_number(f[1], row.u) && parse_number(f[2], row.v);
    if (ok) {
      if (parse_number(f[0], row.t)) {
      } else if (parse_iso8601(f[0], row.t)) {
        ++iso_rows;
      } else {
        ok = false;
      }
    }
    if (!ok) throw ConfigError("wind CSV: malformed row at line " + std::to_string(line_no));
    rows.push_back(row);
  }
  if (rows.size() < 2) throw ConfigError("wind CSV: need at least two records");
  if (iso_rows != 0 && iso_rows != static_cast<int>(rows.size()))
    throw ConfigError("wind CSV: mixed ISO-8601 and numeric timestamps");

  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].t == rows[i - 1].t)
      throw ConfigError("wind CSV: duplicate timestamp at lines " + std::to_string(rows[i - 1].line) + " and " +
                        std::to_string(rows[i].line));

  double origin = 0.0;
  double scale = 1.0;
  if (iso_rows > 0) {
    origin = std::floor(rows.front().t / kSecondsPerDay) * kSecondsPerDay;
    scale = 1.0 / kSecondsPerDay;
  }
  std::vector<double> t, u, v;
  for (const Row& r : rows) {
    t.push_back((r.t - origin) * scale);
    u.push_back(r.u);
    v.push_back(r.v);
  }
  return WindSeries(std::move(t), std::move(u), std::move(v));
}

WindSeries load_wind_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open wind file '" + path + "'");
  return parse_wind_records(in);
}

WindSeries aggregate_daily(const WindSeries& series) {
  const auto& times = series.times();
  const long first = static_cast<long>(std::floor(times.front()));
  const long last = static_cast<long>(std::floor(times.back()));
  std::map<long, std::array<double, 3>> sums;  // day -> (sum u, sum v, count)
  for (std::size_t i = 0; i < times.size(); ++i) {
    auto& s = sums[static_cast<long>(std::floor(times[i]))];
    s[0] += series.u()[i];
    s[1] += series.v()[i];
    s[2] += 1.0;
  }
  std::vector<double> t, u, v;
  for (long day = first; day <= last; ++day) {
    const auto it = sums.find(day);
    t.push_back(day + 0.5);
    if (it == sums.end()) {
      warn("wind: no records on day " + std::to_string(day) + "; carrying previous day forward");
      u.push_back(u.back());
      v.push_back(v.back());
    } else {
      u.push_back(it->second[0] / it->second[2]);
      v.push_back(it->second[1] / it->second[2]);
    }
  }
  return WindSeries(std::move(t), std::move(u), std::move(v));
}

std::function<Eigen::Vector2d(double)> synthetic_wind(double amplitude, double period, double phase) {
  if (!(period > 0.0)) throw DomainError("synthetic wind period must be > 0");
  return [=](double t) {
    const double angle = 2.0 * std::numbers::pi * t / period + phase;
    return Eigen::Vector2d(amplitude * std::sin(angle), amplitude * std::cos(angle));
  };
}

WindField no_wind() {
  return [](double) { return Eigen::Vector2d::Zero().eval(); };
}

WindField constant_wind(const Eigen::Vector2d& velocity) {
  return [velocity](double) { return velocity; };
}

WindField series_wind(WindSeries series) {
  return [s = std::move(series)](double t) { return s.at(t); };
}

}  // namespace bloom
