#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "bloom/akima.hpp"
#include "bloom/diagnostics.hpp"
#include "bloom/errors.hpp"
#include "bloom/wind.hpp"

using namespace bloom;

namespace {

WindSeries parse(const std::string& text) {
  std::istringstream in(text);
  return parse_wind_records(in);
}

struct CaptureWarnings {
  std::vector<std::string> messages;
  WarningSink previous;
  CaptureWarnings() {
    previous = set_warning_sink([this](const std::string& m) { messages.push_back(m); });
  }
  ~CaptureWarnings() { set_warning_sink(previous); }
};

}  // namespace

TEST(Akima, InterpolatesKnots) {
  const std::vector<double> x{0, 1, 2.5, 3, 4.2, 6};
  const std::vector<double> y{1, -2, 0.5, 3, 3, -1};
  AkimaSpline s(x, y);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_DOUBLE_EQ(s(x[i]), y[i]);
}

TEST(Akima, ReproducesLines) {
  const std::vector<double> x{0, 0.3, 1.1, 2, 2.2, 5};
  std::vector<double> y;
  for (double xi : x) y.push_back(3.0 - 2.0 * xi);
  AkimaSpline s(x, y);
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double mid = 0.5 * (x[i] + x[i + 1]);
    EXPECT_NEAR(s(mid), 3.0 - 2.0 * mid, 1e-13);
  }
}

TEST(Akima, NoOvershootOnStep) {
  AkimaSpline s({0, 1, 2, 3, 4, 5}, {0, 0, 0, 1, 1, 1});
  for (double x = 0.0; x <= 5.0; x += 0.01) {
    EXPECT_GE(s(x), -1e-12);
    EXPECT_LE(s(x), 1.0 + 1e-12);
  }
}

TEST(Akima, ClampsOutsideRange) {
  AkimaSpline s({0, 1, 2}, {5, 6, 8});
  EXPECT_DOUBLE_EQ(s(-3.0), 5.0);
  EXPECT_DOUBLE_EQ(s(10.0), 8.0);
  EXPECT_THROW(AkimaSpline({0, 0}, {1, 2}), std::invalid_argument);
}

TEST(WindParse, TwoRows) {
  const WindSeries s = parse("timestamp,u_mps,v_mps\n0,1,0\n1,0,1\n");
  EXPECT_EQ(s.size(), 2u);
  EXPECT_DOUBLE_EQ(s.u()[0], 1.0);
}

TEST(WindParse, SortsRows) {
  const WindSeries s = parse("timestamp,u_mps,v_mps\n2,3,0\n0,1,0\n1,2,1\n");
  EXPECT_EQ(s.times(), (std::vector<double>{0, 1, 2}));
  EXPECT_EQ(s.u(), (std::vector<double>{1, 2, 3}));
}

TEST(WindParse, RejectsDuplicates) {
  EXPECT_THROW(parse("timestamp,u_mps,v_mps\n0,1,0\n0,2,0\n"), ConfigError);
}

TEST(WindParse, ReportsLineOfMalformedRow) {
  try {
    parse("timestamp,u_mps,v_mps\n0,1,0\n1,x,0\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(WindParse, NeedsTwoRowsAndHeader) {
  EXPECT_THROW(parse("timestamp,u_mps,v_mps\n0,1,0\n"), ConfigError);
  EXPECT_THROW(parse(""), ConfigError);
}

TEST(WindParse, IsoTimestamps) {
  const WindSeries s = parse(
      "timestamp,u_mps,v_mps\n2023-06-01T06:00:00Z,1,0\n2023-06-02T18:00,2,0\n2023-06-01 12:30:00,0,0\n");
  ASSERT_EQ(s.size(), 3u);
  EXPECT_DOUBLE_EQ(s.times()[0], 0.25);
  EXPECT_NEAR(s.times()[1], 12.5 / 24.0, 1e-12);
  EXPECT_DOUBLE_EQ(s.times()[2], 1.75);
}

TEST(WindParse, TimezoneOffsets) {
  const WindSeries s = parse("timestamp,u_mps,v_mps\n2023-01-01T12:00Z,0,0\n2023-01-01T12:00+06:00,1,1\n");
  // 12:00+06:00 is 06:00 UTC, so it sorts first.
  EXPECT_DOUBLE_EQ(s.times()[0], 0.25);
  EXPECT_DOUBLE_EQ(s.u()[0], 1.0);
  EXPECT_THROW(parse("timestamp,u_mps,v_mps\n2023-01-01T00:00Z,0,0\n2023-01-01T06:00+06:00,1,1\n"),
               ConfigError);
}

TEST(WindAggregate, IdenticalHoursGiveOneDay) {
  std::vector<double> t, u, v;
  for (int h = 0; h < 24; ++h) {
    t.push_back(h / 24.0);
    u.push_back(2.0);
    v.push_back(-1.0);
  }
  const WindSeries d = aggregate_daily(WindSeries(t, u, v));
  ASSERT_EQ(d.size(), 1u);
  EXPECT_DOUBLE_EQ(d.u()[0], 2.0);
  EXPECT_DOUBLE_EQ(d.v()[0], -1.0);
  EXPECT_DOUBLE_EQ(d.times()[0], 0.5);
}

TEST(WindAggregate, AlternatingMeansZero) {
  std::vector<double> t, u, v;
  for (int h = 0; h < 48; ++h) {
    t.push_back(h / 24.0);
    u.push_back(h % 2 ? 1.0 : -1.0);
    v.push_back(0.0);
  }
  const WindSeries d = aggregate_daily(WindSeries(t, u, v));
  ASSERT_EQ(d.size(), 2u);
  EXPECT_DOUBLE_EQ(d.u()[0], 0.0);
  EXPECT_DOUBLE_EQ(d.u()[1], 0.0);
}

TEST(WindAggregate, CarriesEmptyDaysForward) {
  CaptureWarnings capture;
  const WindSeries d = aggregate_daily(WindSeries({0.2, 0.7, 3.5}, {1.0, 3.0, 7.0}, {0.0, 0.0, 1.0}));
  ASSERT_EQ(d.size(), 4u);
  EXPECT_DOUBLE_EQ(d.u()[1], 2.0);
  EXPECT_DOUBLE_EQ(d.u()[2], 2.0);
  EXPECT_DOUBLE_EQ(d.u()[3], 7.0);
  EXPECT_EQ(capture.messages.size(), 2u);
}

TEST(WindEval, KnotValuesInMetresPerDay) {
  const WindSeries s({0.5, 1.5, 2.5, 3.5}, {1.0, -2.0, 0.5, 0.0}, {0.0, 1.0, 1.0, -3.0});
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Eigen::Vector2d w = wind_at(s, s.times()[i]);
    EXPECT_NEAR(w(0), s.u()[i] * kSecondsPerDay, 1e-9);
    EXPECT_NEAR(w(1), s.v()[i] * kSecondsPerDay, 1e-9);
  }
  EXPECT_EQ(wind_at(s, -10.0), wind_at(s, 0.5));
  EXPECT_EQ(wind_at(s, 99.0), wind_at(s, 3.5));
}

TEST(WindEval, LinearDataExactAtMidpoints) {
  const WindSeries s({0, 1, 2, 3, 4}, {0.0, 0.5, 1.0, 1.5, 2.0}, {1.0, 0.8, 0.6, 0.4, 0.2});
  for (double t = 0.5; t < 4.0; t += 1.0) {
    const Eigen::Vector2d w = wind_at(s, t) / kSecondsPerDay;
    EXPECT_NEAR(w(0), 0.5 * t, 1e-13);
    EXPECT_NEAR(w(1), 1.0 - 0.2 * t, 1e-13);
  }
}

TEST(WindEval, SpeedCappedDirectionKept) {
  const WindSeries s({0, 1, 2}, {1.0, 12.0 * 0.6, 1.0}, {0.0, 12.0 * 0.8, 0.0});
  const Eigen::Vector2d w = wind_at(s, 1.0) / kSecondsPerDay;
  EXPECT_NEAR(w.norm(), 5.0, 1e-12);
  EXPECT_NEAR(w(0) / w(1), 0.75, 1e-12);
  for (double t = 0.0; t <= 2.0; t += 0.01) EXPECT_LE(wind_at(s, t).norm(), 5.0 * kSecondsPerDay * (1 + 1e-12));
}

TEST(WindEval, DailyMeansReproducedAtDayCentres) {
  std::vector<double> t, u, v;
  for (int h = 0; h < 24 * 5; ++h) {
    t.push_back(h / 24.0);
    u.push_back(std::sin(h * 0.37));
    v.push_back(std::cos(h * 0.11));
  }
  const WindSeries d = aggregate_daily(WindSeries(t, u, v));
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_NEAR(wind_at(d, d.times()[i])(0), d.u()[i] * kSecondsPerDay, 1e-9);
    EXPECT_NEAR(wind_at(d, d.times()[i])(1), d.v()[i] * kSecondsPerDay, 1e-9);
  }
}

TEST(SyntheticWind, Properties) {
  const auto w = synthetic_wind(3.0, 10.0, 0.0);
  EXPECT_NEAR(w(0.0)(0), 0.0, 1e-15);
  EXPECT_NEAR(w(0.0)(1), 3.0, 1e-15);
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d x = w(10.0 * i / n);
    EXPECT_NEAR(x.norm(), 3.0, 1e-12);
    mean += x / n;
  }
  EXPECT_LT(mean.norm(), 1e-12);
  EXPECT_THROW(synthetic_wind(1.0, 0.0, 0.0), DomainError);
}
