#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "bloom/diagnostics.hpp"
#include "bloom/errors.hpp"
#include "bloom/sensitivity.hpp"

using namespace bloom;

namespace {

// First points of the unscrambled 6-dimensional Sobol' sequence as produced by
// scipy.stats.qmc.Sobol(d=6, scramble=False).
const double kReference[8][6] = {
    {0, 0, 0, 0, 0, 0},
    {.5, .5, .5, .5, .5, .5},
    {.75, .25, .25, .25, .75, .75},
    {.25, .75, .75, .75, .25, .25},
    {.375, .375, .625, .875, .375, .125},
    {.875, .875, .125, .375, .875, .625},
    {.625, .125, .875, .625, .625, .875},
    {.125, .625, .375, .125, .125, .375},
};

SobolProblem cube(int d, double lo, double hi) {
  SobolProblem p;
  for (int i = 0; i < d; ++i) p.factors.push_back({"x" + std::to_string(i), lo, hi});
  return p;
}

Eigen::VectorXd evaluate(const Eigen::MatrixXd& X, double (*f)(const Eigen::RowVectorXd&)) {
  Eigen::VectorXd y(X.rows());
  for (Eigen::Index r = 0; r < X.rows(); ++r) y(r) = f(X.row(r));
  return y;
}

double ishigami(const Eigen::RowVectorXd& x) {
  return std::sin(x(0)) + 7.0 * std::pow(std::sin(x(1)), 2) + 0.1 * std::pow(x(2), 4) * std::sin(x(0));
}

// Analytic first-order indices for a = 7, b = 0.1.
Eigen::Vector3d ishigami_s1() {
  const double pi = std::numbers::pi, a = 7.0, b = 0.1;
  const double v1 = 0.5 * std::pow(1 + b * std::pow(pi, 4) / 5, 2);
  const double v2 = a * a / 8;
  const double v13 = std::pow(b, 2) * std::pow(pi, 8) * (1.0 / 18 - 1.0 / 50);
  const double v = v1 + v2 + v13;
  return {v1 / v, v2 / v, 0.0};
}

struct Silence {
  Silence() { set_warning_sink([](const std::string&) {}); }
  ~Silence() { set_warning_sink(nullptr); }
};

}  // namespace

TEST(Sobol, MatchesReferencePoints) {
  SobolSequence seq(6);
  for (const auto& row : kReference) {
    const Eigen::VectorXd x = seq.next();
    for (int j = 0; j < 6; ++j) EXPECT_DOUBLE_EQ(x(j), row[j]);
  }
}

TEST(Sobol, OneDimensionalIsGrayOrderedVanDerCorput) {
  SobolSequence seq(1);
  const Eigen::MatrixXd pts = seq.draw(64);
  for (unsigned i = 0; i < 64; ++i) {
    double expected = 0.0, f = 0.5;
    for (unsigned g = i ^ (i >> 1); g; g >>= 1, f *= 0.5) expected += f * (g & 1u);
    EXPECT_DOUBLE_EQ(pts(i, 0), expected) << i;
  }
}

TEST(Sobol, EveryDimensionIsBalanced) {
  // Each coordinate of the first 2^k points hits every dyadic cell once.
  SobolSequence seq(SobolSequence::kMaxDim);
  const Eigen::MatrixXd pts = seq.draw(64);
  for (int j = 0; j < SobolSequence::kMaxDim; ++j) {
    std::vector<int> hits(64, 0);
    for (int i = 0; i < 64; ++i) ++hits[static_cast<int>(pts(i, j) * 64)];
    for (int h : hits) EXPECT_EQ(h, 1) << "dimension " << j;
  }
}

TEST(Sobol, RejectsBadDimension) {
  EXPECT_THROW(SobolSequence(0), DomainError);
  EXPECT_THROW(SobolSequence(22), DomainError);
}

TEST(Saltelli, RowCountBoundsAndDeterminism) {
  const SobolProblem problem = default_sobol_problem();
  const Eigen::MatrixXd X = saltelli_design(problem, 2048, 42);
  EXPECT_EQ(X.rows(), 14336);
  EXPECT_EQ(X.cols(), 5);
  for (int j = 0; j < 5; ++j) {
    EXPECT_GE(X.col(j).minCoeff(), problem.factors[j].lower);
    EXPECT_LE(X.col(j).maxCoeff(), problem.factors[j].upper);
  }
  EXPECT_EQ(X, saltelli_design(problem, 2048, 42));
  EXPECT_NE(X, saltelli_design(problem, 2048, 43));
}

TEST(Saltelli, CrossMatricesTakeOneColumnFromB) {
  const Eigen::MatrixXd X = saltelli_design(cube(3, 0, 1), 4, 1);
  for (int k = 0; k < 4; ++k) {
    const Eigen::RowVectorXd A = X.row(k * 5), B = X.row(k * 5 + 4);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) EXPECT_EQ(X(k * 5 + 1 + i, j), i == j ? B(j) : A(j));
  }
}

TEST(Saltelli, NonPowerOfTwoWarns) {
  std::vector<std::string> seen;
  set_warning_sink([&](const std::string& m) { seen.push_back(m); });
  saltelli_design(cube(2, 0, 1), 100, 0);
  set_warning_sink(nullptr);
  ASSERT_EQ(seen.size(), 1u);
  EXPECT_NE(seen[0].find("power of two"), std::string::npos);
}

TEST(Estimators, Ishigami) {
  SobolProblem p = cube(4, -std::numbers::pi, std::numbers::pi);  // x3 is a dummy
  const Eigen::MatrixXd X = saltelli_design(p, 2048, 7);
  const SobolIndices idx = estimate_indices(evaluate(X, ishigami), 4);
  const Eigen::Vector3d s1 = ishigami_s1();
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(idx.S1(i), s1(i), 0.05) << i;
  EXPECT_NEAR(idx.S1(3), 0.0, 0.03);
  EXPECT_NEAR(idx.ST(3), 0.0, 0.03);
  // x1 acts only through its interaction with x0.
  EXPECT_GT(idx.ST(2), 0.15);
}

TEST(Estimators, ErrorShrinksWithN) {
  const Eigen::Vector3d s1 = ishigami_s1();
  SobolProblem p = cube(3, -std::numbers::pi, std::numbers::pi);
  double err[2];
  int k = 0;
  for (long N : {1024L, 2048L}) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      const SobolIndices idx = estimate_indices(evaluate(saltelli_design(p, N, seed), ishigami), 3);
      total += (idx.S1 - s1).cwiseAbs().sum();
    }
    err[k++] = total;
  }
  EXPECT_LT(err[1], err[0]);
}

TEST(Estimators, AdditiveLinearMap) {
  // y = 1 x0 + 2 x1 + 3 x2 on U(0,1): shares 1:4:9.
  const Eigen::MatrixXd X = saltelli_design(cube(3, 0, 1), 1024, 3);
  const SobolIndices idx =
      estimate_indices(evaluate(X, [](const Eigen::RowVectorXd& x) { return x(0) + 2 * x(1) + 3 * x(2); }), 3);
  const Eigen::Vector3d share(1.0 / 14, 4.0 / 14, 9.0 / 14);
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(idx.S1(i), share(i), 0.03);
    EXPECT_NEAR(idx.ST(i), idx.S1(i), 0.03);
  }
}

TEST(Estimators, ConstantOutputThrows) {
  Eigen::VectorXd y = Eigen::VectorXd::Constant(5 * 8, 2.5);
  try {
    estimate_indices(y, 3);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("constant output"), std::string::npos);
  }
}

TEST(Estimators, NonFiniteDropsWholeBlock) {
  const Eigen::MatrixXd X = saltelli_design(cube(2, 0, 1), 256, 5);
  Eigen::VectorXd y = evaluate(X, [](const Eigen::RowVectorXd& x) { return x(0) + x(1) * x(1); });
  const SobolIndices clean = estimate_indices(y.tail(y.size() - 4), 2);
  y(1) = std::numeric_limits<double>::quiet_NaN();
  const SobolIndices dropped = estimate_indices(y, 2);
  EXPECT_TRUE(dropped.S1.isApprox(clean.S1));
  EXPECT_TRUE(dropped.ST.isApprox(clean.ST));
  EXPECT_THROW(estimate_indices(y.head(7), 2), DomainError);
}

TEST(Bins, EqualWidths) {
  const auto e = time_bins(365, 60);
  ASSERT_EQ(e.size(), 7u);
  EXPECT_DOUBLE_EQ(e.front(), 0.0);
  EXPECT_DOUBLE_EQ(e.back(), 365.0);
  EXPECT_NEAR(e[1], 365.0 / 6, 1e-12);
  EXPECT_THROW(time_bins(0, 60), DomainError);
}

namespace {

// Cheap spatial model: two "grid points" whose bin values are analytic
// functions of the parameters, so the pipeline can be checked quickly.
Eigen::MatrixXd toy_model(const ModelParams& prm) {
  Eigen::MatrixXd out(2, 3);
  for (int b = 0; b < 3; ++b) {
    out(0, b) = prm.K_bg + 10.0 * b * prm.D;
    out(1, b) = 2 * prm.K_bg + 20.0 * b * prm.D;
  }
  return out;
}

}  // namespace

TEST(Pipeline, ReportShapeAndDeterminism) {
  Silence quiet;
  SobolProblem p{{{"K_bg", 0.1, 1.0}, {"D", 0.01, 0.1}, {"P_in", 0.0, 0.3}}};
  SensitivityOptions opt;
  opt.N = 128;
  opt.seed = 9;
  opt.threads = 3;
  const auto edges = std::vector<double>{0, 1, 2, 3};
  const SensitivityReport r = run_sensitivity(p, ModelParams{}, toy_model, edges, opt);
  ASSERT_EQ(r.rows.size(), 9u);
  EXPECT_EQ(r.bins(), 3);
  EXPECT_NEAR(r.at("K_bg", 0).S1_mean, 1.0, 0.05);
  EXPECT_NEAR(r.at("K_bg", 0).ST_mean, 1.0, 0.02);
  EXPECT_NEAR(r.at("P_in", 2).ST_mean, 0.0, 1e-12);
  EXPECT_GT(r.at("D", 2).S1_mean, r.at("D", 1).S1_mean);
  EXPECT_EQ(r.at("D", 1).N, 128);
  // Both points carry identical indices (outputs differ only by scale).
  EXPECT_NEAR(r.at("D", 2).S1_sd, 0.0, 1e-9);

  opt.threads = 1;
  const SensitivityReport again = run_sensitivity(p, ModelParams{}, toy_model, edges, opt);
  std::ostringstream a, b;
  write_report_csv(a, r);
  write_report_csv(b, again);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "factor,bin_start,bin_end,S1_mean,S1_sd,ST_mean,ST_sd,N");
}

TEST(Pipeline, CollapsedRangesAreConstantOutput) {
  Silence quiet;
  SobolProblem p{{{"K_bg", 0.5, 0.5}, {"D", 0.02, 0.02}}};
  SensitivityOptions opt;
  opt.N = 16;
  try {
    run_sensitivity(p, ModelParams{}, toy_model, {0, 1, 2, 3}, opt);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("constant output"), std::string::npos);
  }
}

TEST(Pipeline, TooManyFailuresAborts) {
  Silence quiet;
  SobolProblem p{{{"K_bg", 0.1, 1.0}, {"D", 0.01, 0.1}}};
  SensitivityOptions opt;
  opt.N = 64;
  auto flaky = [](const ModelParams& prm) -> Eigen::MatrixXd {
    if (prm.K_bg > 0.8) throw SolverError("step failure", 0.0, Eigen::VectorXd());
    return toy_model(prm);
  };
  EXPECT_THROW(run_sensitivity(p, ModelParams{}, flaky, {0, 1, 2, 3}, opt), SolverError);
}

TEST(Pipeline, UnknownFactorIsConfigError) {
  SobolProblem p{{{"nope", 0, 1}}};
  SensitivityOptions opt;
  opt.N = 4;
  EXPECT_ANY_THROW(run_sensitivity(p, ModelParams{}, toy_model, {0, 1}, opt));
}

TEST(Pipeline, Solver1dModelShape) {
  const auto edges = time_bins(20, 10);
  const Eigen::MatrixXd out = solver1d_model(11, edges)(ModelParams{});
  EXPECT_EQ(out.rows(), 11);
  EXPECT_EQ(out.cols(), 2);
  EXPECT_TRUE((out.array() > 0).all());
}
