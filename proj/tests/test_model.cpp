#include <cmath>
#include <complex>
#include <random>

#include <gtest/gtest.h>

#include "bloom/errors.hpp"
#include "bloom/model.hpp"

using namespace bloom;

namespace {

// Independent restatement of h(B) by midpoint quadrature of the Monod light
// response over depth.
double h_by_quadrature(double B, const ModelParams& prm) {
  const int n = 20000;
  const double ds = prm.z_m / n;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double I = prm.I_in * std::exp(-(prm.K_bg + prm.k * B) * (i + 0.5) * ds);
    sum += I / (prm.H + I) * ds;
  }
  return sum / prm.z_m;
}

}  // namespace

TEST(Params, DefaultsValidate) { EXPECT_NO_THROW(ModelParams{}.validate()); }

TEST(Params, ValidateListsEveryProblem) {
  ModelParams prm;
  prm.alpha = -1.0;
  prm.Q_m = 0.05;
  try {
    prm.validate();
    FAIL();
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("alpha"), std::string::npos);
    EXPECT_NE(what.find("Q_m"), std::string::npos);
  }
}

TEST(Params, FieldLookup) {
  ModelParams prm;
  prm.field("K_bg") = 0.7;
  EXPECT_DOUBLE_EQ(prm.K_bg, 0.7);
  EXPECT_THROW(prm.field("nope"), ConfigError);
  EXPECT_EQ(ModelParams::field_names().size(), 18u);
}

TEST(Kernels, LightAtSurfaceIsIncident) {
  ModelParams prm;
  EXPECT_DOUBLE_EQ(light_intensity(0.0, 5.0, prm), prm.I_in);
  EXPECT_THROW(light_intensity(-1.0, 0.0, prm), DomainError);
}

TEST(Kernels, GrowthMatchesDepthAverage) {
  ModelParams prm;
  for (double B : {0.0, 1.0, 16.0, 500.0}) EXPECT_NEAR(growth_h(B, prm), h_by_quadrature(B, prm), 1e-8);
  EXPECT_NEAR(growth_h(0.0, prm), 0.539648, 1e-6);
}

TEST(Kernels, GrowthDecreasesInBiomass) {
  ModelParams prm;
  double prev = growth_h(0.0, prm);
  for (double B = 10.0; B < 5000.0; B *= 2.0) {
    const double h = growth_h(B, prm);
    EXPECT_LT(h, prev);
    prev = h;
  }
}

TEST(Kernels, GrowthDerivativeMatchesComplexStep) {
  ModelParams prm;
  for (double B : {0.0, 3.0, 16.3, 800.0}) {
    const double step = 1e-20;
    const auto hc = kernel::growth_h(std::complex<double>(B, step), prm);
    EXPECT_NEAR(kernel::growth_h_prime(B, prm), hc.imag() / step, 1e-12);
  }
}

TEST(Kernels, UptakeVanishesAtMaxQuota) {
  ModelParams prm;
  EXPECT_DOUBLE_EQ(uptake_rho(prm.Q_M, 1.0, prm), 0.0);
  EXPECT_NEAR(uptake_rho(prm.Q_m, 1.0, prm), prm.rho_m * 1.0 / 2.5, 1e-15);
  EXPECT_THROW(uptake_rho(0.5, 1.0, prm), DomainError);
  EXPECT_NEAR(uptake_eta(10.0, 0.1, 0.3, prm), uptake_rho(0.01, 0.3, prm) * 10.0, 1e-14);
}

TEST(Equilibria, QHatIsFixedPointOfQuotaDynamics) {
  // At B -> 0 the quota obeys Q' = rho(Q, P_h) - r (Q - Q_m) h(0).
  for (double r : {0.7, 1.0}) {
    const ModelParams prm = stability_case(r, 0.2);
    const double q = q_hat(prm);
    EXPECT_GT(q, prm.Q_m);
    EXPECT_LT(q, prm.Q_M);
    EXPECT_NEAR(uptake_rho(q, prm.P_h, prm) - r * (q - prm.Q_m) * growth_h(0.0, prm), 0.0, 1e-14);
  }
  EXPECT_NEAR(q_hat(stability_case(0.7, 0.2)), 0.036270, 1e-6);
  EXPECT_NEAR(q_hat(stability_case(1.0, 0.2)), 0.034898, 1e-6);
  EXPECT_DOUBLE_EQ(q_hat(stability_case(0.7, 0.0)), stability_case(0.7, 0.0).Q_m);
}

TEST(Equilibria, ReproductiveIndexGoldenValues) {
  EXPECT_EQ(r0(stability_case(0.7, 0.0)), 0.0);
  EXPECT_NEAR(r0(stability_case(0.7, 0.2)), 0.9494, 5e-4);
  EXPECT_NEAR(r0(stability_case(1.0, 0.2)), 1.3497, 5e-4);
}

TEST(Equilibria, ReproductiveIndexMonotoneInPh) {
  double prev = 0.0;
  for (double P_h = 0.05; P_h < 5.0; P_h *= 1.5) {
    const double value = r0(stability_case(1.0, P_h));
    EXPECT_GT(value, prev);
    prev = value;
  }
}

TEST(Equilibria, BiomassBoundIsRootOfBracket) {
  ModelParams prm;
  const double bound = b_bar(prm);
  ASSERT_GT(bound, 0.0);
  EXPECT_NEAR(biomass_bound_bracket(bound, prm) / bound, 0.0, 1e-12);
  EXPECT_GT(biomass_bound_bracket(0.5 * bound, prm), 0.0);
  EXPECT_LT(biomass_bound_bracket(2.0 * bound, prm), 0.0);
}

TEST(Reaction, ExtinctionStateIsSteady) {
  ModelParams prm;
  const Eigen::Vector3d f = reaction_rhs({0.0, 0.0, prm.P_h}, prm);
  EXPECT_EQ(f.norm(), 0.0);
}

TEST(Reaction, ClosedSystemConservesPhosphorus) {
  ModelParams prm;
  prm.D = 1e-300;  // exchange effectively off
  prm.P_in = 0.0;
  for (const HomState s : {HomState{5.0, 0.05, 0.3}, HomState{100.0, 3.0, 0.01}}) {
    const Eigen::Vector3d f = reaction_rhs(s, prm);
    EXPECT_NEAR(f(1) + f(2), 0.0, 1e-15);
  }
}

TEST(Reaction, RejectsInvalidStates) {
  ModelParams prm;
  EXPECT_THROW(reaction_rhs({-1.0, 0.0, 0.0}, prm), DomainError);
  EXPECT_THROW(reaction_rhs({1.0, 0.0, 0.0}, prm), DomainError);
}

TEST(Reaction, JacobianMatchesFiniteDifferences) {
  ModelParams prm;
  const HomState s{16.2785, 0.1920, 0.0080};
  const Eigen::Matrix3d jac = reaction_jacobian(s, prm);
  for (int j = 0; j < 3; ++j) {
    Eigen::Vector3d plus = s.vec(), minus = s.vec();
    const double step = 1e-6 * std::max(1.0, std::abs(s.vec()(j)));
    plus(j) += step;
    minus(j) -= step;
    const Eigen::Vector3d col =
        (reaction_rhs(HomState::from(plus), prm) - reaction_rhs(HomState::from(minus), prm)) / (2 * step);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(jac(i, j), col(i), 1e-6 * (1.0 + std::abs(col(i))));
  }
}

TEST(Reaction, QuotaTubeIsForwardInvariant) {
  // On the faces Q = Q_m and Q = Q_M the quota rate points inward, for random
  // biomass and dissolved phosphorus and both growth regimes.
  std::mt19937 gen(20240611);
  std::uniform_real_distribution<double> logB(-3.0, 3.0), unitP(0.0, 3.0);
  for (const double r : {0.7, 1.0}) {
    const ModelParams prm = stability_case(r, 0.2);
    for (int trial = 0; trial < 500; ++trial) {
      const double B = std::pow(10.0, logB(gen)), P = unitP(gen);
      for (const double Q : {prm.Q_m, prm.Q_M}) {
        const Eigen::Vector3d f = reaction_rhs({B, Q * B, P}, prm);
        const double dQ = (f(1) - Q * f(0)) / B;
        if (Q == prm.Q_m)
          EXPECT_GE(dQ, -1e-12) << "B = " << B << ", P = " << P;
        else
          EXPECT_LE(dQ, 1e-12) << "B = " << B << ", P = " << P;
      }
    }
  }
}
