#include <cmath>
#include <filesystem>
#include <fstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <gtest/gtest.h>

#include "bloom/diagnostics.hpp"
#include "bloom/errors.hpp"
#include "bloom/kernels.hpp"
#include "bloom/model.hpp"
#include "bloom/params.hpp"
#include "bloom/solver2d.hpp"

using namespace bloom;

namespace {

std::string data(const std::string& name) { return std::string(BLOOM_TEST_DATA) + "/" + name; }

const TriMesh& lake() {
  static const TriMesh mesh = [] {
    const WarningSink previous = set_warning_sink([](const std::string&) {});
    TriMesh m = load_gmsh_mesh(data("lake_coarse.msh"));
    set_warning_sink(previous);
    return m;
  }();
  return mesh;
}

const TriMesh& square() {
  static const TriMesh mesh = [] {
    const WarningSink previous = set_warning_sink([](const std::string&) {});
    TriMesh m = load_gmsh_mesh(data("unit_square.msh"));
    set_warning_sink(previous);
    return m;
  }();
  return mesh;
}

// One backward-Euler step of y' = R(y) for a single homogeneous state, by
// Newton on the 3x3 system with a finite-difference Jacobian.
Eigen::Vector3d scalar_backward_euler(const Eigen::Vector3d& y0, double dt, const ModelParams& prm, double eps) {
  auto R = [&](const Eigen::Vector3d& y) { return kernel::rates_regularized(y(0), y(1), y(2), eps, prm); };
  Eigen::Vector3d y = y0;
  for (int it = 0; it < 50; ++it) {
    const Eigen::Vector3d F = y - y0 - dt * R(y);
    Eigen::Matrix3d J;
    for (int j = 0; j < 3; ++j) {
      Eigen::Vector3d yp = y, ym = y;
      const double h = 1e-7 * std::max(1.0, std::abs(y(j)));
      yp(j) += h;
      ym(j) -= h;
      J.col(j) = (yp - ym - dt * (R(yp) - R(ym))) / (2 * h);
    }
    y -= J.partialPivLu().solve(F);
    if (F.norm() < 1e-15) break;
  }
  return y;
}

}  // namespace

TEST(Fem, MassSumsToArea) {
  const FemMatrices fem = assemble_fem(lake());
  EXPECT_NEAR(Eigen::MatrixXd(fem.M).sum(), lake().total_area(), 1e-9 * lake().total_area());
  EXPECT_NEAR(fem.lumped.sum(), lake().total_area(), 1e-9 * lake().total_area());
  EXPECT_TRUE(fem.M.isApprox(Eigen::SparseMatrix<double>(fem.M.transpose())));
}

TEST(Fem, MassPositiveDefinite) {
  const FemMatrices fem = assemble_fem(lake());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(fem.M));
  EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
}

TEST(Fem, StiffnessAnnihilatesConstants) {
  const FemMatrices fem = assemble_fem(lake());
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(lake().node_count());
  EXPECT_LT((fem.K * ones).lpNorm<Eigen::Infinity>(), 1e-12);
  EXPECT_TRUE(fem.K.isApprox(Eigen::SparseMatrix<double>(fem.K.transpose())));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Eigen::MatrixXd(fem.K));
  EXPECT_GT(eig.eigenvalues().minCoeff(), -1e-10);
}

TEST(Fem, StiffnessOfLinearFunction) {
  // int grad(x) . grad(x) = |Omega|.
  const FemMatrices fem = assemble_fem(square());
  const Eigen::VectorXd x = square().nodes.row(0).transpose();
  EXPECT_NEAR(x.dot(fem.K * x), 1.0, 1e-14);
}

TEST(Fem, AdvectionLinearInWind) {
  const FemMatrices fem = assemble_fem(lake());
  EXPECT_EQ(fem.advection(Eigen::Vector2d::Zero()).norm(), 0.0);
  const Eigen::Vector2d a(1.0, -2.0), b(0.5, 3.0);
  const Eigen::SparseMatrix<double> lhs = fem.advection(a + 2.0 * b);
  const Eigen::SparseMatrix<double> rhs = fem.advection(a) + 2.0 * fem.advection(b);
  EXPECT_LT((lhs - rhs).norm(), 1e-12 * rhs.norm());
  // C applied to the linear function x with wind (1, 0) integrates phi_i.
  const Eigen::VectorXd x = lake().nodes.row(0).transpose();
  EXPECT_LT((fem.advection({1.0, 0.0}) * x - fem.lumped).lpNorm<Eigen::Infinity>(), 1e-9);
}

TEST(Step2D, UniformStateMatchesScalarBackwardEuler) {
  const ModelParams prm;
  const Field2D U = uniform_field_2d(lake(), 4.0, 0.02, 0.3);
  const FemMatrices fem = assemble_fem(lake());
  const double dt = 0.5;
  const Field2D next = newton_be_step(U, dt, dt, lake(), fem, no_wind(), prm);
  const Eigen::Vector3d ref = scalar_backward_euler(Eigen::Vector3d(4.0, 0.08, 0.3), dt, prm, 1e-10);
  for (int i = 0; i < lake().node_count(); ++i) {
    EXPECT_NEAR(next.B(i), ref(0), 1e-9 * ref(0));
    EXPECT_NEAR(next.p(i), ref(1), 1e-9 * ref(1));
    EXPECT_NEAR(next.P(i), ref(2), 1e-9 * ref(2));
  }
}

TEST(Step2D, HypolimnionEquilibriumIsFixedPoint) {
  ModelParams prm;
  prm.P_in = 0.0;
  Field2D U = uniform_field_2d(lake(), 0.0, 0.02, prm.P_h);
  const FemMatrices fem = assemble_fem(lake());
  const Field2D next = newton_be_step(U, 1.0, 1.0, lake(), fem, constant_wind({100.0, 50.0}), prm);
  EXPECT_LT((next.P - U.P).lpNorm<Eigen::Infinity>(), 1e-14);
  EXPECT_EQ(next.B.lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(Step2D, HeatStepConservesBiomass) {
  ModelParams prm;
  prm.r = 1e-300;
  prm.l = 1e-300;
  prm.D = 1e-300;
  prm.alpha = 500.0;  // strong diffusion so the step actually mixes
  Field2D U = default_initial_2d(lake());
  const FemMatrices fem = assemble_fem(lake());
  const Field2D next = newton_be_step(U, 1.0, 1.0, lake(), fem, no_wind(), prm);
  EXPECT_GT((next.B - U.B).lpNorm<Eigen::Infinity>(), 1e-3);
  EXPECT_NEAR(fem.lumped.dot(next.B), fem.lumped.dot(U.B), 1e-10 * fem.lumped.dot(U.B));
}

TEST(Step2D, RejectsBadInput) {
  const FemMatrices fem = assemble_fem(lake());
  const Field2D U = uniform_field_2d(lake(), 1.0, 0.02, 0.1);
  EXPECT_THROW(newton_be_step(U, 0.0, 0.0, lake(), fem, no_wind(), ModelParams{}), DomainError);
  EXPECT_THROW(newton_be_step(uniform_field_2d(square(), 1, 0.02, 0.1), 1.0, 1.0, lake(), fem, no_wind(),
                              ModelParams{}),
               DomainError);
}

TEST(Simulate2D, ClosedSystemConservesPhosphorus) {
  ModelParams prm;
  prm.D = 1e-300;
  prm.P_in = 0.0;
  const Field2D U = default_initial_2d(lake());
  const FemMatrices fem = assemble_fem(lake());
  const auto sim = simulate_2d(U, lake(), no_wind(), prm, 1.0, 50.0, {10.0, 50.0});
  const double total = (fem.M * (U.p + U.P)).sum();
  for (const Field2D& f : sim.snapshots) EXPECT_NEAR((fem.M * (f.p + f.P)).sum(), total, 1e-6 * total);
}

TEST(Simulate2D, HitsOutputTimes) {
  const auto sim = simulate_2d(default_initial_2d(square()), square(), no_wind(), ModelParams{}, 0.7, 2.0,
                               {0.0, 0.5, 2.0});
  EXPECT_EQ(sim.t, (std::vector<double>{0.0, 0.5, 2.0}));
  EXPECT_EQ(sim.steps, 4);  // 0.5, 1.2, 1.9, 2.0
}

TEST(Simulate2D, PecletWarning) {
  std::vector<std::string> messages;
  const WarningSink previous = set_warning_sink([&](const std::string& m) { messages.push_back(m); });
  simulate_2d(default_initial_2d(lake()), lake(), constant_wind({1000.0, 0.0}), ModelParams{}, 1.0, 1.0, {1.0});
  set_warning_sink(previous);
  ASSERT_EQ(messages.size(), 1u);
  EXPECT_NE(messages[0].find("Peclet"), std::string::npos);
}

TEST(Simulate2D, UpwindSchemeStaysNonnegativeInStrongWind) {
  Options2D opt;
  opt.scheme = AdvectionScheme::upwind;
  const WarningSink previous = set_warning_sink([](const std::string&) {});
  const auto sim = simulate_2d(default_initial_2d(lake()), lake(), synthetic_wind(2000.0, 10.0, 0.3), ModelParams{},
                               0.5, 20.0, {20.0}, opt);
  set_warning_sink(previous);
  const Field2D& f = sim.snapshots.back();
  EXPECT_GE(std::min({f.B.minCoeff(), f.p.minCoeff(), f.P.minCoeff()}), -1e-10);
}

TEST(Simulate2D, QuotaTubeAndBoundOnLake) {
  ModelParams prm;
  prm.P_h = 2.0;
  Options2D opt;
  opt.scheme = AdvectionScheme::upwind;
  const Field2D U = default_initial_2d(lake());
  const WarningSink previous = set_warning_sink([](const std::string&) {});
  const auto sim = simulate_2d(U, lake(), synthetic_wind(20.0, 10.0, 0.0), prm, 0.5, 30.0, {5.0, 15.0, 30.0}, opt);
  set_warning_sink(previous);
  const double bound = std::max(U.B.maxCoeff(), b_bar(prm));
  for (const Field2D& f : sim.snapshots) {
    const Eigen::VectorXd Q = f.quota(prm);
    EXPECT_GE(Q.minCoeff(), prm.Q_m - 1e-6);
    EXPECT_LE(Q.maxCoeff(), prm.Q_M + 1e-6);
    EXPECT_GE(std::min({f.B.minCoeff(), f.p.minCoeff(), f.P.minCoeff()}), -1e-10);
    EXPECT_LE(f.B.maxCoeff(), bound * (1 + 1e-6));
  }
}

TEST(Simulate2D, NoHypolimnionPhosphorusGoesExtinct) {
  const ModelParams prm = stability_case(0.7, 0.0);
  const Field2D U = default_initial_2d(lake());
  const auto sim = simulate_2d(U, lake(), no_wind(), prm, 1.0, 365.0, {365.0});
  EXPECT_LT(sim.snapshots.back().B.maxCoeff(), 1e-3 * U.B.maxCoeff());
}

TEST(Vtk, LegacyFormat) {
  const std::string path = ::testing::TempDir() + "/field.vtk";
  const Field2D f = default_initial_2d(lake());
  write_vtk(f, lake(), ModelParams{}, path);
  std::ifstream in(path);
  std::string line;
  int points = -1, cells = -1, scalars = 0, type5 = 0;
  bool in_types = false;
  while (std::getline(in, line)) {
    if (line.rfind("POINTS ", 0) == 0) points = std::stoi(line.substr(7));
    if (line.rfind("CELL_TYPES ", 0) == 0) {
      cells = std::stoi(line.substr(11));
      in_types = true;
      continue;
    }
    if (line.rfind("POINT_DATA", 0) == 0) in_types = false;
    if (in_types && line == "5") ++type5;
    if (line.rfind("SCALARS ", 0) == 0) ++scalars;
  }
  EXPECT_EQ(points, lake().node_count());
  EXPECT_EQ(cells, lake().triangle_count());
  EXPECT_EQ(type5, lake().triangle_count());
  EXPECT_EQ(scalars, 4);
}

TEST(Norms, RelativeL2OfInterpolant) {
  const WarningSink previous = set_warning_sink([](const std::string&) {});
  const TriMesh fine = load_gmsh_mesh(data("lake_fine.msh"));
  set_warning_sink(previous);
  Eigen::VectorXd c(lake().node_count()), f(fine.node_count());
  for (int i = 0; i < lake().node_count(); ++i) c(i) = 2.0 + 1e-3 * lake().nodes(0, i);
  for (int i = 0; i < fine.node_count(); ++i) f(i) = 2.0 + 1e-3 * fine.nodes(0, i);
  EXPECT_LT(relative_l2_difference(lake(), c, fine, f), 1e-10);
  EXPECT_NEAR(relative_l2_difference(lake(), c, fine, 2.0 * f), 0.5, 1e-10);
}
