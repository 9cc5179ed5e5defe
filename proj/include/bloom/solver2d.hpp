#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Sparse>

#include "bloom/mesh.hpp"
#include "bloom/params.hpp"
#include "bloom/wind.hpp"

namespace bloom {

/// Nodal biomass, internal and dissolved phosphorus on a TriMesh.
struct Field2D {
  Eigen::VectorXd B, p, P;

  Eigen::Index size() const { return B.size(); }
  /// Pointwise quota p/B; Q-hat where B <= floor.
  Eigen::VectorXd quota(const ModelParams& prm, double floor = 1e-12) const;
};

/// P1 matrices. C(v) = v_x Cx + v_y Cy with C_ij = int (v . grad phi_j) phi_i.
struct FemMatrices {
  Eigen::SparseMatrix<double> M;  ///< consistent mass
  Eigen::VectorXd lumped;         ///< row sums of M
  Eigen::SparseMatrix<double> K;  ///< int grad phi_i . grad phi_j
  Eigen::SparseMatrix<double> Cx, Cy;

  Eigen::SparseMatrix<double> advection(const Eigen::Vector2d& v) const { return v.x() * Cx + v.y() * Cy; }
};

FemMatrices assemble_fem(const TriMesh& mesh);

enum class AdvectionScheme {
  galerkin,  ///< plain Galerkin form
  upwind,    ///< discrete upwinding: minimal artificial diffusion making the operator monotone
};

struct Options2D {
  double eps = 1e-10;          ///< regularization in Q_m B / (p + eps)
  double newton_tol = 1e-10;   ///< relative, in state units
  int max_newton = 25;
  int max_halvings = 6;        ///< dt-halving retries before giving up
  AdvectionScheme scheme = AdvectionScheme::galerkin;
};

struct StepStats {
  int newton_iterations = 0;
  int substeps = 0;
  double residual = 0.0;
};

/// One backward-Euler step from U_n to t_next = t_n + dt. The time derivative
/// and reactions use the lumped mass; diffusion and advection the assembled
/// operators. Newton failure triggers up to max_halvings recursive dt
/// halvings before throwing SolverError.
Field2D newton_be_step(const Field2D& Un, double dt, double t_next, const TriMesh& mesh, const FemMatrices& fem,
                       const WindField& wind, const ModelParams& prm, const Options2D& options = {},
                       StepStats* stats = nullptr);

struct Simulation2D {
  std::vector<double> t;
  std::vector<Field2D> snapshots;
  long steps = 0;
  long newton_iterations = 0;
};

/// Fixed-step backward Euler from t = 0 to t_end; the step is shortened to hit
/// every output time exactly. Wind is re-evaluated at each new time level.
Simulation2D simulate_2d(const Field2D& initial, const TriMesh& mesh, const WindField& wind, const ModelParams& prm,
                         double dt, double t_end, const std::vector<double>& output_times,
                         const Options2D& options = {});

/// B: Gaussian bump (peak 5 on a 0.5 background) at the bounding-box centre,
/// width 0.15 of the larger box extent; Q = 0.02 with p = Q B; P = 0.1.
Field2D default_initial_2d(const TriMesh& mesh);
Field2D uniform_field_2d(const TriMesh& mesh, double B, double Q, double P);

/// sqrt(u^T M u) with the consistent mass matrix.
double l2_norm(const FemMatrices& fem, const Eigen::VectorXd& u);

/// ||B_fine - I(B_coarse)|| / ||B_fine|| in L2 on the fine mesh, I = P1 interpolation.
double relative_l2_difference(const TriMesh& coarse, const Eigen::VectorXd& coarse_values, const TriMesh& fine,
                              const Eigen::VectorXd& fine_values);

/// Legacy ASCII VTK unstructured grid with point scalars B, p, P, Q.
void write_vtk(const Field2D& field, const TriMesh& mesh, const ModelParams& prm, const std::string& path);

}  // namespace bloom
