#pragma once

// Adaptive variable-order BDF integrator (orders 1-5, quasi-constant step size
// with backward-difference history) for stiff systems y' = f(t, y). Newton
// iterations reuse an LU of I - c J until convergence degrades, then refresh
// the Jacobian, then shrink the step.

#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace bloom {

using SparseMatrix = Eigen::SparseMatrix<double>;
using RhsFunction = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dydt)>;
using JacobianFunction = std::function<SparseMatrix(double t, const Eigen::VectorXd& y)>;

struct StiffOptions {
  double rtol = 1e-6;
  double atol = 1e-9;
  double max_step = std::numeric_limits<double>::infinity();
  /// Zero selects the initial step automatically.
  double first_step = 0.0;
  long max_steps = 5'000'000;
};

/// Finite-difference Jacobian over a fixed sparsity pattern. Columns that do
/// not share a row are perturbed together (greedy coloring), so a banded
/// pattern costs a handful of right-hand-side evaluations.
class ColoredJacobian {
 public:
  ColoredJacobian(Eigen::Index n, std::vector<std::pair<Eigen::Index, Eigen::Index>> nonzeros);

  /// Dense pattern; used for small systems.
  static ColoredJacobian dense(Eigen::Index n);

  SparseMatrix operator()(const RhsFunction& f, double t, const Eigen::VectorXd& y) const;

  Eigen::Index colors() const { return static_cast<Eigen::Index>(groups_.size()); }

 private:
  Eigen::Index n_;
  std::vector<std::vector<Eigen::Index>> rows_of_col_;
  std::vector<std::vector<Eigen::Index>> groups_;
};

class BdfIntegrator {
 public:
  static constexpr int kMaxOrder = 5;

  BdfIntegrator(RhsFunction rhs, JacobianFunction jacobian, double t0, Eigen::VectorXd y0,
                double t_bound, StiffOptions options = {});

  /// Advances one accepted step. Throws SolverError when the step size
  /// underflows or the step budget is exhausted.
  void step();
  bool finished() const { return t_ >= t_bound_; }

  double t() const { return t_; }
  double t_old() const { return t_old_; }
  const Eigen::VectorXd& y() const { return y_; }
  int order() const { return order_; }
  long steps() const { return n_steps_; }
  long rhs_evaluations() const { return n_rhs_; }
  long jacobian_evaluations() const { return n_jac_; }

  /// Interpolant of the last step, valid on [t_old(), t()].
  Eigen::VectorXd dense_output(double t) const;

 private:
  void evaluate(double t, const Eigen::VectorXd& y, Eigen::VectorXd& out);
  double initial_step(const Eigen::VectorXd& f0);
  void rescale_history(int order, double factor);
  void factorize(double c);
  double rms(const Eigen::VectorXd& v, const Eigen::VectorXd& scale) const;

  RhsFunction rhs_;
  JacobianFunction jacobian_;
  StiffOptions opt_;
  double t_, t_old_, t_bound_;
  Eigen::VectorXd y_;
  double h_abs_ = 0.0;
  double newton_tol_;
  int order_ = 1;
  int n_equal_steps_ = 0;
  long n_steps_ = 0, n_rhs_ = 0, n_jac_ = 0;

  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> history_;  // D[0..kMaxOrder+2]
  SparseMatrix jac_;
  bool jac_current_ = false;
  bool lu_valid_ = false;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;

  Eigen::Matrix<double, kMaxOrder + 2, 1> gamma_, alpha_, error_const_;
};

/// Integrates to t_end and returns the state at each sample time (which must
/// be sorted and lie in [t0, t_end]).
std::vector<Eigen::VectorXd> integrate_samples(const RhsFunction& rhs, const JacobianFunction& jac,
                                               double t0, const Eigen::VectorXd& y0,
                                               const std::vector<double>& sample_times,
                                               const StiffOptions& options);

}  // namespace bloom
