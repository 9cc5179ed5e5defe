#include "bloom/ode.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

#include "bloom/errors.hpp"

namespace bloom {
namespace {

constexpr double kLongTime = 4000.0;
constexpr int kNewtonMaxIter = 100;

double state_scale(const Eigen::Vector3d& y) { return std::max(1.0, y.cwiseAbs().maxCoeff()); }

bool invariant_ok(const HomState& s) { return s.B >= 0.0 && s.p >= 0.0 && s.P >= 0.0; }

}  // namespace

std::string_view to_string(EquilibriumKind kind) {
  return kind == EquilibriumKind::extinction ? "extinction" : "positive";
}

Eigen::Vector3d homogeneous_rates(const Eigen::Vector3d& y, const ModelParams& prm) {
  const double quota =
      y(0) < kBiomassFloor ? q_hat(prm) : std::max(y(1) / y(0), 0.5 * prm.Q_m);
  return kernel::rates(y(0), y(1), y(2), quota, prm);
}

Trajectory integrate_homogeneous(const HomState& initial, const ModelParams& prm, double t_end,
                                 double rtol, double atol) {
  prm.validate();
  if (!invariant_ok(initial)) throw DomainError("initial state must be nonnegative");
  if (initial.B >= kBiomassFloor && initial.p == 0.0)
    throw DomainError("initial quota undefined: B > 0 with p = 0");
  if (!(t_end > 0.0)) throw DomainError("t_end must be > 0");

  RhsFunction rhs = [&prm](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    dy = homogeneous_rates(y.head<3>(), prm);
  };
  const ColoredJacobian fd = ColoredJacobian::dense(3);
  JacobianFunction jac = [&](double t, const Eigen::VectorXd& y) { return fd(rhs, t, y); };

  StiffOptions opt;
  opt.rtol = rtol;
  opt.atol = atol;
  BdfIntegrator solver(rhs, jac, 0.0, initial.vec(), t_end, opt);

  Trajectory out;
  out.t.push_back(0.0);
  out.states.push_back(initial);
  while (!solver.finished()) {
    solver.step();
    out.t.push_back(solver.t());
    out.states.push_back(HomState::from(solver.y().head<3>()));
  }
  return out;
}

Equilibrium find_equilibrium(const ModelParams& prm, const HomState& guess, double rtol) {
  prm.validate();
  if (r0(prm) <= 1.0) return {HomState{0.0, 0.0, prm.P_h}, EquilibriumKind::extinction, 0};

  auto newton = [&](Eigen::Vector3d y, Equilibrium& result) {
    Eigen::Vector3d best = y;
    double best_res = homogeneous_rates(y, prm).norm();
    for (int it = 1; it <= kNewtonMaxIter; ++it) {
      const Eigen::Vector3d f = homogeneous_rates(y, prm);
      const double res = f.norm();
      if (res < best_res) {
        best_res = res;
        best = y;
      }
      if (res < rtol * state_scale(y)) {
        result = {HomState::from(y), y(0) < kBiomassFloor ? EquilibriumKind::extinction
                                                          : EquilibriumKind::positive,
                  it};
        return true;
      }
      const Eigen::Vector3d step = reaction_jacobian(HomState::from(y), prm).partialPivLu().solve(-f);
      // Damping keeps the iterate inside the nonnegative orthant and accepts
      // only residual decrease.
      double lambda = 1.0;
      for (int k = 0; k < 40; ++k, lambda *= 0.5) {
        const Eigen::Vector3d trial = y + lambda * step;
        if ((trial.array() >= 0.0).all() && trial(1) > 0.0 &&
            homogeneous_rates(trial, prm).norm() < res)
          break;
      }
      const Eigen::Vector3d trial = y + lambda * step;
      if (!((trial.array() >= 0.0).all())) break;
      y = trial;
    }
    result = {HomState::from(best), EquilibriumKind::positive, kNewtonMaxIter};
    return false;
  };

  Equilibrium result{};
  if (guess.B >= kBiomassFloor && guess.p > 0.0 && invariant_ok(guess) &&
      newton(guess.vec(), result) && result.kind == EquilibriumKind::positive)
    return result;

  // Long-time limit from a generic interior start.
  const HomState start{1.0, 0.5 * (prm.Q_m + prm.Q_M), std::max(prm.P_h, 0.1)};
  const HomState limit = integrate_homogeneous(start, prm, kLongTime, 1e-10, 1e-14).final_state();
  if (newton(limit.vec(), result) && result.kind == EquilibriumKind::positive) return result;
  throw SolverError("equilibrium search did not converge", 0.0, result.state.vec());
}

}  // namespace bloom
