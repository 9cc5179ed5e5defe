#pragma once

#include <string_view>
#include <vector>

#include "bloom/bdf.hpp"
#include "bloom/model.hpp"

namespace bloom {

/// Accepted integrator steps of the movement-free system, including t = 0 and
/// the final time.
struct Trajectory {
  std::vector<double> t;
  std::vector<HomState> states;

  const HomState& final_state() const { return states.back(); }
};

/// Reaction rates used along integration paths. Unlike reaction_rhs this never
/// throws: the quota is Q-hat below kBiomassFloor and floored at Q_m/2, which
/// only affects iterates outside the invariant region.
Eigen::Vector3d homogeneous_rates(const Eigen::Vector3d& y, const ModelParams& prm);

Trajectory integrate_homogeneous(const HomState& initial, const ModelParams& prm, double t_end,
                                 double rtol = 1e-8, double atol = 1e-12);

enum class EquilibriumKind { extinction, positive };

std::string_view to_string(EquilibriumKind kind);

struct Equilibrium {
  HomState state;
  EquilibriumKind kind;
  int iterations = 0;
};

/// Homogeneous steady state reached from `guess`. Returns E0 = (0, 0, P_h)
/// whenever R0 <= 1; otherwise runs damped Newton, falling back to the
/// long-time ODE limit (t = 4000) as initializer when Newton stalls or lands
/// on the extinction branch.
Equilibrium find_equilibrium(const ModelParams& prm, const HomState& guess, double rtol = 1e-10);

}  // namespace bloom
