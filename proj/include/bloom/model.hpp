#pragma once

#include <Eigen/Core>

#include "bloom/kernels.hpp"
#include "bloom/params.hpp"

namespace bloom {

/// Below this biomass the quota p/B is replaced by Q-hat.
inline constexpr double kBiomassFloor = 1e-12;

/// Spatially homogeneous state: biomass, internal and dissolved phosphorus.
struct HomState {
  double B = 0.0;
  double p = 0.0;
  double P = 0.0;

  Eigen::Vector3d vec() const { return {B, p, P}; }
  static HomState from(const Eigen::Vector3d& v) { return {v(0), v(1), v(2)}; }
  /// Cell quota p/B; Q-hat when B is below kBiomassFloor.
  double quota(const ModelParams& prm) const;
};

double light_intensity(double depth, double B, const ModelParams& prm);
double growth_h(double B, const ModelParams& prm);
double uptake_rho(double Q, double P, const ModelParams& prm);
double uptake_eta(double B, double p, double P, const ModelParams& prm);

/// Quota of the extinction equilibrium: a convex combination of Q_m and Q_M.
double q_hat(const ModelParams& prm);
/// Weight on Q_m in q_hat: r h(0) / (rho_tilde(P_h) + r h(0)).
double q_hat_weight(const ModelParams& prm);
/// Basic reproductive index of the homogeneous system.
double r0(const ModelParams& prm);
/// Upper biomass bound; negative values mean B decays from any start.
double b_bar(const ModelParams& prm);
/// Bracket f(B) of the comparison argument behind b_bar (f(b_bar) = 0).
double biomass_bound_bracket(double B, const ModelParams& prm);

/// Reaction part of the system at a homogeneous state. Throws DomainError on
/// negative components or on B > 0 with p = 0.
Eigen::Vector3d reaction_rhs(const HomState& state, const ModelParams& prm);

/// Analytic Jacobian of reaction_rhs with respect to (B, p, P). The ratio
/// B/p is replaced by 1/Q-hat at B = 0, matching the extinction convention.
Eigen::Matrix3d reaction_jacobian(const HomState& state, const ModelParams& prm);

}  // namespace bloom
