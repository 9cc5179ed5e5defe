#include "bloom/model.hpp"

#include <cmath>
#include <string>

#include "bloom/errors.hpp"

namespace bloom {
namespace {

void require_nonnegative(double value, const char* what) {
  if (!(value >= 0.0)) throw DomainError(std::string(what) + " must be >= 0, got " + std::to_string(value));
}

}  // namespace

double HomState::quota(const ModelParams& prm) const {
  return B < kBiomassFloor ? q_hat(prm) : p / B;
}

double light_intensity(double depth, double B, const ModelParams& prm) {
  require_nonnegative(depth, "depth");
  require_nonnegative(B, "biomass");
  return kernel::light(depth, B, prm);
}

double growth_h(double B, const ModelParams& prm) {
  require_nonnegative(B, "biomass");
  return kernel::growth_h(B, prm);
}

double uptake_rho(double Q, double P, const ModelParams& prm) {
  if (!(Q >= prm.Q_m && Q <= prm.Q_M))
    throw DomainError("quota " + std::to_string(Q) + " outside [Q_m, Q_M]");
  require_nonnegative(P, "dissolved phosphorus");
  return kernel::uptake_rho(Q, P, prm);
}

double uptake_eta(double B, double p, double P, const ModelParams& prm) {
  require_nonnegative(B, "biomass");
  require_nonnegative(p, "internal phosphorus");
  require_nonnegative(P, "dissolved phosphorus");
  return kernel::uptake_eta(B, p, P, prm);
}

double q_hat_weight(const ModelParams& prm) {
  const double uptake = kernel::uptake_rate_factor(prm.P_h, prm);
  const double growth = prm.r * kernel::growth_h(0.0, prm);
  return growth / (uptake + growth);
}

double q_hat(const ModelParams& prm) {
  const double w = q_hat_weight(prm);
  return w * prm.Q_m + (1.0 - w) * prm.Q_M;
}

double r0(const ModelParams& prm) {
  const double growth = prm.r * kernel::growth_h(0.0, prm);
  // Q-hat equals Q_m exactly when P_h = 0; avoid the rounding residue.
  const double limitation = prm.P_h == 0.0 ? 0.0 : 1.0 - prm.Q_m / q_hat(prm);
  return growth * limitation / (prm.l + prm.exchange());
}

double b_bar(const ModelParams& prm) {
  const double quota_span = (prm.Q_M - prm.Q_m) / prm.Q_M;
  const double light_gain = std::log((prm.H + prm.I_in) / prm.H);
  return (prm.r * quota_span * light_gain / (prm.z_m * prm.l + prm.D) - prm.K_bg) / prm.k;
}

double biomass_bound_bracket(double B, const ModelParams& prm) {
  const double quota_span = (prm.Q_M - prm.Q_m) / prm.Q_M;
  const double light_gain = std::log((prm.H + prm.I_in) / prm.H);
  return (prm.r / (prm.z_m * (prm.k * B + prm.K_bg)) * quota_span * light_gain - prm.l -
          prm.exchange()) *
         B;
}

Eigen::Vector3d reaction_rhs(const HomState& state, const ModelParams& prm) {
  require_nonnegative(state.B, "biomass");
  require_nonnegative(state.p, "internal phosphorus");
  require_nonnegative(state.P, "dissolved phosphorus");
  if (state.B >= kBiomassFloor && state.p == 0.0)
    throw DomainError("quota undefined: B > 0 with p = 0");
  return kernel::rates(state.B, state.p, state.P, state.quota(prm), prm);
}

Eigen::Matrix3d reaction_jacobian(const HomState& s, const ModelParams& prm) {
  const double g = prm.exchange();
  const double span = prm.Q_M - prm.Q_m;
  const double ratio = 1.0 / s.quota(prm);  // B/p
  const double h = kernel::growth_h(s.B, prm);
  const double dh = kernel::growth_h_prime(s.B, prm);
  const double saturation = s.P / (s.P + prm.M);
  const double uptake = prm.rho_m / span * saturation;

  Eigen::Matrix3d a;
  a(0, 0) = prm.r * (1.0 - 2.0 * prm.Q_m * ratio) * h + prm.r * (1.0 - prm.Q_m * ratio) * dh * s.B -
            prm.l - g;
  a(0, 1) = prm.r * prm.Q_m * ratio * ratio * h;
  a(0, 2) = 0.0;
  a(1, 0) = prm.Q_M * uptake;
  a(1, 1) = -prm.l - g - uptake;
  a(1, 2) = prm.rho_m * (prm.Q_M * s.B - s.p) / span * prm.M / ((s.P + prm.M) * (s.P + prm.M));
  a(2, 0) = -a(1, 0);
  a(2, 1) = uptake + prm.l;
  a(2, 2) = -g - a(1, 2);
  return a;
}

}  // namespace bloom
