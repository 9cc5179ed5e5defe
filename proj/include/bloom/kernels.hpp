#pragma once

// Closed-form reaction kernels. Everything here is templated on the scalar
// type so the same expressions serve double evaluation, complex-step checks
// and Eigen::AutoDiffScalar Jacobians in the finite-element Newton solve.
// These are the unchecked forms; the validated entry points live in model.hpp.

#include <cmath>

#include <Eigen/Core>

#include "bloom/params.hpp"

namespace bloom::kernel {

/// Lambert-Beer light at depth s: I_in exp(-(K_bg + k B) s).
template <typename Scalar>
Scalar light(const Scalar& s, const Scalar& B, const ModelParams& prm) {
  using std::exp;
  return prm.I_in * exp(-(prm.K_bg + prm.k * B) * s);
}

/// Depth-averaged light limitation h(B).
template <typename Scalar>
Scalar growth_h(const Scalar& B, const ModelParams& prm) {
  using std::log;
  const Scalar bottom = kernel::light(Scalar(prm.z_m), B, prm);
  const Scalar attenuation = prm.k * B + prm.K_bg;
  return log((prm.H + prm.I_in) / (prm.H + bottom)) / (prm.z_m * attenuation);
}

/// dh/dB = k/(kB + K_bg) * (I(z_m,B)/(H + I(z_m,B)) - h(B)).
inline double growth_h_prime(double B, const ModelParams& prm) {
  const double bottom = kernel::light(prm.z_m, B, prm);
  const double attenuation = prm.k * B + prm.K_bg;
  return prm.k / attenuation * (bottom / (prm.H + bottom) - kernel::growth_h(B, prm));
}

/// Droop-limited per-carbon uptake rho(Q, P).
template <typename Scalar>
Scalar uptake_rho(const Scalar& Q, const Scalar& P, const ModelParams& prm) {
  return prm.rho_m * ((prm.Q_M - Q) / (prm.Q_M - prm.Q_m)) * (P / (P + prm.M));
}

/// Areal uptake eta(B, p, P) = rho(p/B, P) B written without the 1/B.
template <typename Scalar>
Scalar uptake_eta(const Scalar& B, const Scalar& p, const Scalar& P, const ModelParams& prm) {
  return prm.rho_m * ((prm.Q_M * B - p) / (prm.Q_M - prm.Q_m)) * (P / (P + prm.M));
}

/// rho_tilde(P) = rho_m / (Q_M - Q_m) * P/(P + M).
inline double uptake_rate_factor(double P, const ModelParams& prm) {
  return prm.rho_m / (prm.Q_M - prm.Q_m) * P / (P + prm.M);
}

/// Reaction rates of (B, p, P) given the quota used in the growth factor.
/// The quota is passed explicitly so callers decide how to treat B -> 0.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> rates(const Scalar& B, const Scalar& p, const Scalar& P,
                                  const Scalar& quota, const ModelParams& prm) {
  const double g = prm.exchange();
  const Scalar eta = kernel::uptake_eta(B, p, P, prm);
  Eigen::Matrix<Scalar, 3, 1> out;
  out(0) = prm.r * (1.0 - prm.Q_m / quota) * kernel::growth_h(B, prm) * B - prm.l * B - g * B;
  out(1) = eta - prm.l * p - g * p;
  out(2) = g * (prm.P_h - P) + prm.P_in - eta + prm.l * p;
  return out;
}

}  // namespace bloom::kernel

namespace bloom::kernel {

/// Rates with the regularized growth factor 1 - Q_m B / (p + eps); smooth at
/// B = p = 0, used by the finite-element solver.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> rates_regularized(const Scalar& B, const Scalar& p, const Scalar& P, double eps,
                                              const ModelParams& prm) {
  const double g = prm.exchange();
  const Scalar eta = kernel::uptake_eta(B, p, P, prm);
  Eigen::Matrix<Scalar, 3, 1> out;
  out(0) = prm.r * (1.0 - prm.Q_m * B / (p + eps)) * kernel::growth_h(B, prm) * B - (prm.l + g) * B;
  out(1) = eta - (prm.l + g) * p;
  out(2) = g * (prm.P_h - P) + prm.P_in - eta + prm.l * p;
  return out;
}

}  // namespace bloom::kernel
