#pragma once

#include <string>
#include <vector>

namespace bloom {

/// Physical constants of the epilimnion model. Units follow the usual lake
/// conventions: lengths in m, time in days, carbon in mgC/m^2 and phosphorus in
/// mgP/m^2.
struct ModelParams {
  double alpha = 0.01;     ///< diffusivity of B and p (m^2/day)
  double beta = 0.02;      ///< diffusivity of P (m^2/day)
  double beta_B = 0.05;    ///< advection scalar for B and p
  double beta_P = 0.075;   ///< advection scalar for P
  double r = 1.0;          ///< max production rate (1/day)
  double Q_m = 0.004;      ///< quota at which growth ceases (mgP/mgC)
  double Q_M = 0.04;       ///< quota at which uptake ceases (mgP/mgC)
  double z_m = 5.0;        ///< epilimnion depth (m)
  double k = 0.0004;       ///< specific light attenuation (m^2/mgC)
  double K_bg = 0.3;       ///< background attenuation (1/m)
  double H = 120.0;        ///< light half-saturation (umol/(m^2 day))
  double I_in = 300.0;     ///< surface light (umol/(m^2 day))
  double l = 0.35;         ///< loss rate (1/day)
  double D = 0.02;         ///< layer exchange rate (m/day)
  double rho_m = 1.0;      ///< max uptake (mgP/mgC/day)
  double P_h = 0.2;        ///< hypolimnion phosphorus (mgP/m^2)
  double M = 1.5;          ///< uptake half-saturation (mgP/m^2)
  double P_in = 0.0;       ///< external phosphorus load (mgP/m^2/day)

  /// Vertical exchange rate D / z_m.
  double exchange() const { return D / z_m; }

  /// Throws ConfigError listing every violated constraint.
  void validate() const;

  /// Validated copy; throws on invalid fields.
  ModelParams validated() const {
    validate();
    return *this;
  }

  /// Names of all fields, in declaration order.
  static const std::vector<std::string>& field_names();
  /// Field access by name; throws ConfigError for unknown names.
  double& field(const std::string& name);
  double field(const std::string& name) const;
};

/// Linear-stability parameter set with r and P_h overridden.
ModelParams stability_case(double r, double P_h);

}  // namespace bloom
