#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "bloom/model.hpp"
#include "bloom/params.hpp"
#include "bloom/sensitivity.hpp"
#include "bloom/solver2d.hpp"
#include "bloom/wind.hpp"

namespace bloom::app {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Wind forcing. Velocities and amplitudes are in m/day; file records are
/// m/s and converted on load.
struct WindConfig {
  std::string mode = "constant";  ///< none | constant | synthetic | file
  Eigen::Vector2d velocity{1.0, 0.0};
  double amplitude = 1.0;
  double period = 1.0;
  double phase = 0.0;
  std::string file;
  bool daily = false;  ///< aggregate file records to daily means first

  static WindConfig none() {
    WindConfig w;
    w.mode = "none";
    return w;
  }
};

struct OdeConfig {
  HomState initial{1.0, 0.022, 0.1};
  double t_end = 4000.0;
};

struct StabilityConfig {
  std::string equilibrium = "extinction";  ///< extinction | positive
  HomState guess{16.0, 0.19, 0.008};       ///< Newton start for the positive state
  int n_max = 30;
  double wind = 1.0;
};

struct Sim1dConfig {
  double L = 1000.0;
  int Nx = 101;
  double t_end = 1000.0;
  double output_interval = 10.0;
  std::string initial = "default";  ///< default | uniform
  double B0 = 1.0, Q0 = 0.02, P0 = 0.1;
  WindConfig wind;
  double rtol = 1e-6, atol = 1e-10;
};

struct Sim2dConfig {
  std::string mesh;
  double dt = 0.5;
  double t_end = 365.0;
  double output_interval = 30.0;
  std::string scheme = "upwind";
  WindConfig wind = WindConfig::none();
};

struct SobolConfig {
  long N = 256;
  int Nx = 41;
  double horizon = 365.0;
  double bin_days = 60.0;
  SobolProblem problem = default_sobol_problem();
};

struct Config {
  ModelParams params;
  OdeConfig ode;
  StabilityConfig stability;
  Sim1dConfig sim1d;
  Sim2dConfig sim2d;
  SobolConfig sobol;
  std::filesystem::path base_dir;  ///< relative file paths resolve here

  /// Effective configuration (defaults filled in), itself a valid input.
  json to_json() const;
  std::filesystem::path resolve(const std::string& path) const;
};

/// Parses a configuration document. Unknown keys anywhere raise ConfigError
/// listing all of them; schema_version is required.
Config parse_config(const json& doc, const std::filesystem::path& base_dir = {});
Config load_config(const std::filesystem::path& path);

/// Applies BLOOM_PARAM_<field>=<value> overrides from `env` (NAME=VALUE strings).
void apply_env_overrides(Config& config, const std::vector<std::string>& env);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes);

WindField make_wind(const WindConfig& wind, const Config& config);

}  // namespace bloom::app
