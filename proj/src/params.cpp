#include "bloom/params.hpp"

#include <cmath>
#include <sstream>

#include "bloom/errors.hpp"

namespace bloom {
namespace {

struct FieldRef {
  const char* name;
  double ModelParams::*member;
};

constexpr FieldRef kFields[] = {
    {"alpha", &ModelParams::alpha}, {"beta", &ModelParams::beta},
    {"beta_B", &ModelParams::beta_B}, {"beta_P", &ModelParams::beta_P},
    {"r", &ModelParams::r},         {"Q_m", &ModelParams::Q_m},
    {"Q_M", &ModelParams::Q_M},     {"z_m", &ModelParams::z_m},
    {"k", &ModelParams::k},         {"K_bg", &ModelParams::K_bg},
    {"H", &ModelParams::H},         {"I_in", &ModelParams::I_in},
    {"l", &ModelParams::l},         {"D", &ModelParams::D},
    {"rho_m", &ModelParams::rho_m}, {"P_h", &ModelParams::P_h},
    {"M", &ModelParams::M},         {"P_in", &ModelParams::P_in},
};

bool may_be_zero(const std::string& name) { return name == "P_h" || name == "P_in"; }

}  // namespace

const std::vector<std::string>& ModelParams::field_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& f : kFields) out.emplace_back(f.name);
    return out;
  }();
  return names;
}

double& ModelParams::field(const std::string& name) {
  for (const auto& f : kFields)
    if (name == f.name) return this->*(f.member);
  throw ConfigError("unknown model parameter '" + name + "'");
}

double ModelParams::field(const std::string& name) const {
  return const_cast<ModelParams*>(this)->field(name);
}

void ModelParams::validate() const {
  std::ostringstream problems;
  for (const auto& f : kFields) {
    const double value = this->*(f.member);
    if (!std::isfinite(value)) {
      problems << " " << f.name << " is not finite;";
    } else if (may_be_zero(f.name) ? value < 0.0 : value <= 0.0) {
      problems << " " << f.name << (may_be_zero(f.name) ? " must be >= 0" : " must be > 0")
               << " (got " << value << ");";
    }
  }
  if (Q_m >= Q_M) problems << " Q_m must be < Q_M;";
  const std::string msg = problems.str();
  if (!msg.empty()) throw ConfigError("invalid model parameters:" + msg);
}

ModelParams stability_case(double r, double P_h) {
  ModelParams prm;
  prm.r = r;
  prm.P_h = P_h;
  return prm.validated();
}

}  // namespace bloom
