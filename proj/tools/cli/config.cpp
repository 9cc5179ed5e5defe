#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "bloom/errors.hpp"

namespace bloom::app {
namespace {

// Reads keys from one JSON object and remembers which were used so leftovers
// can be reported.
class Section {
 public:
  Section(const json& obj, std::string path, std::vector<std::string>& unknown)
      : obj_(obj), path_(std::move(path)), unknown_(unknown) {
    if (!obj_.is_object()) throw ConfigError("'" + path_ + "' must be an object");
  }
  ~Section() {
    for (const auto& [key, value] : obj_.items())
      if (!used_.count(key)) unknown_.push_back(path_.empty() ? key : path_ + "." + key);
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return obj_.contains(key);
  }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("'" + name(key) + "' has the wrong type");
    }
  }

  Section sub(const std::string& key) {
    used_.insert(key);
    return Section(obj_.at(key), name(key), unknown_);
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return obj_.at(key);
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json& obj_;
  std::string path_;
  std::vector<std::string>& unknown_;
  std::set<std::string> used_;
};

void read_vec2(Section& s, const std::string& key, Eigen::Vector2d& v) {
  if (!s.has(key)) return;
  const json& j = s.raw(key);
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError("'" + s.name(key) + "' must be a 2-element numeric array");
  v = {j[0].get<double>(), j[1].get<double>()};
}

void read_state(Section& parent, const std::string& key, HomState& st) {
  if (!parent.has(key)) return;
  Section s = parent.sub(key);
  s.get("B", st.B);
  s.get("p", st.p);
  s.get("P", st.P);
}

void read_wind(Section& parent, WindConfig& w) {
  if (!parent.has("wind")) return;
  Section s = parent.sub("wind");
  s.get("mode", w.mode);
  read_vec2(s, "velocity", w.velocity);
  s.get("amplitude", w.amplitude);
  s.get("period", w.period);
  s.get("phase", w.phase);
  s.get("file", w.file);
  s.get("daily", w.daily);
  static const std::set<std::string> modes{"none", "constant", "synthetic", "file"};
  if (!modes.count(w.mode)) throw ConfigError("unknown wind mode '" + w.mode + "'");
  if (w.mode == "file" && w.file.empty()) throw ConfigError("wind mode 'file' needs 'file'");
}

json wind_json(const WindConfig& w) {
  return {{"mode", w.mode},          {"velocity", {w.velocity.x(), w.velocity.y()}},
          {"amplitude", w.amplitude}, {"period", w.period},
          {"phase", w.phase},         {"file", w.file},
          {"daily", w.daily}};
}

json state_json(const HomState& s) { return {{"B", s.B}, {"p", s.p}, {"P", s.P}}; }

}  // namespace

Config parse_config(const json& doc, const std::filesystem::path& base_dir) {
  Config c;
  c.base_dir = base_dir;
  std::vector<std::string> unknown;
  {
    Section root(doc, "", unknown);
    if (!root.has("schema_version")) throw ConfigError("config is missing 'schema_version'");
    int version = 0;
    root.get("schema_version", version);
    if (version != kSchemaVersion)
      throw ConfigError("unsupported schema_version " + std::to_string(version) + " (expected " +
                        std::to_string(kSchemaVersion) + ")");

    if (root.has("params")) {
      Section s = root.sub("params");
      for (const auto& name : ModelParams::field_names()) s.get(name, c.params.field(name));
    }
    if (root.has("ode")) {
      Section s = root.sub("ode");
      read_state(s, "initial", c.ode.initial);
      s.get("t_end", c.ode.t_end);
    }
    if (root.has("stability")) {
      Section s = root.sub("stability");
      s.get("equilibrium", c.stability.equilibrium);
      read_state(s, "guess", c.stability.guess);
      s.get("n_max", c.stability.n_max);
      s.get("wind", c.stability.wind);
    }
    if (root.has("sim1d")) {
      Section s = root.sub("sim1d");
      auto& d = c.sim1d;
      s.get("L", d.L);
      s.get("Nx", d.Nx);
      s.get("t_end", d.t_end);
      s.get("output_interval", d.output_interval);
      s.get("initial", d.initial);
      s.get("B0", d.B0);
      s.get("Q0", d.Q0);
      s.get("P0", d.P0);
      s.get("rtol", d.rtol);
      s.get("atol", d.atol);
      read_wind(s, d.wind);
    }
    if (root.has("sim2d")) {
      Section s = root.sub("sim2d");
      auto& d = c.sim2d;
      s.get("mesh", d.mesh);
      s.get("dt", d.dt);
      s.get("t_end", d.t_end);
      s.get("output_interval", d.output_interval);
      s.get("scheme", d.scheme);
      read_wind(s, d.wind);
    }
    if (root.has("sobol")) {
      Section s = root.sub("sobol");
      auto& d = c.sobol;
      s.get("N", d.N);
      s.get("Nx", d.Nx);
      s.get("horizon", d.horizon);
      s.get("bin_days", d.bin_days);
      if (s.has("factors")) {
        const json& arr = s.raw("factors");
        if (!arr.is_array()) throw ConfigError("'sobol.factors' must be an array");
        d.problem.factors.clear();
        for (std::size_t i = 0; i < arr.size(); ++i) {
          Section f(arr[i], "sobol.factors[" + std::to_string(i) + "]", unknown);
          SobolFactor factor;
          f.get("name", factor.name);
          f.get("lower", factor.lower);
          f.get("upper", factor.upper);
          d.problem.factors.push_back(factor);
        }
      }
    }
  }
  if (!unknown.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw ConfigError(msg);
  }

  c.params.validate();
  if (c.sim1d.initial != "default" && c.sim1d.initial != "uniform")
    throw ConfigError("sim1d.initial must be 'default' or 'uniform'");
  if (c.sim2d.scheme != "upwind" && c.sim2d.scheme != "galerkin")
    throw ConfigError("sim2d.scheme must be 'upwind' or 'galerkin'");
  if (c.stability.equilibrium != "extinction" && c.stability.equilibrium != "positive")
    throw ConfigError("stability.equilibrium must be 'extinction' or 'positive'");
  for (const auto& f : c.sobol.problem.factors) {
    ModelParams probe = c.params;
    probe.field(f.name);  // throws on unknown names
    probe.field(f.name) = f.lower;
    probe.validate();
    probe.field(f.name) = f.upper;
    probe.validate();
  }
  c.sobol.problem.validate();
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

json Config::to_json() const {
  // Paths are echoed absolute so the document reruns from any directory.
  auto absolute = [&](const std::string& path) {
    return path.empty() ? path : std::filesystem::absolute(resolve(path)).lexically_normal().string();
  };
  WindConfig wind1 = sim1d.wind, wind2 = sim2d.wind;
  wind1.file = absolute(wind1.file);
  wind2.file = absolute(wind2.file);
  json p;
  for (const auto& name : ModelParams::field_names()) p[name] = params.field(name);
  json factors = json::array();
  for (const auto& f : sobol.problem.factors) factors.push_back({{"name", f.name}, {"lower", f.lower}, {"upper", f.upper}});
  return {
      {"schema_version", kSchemaVersion},
      {"params", p},
      {"ode", {{"initial", state_json(ode.initial)}, {"t_end", ode.t_end}}},
      {"stability",
       {{"equilibrium", stability.equilibrium},
        {"guess", state_json(stability.guess)},
        {"n_max", stability.n_max},
        {"wind", stability.wind}}},
      {"sim1d",
       {{"L", sim1d.L},
        {"Nx", sim1d.Nx},
        {"t_end", sim1d.t_end},
        {"output_interval", sim1d.output_interval},
        {"initial", sim1d.initial},
        {"B0", sim1d.B0},
        {"Q0", sim1d.Q0},
        {"P0", sim1d.P0},
        {"rtol", sim1d.rtol},
        {"atol", sim1d.atol},
        {"wind", wind_json(wind1)}}},
      {"sim2d",
       {{"mesh", absolute(sim2d.mesh)},
        {"dt", sim2d.dt},
        {"t_end", sim2d.t_end},
        {"output_interval", sim2d.output_interval},
        {"scheme", sim2d.scheme},
        {"wind", wind_json(wind2)}}},
      {"sobol",
       {{"N", sobol.N}, {"Nx", sobol.Nx}, {"horizon", sobol.horizon}, {"bin_days", sobol.bin_days}, {"factors", factors}}},
  };
}

std::filesystem::path Config::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

void apply_env_overrides(Config& config, const std::vector<std::string>& env) {
  static const std::string prefix = "BLOOM_PARAM_";
  for (const auto& entry : env) {
    if (entry.rfind(prefix, 0) != 0) continue;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    const std::string name = entry.substr(prefix.size(), eq - prefix.size());
    const std::string value = entry.substr(eq + 1);
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size() || value.empty()) throw ConfigError(entry.substr(0, eq) + " is not a number");
    config.params.field(name) = x;
  }
  config.params.validate();
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

WindField make_wind(const WindConfig& w, const Config& config) {
  if (w.mode == "none") return no_wind();
  if (w.mode == "constant") return constant_wind(w.velocity);
  if (w.mode == "synthetic") return synthetic_wind(w.amplitude, w.period, w.phase);
  const auto path = config.resolve(w.file);
  if (!std::filesystem::exists(path)) throw ConfigError("wind file '" + path.string() + "' not found");
  WindSeries series = load_wind_records(path.string());
  return series_wind(w.daily ? aggregate_daily(series) : series);
}

}  // namespace bloom::app
