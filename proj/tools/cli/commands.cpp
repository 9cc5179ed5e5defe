#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "bloom/errors.hpp"
#include "bloom/mesh.hpp"
#include "bloom/ode.hpp"
#include "bloom/solver1d.hpp"
#include "bloom/stability.hpp"

#ifndef BLOOM_VERSION
#define BLOOM_VERSION "unknown"
#endif

namespace bloom::app {
namespace fs = std::filesystem;

namespace {

class Output {
 public:
  explicit Output(const RunContext& ctx) : ctx_(ctx) { fs::create_directories(ctx.out_dir); }

  std::ofstream open(const std::string& name) {
    std::ofstream out(ctx_.out_dir / name);
    if (!out) throw ConfigError("cannot write '" + (ctx_.out_dir / name).string() + "'");
    out << std::setprecision(17);
    files_.push_back(name);
    return out;
  }

  /// Registers a file written by other means.
  void record(const std::string& name) { files_.push_back(name); }

  void say(const std::string& line) const {
    if (ctx_.log) *ctx_.log << line << '\n';
  }

  void manifest(const std::string& subcommand, const Config& config) {
    const json echoed = config.to_json();
    std::ostringstream hash;
    hash << std::hex << std::setw(16) << std::setfill('0') << fnv1a(echoed.dump());
    json m = {{"tool", "bloom"},
              {"version", BLOOM_VERSION},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"subcommand", subcommand},
              {"config_hash", "fnv1a64:" + hash.str()},
              {"seed", ctx_.seed ? json(*ctx_.seed) : json(nullptr)},
              {"threads", ctx_.threads},
              {"outputs", files_},
              {"config", echoed}};
    std::ofstream out(ctx_.out_dir / "manifest.json");
    if (!out) throw ConfigError("cannot write manifest");
    out << m.dump(2) << '\n';
  }

 private:
  const RunContext& ctx_;
  std::vector<std::string> files_;
};

std::string fmt(double x) {
  std::ostringstream s;
  s << std::setprecision(6) << x;
  return s.str();
}

void run_ode(const Config& c, Output& out) {
  const ModelParams& prm = c.params;
  const Trajectory traj = integrate_homogeneous(c.ode.initial, prm, c.ode.t_end);
  auto csv = out.open("trajectory.csv");  // every accepted step
  csv << "t,B,p,P,Q\n";
  for (std::size_t k = 0; k < traj.t.size(); ++k) {
    const HomState& s = traj.states[k];
    csv << traj.t[k] << ',' << s.B << ',' << s.p << ',' << s.P << ',' << s.quota(prm) << '\n';
  }
  const HomState& end = traj.final_state();
  auto fin = out.open("final_state.csv");
  fin << "t,B,p,P,Q\n" << traj.t.back() << ',' << end.B << ',' << end.p << ',' << end.P << ',' << end.quota(prm) << '\n';
  out.say("R0: " + fmt(r0(prm)));
  out.say("final state (B, p, P): " + fmt(end.B) + ", " + fmt(end.p) + ", " + fmt(end.P));
}

void run_stability(const Config& c, Output& out) {
  const ModelParams& prm = c.params;
  const auto& s = c.stability;
  HomState eq{0.0, 0.0, prm.P_h};
  if (s.equilibrium == "positive") {
    const Equilibrium found = find_equilibrium(prm, s.guess);
    if (found.kind != EquilibriumKind::positive)
      throw DomainError("no positive equilibrium for these parameters (R0 = " + fmt(r0(prm)) + ")");
    eq = found.state;
  }
  const ModeSweep sweep = mode_sweep(eq, s.n_max, s.wind, prm);
  auto csv = out.open("spectrum.csv");
  csv << "n,i,Re_exact,Im_exact,Re_approx,Im_approx\n";
  for (const ModeSpectrum& m : sweep.modes)
    for (int i = 0; i < 3; ++i)
      csv << m.n << ',' << i << ',' << m.exact[i].real() << ',' << m.exact[i].imag() << ',' << m.approx[i].real()
          << ',' << m.approx[i].imag() << '\n';
  auto sum = out.open("summary.csv");
  sum << "R0,equilibrium,B,p,P,stable,max_leading_real\n"
      << r0(prm) << ',' << s.equilibrium << ',' << eq.B << ',' << eq.p << ',' << eq.P << ','
      << (sweep.stable ? "true" : "false") << ',' << sweep.max_leading_real << '\n';
  out.say("R0: " + fmt(r0(prm)));
  out.say(std::string("stable: ") + (sweep.stable ? "true" : "false"));
}

void run_sim1d(const Config& c, Output& out) {
  const auto& s = c.sim1d;
  const Grid1D grid = build_grid(s.L, s.Nx);
  const Field1D initial = s.initial == "default" ? default_initial_1d(grid) : uniform_field_1d(grid, s.B0, s.Q0, s.P0);
  const WindField wind2 = make_wind(s.wind, c);
  const Wind1D wind = [wind2](double t) { return wind2(t).x(); };
  Options1D opt;
  opt.rtol = s.rtol;
  opt.atol = s.atol;
  const Trajectory1D traj = integrate_1d(initial, grid, wind, c.params, s.t_end, output_times(s.t_end, s.output_interval), opt);
  auto csv = out.open("trajectory.csv");
  write_csv_1d(csv, traj, grid);

  const Field1D& end = traj.samples.back();
  const double b0 = initial.B.cwiseAbs().maxCoeff();
  const double bmax = end.B.maxCoeff(), bmin = end.B.minCoeff();
  const bool extinct = end.B.cwiseAbs().maxCoeff() < 1e-3 * b0;
  auto sum = out.open("summary.csv");
  sum << "t_end,B_max,B_min,extinction\n"
      << traj.t.back() << ',' << bmax << ',' << bmin << ',' << (extinct ? "true" : "false") << '\n';
  out.say("B range at t_end: [" + fmt(bmin) + ", " + fmt(bmax) + "]");
  out.say(std::string("extinction: ") + (extinct ? "true" : "false"));
}

void run_sim2d(const Config& c, Output& out, const fs::path& out_dir) {
  const auto& s = c.sim2d;
  if (s.mesh.empty()) throw ConfigError("sim2d.mesh is required");
  const fs::path mesh_path = c.resolve(s.mesh);
  if (!fs::exists(mesh_path)) throw ConfigError("mesh file '" + mesh_path.string() + "' not found");
  const TriMesh mesh = load_gmsh_mesh(mesh_path.string());
  Options2D opt;
  opt.scheme = s.scheme == "upwind" ? AdvectionScheme::upwind : AdvectionScheme::galerkin;
  const Field2D initial = default_initial_2d(mesh);
  const Simulation2D sim =
      simulate_2d(initial, mesh, make_wind(s.wind, c), c.params, s.dt, s.t_end, output_times(s.t_end, s.output_interval), opt);
  auto index = out.open("snapshots.csv");
  index << "t,filename\n";
  for (std::size_t k = 0; k < sim.t.size(); ++k) {
    std::ostringstream name;
    name << "snapshot_" << std::setw(4) << std::setfill('0') << k << ".vtk";
    write_vtk(sim.snapshots[k], mesh, c.params, (out_dir / name.str()).string());
    out.record(name.str());
    index << sim.t[k] << ',' << name.str() << '\n';
  }
  const Field2D& end = sim.snapshots.back();
  const bool extinct = end.B.cwiseAbs().maxCoeff() < 1e-3 * initial.B.cwiseAbs().maxCoeff();
  out.say("mesh: " + std::to_string(mesh.nodes.cols()) + " nodes, " + std::to_string(mesh.triangles.size()) +
          " triangles; " + std::to_string(sim.steps) + " steps");
  out.say("B range at t_end: [" + fmt(end.B.minCoeff()) + ", " + fmt(end.B.maxCoeff()) + "]");
  out.say(std::string("extinction: ") + (extinct ? "true" : "false"));
}

void run_sobol(const Config& c, Output& out, const RunContext& ctx) {
  if (!ctx.seed) throw ConfigError("sobol needs an explicit --seed");
  const auto& s = c.sobol;
  SensitivityOptions opt;
  opt.N = s.N;
  opt.horizon = s.horizon;
  opt.bin_days = s.bin_days;
  opt.seed = *ctx.seed;
  opt.threads = ctx.threads;
  const auto edges = time_bins(s.horizon, s.bin_days);
  const SensitivityReport report = run_sensitivity(s.problem, c.params, solver1d_model(s.Nx, edges), edges, opt);
  auto csv = out.open("sobol.csv");
  write_report_csv(csv, report);
  out.say(std::to_string(report.rows.size()) + " index rows, " + std::to_string(report.failed_rows) + " failed runs");
}

}  // namespace

std::vector<double> output_times(double t_end, double interval) {
  if (!(t_end > 0.0)) throw ConfigError("t_end must be > 0");
  if (!(interval > 0.0)) throw ConfigError("output_interval must be > 0");
  std::vector<double> t;
  for (long k = 0; k * interval < t_end * (1 - 1e-12); ++k) t.push_back(k * interval);
  t.push_back(t_end);
  return t;
}

int run_command(const std::string& subcommand, const Config& config, const RunContext& ctx) {
  Output out(ctx);
  if (subcommand == "ode")
    run_ode(config, out);
  else if (subcommand == "stability")
    run_stability(config, out);
  else if (subcommand == "sim1d")
    run_sim1d(config, out);
  else if (subcommand == "sim2d")
    run_sim2d(config, out, ctx.out_dir);
  else if (subcommand == "sobol")
    run_sobol(config, out, ctx);
  else
    throw ConfigError("unknown subcommand '" + subcommand + "'");
  out.manifest(subcommand, config);
  return 0;
}

}  // namespace bloom::app
