#include <iostream>

#include <CLI11.hpp>

#include "bloom/errors.hpp"
#include "commands.hpp"

extern char** environ;

int main(int argc, char** argv) {
  CLI::App app{"Stoichiometric cyanobacteria bloom model"};
  app.require_subcommand(1);
  app.set_version_flag("--version", BLOOM_VERSION);

  std::string config_path, out_dir = ".";
  std::uint64_t seed = 0;
  int threads = 1;
  app.add_option("--config", config_path, "JSON configuration")->required()->envname("BLOOM_CONFIG");
  app.add_option("--out", out_dir, "output directory")->envname("BLOOM_OUT");
  auto* seed_opt = app.add_option("--seed", seed, "seed (required by sobol)")->envname("BLOOM_SEED");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber)->envname("BLOOM_THREADS");

  app.fallthrough();  // global flags may follow the subcommand
  app.add_subcommand("ode", "integrate the well-mixed ODE");
  app.add_subcommand("stability", "R0 and mode-sweep spectrum at an equilibrium");
  app.add_subcommand("sim1d", "1D finite-difference simulation");
  app.add_subcommand("sim2d", "2D finite-element simulation on a gmsh mesh");
  app.add_subcommand("sobol", "Sobol sensitivity analysis (needs --seed)");

  CLI11_PARSE(app, argc, argv);

  try {
    bloom::app::Config config = bloom::app::load_config(config_path);
    std::vector<std::string> env;
    for (char** e = environ; *e; ++e) env.emplace_back(*e);
    bloom::app::apply_env_overrides(config, env);

    bloom::app::RunContext ctx;
    ctx.out_dir = out_dir;
    if (seed_opt->count() > 0) ctx.seed = seed;
    ctx.threads = threads;
    ctx.log = &std::cout;
    return bloom::app::run_command(app.get_subcommands().front()->get_name(), config, ctx);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
