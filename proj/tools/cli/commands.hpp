#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "config.hpp"

namespace bloom::app {

struct RunContext {
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::ostream* log = nullptr;  ///< summary lines; null for silence
};

/// Runs one subcommand (ode, stability, sim1d, sim2d, sobol), writing its
/// CSV/VTK outputs plus manifest.json into ctx.out_dir. Returns the process
/// exit status; errors are thrown.
int run_command(const std::string& subcommand, const Config& config, const RunContext& ctx);

/// Evenly spaced output times 0, dt, 2dt, ... with t_end always included.
std::vector<double> output_times(double t_end, double interval);

}  // namespace bloom::app
