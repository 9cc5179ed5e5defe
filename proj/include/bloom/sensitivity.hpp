#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bloom/params.hpp"

namespace bloom {

/// Unscrambled Sobol' points in [0,1)^dim (Joe-Kuo direction numbers,
/// up to 21 dimensions), generated in Gray-code order starting at 0.
class SobolSequence {
 public:
  static constexpr int kMaxDim = 21;

  explicit SobolSequence(int dim);
  int dim() const { return dim_; }
  /// Next point; the first call returns the origin.
  Eigen::VectorXd next();
  /// Next n points as rows, with an optional random digital shift (XOR of a
  /// per-dimension 32-bit word drawn from `seed`).
  Eigen::MatrixXd draw(long n, bool scramble = false, std::uint64_t seed = 0);

 private:
  int dim_;
  std::uint64_t index_ = 0;
  std::vector<std::array<std::uint32_t, 32>> directions_;
  std::vector<std::uint32_t> state_;
};

struct SobolFactor {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
};

struct SobolProblem {
  std::vector<SobolFactor> factors;

  int dim() const { return static_cast<int>(factors.size()); }
  /// Throws ConfigError on empty or inverted ranges.
  void validate() const;
};

/// The five physical factors and their ranges.
SobolProblem default_sobol_problem();

/// Saltelli design: N blocks of d + 2 rows [A, A_B^(1), ..., A_B^(d), B], where
/// A_B^(i) is A with column i taken from B. A and B are the two halves of a
/// digitally shifted 2d-dimensional Sobol' sequence. Warns if N is not a power
/// of two.
Eigen::MatrixXd saltelli_design(const SobolProblem& problem, long N, std::uint64_t seed);

struct SobolIndices {
  Eigen::VectorXd S1, ST;
};

/// Saltelli (2010) first-order and Jansen total-order estimators on outputs
/// aligned with saltelli_design rows. Non-finite outputs drop their whole
/// block. Throws DomainError("constant output") if the variance is zero.
SobolIndices estimate_indices(const Eigen::VectorXd& outputs, int d);

struct FactorBinIndices {
  std::string factor;
  double bin_start = 0.0, bin_end = 0.0;
  double S1_mean = 0.0, S1_sd = 0.0, ST_mean = 0.0, ST_sd = 0.0;
  long N = 0;
  bool flagged = false;  ///< a mean outside [-0.05, 1.05] or ST + 0.05 < S1
};

struct SensitivityReport {
  std::vector<FactorBinIndices> rows;  ///< factor-major, bins in time order
  std::vector<double> bin_edges;
  long failed_rows = 0;

  const FactorBinIndices& at(const std::string& factor, int bin) const;
  int bins() const { return static_cast<int>(bin_edges.size()) - 1; }
};

/// Model under analysis: maps a parameter set to bin-averaged biomass, one row
/// per spatial point and one column per time bin. Must be thread-safe.
using SensitivityModel = std::function<Eigen::MatrixXd(const ModelParams&)>;

/// 365-day horizon split into round(365 / bin_days) equal bins.
std::vector<double> time_bins(double horizon, double bin_days);

/// Default model: the 1D solver on the default initial data (L = 1000 m,
/// Nx nodes, no wind) run for `horizon` days, B averaged over each bin by the
/// trapezoidal rule on daily samples.
SensitivityModel solver1d_model(int Nx, const std::vector<double>& bin_edges);

struct SensitivityOptions {
  long N = 256;
  double horizon = 365.0;
  double bin_days = 60.0;
  std::uint64_t seed = 0;
  int threads = 1;
  double max_failure_fraction = 0.01;
};

/// Runs every design row through `model` (in parallel), then computes indices
/// per (point, bin) and reports their spatial mean and standard deviation.
SensitivityReport run_sensitivity(const SobolProblem& problem, const ModelParams& base, const SensitivityModel& model,
                                  const std::vector<double>& bin_edges, const SensitivityOptions& options);

/// CSV: factor,bin_start,bin_end,S1_mean,S1_sd,ST_mean,ST_sd,N.
void write_report_csv(std::ostream& out, const SensitivityReport& report);

}  // namespace bloom
