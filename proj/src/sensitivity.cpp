#include "bloom/sensitivity.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>
#include <thread>

#include "bloom/diagnostics.hpp"
#include "bloom/errors.hpp"
#include "bloom/solver1d.hpp"

namespace bloom {
namespace {

struct DirectionEntry {
  int s;
  std::uint32_t poly;  // primitive polynomial including leading and constant terms
  std::array<std::uint32_t, 7> m;
};

// Joe & Kuo (2008), new-joe-kuo-6.21201, dimensions 2..21.
constexpr DirectionEntry kJoeKuo[] = {
    {1, 3, {1}},
    {2, 7, {1, 3}},
    {3, 11, {1, 3, 1}},
    {3, 13, {1, 1, 1}},
    {4, 19, {1, 1, 3, 3}},
    {4, 25, {1, 3, 5, 13}},
    {5, 37, {1, 1, 5, 5, 17}},
    {5, 41, {1, 1, 5, 5, 5}},
    {5, 47, {1, 1, 7, 11, 19}},
    {5, 55, {1, 1, 5, 1, 1}},
    {5, 59, {1, 1, 1, 3, 11}},
    {5, 61, {1, 3, 5, 5, 31}},
    {6, 67, {1, 3, 3, 9, 7, 49}},
    {6, 91, {1, 1, 1, 15, 21, 21}},
    {6, 97, {1, 3, 1, 13, 27, 49}},
    {6, 103, {1, 1, 1, 15, 7, 5}},
    {6, 109, {1, 3, 1, 15, 13, 25}},
    {6, 115, {1, 1, 5, 5, 19, 61}},
    {7, 131, {1, 3, 7, 11, 23, 15, 103}},
    {7, 137, {1, 3, 7, 13, 13, 15, 69}},
};

constexpr double kTwoPow32 = 4294967296.0;

bool is_power_of_two(long n) { return n > 0 && (n & (n - 1)) == 0; }

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

SobolSequence::SobolSequence(int dim) : dim_(dim), directions_(dim), state_(dim, 0u) {
  if (dim < 1 || dim > kMaxDim) throw DomainError("Sobol dimension must be in [1, 21]");
  for (int k = 0; k < 32; ++k) directions_[0][k] = 1u << (31 - k);
  for (int j = 1; j < dim; ++j) {
    const DirectionEntry& e = kJoeKuo[j - 1];
    const std::uint32_t a = (e.poly >> 1) & ((1u << (e.s - 1)) - 1u);
    auto& v = directions_[j];
    for (int k = 0; k < e.s; ++k) v[k] = e.m[k] << (31 - k);
    for (int k = e.s; k < 32; ++k) {
      v[k] = v[k - e.s] ^ (v[k - e.s] >> e.s);
      for (int i = 1; i < e.s; ++i)
        if ((a >> (e.s - 1 - i)) & 1u) v[k] ^= v[k - i];
    }
  }
}

Eigen::VectorXd SobolSequence::next() {
  Eigen::VectorXd x(dim_);
  if (index_ > 0) {
    // Gray-code update: flip the direction of the lowest zero bit of index-1.
    std::uint64_t c = 0, n = index_ - 1;
    while (n & 1u) {
      n >>= 1;
      ++c;
    }
    if (c >= 32) throw DomainError("Sobol sequence exhausted");
    for (int j = 0; j < dim_; ++j) state_[j] ^= directions_[j][c];
  }
  for (int j = 0; j < dim_; ++j) x(j) = state_[j] / kTwoPow32;
  ++index_;
  return x;
}

Eigen::MatrixXd SobolSequence::draw(long n, bool scramble, std::uint64_t seed) {
  std::vector<std::uint32_t> shift(dim_, 0u);
  if (scramble) {
    std::mt19937_64 rng(seed);
    for (auto& s : shift) s = static_cast<std::uint32_t>(rng() >> 32);
  }
  Eigen::MatrixXd out(n, dim_);
  for (long i = 0; i < n; ++i) {
    next();
    for (int j = 0; j < dim_; ++j) out(i, j) = (state_[j] ^ shift[j]) / kTwoPow32;
  }
  return out;
}

void SobolProblem::validate() const {
  if (factors.empty()) throw ConfigError("Sobol problem has no factors");
  if (2 * dim() > SobolSequence::kMaxDim) throw ConfigError("too many Sobol factors (max 10)");
  for (const auto& f : factors)
    if (!(f.lower <= f.upper) || !std::isfinite(f.lower) || !std::isfinite(f.upper))
      throw ConfigError("Sobol factor '" + f.name + "' has an invalid range");
}

SobolProblem default_sobol_problem() {
  return {{{"z_m", 2.0, 10.0}, {"K_bg", 0.1, 1.0}, {"D", 0.01, 0.1}, {"P_in", 0.0, 0.3}, {"beta_B", 0.01, 0.1}}};
}

Eigen::MatrixXd saltelli_design(const SobolProblem& problem, long N, std::uint64_t seed) {
  problem.validate();
  if (N < 1) throw DomainError("Saltelli design needs N >= 1");
  if (!is_power_of_two(N)) warn("Saltelli N = " + std::to_string(N) + " is not a power of two; balance is lost");
  const int d = problem.dim();
  SobolSequence seq(2 * d);
  const Eigen::MatrixXd base = seq.draw(N, true, seed);
  Eigen::RowVectorXd lo(d), width(d);
  for (int j = 0; j < d; ++j) {
    lo(j) = problem.factors[j].lower;
    width(j) = problem.factors[j].upper - problem.factors[j].lower;
  }
  Eigen::MatrixXd rows(N * (d + 2), d);
  for (long k = 0; k < N; ++k) {
    const Eigen::RowVectorXd A = lo + base.row(k).head(d).cwiseProduct(width);
    const Eigen::RowVectorXd B = lo + base.row(k).tail(d).cwiseProduct(width);
    const long r = k * (d + 2);
    rows.row(r) = A;
    for (int i = 0; i < d; ++i) {
      rows.row(r + 1 + i) = A;
      rows(r + 1 + i, i) = B(i);
    }
    rows.row(r + d + 1) = B;
  }
  return rows;
}

SobolIndices estimate_indices(const Eigen::VectorXd& y, int d) {
  const long block = d + 2;
  if (d < 1 || y.size() % block != 0) throw DomainError("outputs do not align with a Saltelli design");
  std::vector<long> good;
  for (long k = 0; k < y.size() / block; ++k)
    if (y.segment(k * block, block).allFinite()) good.push_back(k);
  const long n = static_cast<long>(good.size());
  if (n < 2) throw DomainError("too few valid Saltelli blocks");

  Eigen::VectorXd fA(n), fB(n);
  Eigen::MatrixXd fAB(n, d);
  for (long k = 0; k < n; ++k) {
    const long r = good[k] * block;
    fA(k) = y(r);
    fB(k) = y(r + d + 1);
    fAB.row(k) = y.segment(r + 1, d).transpose();
  }
  Eigen::VectorXd both(2 * n);
  both << fA, fB;
  const double variance = (both.array() - both.mean()).square().sum() / static_cast<double>(2 * n);
  const double scale = std::max(1.0, both.cwiseAbs().maxCoeff());
  if (!(variance > 1e-28 * scale * scale)) throw DomainError("constant output");

  SobolIndices out{Eigen::VectorXd(d), Eigen::VectorXd(d)};
  for (int i = 0; i < d; ++i) {
    const Eigen::ArrayXd diff = fAB.col(i).array() - fA.array();
    out.S1(i) = (fB.array() * diff).mean() / variance;
    out.ST(i) = 0.5 * diff.square().mean() / variance;
  }
  return out;
}

const FactorBinIndices& SensitivityReport::at(const std::string& factor, int bin) const {
  int seen = 0;
  for (const auto& r : rows)
    if (r.factor == factor && seen++ == bin) return r;
  throw DomainError("no report row for factor '" + factor + "' bin " + std::to_string(bin));
}

std::vector<double> time_bins(double horizon, double bin_days) {
  if (!(horizon > 0.0) || !(bin_days > 0.0)) throw DomainError("horizon and bin width must be > 0");
  const int n = std::max(1, static_cast<int>(std::lround(horizon / bin_days)));
  std::vector<double> edges(n + 1);
  for (int k = 0; k <= n; ++k) edges[k] = horizon * k / n;
  return edges;
}

SensitivityModel solver1d_model(int Nx, const std::vector<double>& bin_edges) {
  if (bin_edges.size() < 2) throw DomainError("need at least one time bin");
  const Grid1D grid = build_grid(1000.0, Nx);
  const double horizon = bin_edges.back();
  std::vector<double> times;
  for (double t = 0.0; t < horizon; t += 1.0) times.push_back(t);
  for (double e : bin_edges) times.push_back(e);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  return [=](const ModelParams& prm) {
    const Trajectory1D traj = integrate_1d(default_initial_1d(grid), grid, {}, prm, horizon, times);
    const int bins = static_cast<int>(bin_edges.size()) - 1;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(grid.Nx, bins);
    for (int b = 0; b < bins; ++b) {
      for (std::size_t k = 0; k + 1 < times.size(); ++k) {
        const double t0 = times[k], t1 = times[k + 1];
        if (t0 < bin_edges[b] || t1 > bin_edges[b + 1]) continue;
        out.col(b) += 0.5 * (t1 - t0) * (traj.samples[k].B + traj.samples[k + 1].B);
      }
      out.col(b) /= bin_edges[b + 1] - bin_edges[b];
    }
    return out;
  };
}

SensitivityReport run_sensitivity(const SobolProblem& problem, const ModelParams& base, const SensitivityModel& model,
                                  const std::vector<double>& bin_edges, const SensitivityOptions& options) {
  problem.validate();
  base.validate();
  for (const auto& f : problem.factors) (void)ModelParams(base).field(f.name);  // unknown names throw
  const int d = problem.dim();
  const Eigen::MatrixXd design = saltelli_design(problem, options.N, options.seed);
  const long rows = design.rows();

  std::vector<Eigen::MatrixXd> outputs(rows);
  std::vector<char> failed(rows, 0);
  std::atomic<long> next{0};
  auto worker = [&] {
    for (long r = next++; r < rows; r = next++) {
      ModelParams prm = base;
      for (int j = 0; j < d; ++j) prm.field(problem.factors[j].name) = design(r, j);
      try {
        outputs[r] = model(prm);
        if (!outputs[r].allFinite()) failed[r] = 1;
      } catch (const std::exception&) {
        failed[r] = 1;
      }
    }
  };
  const int threads = std::max(1, options.threads);
  std::vector<std::thread> pool;
  for (int k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  SensitivityReport report;
  report.bin_edges = bin_edges;
  for (char f : failed) report.failed_rows += f;
  if (report.failed_rows > options.max_failure_fraction * rows) {
    std::ostringstream msg;
    msg << "sensitivity: " << report.failed_rows << " of " << rows << " model runs failed";
    throw SolverError(msg.str(), 0.0, Eigen::VectorXd());
  }
  long first_good = 0;
  while (failed[first_good]) ++first_good;
  const Eigen::Index points = outputs[first_good].rows();
  const int bins = static_cast<int>(outputs[first_good].cols());
  if (bins != static_cast<int>(bin_edges.size()) - 1) throw DomainError("model output does not match time bins");

  // indices[factor][bin] -> per-point values
  std::vector<std::vector<std::vector<double>>> s1(d, std::vector<std::vector<double>>(bins)), st = s1;
  Eigen::VectorXd y(rows);
  for (int b = 0; b < bins; ++b)
    for (Eigen::Index l = 0; l < points; ++l) {
      for (long r = 0; r < rows; ++r)
        y(r) = failed[r] ? std::numeric_limits<double>::quiet_NaN() : outputs[r](l, b);
      const SobolIndices idx = estimate_indices(y, d);
      for (int i = 0; i < d; ++i) {
        s1[i][b].push_back(idx.S1(i));
        st[i][b].push_back(idx.ST(i));
      }
    }
  const long valid_blocks = [&] {
    long n = 0;
    for (long k = 0; k < options.N; ++k) {
      bool ok = true;
      for (long r = k * (d + 2); r < (k + 1) * (d + 2); ++r) ok = ok && !failed[r];
      n += ok;
    }
    return n;
  }();
  for (int i = 0; i < d; ++i)
    for (int b = 0; b < bins; ++b) {
      FactorBinIndices row;
      row.factor = problem.factors[i].name;
      row.bin_start = bin_edges[b];
      row.bin_end = bin_edges[b + 1];
      row.S1_mean = mean(s1[i][b]);
      row.S1_sd = stddev(s1[i][b]);
      row.ST_mean = mean(st[i][b]);
      row.ST_sd = stddev(st[i][b]);
      row.N = valid_blocks;
      row.flagged = row.S1_mean < -0.05 || row.S1_mean > 1.05 || row.ST_mean < -0.05 || row.ST_mean > 1.05 ||
                    row.ST_mean + 0.05 < row.S1_mean;
      if (row.flagged) {
        std::ostringstream msg;
        msg << "sensitivity: indices for " << row.factor << " in bin [" << row.bin_start << ", " << row.bin_end
            << ") outside the expected range (S1 " << row.S1_mean << ", ST " << row.ST_mean << ")";
        warn(msg.str());
      }
      report.rows.push_back(row);
    }
  return report;
}

void write_report_csv(std::ostream& out, const SensitivityReport& report) {
  const auto old_precision = out.precision(17);
  out << "factor,bin_start,bin_end,S1_mean,S1_sd,ST_mean,ST_sd,N\n";
  for (const auto& r : report.rows)
    out << r.factor << ',' << r.bin_start << ',' << r.bin_end << ',' << r.S1_mean << ',' << r.S1_sd << ','
        << r.ST_mean << ',' << r.ST_sd << ',' << r.N << '\n';
  out.precision(old_precision);
}

}  // namespace bloom
