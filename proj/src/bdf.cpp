#include "bloom/bdf.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bloom/errors.hpp"

namespace bloom {
namespace {

constexpr int kNewtonMaxIter = 4;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;

// Transformation of backward differences when the step changes by `factor`.
Eigen::MatrixXd step_change_matrix(int order, double factor) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(order + 1, order + 1);
  m.row(0).setOnes();
  for (int i = 1; i <= order; ++i)
    for (int j = 1; j <= order; ++j) m(i, j) = (i - 1 - factor * j) / static_cast<double>(i);
  for (int i = 1; i <= order; ++i) m.row(i) = m.row(i).cwiseProduct(m.row(i - 1));
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------

ColoredJacobian::ColoredJacobian(Eigen::Index n,
                                 std::vector<std::pair<Eigen::Index, Eigen::Index>> nonzeros)
    : n_(n), rows_of_col_(static_cast<std::size_t>(n)) {
  for (const auto& [row, col] : nonzeros) rows_of_col_[static_cast<std::size_t>(col)].push_back(row);
  for (auto& rows : rows_of_col_) {
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  }
  // Greedy coloring: a column joins the first group with no shared row.
  std::vector<std::vector<char>> used;
  for (Eigen::Index col = 0; col < n; ++col) {
    const auto& rows = rows_of_col_[static_cast<std::size_t>(col)];
    std::size_t g = 0;
    for (; g < groups_.size(); ++g) {
      bool clash = false;
      for (auto row : rows)
        if (used[g][static_cast<std::size_t>(row)]) { clash = true; break; }
      if (!clash) break;
    }
    if (g == groups_.size()) {
      groups_.emplace_back();
      used.emplace_back(static_cast<std::size_t>(n), 0);
    }
    groups_[g].push_back(col);
    for (auto row : rows) used[g][static_cast<std::size_t>(row)] = 1;
  }
}

ColoredJacobian ColoredJacobian::dense(Eigen::Index n) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> nz;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) nz.emplace_back(i, j);
  return ColoredJacobian(n, std::move(nz));
}

SparseMatrix ColoredJacobian::operator()(const RhsFunction& f, double t,
                                         const Eigen::VectorXd& y) const {
  Eigen::VectorXd f0(n_), f1(n_), yp = y;
  f(t, y, f0);
  std::vector<Eigen::Triplet<double>> triplets;
  const double root_eps = std::sqrt(std::numeric_limits<double>::epsilon());
  Eigen::VectorXd step(n_);
  for (const auto& group : groups_) {
    for (auto col : group) {
      step(col) = root_eps * std::max(std::abs(y(col)), 1e-8);
      yp(col) = y(col) + step(col);
      step(col) = yp(col) - y(col);
    }
    f(t, yp, f1);
    for (auto col : group) {
      for (auto row : rows_of_col_[static_cast<std::size_t>(col)])
        triplets.emplace_back(row, col, (f1(row) - f0(row)) / step(col));
      yp(col) = y(col);
    }
  }
  SparseMatrix jac(n_, n_);
  jac.setFromTriplets(triplets.begin(), triplets.end());
  return jac;
}

// ---------------------------------------------------------------------------

BdfIntegrator::BdfIntegrator(RhsFunction rhs, JacobianFunction jacobian, double t0,
                             Eigen::VectorXd y0, double t_bound, StiffOptions options)
    : rhs_(std::move(rhs)),
      jacobian_(std::move(jacobian)),
      opt_(options),
      t_(t0),
      t_old_(t0),
      t_bound_(t_bound),
      y_(std::move(y0)) {
  if (!(t_bound > t0)) throw std::invalid_argument("BDF: t_bound must exceed t0");
  if (!(opt_.rtol > 0.0 && opt_.atol > 0.0)) throw std::invalid_argument("BDF: tolerances must be > 0");
  const double eps = std::numeric_limits<double>::epsilon();
  opt_.rtol = std::max(opt_.rtol, 100 * eps);
  newton_tol_ = std::max(10 * eps / opt_.rtol, std::min(0.03, std::sqrt(opt_.rtol)));

  const double kappa[kMaxOrder + 2] = {0, -0.1850, -1.0 / 9.0, -0.0823, -0.0415, 0};
  gamma_(0) = 0.0;
  for (int i = 1; i <= kMaxOrder + 1; ++i) gamma_(i) = gamma_(i - 1) + 1.0 / i;
  for (int i = 0; i <= kMaxOrder + 1; ++i) {
    alpha_(i) = (1.0 - kappa[i]) * gamma_(i);
    error_const_(i) = kappa[i] * gamma_(i) + 1.0 / (i + 1);
  }

  const Eigen::Index n = y_.size();
  Eigen::VectorXd f0(n);
  evaluate(t_, y_, f0);
  h_abs_ = opt_.first_step > 0.0 ? opt_.first_step : initial_step(f0);
  h_abs_ = std::min(h_abs_, opt_.max_step);
  history_.setZero(kMaxOrder + 3, n);
  history_.row(0) = y_.transpose();
  history_.row(1) = (f0 * h_abs_).transpose();
}

void BdfIntegrator::evaluate(double t, const Eigen::VectorXd& y, Eigen::VectorXd& out) {
  ++n_rhs_;
  rhs_(t, y, out);
}

double BdfIntegrator::rms(const Eigen::VectorXd& v, const Eigen::VectorXd& scale) const {
  return std::sqrt(v.cwiseQuotient(scale).squaredNorm() / static_cast<double>(v.size()));
}

double BdfIntegrator::initial_step(const Eigen::VectorXd& f0) {
  const Eigen::VectorXd scale = (opt_.atol + opt_.rtol * y_.array().abs()).matrix();
  const double d0 = rms(y_, scale);
  const double d1 = rms(f0, scale);
  const double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  Eigen::VectorXd f1(y_.size());
  evaluate(t_ + h0, y_ + h0 * f0, f1);
  const double d2 = rms(f1 - f0, scale) / h0;
  const double h1 = (d1 <= 1e-15 && d2 <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                  : std::pow(0.01 / std::max(d1, d2), 0.5);
  return std::min({100 * h0, h1, t_bound_ - t_});
}

void BdfIntegrator::rescale_history(int order, double factor) {
  const Eigen::MatrixXd transform =
      (step_change_matrix(order, factor) * step_change_matrix(order, 1.0)).transpose();
  const Eigen::MatrixXd block = history_.topRows(order + 1);
  history_.topRows(order + 1) = transform * block;
}

void BdfIntegrator::factorize(double c) {
  SparseMatrix system(jac_.rows(), jac_.cols());
  system.setIdentity();
  system -= c * jac_;
  system.makeCompressed();
  lu_.compute(system);
  if (lu_.info() != Eigen::Success)
    throw SolverError("BDF: singular iteration matrix", t_, y_);
  lu_valid_ = true;
}

void BdfIntegrator::step() {
  if (finished()) return;
  if (n_steps_ >= opt_.max_steps) throw SolverError("BDF: step budget exhausted", t_, y_);

  const Eigen::Index n = y_.size();
  const double min_step = 10.0 * std::abs(std::nextafter(t_, t_bound_ + 1.0) - t_);

  double h_abs = h_abs_;
  if (h_abs > opt_.max_step) {
    rescale_history(order_, opt_.max_step / h_abs);
    h_abs = opt_.max_step;
    n_equal_steps_ = 0;
  } else if (h_abs < min_step) {
    rescale_history(order_, min_step / h_abs);
    h_abs = min_step;
    n_equal_steps_ = 0;
  }

  if (jac_.size() == 0) {
    jac_ = jacobian_(t_, y_);
    ++n_jac_;
    jac_current_ = true;
  }

  const int order = order_;
  Eigen::VectorXd y_predict(n), psi(n), scale(n), y_new(n), d(n), f(n), dy(n);
  double t_new = t_;
  int n_iter = 0;
  double error_norm = 0.0;
  bool accepted = false;

  while (!accepted) {
    if (h_abs < min_step) {
      std::ostringstream msg;
      msg << "BDF: step size underflow at t=" << t_ << " (h=" << h_abs << ")";
      throw SolverError(msg.str(), t_, y_);
    }
    t_new = t_ + h_abs;
    if (t_new >= t_bound_) {
      t_new = t_bound_;
      rescale_history(order, (t_new - t_) / h_abs);
      n_equal_steps_ = 0;
      lu_valid_ = false;
    }
    const double h = t_new - t_;
    h_abs = h;

    y_predict = history_.topRows(order + 1).colwise().sum().transpose();
    scale = (opt_.atol + opt_.rtol * y_predict.array().abs()).matrix();
    psi = (history_.middleRows(1, order).transpose() * gamma_.segment(1, order)) / alpha_(order);
    const double c = h / alpha_(order);

    bool converged = false;
    while (!converged) {
      if (!lu_valid_) factorize(c);
      // Simplified Newton on y - c f(y) = y_predict - psi.
      y_new = y_predict;
      d.setZero();
      double dy_norm_old = -1.0;
      for (n_iter = 1; n_iter <= kNewtonMaxIter; ++n_iter) {
        evaluate(t_new, y_new, f);
        if (!f.allFinite()) break;
        dy = lu_.solve(c * f - psi - d);
        const double dy_norm = rms(dy, scale);
        const double rate = dy_norm_old < 0.0 ? -1.0 : dy_norm / dy_norm_old;
        if (rate >= 0.0 &&
            (rate >= 1.0 ||
             std::pow(rate, kNewtonMaxIter - n_iter + 1) / (1.0 - rate) * dy_norm > newton_tol_))
          break;
        y_new += dy;
        d += dy;
        if (dy_norm == 0.0 || (rate >= 0.0 && rate / (1.0 - rate) * dy_norm < newton_tol_)) {
          converged = true;
          break;
        }
        dy_norm_old = dy_norm;
      }
      if (converged) break;
      if (jac_current_) break;
      jac_ = jacobian_(t_new, y_predict);
      ++n_jac_;
      jac_current_ = true;
      lu_valid_ = false;
    }

    if (!converged) {
      rescale_history(order, 0.5);
      h_abs *= 0.5;
      n_equal_steps_ = 0;
      lu_valid_ = false;
      continue;
    }

    const double safety =
        0.9 * (2 * kNewtonMaxIter + 1) / static_cast<double>(2 * kNewtonMaxIter + n_iter);
    scale = (opt_.atol + opt_.rtol * y_new.array().abs()).matrix();
    error_norm = rms(error_const_(order) * d, scale);
    if (error_norm > 1.0) {
      const double factor =
          std::max(kMinFactor, safety * std::pow(error_norm, -1.0 / (order + 1)));
      rescale_history(order, factor);
      h_abs *= factor;
      n_equal_steps_ = 0;
    } else {
      accepted = true;
    }
  }

  ++n_steps_;
  ++n_equal_steps_;
  t_old_ = t_;
  t_ = t_new;
  y_ = y_new;
  h_abs_ = h_abs;
  jac_current_ = false;

  history_.row(order + 2) = d.transpose() - history_.row(order + 1);
  history_.row(order + 1) = d.transpose();
  for (int i = order; i >= 0; --i) history_.row(i) += history_.row(i + 1);

  if (n_equal_steps_ < order + 1) return;

  const double safety =
      0.9 * (2 * kNewtonMaxIter + 1) / static_cast<double>(2 * kNewtonMaxIter + n_iter);
  const double inf = std::numeric_limits<double>::infinity();
  const double error_m_norm =
      order > 1 ? rms(error_const_(order - 1) * history_.row(order).transpose(), scale) : inf;
  const double error_p_norm =
      order < kMaxOrder ? rms(error_const_(order + 1) * history_.row(order + 2).transpose(), scale)
                        : inf;
  const double norms[3] = {error_m_norm, error_norm, error_p_norm};
  double best = -1.0;
  int delta = 0;
  for (int i = 0; i < 3; ++i) {
    const double factor = norms[i] == 0.0 ? inf : std::pow(norms[i], -1.0 / (order + i));
    if (factor > best) {
      best = factor;
      delta = i - 1;
    }
  }
  order_ = order + delta;
  const double factor = std::min(kMaxFactor, safety * best);
  h_abs_ *= factor;
  rescale_history(order_, factor);
  n_equal_steps_ = 0;
  lu_valid_ = false;
}

Eigen::VectorXd BdfIntegrator::dense_output(double t) const {
  // The history always describes the current interpolating polynomial in
  // terms of the (possibly rescaled) step h_abs_ and order_.
  Eigen::VectorXd y = history_.row(0).transpose();
  double p = 1.0;
  for (int j = 0; j < order_; ++j) {
    p *= (t - (t_ - h_abs_ * j)) / (h_abs_ * (j + 1));
    y += p * history_.row(j + 1).transpose();
  }
  return y;
}

std::vector<Eigen::VectorXd> integrate_samples(const RhsFunction& rhs, const JacobianFunction& jac,
                                               double t0, const Eigen::VectorXd& y0,
                                               const std::vector<double>& sample_times,
                                               const StiffOptions& options) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(sample_times.size());
  if (sample_times.empty()) return out;
  const double t_end = sample_times.back();
  std::size_t next = 0;
  while (next < sample_times.size() && sample_times[next] <= t0) {
    out.push_back(y0);
    ++next;
  }
  if (next == sample_times.size()) return out;
  BdfIntegrator solver(rhs, jac, t0, y0, t_end, options);
  while (next < sample_times.size()) {
    solver.step();
    while (next < sample_times.size() && sample_times[next] <= solver.t()) {
      out.push_back(sample_times[next] == solver.t() ? solver.y()
                                                      : solver.dense_output(sample_times[next]));
      ++next;
    }
  }
  return out;
}

}  // namespace bloom
