#include "bloom/solver1d.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

#include "bloom/errors.hpp"
#include "bloom/kernels.hpp"

namespace bloom {
namespace {

constexpr int kVars = 4;
enum Var { kB = 0, kQ = 1, kP = 2, kp = 3 };

// Upwind difference for the transport term -a U_x.
inline double upwind(double a, double left, double centre, double right, double dx) {
  return a >= 0.0 ? -a * (centre - left) / dx : -a * (right - centre) / dx;
}

void rhs_flat(const Eigen::VectorXd& y, Eigen::VectorXd& dy, const Grid1D& grid, double v,
              const ModelParams& prm) {
  const int n = grid.Nx;
  const double dx = grid.dx, dx2 = dx * dx;
  const double g = prm.exchange();
  const double aB = prm.beta_B * v, aP = prm.beta_P * v;
  dy.resize(y.size());
  auto at = [&](int i, int k) { return y(kVars * std::clamp(i, 0, n - 1) + k); };

  for (int i = 0; i < n; ++i) {
    const double B = at(i, kB), Q = at(i, kQ), P = at(i, kP), p = at(i, kp);
    auto lap = [&](int k) { return (at(i + 1, k) - 2.0 * at(i, k) + at(i - 1, k)) / dx2; };
    auto adv = [&](double a, int k) { return upwind(a, at(i - 1, k), at(i, k), at(i + 1, k), dx); };

    const double h = kernel::growth_h(B, prm);
    const double eta = kernel::uptake_eta(B, p, P, prm);
    const double quota = std::max(Q, 0.5 * prm.Q_m);

    dy(kVars * i + kB) = prm.alpha * lap(kB) + adv(aB, kB) +
                         prm.r * (1.0 - prm.Q_m / quota) * h * B - (prm.l + g) * B;

    // Q moves with speed beta_B v - 2 alpha B_x / B.
    const double B_x = (at(i + 1, kB) - at(i - 1, kB)) / (2.0 * dx);
    const double speed = aB - 2.0 * prm.alpha * B_x / std::max(B, kTransportBiomassFloor);
    dy(kVars * i + kQ) = prm.alpha * lap(kQ) + adv(speed, kQ) + kernel::uptake_rho(Q, P, prm) -
                         prm.r * (Q - prm.Q_m) * h;

    dy(kVars * i + kP) = prm.beta * lap(kP) + adv(aP, kP) + g * (prm.P_h - P) + prm.P_in - eta + prm.l * p;
    dy(kVars * i + kp) = prm.alpha * lap(kp) + adv(aB, kp) + eta - (prm.l + g) * p;
  }
}

ColoredJacobian block_tridiagonal_pattern(int nodes) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> nz;
  for (int i = 0; i < nodes; ++i)
    for (int j = std::max(0, i - 1); j <= std::min(nodes - 1, i + 1); ++j)
      for (int a = 0; a < kVars; ++a)
        for (int b = 0; b < kVars; ++b) nz.emplace_back(kVars * i + a, kVars * j + b);
  return ColoredJacobian(static_cast<Eigen::Index>(kVars) * nodes, std::move(nz));
}

}  // namespace

Grid1D build_grid(double L, int Nx) {
  if (!(L > 0.0) || !std::isfinite(L)) throw DomainError("grid length must be > 0");
  if (Nx < 3) throw DomainError("grid needs at least 3 nodes");
  return {L, Nx, L / (Nx - 1)};
}

Eigen::VectorXd Field1D::pack() const {
  const Eigen::Index n = B.size();
  if (Q.size() != n || P.size() != n || p.size() != n) throw DomainError("field components differ in size");
  Eigen::VectorXd y(kVars * n);
  for (Eigen::Index i = 0; i < n; ++i) y.segment<kVars>(kVars * i) << B(i), Q(i), P(i), p(i);
  return y;
}

Field1D Field1D::unpack(const Eigen::VectorXd& y) {
  const Eigen::Index n = y.size() / kVars;
  Eigen::Map<const Eigen::Matrix<double, kVars, Eigen::Dynamic>> m(y.data(), kVars, n);
  return {m.row(kB).transpose(), m.row(kQ).transpose(), m.row(kP).transpose(), m.row(kp).transpose()};
}

Field1D rhs_1d(const Field1D& fields, const Grid1D& grid, double v, const ModelParams& prm) {
  if (fields.size() != grid.Nx) throw DomainError("field size does not match grid");
  Eigen::VectorXd dy;
  rhs_flat(fields.pack(), dy, grid, v, prm);
  return Field1D::unpack(dy);
}

InvariantReport check_invariants(const Field1D& f) {
  InvariantReport r;
  r.min_value = std::min({f.B.minCoeff(), f.p.minCoeff(), f.P.minCoeff()});
  r.quota_min = f.Q.minCoeff();
  r.quota_max = f.Q.maxCoeff();
  double mismatch = 0.0, scale = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (f.B(i) <= kTransportBiomassFloor) continue;
    mismatch = std::max(mismatch, std::abs(f.p(i) - f.Q(i) * f.B(i)));
    scale = std::max(scale, std::abs(f.p(i)));
  }
  r.quota_mismatch = scale > 0.0 ? mismatch / scale : 0.0;
  return r;
}

Trajectory1D integrate_1d(const Field1D& initial, const Grid1D& grid, const Wind1D& wind,
                          const ModelParams& prm, double t_end, const std::vector<double>& sample_times,
                          const Options1D& options) {
  prm.validate();
  if (initial.size() != grid.Nx) throw DomainError("initial field size does not match grid");
  if (!(t_end > 0.0)) throw DomainError("t_end must be > 0");
  const InvariantReport start = check_invariants(initial);
  if (start.min_value < 0.0) throw DomainError("initial field must be nonnegative");
  if (start.quota_min < prm.Q_m || start.quota_max > prm.Q_M) throw DomainError("initial quota outside [Q_m, Q_M]");
  for (double t : sample_times)
    if (t < 0.0 || t > t_end) throw DomainError("sample time outside [0, t_end]");
  if (!std::is_sorted(sample_times.begin(), sample_times.end())) throw DomainError("sample times must be sorted");

  RhsFunction rhs = [&](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
    rhs_flat(y, dy, grid, wind ? wind(t) : 0.0, prm);
  };
  const ColoredJacobian fd = block_tridiagonal_pattern(grid.Nx);
  JacobianFunction jac = [&](double t, const Eigen::VectorXd& y) { return fd(rhs, t, y); };

  StiffOptions opt;
  opt.rtol = options.rtol;
  opt.atol = options.atol;
  BdfIntegrator solver(rhs, jac, 0.0, initial.pack(), t_end, opt);

  Trajectory1D out;
  std::size_t next = 0;
  while (next < sample_times.size() && sample_times[next] <= 0.0) {
    out.t.push_back(sample_times[next++]);
    out.samples.push_back(initial);
  }
  while (next < sample_times.size()) {
    solver.step();
    while (next < sample_times.size() && sample_times[next] <= solver.t()) {
      const double ts = sample_times[next++];
      out.t.push_back(ts);
      out.samples.push_back(Field1D::unpack(ts == solver.t() ? solver.y() : solver.dense_output(ts)));
    }
  }
  out.steps = solver.steps();
  return out;
}

Field1D default_initial_1d(const Grid1D& grid) {
  const Eigen::ArrayXd x = grid.nodes().array();
  const double centre = 0.3 * grid.L, width = 0.1 * grid.L;
  Field1D f;
  f.B = (0.5 + 4.5 * (-((x - centre) / width).square()).exp()).matrix();
  f.Q = Eigen::VectorXd::Constant(grid.Nx, 0.02);
  f.P = Eigen::VectorXd::Constant(grid.Nx, 0.1);
  f.p = f.Q.cwiseProduct(f.B);
  return f;
}

Field1D uniform_field_1d(const Grid1D& grid, double B, double Q, double P) {
  Field1D f;
  f.B = Eigen::VectorXd::Constant(grid.Nx, B);
  f.Q = Eigen::VectorXd::Constant(grid.Nx, Q);
  f.P = Eigen::VectorXd::Constant(grid.Nx, P);
  f.p = f.Q * B;
  return f;
}

void write_csv_1d(std::ostream& out, const Trajectory1D& traj, const Grid1D& grid) {
  const auto old_precision = out.precision(17);
  out << "t,x,B,Q,P,p\n";
  for (std::size_t s = 0; s < traj.samples.size(); ++s) {
    const Field1D& f = traj.samples[s];
    for (Eigen::Index i = 0; i < f.size(); ++i)
      out << traj.t[s] << ',' << grid.x(static_cast<int>(i)) << ',' << f.B(i) << ',' << f.Q(i) << ',' << f.P(i)
          << ',' << f.p(i) << '\n';
  }
  out.precision(old_precision);
}

}  // namespace bloom
