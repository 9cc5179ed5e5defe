#include "bloom/solver2d.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <Eigen/SparseLU>
#include <unsupported/Eigen/AutoDiff>

#include "bloom/diagnostics.hpp"
#include "bloom/errors.hpp"
#include "bloom/kernels.hpp"
#include "bloom/model.hpp"

namespace bloom {
namespace {

using Sparse = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using AD = Eigen::AutoDiffScalar<Eigen::Vector3d>;

constexpr int kSpecies = 3;  // B, p, P interleaved per node

// Discrete upwinding: add the symmetric, zero-row-sum diffusion
// d_ij = max(0, t_ij, t_ji) so that the transport operator has nonpositive
// off-diagonal entries.
Sparse upwinded(const Sparse& T) {
  const Sparse Tt = T.transpose();
  std::vector<Triplet> diffusion;
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(T.rows());
  for (int k = 0; k < T.outerSize(); ++k)
    for (Sparse::InnerIterator it(T, k); it; ++it) {
      if (it.row() == it.col()) continue;
      const double d = std::max({0.0, it.value(), Tt.coeff(it.row(), it.col())});
      if (d > 0.0) {
        diffusion.emplace_back(it.row(), it.col(), -d);
        diag(it.row()) += d;
      }
    }
  for (Eigen::Index i = 0; i < T.rows(); ++i) diffusion.emplace_back(i, i, diag(i));
  Sparse D(T.rows(), T.cols());
  D.setFromTriplets(diffusion.begin(), diffusion.end());
  return T + D;
}

struct Operators {
  std::array<Sparse, kSpecies> A;  // LHS transport-diffusion operator per species
};

Operators build_operators(const FemMatrices& fem, const Eigen::Vector2d& v, const ModelParams& prm,
                          AdvectionScheme scheme) {
  const Sparse C = fem.advection(v);
  auto transport = [&](double beta) {
    Sparse T = beta * C;
    return scheme == AdvectionScheme::upwind ? upwinded(T) : T;
  };
  const Sparse TB = transport(prm.beta_B);
  Operators ops;
  ops.A[0] = prm.alpha * fem.K + TB;
  ops.A[1] = ops.A[0];
  ops.A[2] = prm.beta * fem.K + transport(prm.beta_P);
  return ops;
}

Eigen::VectorXd pack(const Field2D& f) {
  Eigen::VectorXd y(kSpecies * f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) y.segment<3>(kSpecies * i) << f.B(i), f.p(i), f.P(i);
  return y;
}

Field2D unpack(const Eigen::VectorXd& y) {
  const Eigen::Index n = y.size() / kSpecies;
  Eigen::Map<const Eigen::Matrix<double, kSpecies, Eigen::Dynamic>> m(y.data(), kSpecies, n);
  return {m.row(0).transpose(), m.row(1).transpose(), m.row(2).transpose()};
}

// Residual in rate units, F / m, for the backward-Euler system.
Eigen::VectorXd residual(const Eigen::VectorXd& y, const Eigen::VectorXd& yn, double dt, const Operators& ops,
                         const Eigen::VectorXd& lumped, const ModelParams& prm, double eps) {
  const Eigen::Index n = lumped.size();
  Eigen::VectorXd F(y.size());
  for (int s = 0; s < kSpecies; ++s) {
    Eigen::Map<const Eigen::VectorXd, 0, Eigen::InnerStride<kSpecies>> ys(y.data() + s, n);
    const Eigen::VectorXd transport = ops.A[s] * ys;
    for (Eigen::Index i = 0; i < n; ++i) F(kSpecies * i + s) = transport(i) / lumped(i);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto u = y.segment<3>(kSpecies * i);
    F.segment<3>(kSpecies * i) +=
        (u - yn.segment<3>(kSpecies * i)) / dt - kernel::rates_regularized(u(0), u(1), u(2), eps, prm);
  }
  return F;
}

// Jacobian of the scaled residual F / m.
Sparse jacobian(const Eigen::VectorXd& y, double dt, const Operators& ops, const Eigen::VectorXd& lumped,
                const ModelParams& prm, double eps) {
  const Eigen::Index n = lumped.size();
  std::vector<Triplet> trips;
  trips.reserve(kSpecies * ops.A[0].nonZeros() + 9 * n);
  for (int s = 0; s < kSpecies; ++s)
    for (int k = 0; k < ops.A[s].outerSize(); ++k)
      for (Sparse::InnerIterator it(ops.A[s], k); it; ++it)
        trips.emplace_back(kSpecies * it.row() + s, kSpecies * it.col() + s, it.value() / lumped(it.row()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto u = y.segment<3>(kSpecies * i);
    const AD B(u(0), 3, 0), p(u(1), 3, 1), P(u(2), 3, 2);
    const Eigen::Matrix<AD, 3, 1> R = kernel::rates_regularized(B, p, P, eps, prm);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        trips.emplace_back(kSpecies * i + a, kSpecies * i + b, (a == b ? 1.0 / dt : 0.0) - R(a).derivatives()(b));
  }
  Sparse J(kSpecies * n, kSpecies * n);
  J.setFromTriplets(trips.begin(), trips.end());
  return J;
}

bool newton_solve(Eigen::VectorXd& y, const Eigen::VectorXd& yn, double dt, const Operators& ops,
                  const Eigen::VectorXd& lumped, const ModelParams& prm, const Options2D& opt, StepStats& stats) {
  Eigen::SparseLU<Sparse, Eigen::COLAMDOrdering<int>> lu;
  Eigen::VectorXd F = residual(y, yn, dt, ops, lumped, prm, opt.eps);
  double res = F.lpNorm<Eigen::Infinity>() * dt;
  for (int it = 0; it < opt.max_newton; ++it) {
    const double scale = 1.0 + y.lpNorm<Eigen::Infinity>();
    if (res <= opt.newton_tol * scale && it > 0) {
      stats.residual = res;
      return true;
    }
    const Sparse J = jacobian(y, dt, ops, lumped, prm, opt.eps);
    lu.compute(J);
    if (lu.info() != Eigen::Success) return false;
    const Eigen::VectorXd delta = lu.solve(-F);
    if (!delta.allFinite()) return false;
    ++stats.newton_iterations;

    double lambda = 1.0;
    for (int k = 0; k < 10; ++k, lambda *= 0.5) {
      const Eigen::VectorXd trial = y + lambda * delta;
      const Eigen::VectorXd Ft = residual(trial, yn, dt, ops, lumped, prm, opt.eps);
      const double rt = Ft.lpNorm<Eigen::Infinity>() * dt;
      if (std::isfinite(rt) && (rt < res || rt <= opt.newton_tol * scale)) {
        y = trial;
        F = Ft;
        res = rt;
        break;
      }
      if (k == 9) return false;
    }
    if (lambda * delta.lpNorm<Eigen::Infinity>() <= opt.newton_tol * scale &&
        res <= opt.newton_tol * (1.0 + y.lpNorm<Eigen::Infinity>())) {
      stats.residual = res;
      return true;
    }
  }
  stats.residual = res;
  return res <= opt.newton_tol * (1.0 + y.lpNorm<Eigen::Infinity>());
}

Field2D step_recursive(const Field2D& Un, double dt, double t_next, const FemMatrices& fem, const WindField& wind,
                       const ModelParams& prm, const Options2D& opt, StepStats& stats, int depth) {
  const Operators ops = build_operators(fem, wind ? wind(t_next) : Eigen::Vector2d::Zero(), prm, opt.scheme);
  const Eigen::VectorXd yn = pack(Un);
  Eigen::VectorXd y = yn;
  if (newton_solve(y, yn, dt, ops, fem.lumped, prm, opt, stats)) {
    ++stats.substeps;
    return unpack(y);
  }
  if (depth >= opt.max_halvings)
    throw SolverError("backward-Euler Newton did not converge after " + std::to_string(depth) + " dt halvings",
                      t_next - dt, yn);
  const double half = 0.5 * dt;
  const Field2D mid = step_recursive(Un, half, t_next - half, fem, wind, prm, opt, stats, depth + 1);
  return step_recursive(mid, half, t_next, fem, wind, prm, opt, stats, depth + 1);
}

}  // namespace

Eigen::VectorXd Field2D::quota(const ModelParams& prm, double floor) const {
  Eigen::VectorXd q(size());
  const double fallback = q_hat(prm);
  for (Eigen::Index i = 0; i < size(); ++i) q(i) = B(i) > floor ? p(i) / B(i) : fallback;
  return q;
}

FemMatrices assemble_fem(const TriMesh& mesh) {
  const int n = mesh.node_count();
  std::vector<Triplet> m, k, cx, cy;
  m.reserve(9 * mesh.triangle_count());
  k.reserve(9 * mesh.triangle_count());
  cx.reserve(9 * mesh.triangle_count());
  cy.reserve(9 * mesh.triangle_count());
  for (int e = 0; e < mesh.triangle_count(); ++e) {
    const auto& t = mesh.triangles[e];
    const double A = mesh.areas(e);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        m.emplace_back(t[a], t[b], A / 12.0 * (a == b ? 2.0 : 1.0));
        k.emplace_back(t[a], t[b], A * (mesh.grad_x(a, e) * mesh.grad_x(b, e) + mesh.grad_y(a, e) * mesh.grad_y(b, e)));
        // int phi_a d(phi_b)/dx = (A / 3) d(phi_b)/dx
        cx.emplace_back(t[a], t[b], A / 3.0 * mesh.grad_x(b, e));
        cy.emplace_back(t[a], t[b], A / 3.0 * mesh.grad_y(b, e));
      }
  }
  FemMatrices fem;
  auto build = [n](Sparse& S, const std::vector<Triplet>& trips) {
    S.resize(n, n);
    S.setFromTriplets(trips.begin(), trips.end());
  };
  build(fem.M, m);
  build(fem.K, k);
  build(fem.Cx, cx);
  build(fem.Cy, cy);
  fem.lumped = fem.M * Eigen::VectorXd::Ones(n);
  return fem;
}

Field2D newton_be_step(const Field2D& Un, double dt, double t_next, const TriMesh& mesh, const FemMatrices& fem,
                       const WindField& wind, const ModelParams& prm, const Options2D& options, StepStats* stats) {
  if (!(dt > 0.0)) throw DomainError("time step must be > 0");
  if (Un.size() != mesh.node_count() || Un.p.size() != Un.size() || Un.P.size() != Un.size())
    throw DomainError("field size does not match mesh");
  StepStats local;
  Field2D out = step_recursive(Un, dt, t_next, fem, wind, prm, options, local, 0);
  if (stats) *stats = local;
  return out;
}

Simulation2D simulate_2d(const Field2D& initial, const TriMesh& mesh, const WindField& wind, const ModelParams& prm,
                         double dt, double t_end, const std::vector<double>& output_times, const Options2D& options) {
  prm.validate();
  if (!(dt > 0.0) || !(t_end > 0.0)) throw DomainError("dt and t_end must be > 0");
  if (!std::is_sorted(output_times.begin(), output_times.end())) throw DomainError("output times must be sorted");
  for (double t : output_times)
    if (t < 0.0 || t > t_end) throw DomainError("output time outside [0, t_end]");
  if (std::min({initial.B.minCoeff(), initial.p.minCoeff(), initial.P.minCoeff()}) < 0.0)
    throw DomainError("initial field must be nonnegative");

  const FemMatrices fem = assemble_fem(mesh);
  const double h = mesh.max_edge();
  bool peclet_warned = false;

  Simulation2D sim;
  std::size_t next = 0;
  auto record = [&](double t, const Field2D& f) {
    while (next < output_times.size() && output_times[next] <= t + 1e-12 * std::max(1.0, t)) {
      sim.t.push_back(output_times[next++]);
      sim.snapshots.push_back(f);
    }
  };
  Field2D U = initial;
  double t = 0.0;
  record(t, U);
  while (t < t_end * (1.0 - 1e-14)) {
    double target = std::min(t + dt, t_end);
    if (next < output_times.size() && output_times[next] < target) target = output_times[next];
    const double step = target - t;
    if (wind && !peclet_warned) {
      const double peclet = h * prm.beta_B * wind(target).norm() / (2.0 * prm.alpha);
      if (peclet > 1.0) {
        std::ostringstream msg;
        msg << "2D: mesh Peclet number " << peclet << " > 1 at t = " << target
            << (options.scheme == AdvectionScheme::galerkin ? "; Galerkin advection may oscillate" : "");
        warn(msg.str());
        peclet_warned = true;
      }
    }
    StepStats stats;
    U = newton_be_step(U, step, target, mesh, fem, wind, prm, options, &stats);
    t = target;
    ++sim.steps;
    sim.newton_iterations += stats.newton_iterations;
    record(t, U);
  }
  return sim;
}

Field2D default_initial_2d(const TriMesh& mesh) {
  const Eigen::Vector2d lo = mesh.nodes.rowwise().minCoeff(), hi = mesh.nodes.rowwise().maxCoeff();
  const Eigen::Vector2d centre = 0.5 * (lo + hi);
  const double width = 0.15 * (hi - lo).maxCoeff();
  Field2D f;
  const Eigen::ArrayXd r2 = (mesh.nodes.colwise() - centre).colwise().squaredNorm().transpose().array();
  f.B = (0.5 + 4.5 * (-r2 / (width * width)).exp()).matrix();
  f.p = 0.02 * f.B;
  f.P = Eigen::VectorXd::Constant(mesh.node_count(), 0.1);
  return f;
}

Field2D uniform_field_2d(const TriMesh& mesh, double B, double Q, double P) {
  const int n = mesh.node_count();
  return {Eigen::VectorXd::Constant(n, B), Eigen::VectorXd::Constant(n, Q * B), Eigen::VectorXd::Constant(n, P)};
}

double l2_norm(const FemMatrices& fem, const Eigen::VectorXd& u) { return std::sqrt(u.dot(fem.M * u)); }

double relative_l2_difference(const TriMesh& coarse, const Eigen::VectorXd& coarse_values, const TriMesh& fine,
                              const Eigen::VectorXd& fine_values) {
  const FemMatrices fem = assemble_fem(fine);
  const Eigen::VectorXd lifted = interpolate(coarse, coarse_values, fine);
  const double norm = l2_norm(fem, fine_values);
  if (!(norm > 0.0)) throw DomainError("relative L2 difference of a zero field");
  return l2_norm(fem, fine_values - lifted) / norm;
}

void write_vtk(const Field2D& field, const TriMesh& mesh, const ModelParams& prm, const std::string& path) {
  if (field.size() != mesh.node_count()) throw DomainError("field size does not match mesh");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << std::setprecision(17);
  out << "# vtk DataFile Version 3.0\nbloom field\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.node_count() << " double\n";
  for (int i = 0; i < mesh.node_count(); ++i) out << mesh.nodes(0, i) << ' ' << mesh.nodes(1, i) << " 0\n";
  out << "CELLS " << mesh.triangle_count() << ' ' << 4 * mesh.triangle_count() << '\n';
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << mesh.triangle_count() << '\n';
  for (int e = 0; e < mesh.triangle_count(); ++e) out << "5\n";
  out << "POINT_DATA " << mesh.node_count() << '\n';
  const Eigen::VectorXd Q = field.quota(prm);
  const std::pair<const char*, const Eigen::VectorXd*> arrays[] = {
      {"B", &field.B}, {"p", &field.p}, {"P", &field.P}, {"Q", &Q}};
  for (const auto& [name, values] : arrays) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (Eigen::Index i = 0; i < values->size(); ++i) out << (*values)(i) << '\n';
  }
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace bloom
