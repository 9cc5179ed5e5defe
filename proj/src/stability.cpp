#include "bloom/stability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "bloom/errors.hpp"

namespace bloom {
namespace {

bool descending(const Complex& a, const Complex& b) {
  if (a.real() != b.real()) return a.real() > b.real();
  return a.imag() > b.imag();
}

// Permutation perm minimizing sum_i |candidates[perm[i]] - targets[i]|.
std::array<int, 3> best_pairing(const std::array<Complex, 3>& candidates,
                                const std::array<Complex, 3>& targets) {
  std::array<int, 3> perm{0, 1, 2}, best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (int i = 0; i < 3; ++i) cost += std::abs(candidates[perm[i]] - targets[i]);
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

Eigen3 eigen_3x3(const Matrix3c& matrix) {
  if (!matrix.allFinite()) throw DomainError("eigen_3x3: non-finite entries");
  Eigen::ComplexEigenSolver<Matrix3c> solver(matrix, true);
  if (solver.info() != Eigen::Success) throw DomainError("eigen_3x3: eigensolver failed");

  std::array<int, 3> order{0, 1, 2};
  const auto& values = solver.eigenvalues();
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return descending(values(a), values(b)); });

  Eigen3 out;
  for (int i = 0; i < 3; ++i) {
    out.values[i] = values(order[i]);
    out.vectors.col(i) = solver.eigenvectors().col(order[i]).normalized();
  }
  // Simple eigenvalues are assumed by the first-order correction; flag
  // eigenvector bases that are close to singular.
  const double scale = std::max(matrix.norm(), 1e-300);
  double gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) gap = std::min(gap, std::abs(out.values[i] - out.values[j]));
  const double det = std::abs(out.vectors.determinant());
  out.near_defective = gap < 1e-8 * scale || det < 1e-8;
  return out;
}

Vector3c mode_perturbation(int n, double wind, const ModelParams& prm) {
  const double n2 = static_cast<double>(n) * n;
  const Complex i_n(0.0, static_cast<double>(n) * wind);
  return {-n2 * prm.alpha - i_n * prm.beta_B, -n2 * prm.alpha - i_n * prm.beta_B,
          -n2 * prm.beta - i_n * prm.beta_P};
}

Matrix3c assemble_jacobian(const HomState& eq, int n, double wind, const ModelParams& prm,
                           double residual_tol) {
  if (n < 0) throw DomainError("mode number must be >= 0");
  const double residual = reaction_rhs(eq, prm).norm();
  if (!(residual <= residual_tol)) {
    std::ostringstream msg;
    msg << "state is not an equilibrium (reaction residual " << residual << ")";
    throw DomainError(msg.str());
  }
  Matrix3c jac = reaction_jacobian(eq, prm).cast<Complex>();
  jac.diagonal() += mode_perturbation(n, wind, prm);
  return jac;
}

double ModeSpectrum::approx_error() const {
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(approx[i] - exact[i]));
  return worst;
}

ModeSpectrum perturbed_spectrum(const HomState& eq, int n, double wind, const ModelParams& prm) {
  const Matrix3c base = assemble_jacobian(eq, 0, wind, prm);
  const Vector3c delta = mode_perturbation(n, wind, prm);
  Matrix3c full = base;
  full.diagonal() += delta;

  const Eigen3 unperturbed = eigen_3x3(base);
  const Eigen3 perturbed = eigen_3x3(full);

  // Rows of V^{-1} are the left eigenvectors normalized so that w_i^* v_i = 1.
  const Matrix3c left = unperturbed.vectors.inverse();
  std::array<Complex, 3> right_only, left_right;
  for (int i = 0; i < 3; ++i) {
    const Vector3c v = unperturbed.vectors.col(i);
    right_only[i] = unperturbed.values[i] + (v.cwiseAbs2().cast<Complex>().cwiseProduct(delta)).sum();
    left_right[i] = unperturbed.values[i] +
                    (left.row(i).transpose().cwiseProduct(delta).cwiseProduct(v)).sum();
  }

  ModeSpectrum out;
  out.n = n;
  out.exact = perturbed.values;
  out.eigenvectors = perturbed.vectors;
  out.near_defective = unperturbed.near_defective || perturbed.near_defective;
  const auto perm = best_pairing(left_right, out.exact);
  for (int i = 0; i < 3; ++i) {
    out.approx[i] = right_only[perm[i]];
    out.approx_left_right[i] = left_right[perm[i]];
  }
  return out;
}

ModeSweep mode_sweep(const HomState& eq, int n_max, double wind, const ModelParams& prm) {
  if (n_max < 1) throw DomainError("n_max must be >= 1");
  ModeSweep sweep;
  sweep.max_leading_real = -std::numeric_limits<double>::infinity();
  for (int n = 0; n <= n_max; ++n) {
    sweep.modes.push_back(perturbed_spectrum(eq, n, wind, prm));
    sweep.max_leading_real = std::max(sweep.max_leading_real, sweep.modes.back().leading_real());
  }
  sweep.stable = sweep.max_leading_real < 0.0;
  return sweep;
}

}  // namespace bloom
