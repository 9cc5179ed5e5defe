#pragma once

#include <array>
#include <complex>
#include <vector>

#include <Eigen/Core>

#include "bloom/model.hpp"

namespace bloom {

using Complex = std::complex<double>;
using Matrix3c = Eigen::Matrix3cd;
using Vector3c = Eigen::Vector3cd;

/// Eigenpairs of a 3x3 complex matrix, sorted by descending real part (ties:
/// descending imaginary part). Eigenvectors are the unit-norm columns.
struct Eigen3 {
  std::array<Complex, 3> values;
  Matrix3c vectors;
  bool near_defective = false;
};

Eigen3 eigen_3x3(const Matrix3c& matrix);

/// Linearization of the system around a homogeneous state for the Fourier mode
/// e^{inx}: the reaction Jacobian plus -n^2 diag(alpha, alpha, beta) and
/// -i n v diag(beta_B, beta_B, beta_P). Throws DomainError if `eq` is not an
/// equilibrium to within `residual_tol`.
Matrix3c assemble_jacobian(const HomState& eq, int n, double wind, const ModelParams& prm,
                           double residual_tol = 1e-3);

/// The mode-dependent part J(n) - J(0), a diagonal matrix.
Vector3c mode_perturbation(int n, double wind, const ModelParams& prm);

struct ModeSpectrum {
  int n = 0;
  std::array<Complex, 3> exact;
  /// lambda_i + v_i^* Delta v_i with v_i the unit right eigenvectors of J(0).
  /// Entry i approximates exact[i].
  std::array<Complex, 3> approx;
  /// lambda_i + w_i^* Delta v_i / (w_i^* v_i) with left eigenvectors w_i;
  /// diagnostic companion of `approx`, same pairing.
  std::array<Complex, 3> approx_left_right;
  /// Unit eigenvectors of the full J(n) (columns, same order as exact).
  Matrix3c eigenvectors;
  bool near_defective = false;

  double leading_real() const { return exact[0].real(); }
  /// max_i |approx[i] - exact[i]|
  double approx_error() const;
};

ModeSpectrum perturbed_spectrum(const HomState& eq, int n, double wind, const ModelParams& prm);

struct ModeSweep {
  std::vector<ModeSpectrum> modes;
  bool stable = false;
  double max_leading_real = 0.0;
};

/// Spectra for n = 0..n_max; stable iff every exact eigenvalue has negative
/// real part.
ModeSweep mode_sweep(const HomState& eq, int n_max, double wind, const ModelParams& prm);

}  // namespace bloom
