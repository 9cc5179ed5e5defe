#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bloom/bdf.hpp"
#include "bloom/params.hpp"

namespace bloom {

/// Guard on B in the quota transport coefficient 2 alpha B_x / B.
inline constexpr double kTransportBiomassFloor = 1e-12;

struct Grid1D {
  double L = 0.0;
  int Nx = 0;
  double dx = 0.0;

  double x(int i) const { return i * dx; }
  Eigen::VectorXd nodes() const { return Eigen::VectorXd::LinSpaced(Nx, 0.0, L); }
};

/// Uniform grid x_i = i L / (Nx - 1). Throws DomainError unless L > 0, Nx >= 3.
Grid1D build_grid(double L, int Nx);

/// Nodal values of biomass, cell quota, dissolved and internal phosphorus.
struct Field1D {
  Eigen::VectorXd B, Q, P, p;

  Eigen::Index size() const { return B.size(); }
  /// Interleaved state [B_0, Q_0, P_0, p_0, B_1, ...] used by the integrator.
  Eigen::VectorXd pack() const;
  static Field1D unpack(const Eigen::VectorXd& y);
};

/// Scalar wind along the 1D axis, in m/day.
using Wind1D = std::function<double(double)>;

/// Semi-discrete right-hand side: central diffusion, first-order upwind
/// advection, mirrored Neumann ghosts, pointwise reactions. `v` is the wind
/// at time t.
Field1D rhs_1d(const Field1D& fields, const Grid1D& grid, double v, const ModelParams& prm);

struct InvariantReport {
  double min_value = 0.0;       ///< min over nodes of B, p, P
  double quota_min = 0.0;       ///< range of the evolved quota Q
  double quota_max = 0.0;
  double quota_mismatch = 0.0;  ///< ||p - Q B||_inf / ||p||_inf over nodes with B > floor
};

InvariantReport check_invariants(const Field1D& fields);

struct Trajectory1D {
  std::vector<double> t;
  std::vector<Field1D> samples;
  long steps = 0;
};

struct Options1D {
  double rtol = 1e-6;
  double atol = 1e-10;
};

/// Method-of-lines integration with the adaptive BDF integrator; returns the
/// state at each sample time (sorted, within [0, t_end]).
Trajectory1D integrate_1d(const Field1D& initial, const Grid1D& grid, const Wind1D& wind,
                          const ModelParams& prm, double t_end, const std::vector<double>& sample_times,
                          const Options1D& options = {});

/// Default heterogeneous start: B a Gaussian bump on a 0.5 background
/// (peak 5 at 0.3 L, width 0.1 L), Q = 0.02 with p = Q B, P = 0.1.
Field1D default_initial_1d(const Grid1D& grid);

/// Spatially uniform field.
Field1D uniform_field_1d(const Grid1D& grid, double B, double Q, double P);

/// Long-format CSV: t,x,B,Q,P,p.
void write_csv_1d(std::ostream& out, const Trajectory1D& traj, const Grid1D& grid);

}  // namespace bloom
