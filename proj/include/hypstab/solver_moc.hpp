#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hypstab/core.hpp"

namespace hypstab {

/// Boundary value series u(t_k) = y(0, t_k) on the solver's dt grid.
struct BoundaryTrace {
  double dt = 0.0;
  std::vector<Vector> values;

  /// Linear interpolation in time (clamped to the sampled range).
  Vector at(double t) const;
};

struct MocResult {
  std::vector<double> times;
  std::vector<Field> fields;
  BoundaryTrace trace;
  std::vector<std::string> warnings;
  /// Final unit window of states, present for delay runs (restart support).
  std::optional<HistoryBuffer> history;
};

/// Exact method-of-characteristics solution of
///   dy/dt + D dy/dx = 0,  y(0,t) = K y(1,t),  y(.,0) = y0.
/// Interior values ride the characteristics; the boundary trace follows the
/// recursion u(t) = K v(t) with v_i(t) = y0_i(1 - d_i t) for t <= 1/d_i and
/// v_i(t) = u_i(t - 1/d_i) afterwards, advanced on the dt grid with linear
/// interpolation for unaligned offsets. On the seam x = d_i t the boundary
/// branch wins, so nilpotent runs flush to exact zeros.
/// Requires dt | t_final and dt <= min_i(1/d_i)/4.
MocResult solve_moc(const SystemSpec& spec, const Field& y0, double t_final,
                    double dt, int output_stride = 1);

/// Method-of-characteristics solution with the delay boundary condition
///   y(0,t) = sum_j W_j Xbar(t + theta_j) + int rho(theta) Xbar(t + theta) dtheta,
/// where Xbar(s) is the spatial mean of the state (trapezoid in x, linear
/// interpolation in t; history before t=0 comes from phi). The functional is
/// evaluated explicitly: queries inside the step being formed clamp to the
/// previous state, which matters only for measure mass within dt of 0.
MocResult solve_moc_delay(const SystemSpec& spec, const Field& y0,
                          const HistoryBuffer& phi, double t_final, double dt,
                          int output_stride = 1);

}  // namespace hypstab
