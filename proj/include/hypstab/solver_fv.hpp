#pragma once

#include <vector>

#include "hypstab/core.hpp"
#include "hypstab/solver_moc.hpp"

namespace hypstab {

/// Cell averages of the m-cell upwind discretization; cells(j, i) holds
/// component i on [j dx, (j+1) dx].
struct FvState {
  Matrix cells;  // m x n
  double dx = 0.0;
  double t = 0.0;

  int m() const { return static_cast<int>(cells.rows()); }
  int n() const { return static_cast<int>(cells.cols()); }
};

/// dt = cfl * dx / max_i(d_i). Requires m >= 4 and cfl in (0, 1].
double cfl_dt(const SystemSpec& spec, int m, double cfl);

/// One explicit upwind step with inflow boundary_value at x = 0. The update
/// is the convex combination cell_j + nu_i (upstream - cell_j); at nu_i = 1
/// it reduces to the exact shift.
FvState step_upwind(const FvState& state, const SystemSpec& spec, double dt,
                    const Vector& boundary_value);

struct FvResult {
  std::vector<double> times;
  std::vector<FvState> states;
  BoundaryTrace trace;
};

/// Upwind finite-volume run. Without delay the inflow is K times the last
/// cell vector; with delay it is the history functional of solve_moc_delay
/// evaluated with cell-average quadrature (phi required). Initial cell
/// averages sample y0 at cell midpoints.
FvResult solve_fv(const SystemSpec& spec, const Field& y0, double t_final, int m,
                  double cfl, int output_stride = 1,
                  const HistoryBuffer* phi = nullptr);

double fv_l2_norm(const FvState& state);
double fv_linf_norm(const FvState& state);

}  // namespace hypstab
