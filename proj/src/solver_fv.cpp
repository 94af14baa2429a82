#include "hypstab/solver_fv.hpp"

#include <algorithm>
#include <cmath>

#include "hypstab/detail/uniform_series.hpp"

namespace hypstab {

using detail::UniformSeries;

namespace {

Vector cell_mean(const FvState& state) {
  return state.cells.colwise().sum().transpose() * state.dx;
}

// Midpoint sampling of a nodal field onto m cell averages.
Matrix midpoint_cells(const Field& y0, int m) {
  const int n = y0.components();
  Matrix cells(m, n);
  const double dx = 1.0 / m;
  for (int j = 0; j < m; ++j) {
    const double x = (static_cast<double>(j) + 0.5) * dx;
    for (int i = 0; i < n; ++i) cells(j, i) = y0.component_at(x, i);
  }
  return cells;
}

struct FvMeanHistory {
  UniformSeries before;
  UniformSeries after;

  Vector at(double s) const { return s < 0.0 ? before.eval(s) : after.eval(s); }
  Vector integral(double a, double b) const {
    Vector acc = Vector::Zero(after.value(0).size());
    if (b <= a) return acc;
    if (a < 0.0) acc += before.integral(a, std::min(b, 0.0));
    if (b > 0.0) acc += after.integral(std::max(a, 0.0), b);
    return acc;
  }
};

Vector fv_delay_boundary(const DelayMeasure& mu, const FvMeanHistory& history,
                         double t, int n) {
  Vector b = Vector::Zero(n);
  for (const auto& atom : mu.atoms) b += atom.weight * history.at(t + atom.theta);
  for (int i = 0; i < mu.density.pieces(); ++i)
    b += mu.density.values[i] *
         history.integral(t + mu.density.breakpoints[i], t + mu.density.breakpoints[i + 1]);
  return b;
}

}  // namespace

double cfl_dt(const SystemSpec& spec, int m, double cfl) {
  if (m < 4) throw std::invalid_argument("cfl_dt requires m >= 4");
  if (!(cfl > 0.0 && cfl <= 1.0)) throw std::invalid_argument("cfl must lie in (0, 1]");
  return cfl * (1.0 / m) / spec.max_velocity();
}

FvState step_upwind(const FvState& state, const SystemSpec& spec, double dt,
                    const Vector& boundary_value) {
  const int m = state.m();
  const int n = state.n();
  if (n != spec.n()) throw std::invalid_argument("state/spec component mismatch");
  if (boundary_value.size() != n)
    throw std::invalid_argument("boundary value size mismatch");
  if (dt > state.dx / spec.max_velocity() * (1.0 + 1e-12))
    throw CflViolation("upwind step requires dt <= dx / max(d_i)");

  FvState next = state;
  next.t = state.t + dt;
  for (int i = 0; i < n; ++i) {
    const double nu = std::min(1.0, spec.velocities(i) * dt / state.dx);
    const auto col = state.cells.col(i);
    auto out = next.cells.col(i);
    if (nu == 1.0) {
      // unit Courant number: the update is the exact characteristic shift
      out(0) = boundary_value(i);
      out.segment(1, m - 1) = col.segment(0, m - 1);
    } else {
      out(0) = col(0) + nu * (boundary_value(i) - col(0));
      for (int j = 1; j < m; ++j) out(j) = col(j) + nu * (col(j - 1) - col(j));
    }
  }
  return next;
}

FvResult solve_fv(const SystemSpec& spec, const Field& y0, double t_final, int m,
                  double cfl, int output_stride, const HistoryBuffer* phi) {
  if (y0.components() != spec.n())
    throw std::invalid_argument("initial field component count does not match the system");
  if (output_stride < 1) throw std::invalid_argument("output_stride must be >= 1");
  const double dt = cfl_dt(spec, m, cfl);
  const auto steps = static_cast<long>(std::ceil(t_final / dt - 1e-9));
  if (steps < 1) throw std::invalid_argument("t_final must exceed one step");

  const int n = spec.n();
  const bool with_delay = spec.delay.has_value() && !spec.delay->empty();
  if (with_delay && phi == nullptr)
    throw HistoryGap("delay systems need history data for the boundary functional");

  FvState state{midpoint_cells(y0, m), 1.0 / m, 0.0};

  FvMeanHistory history;
  if (with_delay) {
    if (std::abs(phi->anchor_time()) > 1e-9)
      throw HistoryGap("history must be anchored at t = 0");
    if (phi->snapshot_time(0) > -1.0 + 1e-9)
      throw HistoryGap("history must cover the whole delay window [-1, 0]");
    history.before = UniformSeries(phi->snapshot_time(0), phi->dt());
    for (std::size_t j = 0; j < phi->size(); ++j) {
      FvState snap{midpoint_cells(phi->snapshot(j), m), 1.0 / m, 0.0};
      history.before.push(cell_mean(snap));
    }
    history.after = UniformSeries(0.0, dt);
    history.after.reserve(static_cast<std::size_t>(steps) + 1);
    history.after.push(cell_mean(state));
  }

  FvResult result;
  result.trace.dt = dt;
  result.trace.values.reserve(static_cast<std::size_t>(steps) + 1);
  result.times.push_back(0.0);
  result.states.push_back(state);

  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    Vector bv;
    if (with_delay)
      bv = fv_delay_boundary(*spec.delay, history, t, n);
    else
      bv = spec.coupling * state.cells.row(m - 1).transpose();
    result.trace.values.push_back(bv);

    state = step_upwind(state, spec, dt, bv);
    if (with_delay) history.after.push(cell_mean(state));
    if ((k + 1) % output_stride == 0 || k + 1 == steps) {
      result.times.push_back(state.t);
      result.states.push_back(state);
    }
  }
  // trailing boundary value so trace and states share the final time
  Vector last_bv;
  if (with_delay)
    last_bv = fv_delay_boundary(*spec.delay, history, state.t, n);
  else
    last_bv = spec.coupling * state.cells.row(m - 1).transpose();
  result.trace.values.push_back(last_bv);
  return result;
}

double fv_l2_norm(const FvState& state) {
  return std::sqrt(state.cells.squaredNorm() * state.dx);
}

double fv_linf_norm(const FvState& state) { return state.cells.cwiseAbs().maxCoeff(); }

}  // namespace hypstab
