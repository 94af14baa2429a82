#include "hypstab/solver_moc.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hypstab/detail/uniform_series.hpp"

namespace hypstab {

using detail::UniformSeries;

namespace {

constexpr double kSeamTol = 1e-12;

long checked_step_count(double t_final, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("dt must be > 0");
  if (t_final <= 0.0) throw std::invalid_argument("t_final must be > 0");
  const long steps = std::lround(t_final / dt);
  if (steps < 1 || std::abs(static_cast<double>(steps) * dt - t_final) >
                       1e-9 * std::max(1.0, t_final))
    throw std::invalid_argument("dt must divide t_final");
  return steps;
}

void check_cfl(const SystemSpec& spec, double dt) {
  if (dt > spec.min_transit_time() / 4.0 + 1e-15) {
    std::ostringstream msg;
    msg << "dt = " << dt << " cannot resolve the shortest transit time "
        << spec.min_transit_time() << " (need dt <= transit/4)";
    throw CflViolation(msg.str());
  }
}

// State at time t on the y0 grid: characteristics fall back on the initial
// profile right of the seam x = d_i t and on the boundary trace at or left
// of it.
Field reconstruct(const SystemSpec& spec, const Field& y0, const UniformSeries& trace,
                  double t) {
  const int n = spec.n();
  const int m = y0.cells();
  Field out(m, n);
  for (int j = 0; j <= m; ++j) {
    const double x = y0.grid()(j);
    for (int i = 0; i < n; ++i) {
      const double d = spec.velocities(i);
      const double offset = x - d * t;
      if (offset > kSeamTol)
        out.values()(j, i) = y0.component_at(offset, i);
      else
        out.values()(j, i) = trace.eval_component(std::max(0.0, t - x / d), i);
    }
  }
  return out;
}

BoundaryTrace to_boundary_trace(const UniformSeries& series, double dt) {
  BoundaryTrace trace;
  trace.dt = dt;
  trace.values.reserve(series.size());
  for (std::size_t k = 0; k < series.size(); ++k) trace.values.push_back(series.value(k));
  return trace;
}

// Spatial-mean history: phi supplies times below zero, the running series
// everything at or above. Queries past the newest computed state clamp to it.
struct MeanHistory {
  UniformSeries before;  // means of the phi snapshots, on phi's grid
  UniformSeries after;   // means of computed states, on the run grid

  Vector at(double s) const { return s < 0.0 ? before.eval(s) : after.eval(s); }

  Vector integral(double a, double b) const {
    Vector acc = Vector::Zero(after.value(0).size());
    if (b <= a) return acc;
    if (a < 0.0) acc += before.integral(a, std::min(b, 0.0));
    if (b > 0.0) acc += after.integral(std::max(a, 0.0), b);
    return acc;
  }
};

Vector delay_boundary_value(const DelayMeasure& mu, const MeanHistory& history,
                            double t, int n) {
  Vector b = Vector::Zero(n);
  for (const auto& atom : mu.atoms) b += atom.weight * history.at(t + atom.theta);
  for (int i = 0; i < mu.density.pieces(); ++i)
    b += mu.density.values[i] *
         history.integral(t + mu.density.breakpoints[i], t + mu.density.breakpoints[i + 1]);
  return b;
}

}  // namespace

Vector BoundaryTrace::at(double t) const {
  if (values.empty()) throw std::invalid_argument("empty boundary trace");
  if (values.size() == 1) return values.front();
  const double last = static_cast<double>(values.size() - 1);
  const double pos = std::clamp(t / dt, 0.0, last);
  const auto k = std::min(static_cast<std::size_t>(std::floor(pos)), values.size() - 2);
  const double frac = pos - static_cast<double>(k);
  if (frac < 1e-9) return values[k];
  if (frac > 1.0 - 1e-9) return values[k + 1];
  return (1.0 - frac) * values[k] + frac * values[k + 1];
}

MocResult solve_moc(const SystemSpec& spec, const Field& y0, double t_final, double dt,
                    int output_stride) {
  if (spec.has_delay())
    throw std::invalid_argument("solve_moc handles systems without delay");
  if (y0.components() != spec.n())
    throw std::invalid_argument("initial field component count does not match the system");
  if (output_stride < 1) throw std::invalid_argument("output_stride must be >= 1");
  const long steps = checked_step_count(t_final, dt);
  check_cfl(spec, dt);

  const int n = spec.n();
  UniformSeries trace(0.0, dt);
  trace.reserve(static_cast<std::size_t>(steps) + 1);

  MocResult result;
  for (long k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    Vector v(n);
    for (int i = 0; i < n; ++i) {
      const double d = spec.velocities(i);
      if (t * d <= 1.0 + kSeamTol)
        v(i) = y0.component_at(1.0 - d * t, i);
      else
        v(i) = trace.eval_component(t - 1.0 / d, i);
    }
    trace.push(spec.coupling * v);
    if (k % output_stride == 0 || k == steps) {
      result.times.push_back(t);
      result.fields.push_back(k == 0 ? y0 : reconstruct(spec, y0, trace, t));
    }
  }
  result.trace = to_boundary_trace(trace, dt);
  return result;
}

MocResult solve_moc_delay(const SystemSpec& spec, const Field& y0,
                          const HistoryBuffer& phi, double t_final, double dt,
                          int output_stride) {
  if (!spec.delay.has_value())
    throw std::invalid_argument("solve_moc_delay requires a delay measure");
  if (y0.components() != spec.n())
    throw std::invalid_argument("initial field component count does not match the system");
  if (output_stride < 1) throw std::invalid_argument("output_stride must be >= 1");
  const long steps = checked_step_count(t_final, dt);
  check_cfl(spec, dt);
  if (std::abs(phi.anchor_time()) > 1e-9)
    throw HistoryGap("history must be anchored at t = 0");
  if (phi.snapshot_time(0) > -1.0 + 1e-9)
    throw HistoryGap("history must cover the whole delay window [-1, 0]");
  if (phi.snapshot(0).components() != spec.n())
    throw HistoryGap("history component count does not match the system");

  const int n = spec.n();
  const DelayMeasure& mu = *spec.delay;
  MocResult result;

  {
    const Field at_zero = phi.at_offset(0.0);
    const double mismatch = (at_zero.values() - y0.values()).cwiseAbs().maxCoeff();
    if (mismatch > 1e-9) {
      std::ostringstream msg;
      msg << "CompatibilityWarning: y0 and history disagree at theta = 0 "
          << "(max |difference| = " << mismatch << ")";
      result.warnings.push_back(msg.str());
    }
  }

  MeanHistory history;
  history.before = UniformSeries(phi.snapshot_time(0), phi.dt());
  for (std::size_t j = 0; j < phi.size(); ++j) history.before.push(phi.snapshot(j).mean());
  history.after = UniformSeries(0.0, dt);
  history.after.reserve(static_cast<std::size_t>(steps) + 1);
  history.after.push(y0.mean());

  UniformSeries trace(0.0, dt);
  trace.reserve(static_cast<std::size_t>(steps) + 1);
  trace.push(delay_boundary_value(mu, history, 0.0, n));

  std::vector<Field> states;
  states.reserve(static_cast<std::size_t>(steps) + 1);
  states.push_back(y0);

  result.times.push_back(0.0);
  result.fields.push_back(y0);

  for (long k = 1; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    trace.push(delay_boundary_value(mu, history, t, n));
    Field state = reconstruct(spec, y0, trace, t);
    history.after.push(state.mean());
    states.push_back(std::move(state));
    if (k % output_stride == 0 || k == steps) {
      result.times.push_back(t);
      result.fields.push_back(states.back());
    }
  }

  // Final unit window, for restarts: computed states where available,
  // the initial history elsewhere.
  const std::size_t ring = HistoryBuffer::ring_length(dt);
  std::vector<Field> window;
  window.reserve(ring);
  for (std::size_t j = 0; j < ring; ++j) {
    const double tau = t_final - dt * static_cast<double>(ring - 1 - j);
    if (tau >= -1e-12) {
      const auto k = static_cast<std::size_t>(std::lround(tau / dt));
      window.push_back(states[std::min(k, states.size() - 1)]);
    } else {
      window.push_back(phi.at_offset(std::max(-1.0, tau)));
    }
  }
  result.history = HistoryBuffer(dt, t_final, std::move(window));
  result.trace = to_boundary_trace(trace, dt);
  return result;
}

}  // namespace hypstab
