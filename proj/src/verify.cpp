#include "hypstab/verify.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include "hypstab/solver_fv.hpp"
#include "hypstab/solver_moc.hpp"
#include "hypstab/specgen.hpp"

namespace hypstab {

namespace {

std::vector<std::pair<double, double>> norm_series(const MocResult& result) {
  std::vector<std::pair<double, double>> norms;
  norms.reserve(result.times.size());
  for (std::size_t k = 0; k < result.times.size(); ++k)
    norms.emplace_back(result.times[k], result.fields[k].l2_norm());
  return norms;
}

double min_entry(const MocResult& result) {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& f : result.fields) lo = std::min(lo, f.values().minCoeff());
  for (const auto& v : result.trace.values) lo = std::min(lo, v.minCoeff());
  return lo;
}

double min_entry(const FvResult& result) {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& s : result.states) lo = std::min(lo, s.cells.minCoeff());
  for (const auto& v : result.trace.values) lo = std::min(lo, v.minCoeff());
  return lo;
}

StabilityReport analyze_config(const ExperimentConfig& cfg) {
  if (cfg.mode == "heat")
    return stability_heat_robin(cfg.heat->k, cfg.heat->sigma, cfg.analysis.tol_marginal);
  if (cfg.system.has_delay()) return stability_delay(cfg.system, cfg.analysis.tol_marginal);
  return stability_hyperbolic(cfg.system, cfg.analysis.tol_marginal);
}

struct Battery {
  std::vector<PropertyResult> results;

  void run(const std::string& name, const std::function<std::string()>& item) {
    PropertyResult r;
    r.name = name;
    try {
      r.detail = item();
      r.passed = true;
    } catch (const std::exception& err) {
      r.passed = false;
      r.detail = err.what();
    }
    results.push_back(std::move(r));
  }
};

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename... Args>
[[noreturn]] void fail(Args&&... args) {
  std::ostringstream msg;
  (msg << ... << args);
  throw Failure(msg.str());
}

std::string check_resolvent_identity(std::mt19937_64& rng, int num_specs, int m_cells) {
  const double lambdas[] = {0.5, 1.0, 2.0, 5.0};
  double worst_residual = 0.0, worst_neumann = 0.0;
  for (int s = 0; s < num_specs; ++s) {
    const SystemSpec spec = random_hyperbolic_spec(rng, 1, 3, 0.1, 0.5);
    for (double lambda : lambdas) {
      const ResolventCheck check = verify_resolvent_identity(spec, lambda, m_cells);
      worst_residual = std::max(worst_residual, check.max_abs_residual);
      worst_neumann = std::max(worst_neumann, check.neumann_residual);
      if (check.max_abs_residual > 1e-10)
        fail("residual ", check.max_abs_residual, " > 1e-10 at lambda=", lambda);
      if (!check.entrywise_order_ok) fail("entrywise order failed at lambda=", lambda);
      if (!check.positivity_ok) fail("resolvent positivity failed at lambda=", lambda);
      if (check.neumann_residual > 1e-12)
        fail("Neumann residual ", check.neumann_residual, " > 1e-12 at lambda=", lambda);
    }
  }
  std::ostringstream detail;
  detail << "max residual " << worst_residual << ", max Neumann residual " << worst_neumann;
  return detail.str();
}

std::string check_positivity_moc(std::mt19937_64& rng) {
  double lo = std::numeric_limits<double>::infinity();
  for (int s = 0; s < 10; ++s) {
    const bool with_delay = s % 2 == 1;
    if (with_delay) {
      const SystemSpec spec = random_delay_spec(rng, 1, 2, 0.3, 1.5);
      const Field y0 = random_nonnegative_field(rng, 80, spec.n());
      const Field phi0 = random_nonnegative_field(rng, 80, spec.n());
      const auto result =
          solve_moc_delay(spec, y0, HistoryBuffer::constant(0.02, phi0), 2.0, 0.02, 5);
      lo = std::min(lo, min_entry(result));
    } else {
      const SystemSpec spec = random_hyperbolic_spec(rng, 1, 3, 0.3, 1.5);
      const Field y0 = random_nonnegative_field(rng, 80, spec.n());
      const auto result = solve_moc(spec, y0, 2.0, 0.02, 5);
      lo = std::min(lo, min_entry(result));
    }
  }
  if (lo < -1e-12) fail("moc emitted ", lo, " below -1e-12");
  std::ostringstream detail;
  detail << "min emitted value " << lo;
  return detail.str();
}

std::string check_positivity_fv(std::mt19937_64& rng) {
  double lo = std::numeric_limits<double>::infinity();
  for (int s = 0; s < 10; ++s) {
    const bool with_delay = s % 2 == 1;
    if (with_delay) {
      const SystemSpec spec = random_delay_spec(rng, 1, 2, 0.3, 1.5);
      const Field y0 = random_nonnegative_field(rng, 60, spec.n());
      const Field phi0 = random_nonnegative_field(rng, 60, spec.n());
      const HistoryBuffer phi = HistoryBuffer::constant(0.02, phi0);
      const auto result = solve_fv(spec, y0, 1.5, 60, 0.9, 10, &phi);
      lo = std::min(lo, min_entry(result));
    } else {
      const SystemSpec spec = random_hyperbolic_spec(rng, 1, 3, 0.3, 1.5);
      const Field y0 = random_nonnegative_field(rng, 60, spec.n());
      const auto result = solve_fv(spec, y0, 1.5, 60, 0.9, 10);
      lo = std::min(lo, min_entry(result));
    }
  }
  if (lo < 0.0) fail("fv emitted a negative cell average: ", lo);
  return "all cell averages and traces >= 0";
}

std::string check_nilpotency_moc(std::mt19937_64& rng) {
  SystemSpec spec;
  spec.velocities = Vector(2);
  spec.velocities << 1.0, 2.0;
  spec.coupling = Matrix::Zero(2, 2);
  const Field y0 = random_nonnegative_field(rng, 64, 2);
  const auto result = solve_moc(spec, y0, 2.0, 0.0625, 1);
  for (std::size_t k = 0; k < result.times.size(); ++k) {
    if (result.times[k] < spec.max_transit_time() - 1e-12) continue;
    if (result.fields[k].linf_norm() != 0.0)
      fail("field at t=", result.times[k], " is not exactly zero");
  }
  return "open loop exactly annihilated after the longest transit";
}

std::string check_nilpotency_fv(std::mt19937_64& rng) {
  SystemSpec spec;
  spec.velocities = Vector::Constant(2, 2.0);
  spec.coupling = Matrix::Zero(2, 2);
  const Field y0 = random_nonnegative_field(rng, 32, 2);
  const auto result = solve_fv(spec, y0, 0.75, 32, 1.0, 1);
  for (std::size_t k = 0; k < result.times.size(); ++k) {
    if (result.states[k].t < 0.5 - 1e-12) continue;
    if (fv_linf_norm(result.states[k]) != 0.0)
      fail("state at t=", result.states[k].t, " is not exactly zero");
  }
  return "unit-CFL shift flushed the state to exact zeros";
}

std::string check_convergence() {
  const SystemSpec spec = scalar_transport_spec(1.0, 0.5);
  // C^1-compatible data for k = 1/2: no kink crosses the domain, so the
  // upwind error is the smooth O(dx) truncation term
  auto profile = [](double x, int) { return 1.5 + x + 0.5 * x * x; };
  const Field y0 = Field::sampled(1600, 1, profile);
  const auto reference = solve_moc(spec, y0, 5.0, 1.0 / 1600.0, 8000);
  const Field& exact = reference.fields.back();

  const int ms[] = {50, 100, 200, 400};
  std::vector<double> log_dx, log_err;
  for (int m : ms) {
    const Field coarse = Field::sampled(m, 1, profile);
    const auto fv = solve_fv(spec, coarse, 5.0, m, 0.5, 1 << 30);
    const FvState& state = fv.states.back();
    double acc = 0.0;
    for (int j = 0; j < m; ++j) {
      const double x = (j + 0.5) * state.dx;
      const double diff = state.cells(j, 0) - exact.component_at(x, 0);
      acc += diff * diff * state.dx;
    }
    log_dx.push_back(std::log(state.dx));
    log_err.push_back(std::log(std::sqrt(acc)));
  }
  const auto count = static_cast<double>(log_dx.size());
  double x_mean = 0.0, y_mean = 0.0;
  for (std::size_t i = 0; i < log_dx.size(); ++i) {
    x_mean += log_dx[i];
    y_mean += log_err[i];
  }
  x_mean /= count;
  y_mean /= count;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < log_dx.size(); ++i) {
    sxx += (log_dx[i] - x_mean) * (log_dx[i] - x_mean);
    sxy += (log_dx[i] - x_mean) * (log_err[i] - y_mean);
  }
  const double slope = sxy / sxx;
  if (slope < 0.8) fail("convergence slope ", slope, " < 0.8");
  std::ostringstream detail;
  detail << "error slope " << slope << " over m in {50,100,200,400}";
  return detail.str();
}

std::string check_monotone_decay(std::mt19937_64& rng) {
  for (int s = 0; s < 5; ++s) {
    const SystemSpec spec = random_hyperbolic_spec(rng, 1, 3, 0.3, 1.5);
    std::uniform_real_distribution<double> dist(0.01, 10.0);
    double l1 = dist(rng), l2 = dist(rng);
    if (l1 > l2) std::swap(l1, l2);
    const Matrix h1 = transfer_hyperbolic(Complex(l1, 0.0), spec).real();
    const Matrix h2 = transfer_hyperbolic(Complex(l2, 0.0), spec).real();
    if (((h2 - h1).array() > 1e-14).any())
      fail("transfer entries increased from lambda=", l1, " to ", l2);
  }
  return "entries decrease along the positive real axis";
}

std::string check_vanishing(std::mt19937_64& rng) {
  double worst = 0.0;
  for (int s = 0; s < 5; ++s) {
    const SystemSpec spec = random_hyperbolic_spec(rng, 1, 3, 0.3, 1.5);
    const double knorm = spec.coupling.norm();
    const double lambda =
        50.0 * spec.max_velocity() * (1.0 + std::log(1.0 + knorm));
    worst = std::max(worst, transfer_hyperbolic(Complex(lambda, 0.0), spec).norm());

    SystemSpec dspec;
    dspec.velocities = spec.velocities;
    dspec.coupling = Matrix::Zero(spec.n(), spec.n());
    dspec.delay = random_delay_measure(rng, spec.n(), 1.0, -0.25);
    const double dlambda = 50.0 * dspec.max_velocity();
    worst = std::max(worst, loop_gain_delay(Complex(dlambda, 0.0), dspec).norm());
  }
  if (worst >= 1e-6) fail("loop norm ", worst, " >= 1e-6 at the far evaluation point");
  std::ostringstream detail;
  detail << "max loop norm " << worst << " at lambda = 50 max(d)(1+log(1+|K|))";
  return detail.str();
}

std::string check_operator_positivity(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> lam(0.0, 50.0);
  for (int s = 0; s < 5; ++s) {
    const SystemSpec spec = random_hyperbolic_spec(rng, 1, 3, 0.3, 1.5);
    const SystemSpec dspec = random_delay_spec(rng, 1, 2, 0.3, 1.5);
    const Complex lambda(lam(rng), 0.0);
    auto nonneg_real = [&](const ComplexMatrix& m, const char* what) {
      if (m.imag().cwiseAbs().maxCoeff() > 1e-12) fail(what, " has imaginary residue");
      if (m.real().minCoeff() < 0.0) fail(what, " has a negative entry");
    };
    nonneg_real(dirichlet_E(lambda, 0.5, spec), "dirichlet_E");
    nonneg_real(transfer_hyperbolic(lambda, spec), "transfer_hyperbolic");
    nonneg_real(mu_hat(lambda, *dspec.delay), "mu_hat");
    nonneg_real(g_integral(lambda, spec), "g_integral");
    nonneg_real(loop_gain_delay(lambda, dspec), "loop_gain_delay");
  }
  return "all loop operators entrywise nonnegative for real lambda >= 0";
}

std::string check_continuity_at_zero(std::mt19937_64& rng) {
  const Complex small(1e-10, 0.0);
  for (int s = 0; s < 5; ++s) {
    const SystemSpec dspec = random_delay_spec(rng, 1, 2, 0.3, 1.2);
    const double mu_gap =
        (mu_hat(small, *dspec.delay) - mu_hat(Complex(0.0, 0.0), *dspec.delay))
            .cwiseAbs()
            .maxCoeff();
    const double g_gap =
        (g_integral(small, dspec) - g_integral(Complex(0.0, 0.0), dspec))
            .cwiseAbs()
            .maxCoeff();
    if (mu_gap > 1e-8) fail("mu_hat jump ", mu_gap, " at |lambda| = 1e-10");
    if (g_gap > 1e-8) fail("g_integral jump ", g_gap, " at |lambda| = 1e-10");
  }
  const double heat_gap = std::abs(dirichlet_heat(1e-10, 1.0, 0.0) - std::numbers::pi);
  if (heat_gap > 1e-8) fail("dirichlet_heat jump ", heat_gap, " at lambda = 1e-10");
  return "lambda -> 0 limits agree with the lambda = 0 branches";
}

std::string check_small_delay_implication(std::mt19937_64& rng) {
  for (int s = 0; s < 10; ++s) {
    const SystemSpec spec = random_delay_spec(rng, 1, 2, 0.1, 0.9);
    if (!small_delay_sufficient(*spec.delay))
      fail("generated measure was not small in total variation");
    const StabilityReport report = stability_delay(spec);
    if (report.verdict != Verdict::UniformlyExponentiallyStable)
      fail("small measure judged ", to_string(report.verdict));
  }
  return "r(|mu|) < 1 always implied a stable verdict";
}

std::string check_semigroup_restart() {
  // Transit-aligned steps keep every lookup on stored values, so the
  // restarted run must agree to round-off.
  {
    const SystemSpec spec = scalar_transport_spec(1.0, 0.5);
    const Field y0 = Field::sampled(64, 1, [](double x, int) { return 0.5 + 0.5 * x; });
    const double dt = 1.0 / 64.0;
    const auto direct = solve_moc(spec, y0, 3.0, dt, 1 << 30);
    const auto first = solve_moc(spec, y0, 1.5, dt, 1 << 30);
    const auto second = solve_moc(spec, first.fields.back(), 1.5, dt, 1 << 30);
    const double gap =
        (second.fields.back().values() - direct.fields.back().values()).cwiseAbs().maxCoeff();
    if (gap > 1e-12) fail("no-delay restart differs by ", gap);
  }
  {
    SystemSpec spec;
    spec.velocities = Vector::Constant(1, 1.0);
    spec.coupling = Matrix::Zero(1, 1);
    DelayMeasure mu;
    mu.atoms.push_back({-1.0, Matrix::Constant(1, 1, 0.6)});
    spec.delay = mu;
    const double dt = 1.0 / 50.0;
    const Field y0 = Field::constant(50, Vector::Ones(1));
    const HistoryBuffer phi = HistoryBuffer::constant(dt, y0);
    const auto direct = solve_moc_delay(spec, y0, phi, 3.0, dt, 1 << 30);
    const auto first = solve_moc_delay(spec, y0, phi, 1.5, dt, 1 << 30);
    std::vector<Field> snaps;
    for (std::size_t i = 0; i < first.history->size(); ++i)
      snaps.push_back(first.history->snapshot(i));
    const HistoryBuffer rebased(dt, 0.0, std::move(snaps));
    const auto second =
        solve_moc_delay(spec, first.fields.back(), rebased, 1.5, dt, 1 << 30);
    const double gap =
        (second.fields.back().values() - direct.fields.back().values()).cwiseAbs().maxCoeff();
    if (gap > 1e-9) fail("delay restart differs by ", gap);
  }
  return "restarted runs reproduce the direct trajectories";
}

std::string check_linearity(std::mt19937_64& rng) {
  const SystemSpec spec = random_hyperbolic_spec(rng, 2, 2, 0.5, 1.2);
  const Field a = random_nonnegative_field(rng, 60, 2);
  const Field b = random_nonnegative_field(rng, 60, 2);
  Field combo = a;
  combo.values() = 0.7 * a.values() - 0.3 * b.values();
  const auto ra = solve_moc(spec, a, 2.0, 0.02, 1 << 30);
  const auto rb = solve_moc(spec, b, 2.0, 0.02, 1 << 30);
  const auto rc = solve_moc(spec, combo, 2.0, 0.02, 1 << 30);
  const Matrix expect = 0.7 * ra.fields.back().values() - 0.3 * rb.fields.back().values();
  const double gap = (rc.fields.back().values() - expect).cwiseAbs().maxCoeff();
  if (gap > 1e-12) fail("superposition violated by ", gap);
  return "trajectories superpose to round-off";
}

std::string check_radius_monotonicity(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  for (int s = 0; s < 20; ++s) {
    const int n = 2 + static_cast<int>(dist(rng) * 3);
    Matrix a(n, n), b(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        a(r, c) = dist(rng);
        b(r, c) = dist(rng);
      }
    if (spectral_radius(Matrix(a + b)) < spectral_radius(a) - 1e-12)
      fail("adding a nonnegative matrix decreased the radius");
  }
  return "r(A+B) >= r(A) on random nonnegative pairs";
}

std::string check_criterion_dynamics(std::mt19937_64& rng) {
  for (int s = 0; s < 6; ++s) {
    const bool stable = s < 3;
    const SystemSpec spec = stable ? random_hyperbolic_spec(rng, 2, 3, 0.2, 0.9)
                                   : random_hyperbolic_spec(rng, 2, 3, 1.1, 2.0);
    const Field y0 = random_nonnegative_field(rng, 80, spec.n());
    const auto result = solve_moc(spec, y0, 30.0, 0.005, 4);
    const DecayEstimate est = fit_decay_rate(norm_series(result), 0.5);
    if (est.all_zero) fail("unexpected annihilation");
    if (stable != (est.fit.rate < 0.0))
      fail("fit rate ", est.fit.rate, " contradicts r(K) verdict");
  }
  for (int s = 0; s < 4; ++s) {
    const bool stable = s < 2;
    const SystemSpec spec = stable ? random_delay_spec(rng, 1, 2, 0.3, 0.8)
                                   : random_delay_spec(rng, 1, 2, 1.2, 1.6);
    const Field y0 = random_nonnegative_field(rng, 80, spec.n());
    const Field phi0 = random_nonnegative_field(rng, 80, spec.n());
    const auto result =
        solve_moc_delay(spec, y0, HistoryBuffer::constant(0.01, phi0), 40.0, 0.01, 10);
    const DecayEstimate est = fit_decay_rate(norm_series(result), 0.5);
    if (est.all_zero) fail("unexpected annihilation");
    if (stable != (est.fit.rate < 0.0))
      fail("delay fit rate ", est.fit.rate, " contradicts r(mu_hat(0)) verdict");
  }
  return "decay-fit signs match the spectral-radius verdicts";
}

}  // namespace

std::vector<PropertyResult> run_verify_battery(const ExperimentConfig& cfg,
                                               std::uint64_t seed) {
  Battery battery;

  battery.run("config-analyze", [&] {
    const StabilityReport report = analyze_config(cfg);
    std::ostringstream detail;
    detail << "r = " << report.spectral_radius_loop << ", verdict "
           << to_string(report.verdict);
    return detail.str();
  });

  battery.run("config-dynamics-consistency", [&]() -> std::string {
    if (cfg.mode == "heat") return "heat mode is analyzer-only; skipped";
    const StabilityReport report = analyze_config(cfg);
    if (report.verdict == Verdict::Marginal)
      return "marginal verdict: no dynamics claim made";
    const Field y0 = build_initial_field(cfg.initial, cfg.run.m_cells, cfg.system.n());
    MocResult result;
    if (cfg.system.has_delay()) {
      result = solve_moc_delay(cfg.system, y0, build_history_buffer(cfg), cfg.run.t_final,
                               cfg.run.dt, cfg.run.output_stride);
    } else {
      result = solve_moc(cfg.system, y0, cfg.run.t_final, cfg.run.dt,
                         cfg.run.output_stride);
    }
    const DecayEstimate est = fit_decay_rate(norm_series(result), cfg.analysis.window_fraction);
    const bool stable = report.verdict == Verdict::UniformlyExponentiallyStable;
    if (est.all_zero) {
      if (!stable) fail("trajectory annihilated although the verdict is unstable");
      return "trajectory exactly annihilated (nilpotent)";
    }
    if (stable != (est.fit.rate < 0.0))
      fail("fitted rate ", est.fit.rate, " contradicts verdict ", to_string(report.verdict));
    std::ostringstream detail;
    detail << "fitted rate " << est.fit.rate << " agrees with verdict "
           << to_string(report.verdict);
    return detail.str();
  });

  int item = 0;
  auto rng_for = [&](int salt) { return std::mt19937_64(seed + 0x9e3779b97f4a7c15ULL * salt); };

  auto with_rng = [&](const std::string& name, auto&& fn) {
    ++item;
    battery.run(name, [&, salt = item] {
      std::mt19937_64 rng = rng_for(salt);
      return fn(rng);
    });
  };

  with_rng("resolvent-identity", [&](std::mt19937_64& rng) {
    return check_resolvent_identity(rng, cfg.verify.num_specs, cfg.verify.m_cells);
  });
  with_rng("positivity-moc", [](std::mt19937_64& rng) { return check_positivity_moc(rng); });
  with_rng("positivity-fv", [](std::mt19937_64& rng) { return check_positivity_fv(rng); });
  with_rng("nilpotency-moc", [](std::mt19937_64& rng) { return check_nilpotency_moc(rng); });
  with_rng("nilpotency-fv", [](std::mt19937_64& rng) { return check_nilpotency_fv(rng); });
  battery.run("cross-solver-convergence", [] { return check_convergence(); });
  with_rng("transfer-monotone-decay",
           [](std::mt19937_64& rng) { return check_monotone_decay(rng); });
  with_rng("transfer-vanishing-at-infinity",
           [](std::mt19937_64& rng) { return check_vanishing(rng); });
  with_rng("operator-positivity",
           [](std::mt19937_64& rng) { return check_operator_positivity(rng); });
  with_rng("operator-continuity-at-zero",
           [](std::mt19937_64& rng) { return check_continuity_at_zero(rng); });
  with_rng("small-delay-implication",
           [](std::mt19937_64& rng) { return check_small_delay_implication(rng); });
  battery.run("semigroup-restart", [] { return check_semigroup_restart(); });
  with_rng("linearity", [](std::mt19937_64& rng) { return check_linearity(rng); });
  with_rng("radius-monotonicity",
           [](std::mt19937_64& rng) { return check_radius_monotonicity(rng); });
  with_rng("criterion-vs-dynamics",
           [](std::mt19937_64& rng) { return check_criterion_dynamics(rng); });

  return battery.results;
}

}  // namespace hypstab
