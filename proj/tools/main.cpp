#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "hypstab/analysis.hpp"
#include "hypstab/config.hpp"
#include "hypstab/solver_fv.hpp"
#include "hypstab/solver_moc.hpp"
#include "hypstab/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitStable = 0;
constexpr int kExitUnstable = 1;
constexpr int kExitMarginal = 2;
constexpr int kExitInputError = 3;
constexpr int kExitRuntimeError = 4;

// Locale-independent shortest round-trip formatting for the output files.
std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

hypstab::StabilityReport analyze_report(const hypstab::ExperimentConfig& cfg) {
  if (cfg.mode == "heat")
    return hypstab::stability_heat_robin(cfg.heat->k, cfg.heat->sigma,
                                         cfg.analysis.tol_marginal);
  if (cfg.system.has_delay())
    return hypstab::stability_delay(cfg.system, cfg.analysis.tol_marginal);
  return hypstab::stability_hyperbolic(cfg.system, cfg.analysis.tol_marginal);
}

int verdict_status(hypstab::Verdict v) {
  switch (v) {
    case hypstab::Verdict::UniformlyExponentiallyStable: return kExitStable;
    case hypstab::Verdict::Unstable: return kExitUnstable;
    case hypstab::Verdict::Marginal: return kExitMarginal;
  }
  return kExitMarginal;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

int cmd_analyze(const hypstab::ExperimentConfig& cfg, const fs::path& out_dir) {
  const hypstab::StabilityReport report = analyze_report(cfg);
  std::cout << "criterion=" << report.criterion_used << "\n"
            << "r=" << fmt(report.spectral_radius_loop) << "\n"
            << "margin=" << fmt(report.margin) << "\n"
            << "verdict=" << to_string(report.verdict) << "\n";
  json record = {{"criterion", report.criterion_used},
                 {"spectral_radius_loop", report.spectral_radius_loop},
                 {"margin", report.margin},
                 {"verdict", to_string(report.verdict)}};
  write_text(out_dir / "analyze.json", record.dump(2) + "\n");
  return verdict_status(report.verdict);
}

struct NormRow {
  double t = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
};

std::vector<NormRow> moc_norm_rows(const hypstab::MocResult& result) {
  std::vector<NormRow> rows;
  rows.reserve(result.times.size());
  for (std::size_t k = 0; k < result.times.size(); ++k)
    rows.push_back({result.times[k], result.fields[k].l2_norm(),
                    result.fields[k].linf_norm()});
  return rows;
}

std::vector<NormRow> fv_norm_rows(const hypstab::FvResult& result) {
  std::vector<NormRow> rows;
  rows.reserve(result.times.size());
  for (std::size_t k = 0; k < result.times.size(); ++k)
    rows.push_back({result.times[k], hypstab::fv_l2_norm(result.states[k]),
                    hypstab::fv_linf_norm(result.states[k])});
  return rows;
}

double interpolate_norm(const std::vector<NormRow>& rows, double t) {
  if (rows.empty()) return 0.0;
  if (t <= rows.front().t) return rows.front().l2;
  if (t >= rows.back().t) return rows.back().l2;
  std::size_t k = 0;
  while (k + 1 < rows.size() && rows[k + 1].t < t) ++k;
  const double span = rows[k + 1].t - rows[k].t;
  const double frac = span > 0.0 ? (t - rows[k].t) / span : 0.0;
  return (1.0 - frac) * rows[k].l2 + frac * rows[k + 1].l2;
}

int cmd_simulate(const hypstab::ExperimentConfig& cfg, const fs::path& out_dir) {
  const int n = cfg.system.n();
  const hypstab::Field y0 =
      hypstab::build_initial_field(cfg.initial, cfg.run.m_cells, n);
  const bool want_moc = cfg.run.solver == "moc" || cfg.run.solver == "both";
  const bool want_fv = cfg.run.solver == "fv" || cfg.run.solver == "both";

  std::optional<hypstab::MocResult> moc;
  std::optional<hypstab::FvResult> fv;
  std::optional<hypstab::HistoryBuffer> phi;
  if (cfg.system.has_delay()) phi = hypstab::build_history_buffer(cfg);

  if (want_moc) {
    if (cfg.system.has_delay())
      moc = hypstab::solve_moc_delay(cfg.system, y0, *phi, cfg.run.t_final, cfg.run.dt,
                                     cfg.run.output_stride);
    else
      moc = hypstab::solve_moc(cfg.system, y0, cfg.run.t_final, cfg.run.dt,
                               cfg.run.output_stride);
  }
  if (want_fv) {
    fv = hypstab::solve_fv(cfg.system, y0, cfg.run.t_final, cfg.run.m_cells, cfg.run.cfl,
                           cfg.run.output_stride, phi.has_value() ? &*phi : nullptr);
  }

  const std::vector<NormRow> primary =
      want_moc ? moc_norm_rows(*moc) : fv_norm_rows(*fv);
  const std::vector<NormRow> secondary =
      (want_moc && want_fv) ? fv_norm_rows(*fv) : std::vector<NormRow>{};

  std::string norms_text = want_moc && want_fv ? "t,l2_norm,linf_norm,fv_l2_norm\n"
                                               : "t,l2_norm,linf_norm\n";
  std::vector<std::pair<double, double>> fit_input;
  for (const auto& row : primary) {
    norms_text += fmt(row.t) + "," + fmt(row.l2) + "," + fmt(row.linf);
    if (!secondary.empty()) norms_text += "," + fmt(interpolate_norm(secondary, row.t));
    norms_text += "\n";
    fit_input.emplace_back(row.t, row.l2);
  }
  write_text(out_dir / "norms.csv", norms_text);

  if (!cfg.run.snapshot_times.empty()) {
    std::string snap_text = "t,x";
    for (int i = 0; i < n; ++i) snap_text += ",y_" + std::to_string(i + 1);
    snap_text += "\n";
    for (double target : cfg.run.snapshot_times) {
      if (want_moc) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < moc->times.size(); ++k)
          if (std::abs(moc->times[k] - target) < std::abs(moc->times[best] - target))
            best = k;
        const hypstab::Field& f = moc->fields[best];
        for (int j = 0; j <= f.cells(); ++j) {
          snap_text += fmt(moc->times[best]) + "," + fmt(f.grid()(j));
          for (int i = 0; i < n; ++i) snap_text += "," + fmt(f.values()(j, i));
          snap_text += "\n";
        }
      } else {
        std::size_t best = 0;
        for (std::size_t k = 1; k < fv->times.size(); ++k)
          if (std::abs(fv->times[k] - target) < std::abs(fv->times[best] - target))
            best = k;
        const hypstab::FvState& s = fv->states[best];
        for (int j = 0; j < s.m(); ++j) {
          snap_text += fmt(fv->times[best]) + "," + fmt((j + 0.5) * s.dx);
          for (int i = 0; i < n; ++i) snap_text += "," + fmt(s.cells(j, i));
          snap_text += "\n";
        }
      }
    }
    write_text(out_dir / "snapshots.csv", snap_text);
  }

  std::optional<hypstab::DecayEstimate> est;
  std::string fit_problem;
  try {
    est = hypstab::fit_decay_rate(fit_input, cfg.analysis.window_fraction);
  } catch (const hypstab::InsufficientData& err) {
    fit_problem = err.what();
  }
  const hypstab::StabilityReport report = analyze_report(cfg);

  std::string summary;
  summary += "verdict=" + to_string(report.verdict) + "\n";
  summary += "criterion=" + report.criterion_used + "\n";
  summary += "r=" + fmt(report.spectral_radius_loop) + "\n";
  if (!est.has_value()) {
    summary += "nilpotent=false\n";
    summary += "fitted_rate=unavailable (" + fit_problem + ")\n";
  } else if (est->all_zero) {
    summary += "nilpotent=true\n";
    summary += "fitted_rate=-inf\n";
  } else {
    summary += "nilpotent=false\n";
    summary += "fitted_rate=" + fmt(est->fit.rate) + "\n";
    summary += "fit_r_squared=" + fmt(est->fit.r_squared) + "\n";
    summary += "fit_window=[" + fmt(est->fit.t_start) + "," + fmt(est->fit.t_end) + "]\n";
  }
  if (est.has_value() && est->excluded_underflow > 0)
    summary +=
        "excluded_underflow_samples=" + std::to_string(est->excluded_underflow) + "\n";
  if (moc.has_value())
    for (const auto& warning : moc->warnings) summary += "warning=" + warning + "\n";
  write_text(out_dir / "summary.txt", summary);
  std::cout << summary;
  return 0;
}

int cmd_spectrum(const hypstab::ExperimentConfig& cfg, const fs::path& out_dir) {
  if (cfg.mode == "heat")
    throw hypstab::ConfigError("spectrum expects a transport-mode config");
  json record;
  record["boxes"] = json::array();
  for (const auto& box : cfg.analysis.root_boxes) {
    try {
      const int count = hypstab::count_roots(box, cfg.system);
      std::cout << "box=[" << fmt(box.re_min) << "," << fmt(box.re_max) << "]x["
                << fmt(box.im_min) << "," << fmt(box.im_max) << "]i count=" << count
                << "\n";
      record["boxes"].push_back({{"re_min", box.re_min},
                                 {"re_max", box.re_max},
                                 {"im_min", box.im_min},
                                 {"im_max", box.im_max},
                                 {"count", count}});
    } catch (const hypstab::RootOnBoundary& err) {
      const double re_pad = 0.03 * (box.re_max - box.re_min);
      const double im_pad = 0.03 * (box.im_max - box.im_min);
      std::cerr << "error: " << err.what() << "\n"
                << "try the shifted box [" << fmt(box.re_min - re_pad) << ","
                << fmt(box.re_max + re_pad) << "]x[" << fmt(box.im_min - im_pad) << ","
                << fmt(box.im_max + im_pad) << "]i\n";
      return kExitRuntimeError;
    }
  }

  hypstab::AbscissaOptions options;
  options.im_cap = cfg.analysis.im_cap;
  options.tol = cfg.analysis.abscissa_tol;
  const auto abscissa =
      hypstab::spectral_abscissa_bound(cfg.system, cfg.analysis.abscissa_re_max, options);
  hypstab::StabilityReport report = analyze_report(cfg);
  if (!record["boxes"].empty()) {
    int total = 0;
    for (const auto& b : record["boxes"]) total += b.at("count").get<int>();
    report.root_count = total;
  }
  if (abscissa.has_value())
    report.spectral_abscissa_box = {*abscissa - options.tol, *abscissa + options.tol};
  if (abscissa.has_value()) {
    std::cout << "abscissa=" << fmt(*abscissa) << "\n"
              << "abscissa_tol=" << fmt(options.tol) << "\n";
    record["abscissa"] = *abscissa;
    const bool stable = report.verdict == hypstab::Verdict::UniformlyExponentiallyStable;
    const bool agrees = report.verdict == hypstab::Verdict::Marginal
                            ? std::abs(*abscissa) < 0.05
                            : stable == (*abscissa < 0.0);
    std::cout << "verdict=" << to_string(report.verdict) << "\n"
              << "abscissa_sign_agrees=" << (agrees ? "true" : "false") << "\n";
    record["abscissa_sign_agrees"] = agrees;
  } else {
    std::cout << "abscissa=none (no roots found in the searched box)\n"
              << "verdict=" << to_string(report.verdict) << "\n";
    record["abscissa"] = nullptr;
  }
  record["verdict"] = to_string(report.verdict);
  if (report.root_count.has_value()) record["total_root_count"] = *report.root_count;
  if (report.spectral_abscissa_box.has_value())
    record["abscissa_box"] = {report.spectral_abscissa_box->first,
                              report.spectral_abscissa_box->second};
  write_text(out_dir / "spectrum.json", record.dump(2) + "\n");
  return 0;
}

int cmd_verify(const hypstab::ExperimentConfig& cfg, std::uint64_t seed) {
  const auto results = hypstab::run_verify_battery(cfg, seed);
  bool all_passed = true;
  for (const auto& r : results) {
    std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << "\n";
    all_passed = all_passed && r.passed;
  }
  std::cout << (all_passed ? "verify: all properties passed\n"
                           : "verify: at least one property failed\n");
  return all_passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"simulator and stability analyzer for boundary-coupled transport systems"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 12345;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out-dir", out_dir, "directory for output files");
    sub->add_option("--seed", seed, "seed for randomized verify batteries");
  };

  CLI::App* analyze = app.add_subcommand("analyze", "stability verdict from the loop radius");
  CLI::App* simulate = app.add_subcommand("simulate", "run the solvers and emit norm series");
  CLI::App* spectrum = app.add_subcommand("spectrum", "root counts and spectral abscissa");
  CLI::App* verify = app.add_subcommand("verify", "run the invariant battery");
  for (CLI::App* sub : {analyze, simulate, spectrum, verify}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    const hypstab::ExperimentConfig cfg = hypstab::load_config(config_path);
    if (verify->parsed()) hypstab::validate_config_for_verify(cfg);
    else hypstab::validate_config(cfg);
    fs::create_directories(out_dir);
    if (analyze->parsed()) return cmd_analyze(cfg, out_dir);
    if (simulate->parsed()) return cmd_simulate(cfg, out_dir);
    if (spectrum->parsed()) return cmd_spectrum(cfg, out_dir);
    if (verify->parsed()) return cmd_verify(cfg, seed);
  } catch (const hypstab::ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitInputError;
  } catch (const hypstab::PositivityViolation& err) {
    std::cerr << "input error: " << err.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitRuntimeError;
  }
  return kExitInputError;
}
