#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hypstab/analysis.hpp"
#include "hypstab/core.hpp"

namespace hypstab {

/// Declarative initial data: a constant vector, per-component polynomial
/// coefficients (ascending powers), or sampled values to interpolate.
struct InitialSpec {
  enum class Kind { Constant, Polynomial, Samples };
  Kind kind = Kind::Constant;
  Vector constant;
  std::vector<Vector> poly_coeffs;
  Vector sample_x;
  Matrix sample_values;
};

struct RunConfig {
  double t_final = 20.0;
  double dt = 0.01;
  int m_cells = 200;
  double cfl = 0.9;
  int output_stride = 10;
  std::string solver = "moc";  // moc | fv | both
  std::vector<double> snapshot_times;
};

struct AnalysisSettings {
  std::vector<RootSearchRegion> root_boxes;
  double window_fraction = 0.5;
  double abscissa_re_max = 2.0;
  double abscissa_tol = 1e-4;
  double im_cap = 0.0;  // 0 selects the default 4*pi*max(d_i)
  double tol_marginal = kMarginalTolDefault;
};

struct HeatSettings {
  double k = 0.0;
  double sigma = 1.0;
};

struct VerifySettings {
  int num_specs = 20;
  int m_cells = 64;
};

struct ExperimentConfig {
  std::string mode = "transport";  // transport | heat
  SystemSpec system;
  std::optional<HeatSettings> heat;
  InitialSpec initial;
  std::optional<InitialSpec> history;
  RunConfig run;
  AnalysisSettings analysis;
  VerifySettings verify;
};

/// Parse/serialize the JSON config format. Malformed input raises
/// ConfigError carrying position/field diagnostics.
ExperimentConfig parse_config(const std::string& text);
std::string serialize_config(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

/// Semantic checks beyond JSON shape; throws ConfigError listing every
/// violated field.
void validate_config(const ExperimentConfig& cfg);

/// Variant for the verify subcommand: run/analysis/verify sections are
/// checked, but system invariants are left to the battery itself so that
/// positivity violations surface as failed properties.
void validate_config_for_verify(const ExperimentConfig& cfg);

Field build_initial_field(const InitialSpec& init, int m_cells, int n);

/// History for delay runs: the configured history (or the initial data when
/// none is given), held constant over [-1, 0] on the run's dt grid.
HistoryBuffer build_history_buffer(const ExperimentConfig& cfg);

}  // namespace hypstab
