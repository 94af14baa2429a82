#pragma once

#include <Eigen/Dense>
#include <complex>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "hypstab/errors.hpp"

namespace hypstab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

/// Point mass of a matrix-valued delay measure at offset theta in [-1, 0).
struct DelayAtom {
  double theta = -1.0;
  Matrix weight;
};

/// Piecewise-constant matrix density on [-1, 0]. values[i] applies on
/// [breakpoints[i], breakpoints[i+1]).
struct PiecewiseDensity {
  std::vector<double> breakpoints;
  std::vector<Matrix> values;

  bool empty() const { return values.empty(); }
  int pieces() const { return static_cast<int>(values.size()); }
};

/// Matrix-valued measure of bounded variation on [-1, 0): finitely many
/// atoms plus a piecewise-constant density. No mass at 0.
struct DelayMeasure {
  std::vector<DelayAtom> atoms;
  PiecewiseDensity density;

  bool empty() const { return atoms.empty() && density.empty(); }
  /// Component count n, taken from the first weight/value; 0 when empty.
  int dimension() const;
  /// Entrywise absolute mass |mu|([-1,0]) as an n x n matrix.
  Matrix total_variation() const;
  /// Signed mass: sum of atom weights plus density times piece lengths.
  Matrix total_mass() const;
};

/// The problem data (D, K, mu): velocities, boundary coupling and an
/// optional delay measure. When a delay measure is present the boundary
/// condition is the history functional and the coupling must be zero.
struct SystemSpec {
  Vector velocities;                  // d_i > 0
  Matrix coupling;                    // K, n x n
  std::optional<DelayMeasure> delay;  // mu
  bool positivity_mode = true;

  int n() const { return static_cast<int>(velocities.size()); }
  bool has_delay() const { return delay.has_value() && !delay->empty(); }
  double max_velocity() const { return velocities.maxCoeff(); }
  /// min_i 1/d_i, the shortest boundary-to-boundary transit time.
  double min_transit_time() const { return 1.0 / max_velocity(); }
  /// max_i 1/d_i, the time after which the open loop is annihilated.
  double max_transit_time() const { return 1.0 / velocities.minCoeff(); }
};

/// Convenience constructor for the scalar transport system (n = 1).
SystemSpec scalar_transport_spec(double velocity, double k);

struct Violation {
  std::string field;
  std::string message;
};

struct ValidationResult {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

/// Collects every invariant violation of the system and its delay measure.
/// Violations are data, not faults: the call itself never throws.
ValidationResult validate_system(const SystemSpec& spec);

/// n-component grid function on [0,1]: nodal values on a uniform grid of
/// m cells (m+1 nodes). values()(j, i) = y_i(x_j).
class Field {
 public:
  Field() = default;
  Field(int cells, int components);  // zero-initialized
  Field(Vector grid, Matrix values);

  static Field constant(int cells, const Vector& value);

  /// Samples f(x, i) at the grid nodes.
  template <typename F>
  static Field sampled(int cells, int components, F&& f) {
    Field out(cells, components);
    for (int j = 0; j <= cells; ++j) {
      const double x = out.grid_(j);
      for (int i = 0; i < components; ++i) out.values_(j, i) = f(x, i);
    }
    return out;
  }

  int cells() const { return static_cast<int>(grid_.size()) - 1; }
  int components() const { return static_cast<int>(values_.cols()); }
  double dx() const { return 1.0 / cells(); }
  const Vector& grid() const { return grid_; }
  const Matrix& values() const { return values_; }
  Matrix& values() { return values_; }

  /// Linear interpolation of component i at x in [0,1] (clamped).
  double component_at(double x, int i) const;
  Vector value_at(double x) const;

  /// Trapezoidal integral of each component over [0,1].
  Vector mean() const;
  double l2_norm() const;
  double linf_norm() const;

 private:
  Vector grid_;    // cells+1 nodes, uniform, grid_(0)=0, grid_(m)=1
  Matrix values_;  // (cells+1) x n
};

bool field_is_nonnegative(const Field& f, double tol);

/// Composite trapezoidal approximation of (sum_i int_0^1 y_i^2 dx)^{1/2}.
double field_l2_norm(const Field& f);

/// Ring of Fields covering the trailing unit window [anchor-1, anchor]
/// at spacing dt. Single writer; queries interpolate linearly in time and
/// reproduce stored snapshots exactly at their own times.
class HistoryBuffer {
 public:
  HistoryBuffer(double dt, double anchor_time, std::vector<Field> snapshots);

  /// Buffer holding the same field at every offset, anchored at t=0.
  static HistoryBuffer constant(double dt, const Field& f);

  /// ceil(1/dt) + 1, the snapshot count needed to span the unit window.
  static std::size_t ring_length(double dt);

  double dt() const { return dt_; }
  double anchor_time() const { return anchor_; }
  std::size_t size() const { return snapshots_.size(); }
  double snapshot_time(std::size_t i) const;  // oldest first
  const Field& snapshot(std::size_t i) const { return snapshots_[i]; }

  /// State at time anchor + theta, theta in [-1, 0].
  Field at_offset(double theta) const;

  /// Appends the state at anchor + dt and drops snapshots older than the
  /// unit window.
  void push(const Field& f);

 private:
  double dt_ = 0.0;
  double anchor_ = 0.0;
  std::deque<Field> snapshots_;  // oldest first; back() sits at anchor
};

enum class Verdict { UniformlyExponentiallyStable, Unstable, Marginal };

std::string to_string(Verdict v);

inline constexpr double kMarginalTolDefault = 1e-10;

/// UniformlyExponentiallyStable iff r < 1 - tol, Unstable iff r > 1 + tol,
/// Marginal otherwise.
Verdict classify_radius(double r, double tol_marginal = kMarginalTolDefault);

struct StabilityReport {
  double spectral_radius_loop = 0.0;
  Verdict verdict = Verdict::Marginal;
  double margin = 0.0;  // 1 - spectral_radius_loop
  std::string criterion_used;
  std::optional<int> root_count;
  std::optional<std::pair<double, double>> spectral_abscissa_box;
};

StabilityReport make_stability_report(double radius, std::string criterion,
                                      double tol_marginal = kMarginalTolDefault);

}  // namespace hypstab
