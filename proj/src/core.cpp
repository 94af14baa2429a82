#include "hypstab/core.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace hypstab {

namespace {

bool entrywise_nonnegative(const Matrix& m) { return (m.array() >= 0.0).all(); }

// Fraction along a uniform grid with node snapping: aligned queries must
// reproduce stored values bit-for-bit.
std::pair<Eigen::Index, double> locate(double pos, Eigen::Index last) {
  if (pos <= 0.0) return {0, 0.0};
  if (pos >= static_cast<double>(last)) return {last, 0.0};
  auto k = static_cast<Eigen::Index>(std::floor(pos));
  double frac = pos - static_cast<double>(k);
  if (frac < 1e-9) return {k, 0.0};
  if (frac > 1.0 - 1e-9) return {k + 1, 0.0};
  return {k, frac};
}

}  // namespace

int DelayMeasure::dimension() const {
  if (!atoms.empty()) return static_cast<int>(atoms.front().weight.rows());
  if (!density.empty()) return static_cast<int>(density.values.front().rows());
  return 0;
}

Matrix DelayMeasure::total_variation() const {
  const int n = dimension();
  Matrix tv = Matrix::Zero(n, n);
  for (const auto& atom : atoms) tv += atom.weight.cwiseAbs();
  for (int i = 0; i < density.pieces(); ++i) {
    const double len = density.breakpoints[i + 1] - density.breakpoints[i];
    tv += density.values[i].cwiseAbs() * len;
  }
  return tv;
}

Matrix DelayMeasure::total_mass() const {
  const int n = dimension();
  Matrix mass = Matrix::Zero(n, n);
  for (const auto& atom : atoms) mass += atom.weight;
  for (int i = 0; i < density.pieces(); ++i) {
    const double len = density.breakpoints[i + 1] - density.breakpoints[i];
    mass += density.values[i] * len;
  }
  return mass;
}

SystemSpec scalar_transport_spec(double velocity, double k) {
  SystemSpec spec;
  spec.velocities = Vector::Constant(1, velocity);
  spec.coupling = Matrix::Constant(1, 1, k);
  return spec;
}

std::string ValidationResult::summary() const {
  std::ostringstream out;
  for (const auto& v : violations) out << v.field << ": " << v.message << "\n";
  return out.str();
}

ValidationResult validate_system(const SystemSpec& spec) {
  ValidationResult result;
  auto flag = [&](std::string field, std::string message) {
    result.violations.push_back({std::move(field), std::move(message)});
  };

  const int n = spec.n();
  if (n < 1) flag("velocities", "at least one component is required (n >= 1)");
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(spec.velocities(i))) flag("velocities", "velocity must be finite");
    else if (spec.velocities(i) <= 0.0) flag("velocities", "velocity must be > 0");
  }

  if (spec.coupling.rows() != n || spec.coupling.cols() != n) {
    flag("coupling", "coupling must be an n x n matrix");
  } else {
    if (!spec.coupling.allFinite()) flag("coupling", "coupling entries must be finite");
    if (spec.positivity_mode && !entrywise_nonnegative(spec.coupling))
      flag("coupling", "positivity mode requires every coupling entry >= 0");
  }

  if (spec.delay.has_value()) {
    const DelayMeasure& mu = *spec.delay;
    if (!mu.empty() && spec.coupling.size() > 0 && spec.coupling.cwiseAbs().maxCoeff() > 0.0)
      flag("coupling",
           "coupling must be zero when a delay measure is present "
           "(the boundary condition is the history functional)");
    double prev = -2.0;
    for (std::size_t j = 0; j < mu.atoms.size(); ++j) {
      const DelayAtom& atom = mu.atoms[j];
      if (atom.theta < -1.0) flag("delay.atoms", "atom offset must lie in [-1, 0)");
      if (atom.theta >= 0.0) flag("delay.atoms", "no atom mass allowed at theta = 0: mu(0) = 0 required");
      if (j > 0 && atom.theta <= prev) flag("delay.atoms", "atom offsets must be strictly increasing");
      prev = atom.theta;
      if (atom.weight.rows() != n || atom.weight.cols() != n)
        flag("delay.atoms", "atom weight must be an n x n matrix");
      else if (!atom.weight.allFinite())
        flag("delay.atoms", "atom weight entries must be finite");
      else if (spec.positivity_mode && !entrywise_nonnegative(atom.weight))
        flag("delay.atoms", "positivity mode requires entrywise nonnegative atom weights");
    }
    const PiecewiseDensity& rho = mu.density;
    if (!rho.empty()) {
      if (rho.breakpoints.size() != rho.values.size() + 1) {
        flag("delay.density", "breakpoints must outnumber values by exactly one");
      } else {
        if (rho.breakpoints.front() < -1.0 || rho.breakpoints.back() > 0.0)
          flag("delay.density", "density support must lie inside [-1, 0]");
        for (std::size_t j = 0; j + 1 < rho.breakpoints.size(); ++j)
          if (rho.breakpoints[j + 1] <= rho.breakpoints[j])
            flag("delay.density", "breakpoints must be strictly increasing");
        for (const Matrix& v : rho.values) {
          if (v.rows() != n || v.cols() != n)
            flag("delay.density", "density value must be an n x n matrix");
          else if (!v.allFinite())
            flag("delay.density", "density entries must be finite");
          else if (spec.positivity_mode && !entrywise_nonnegative(v))
            flag("delay.density", "positivity mode requires entrywise nonnegative density values");
        }
      }
    }
  }
  return result;
}

Field::Field(int cells, int components) {
  if (cells < 1 || components < 1)
    throw std::invalid_argument("Field requires cells >= 1 and components >= 1");
  grid_ = Vector::LinSpaced(cells + 1, 0.0, 1.0);
  values_ = Matrix::Zero(cells + 1, components);
}

Field::Field(Vector grid, Matrix values) {
  if (grid.size() < 2 || values.rows() != grid.size() || values.cols() < 1)
    throw std::invalid_argument("Field grid/values dimensions are inconsistent");
  if (grid(0) != 0.0 || grid(grid.size() - 1) != 1.0)
    throw std::invalid_argument("Field grid must span [0, 1]");
  for (Eigen::Index j = 1; j < grid.size(); ++j)
    if (grid(j) <= grid(j - 1)) throw std::invalid_argument("Field grid must be increasing");
  grid_ = std::move(grid);
  values_ = std::move(values);
}

Field Field::constant(int cells, const Vector& value) {
  Field out(cells, static_cast<int>(value.size()));
  out.values_ = value.transpose().replicate(cells + 1, 1);
  return out;
}

double Field::component_at(double x, int i) const {
  const auto [k, frac] = locate(x * cells(), cells());
  if (frac == 0.0) return values_(k, i);
  return (1.0 - frac) * values_(k, i) + frac * values_(k + 1, i);
}

Vector Field::value_at(double x) const {
  const auto [k, frac] = locate(x * cells(), cells());
  if (frac == 0.0) return values_.row(k).transpose();
  return ((1.0 - frac) * values_.row(k) + frac * values_.row(k + 1)).transpose();
}

Vector Field::mean() const {
  const int m = cells();
  const double h = dx();
  Vector out = values_.colwise().sum().transpose() * h;
  out -= 0.5 * h * (values_.row(0) + values_.row(m)).transpose();
  return out;
}

double Field::l2_norm() const {
  const int m = cells();
  const double h = dx();
  double acc = 0.0;
  for (int i = 0; i < components(); ++i) {
    const auto col = values_.col(i);
    double s = col.squaredNorm() - 0.5 * (col(0) * col(0) + col(m) * col(m));
    acc += s * h;
  }
  return std::sqrt(std::max(acc, 0.0));
}

double Field::linf_norm() const { return values_.cwiseAbs().maxCoeff(); }

bool field_is_nonnegative(const Field& f, double tol) {
  if (tol < 0.0) throw std::invalid_argument("tolerance must be >= 0");
  return (f.values().array() >= -tol).all();
}

double field_l2_norm(const Field& f) { return f.l2_norm(); }

HistoryBuffer::HistoryBuffer(double dt, double anchor_time, std::vector<Field> snapshots)
    : dt_(dt), anchor_(anchor_time) {
  if (dt <= 0.0) throw std::invalid_argument("HistoryBuffer requires dt > 0");
  if (snapshots.size() < ring_length(dt))
    throw HistoryGap("history snapshots do not span the unit window [-1, 0]");
  for (auto& f : snapshots) snapshots_.push_back(std::move(f));
}

std::size_t HistoryBuffer::ring_length(double dt) {
  return static_cast<std::size_t>(std::ceil(1.0 / dt - 1e-9)) + 1;
}

HistoryBuffer HistoryBuffer::constant(double dt, const Field& f) {
  std::vector<Field> snaps(ring_length(dt), f);
  return HistoryBuffer(dt, 0.0, std::move(snaps));
}

double HistoryBuffer::snapshot_time(std::size_t i) const {
  return anchor_ - dt_ * static_cast<double>(snapshots_.size() - 1 - i);
}

Field HistoryBuffer::at_offset(double theta) const {
  if (theta < -1.0 - 1e-9 || theta > 1e-9)
    throw std::invalid_argument("history offset must lie in [-1, 0]");
  const double last = static_cast<double>(snapshots_.size() - 1);
  const auto [k, frac] = locate(last + theta / dt_, static_cast<Eigen::Index>(last));
  if (frac == 0.0) return snapshots_[static_cast<std::size_t>(k)];
  const Field& a = snapshots_[static_cast<std::size_t>(k)];
  const Field& b = snapshots_[static_cast<std::size_t>(k) + 1];
  Field out = a;
  out.values() = (1.0 - frac) * a.values() + frac * b.values();
  return out;
}

void HistoryBuffer::push(const Field& f) {
  snapshots_.push_back(f);
  anchor_ += dt_;
  while (snapshots_.size() > ring_length(dt_)) snapshots_.pop_front();
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::UniformlyExponentiallyStable: return "uniformly-exponentially-stable";
    case Verdict::Unstable: return "unstable";
    case Verdict::Marginal: return "marginal";
  }
  return "marginal";
}

Verdict classify_radius(double r, double tol_marginal) {
  if (r < 1.0 - tol_marginal) return Verdict::UniformlyExponentiallyStable;
  if (r > 1.0 + tol_marginal) return Verdict::Unstable;
  return Verdict::Marginal;
}

StabilityReport make_stability_report(double radius, std::string criterion,
                                      double tol_marginal) {
  StabilityReport report;
  report.spectral_radius_loop = radius;
  report.verdict = classify_radius(radius, tol_marginal);
  report.margin = 1.0 - radius;
  report.criterion_used = std::move(criterion);
  return report;
}

}  // namespace hypstab
