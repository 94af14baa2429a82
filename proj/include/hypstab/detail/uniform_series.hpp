#pragma once

#include <vector>

#include "hypstab/core.hpp"

namespace hypstab::detail {

/// Vector-valued samples on a uniform time grid t0, t0+dt, ... with linear
/// interpolation, constant extension beyond the sampled range, and exact
/// integration of the interpolant. Interpolation snaps to nodes within a
/// relative 1e-9 so grid-aligned lookups reproduce stored values exactly.
class UniformSeries {
 public:
  UniformSeries() = default;
  UniformSeries(double t0, double dt) : t0_(t0), dt_(dt) {}

  void reserve(std::size_t n) { values_.reserve(n); }
  void push(const Vector& v) { values_.push_back(v); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  double t0() const { return t0_; }
  double t_last() const { return t0_ + dt_ * (static_cast<double>(values_.size()) - 1.0); }
  const Vector& value(std::size_t i) const { return values_[i]; }

  Vector eval(double t) const;
  double eval_component(double t, int i) const;

  /// Integral of the piecewise-linear interpolant over [a, b], a <= b,
  /// with constant extension outside the sampled range.
  Vector integral(double a, double b) const;

 private:
  double position(double t) const { return (t - t0_) / dt_; }

  double t0_ = 0.0;
  double dt_ = 1.0;
  std::vector<Vector> values_;
};

}  // namespace hypstab::detail
