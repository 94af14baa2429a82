#include "hypstab/detail/uniform_series.hpp"

#include <algorithm>
#include <cmath>

namespace hypstab::detail {

namespace {

std::pair<std::size_t, double> locate(double pos, std::size_t last) {
  if (pos <= 0.0) return {0, 0.0};
  if (pos >= static_cast<double>(last)) return {last, 0.0};
  auto k = static_cast<std::size_t>(std::floor(pos));
  double frac = pos - static_cast<double>(k);
  if (frac < 1e-9) return {k, 0.0};
  if (frac > 1.0 - 1e-9) return {k + 1, 0.0};
  return {k, frac};
}

}  // namespace

Vector UniformSeries::eval(double t) const {
  const auto [k, frac] = locate(position(t), values_.size() - 1);
  if (frac == 0.0) return values_[k];
  return (1.0 - frac) * values_[k] + frac * values_[k + 1];
}

double UniformSeries::eval_component(double t, int i) const {
  const auto [k, frac] = locate(position(t), values_.size() - 1);
  if (frac == 0.0) return values_[k](i);
  return (1.0 - frac) * values_[k](i) + frac * values_[k + 1](i);
}

Vector UniformSeries::integral(double a, double b) const {
  const auto n = static_cast<Eigen::Index>(values_.front().size());
  Vector acc = Vector::Zero(n);
  if (b <= a) return acc;
  const double lo = t0_;
  const double hi = t_last();

  // Constant extension outside the sampled range.
  if (a < lo) {
    acc += (std::min(b, lo) - a) * values_.front();
    a = lo;
    if (b <= lo) return acc;
  }
  if (b > hi) {
    acc += (b - std::max(a, hi)) * values_.back();
    b = hi;
    if (a >= hi) return acc;
  }
  if (b <= a) return acc;

  // Exact integral of the linear interpolant over [a, b].
  const double pa = position(a);
  const double pb = position(b);
  auto ka = static_cast<std::size_t>(std::floor(pa));
  const auto kb = std::min(static_cast<std::size_t>(std::floor(pb)), values_.size() - 2);
  ka = std::min(ka, values_.size() - 2);
  for (std::size_t k = ka; k <= kb; ++k) {
    const double segl = std::max(pa, static_cast<double>(k));
    const double segr = std::min(pb, static_cast<double>(k + 1));
    if (segr <= segl) continue;
    const double fl = segl - static_cast<double>(k);
    const double fr = segr - static_cast<double>(k);
    const Vector vl = (1.0 - fl) * values_[k] + fl * values_[k + 1];
    const Vector vr = (1.0 - fr) * values_[k] + fr * values_[k + 1];
    acc += 0.5 * (segr - segl) * dt_ * (vl + vr);
  }
  return acc;
}

}  // namespace hypstab::detail
