#include "hypstab/operators.hpp"

#include <cmath>
#include <numbers>

namespace hypstab {

namespace detail {

Complex expm1_over(Complex z) {
  if (std::abs(z) < 1e-3) {
    // 1 + z/2 + z^2/6 + z^3/24 + z^4/120, truncation below 1e-18
    return 1.0 + z * (0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z / 120.0)));
  }
  return (std::exp(z) - 1.0) / z;
}

Complex exp_integral(Complex lambda, double a, double b) {
  const double len = b - a;
  return std::exp(lambda * a) * len * expm1_over(lambda * len);
}

}  // namespace detail

ComplexMatrix dirichlet_E(Complex lambda, double x, const SystemSpec& spec) {
  if (x < -1e-12 || x > 1.0 + 1e-12)
    throw std::invalid_argument("dirichlet_E requires x in [0, 1]");
  const int n = spec.n();
  ComplexMatrix out = ComplexMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    out(i, i) = std::exp(-lambda * x / spec.velocities(i));
  return out;
}

ComplexMatrix transfer_hyperbolic(Complex lambda, const SystemSpec& spec) {
  return spec.coupling.cast<Complex>() * dirichlet_E(lambda, 1.0, spec);
}

Complex dirichlet_transport(Complex lambda, double rho, double x) {
  if (rho <= 0.0) throw std::invalid_argument("dirichlet_transport requires rho > 0");
  return std::exp((lambda / rho) * (x - 1.0));
}

double dirichlet_heat(double lambda, double sigma, double x) {
  constexpr double pi = std::numbers::pi;
  if (lambda < 0.0) throw std::invalid_argument("dirichlet_heat requires lambda >= 0");
  if (sigma <= 0.0) throw std::invalid_argument("dirichlet_heat requires sigma > 0");
  if (x < -1e-12 || x > pi + 1e-12)
    throw std::invalid_argument("dirichlet_heat requires x in [0, pi]");
  if (lambda == 0.0) return pi - x;

  const double a = std::sqrt(lambda / sigma);
  if (a * pi < 1e-4) {
    // (pi - x) * [sinh(u)/u] * sech(v) with u = a(pi-x), v = a*pi
    const double u2 = a * a * (pi - x) * (pi - x);
    const double v2 = a * a * pi * pi;
    const double sinh_ratio =
        1.0 + u2 * (1.0 / 6.0 + u2 * (1.0 / 120.0 + u2 / 5040.0));
    const double sech =
        1.0 + v2 * (-0.5 + v2 * (5.0 / 24.0 - v2 * 61.0 / 720.0));
    return (pi - x) * sinh_ratio * sech;
  }
  if (a * pi > 30.0) {
    // sinh/cosh via scaled exponentials so large arguments cannot overflow
    const double num = std::exp(-a * x) * (1.0 - std::exp(-2.0 * a * (pi - x)));
    const double den = a * (1.0 + std::exp(-2.0 * a * pi));
    return num / den;
  }
  return std::sinh(a * (pi - x)) / (a * std::cosh(a * pi));
}

ComplexMatrix mu_hat(Complex lambda, const DelayMeasure& mu) {
  const int n = mu.dimension();
  ComplexMatrix out = ComplexMatrix::Zero(n, n);
  for (const auto& atom : mu.atoms)
    out += std::exp(lambda * atom.theta) * atom.weight.cast<Complex>();
  for (int i = 0; i < mu.density.pieces(); ++i) {
    const Complex coeff = detail::exp_integral(lambda, mu.density.breakpoints[i],
                                               mu.density.breakpoints[i + 1]);
    out += coeff * mu.density.values[i].cast<Complex>();
  }
  return out;
}

ComplexMatrix g_integral(Complex lambda, const SystemSpec& spec) {
  const int n = spec.n();
  ComplexMatrix out = ComplexMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    out(i, i) = detail::expm1_over(-lambda / spec.velocities(i));
  return out;
}

ComplexMatrix loop_gain_delay(Complex lambda, const SystemSpec& spec) {
  if (!spec.delay.has_value())
    throw std::invalid_argument("loop_gain_delay requires a delay measure");
  const int n = spec.n();
  if (spec.delay->empty()) return ComplexMatrix::Zero(n, n);
  return mu_hat(lambda, *spec.delay) * g_integral(lambda, spec);
}

}  // namespace hypstab
