#pragma once

#include "hypstab/core.hpp"

namespace hypstab {

/// diag(e^{-lambda x / d_i}): boundary-to-state lift of the transport
/// system evaluated at depth x in [0,1].
ComplexMatrix dirichlet_E(Complex lambda, double x, const SystemSpec& spec);

/// K diag(e^{-lambda/d_i}): the boundary-loop gain of the coupled system.
/// Uses the coupling only; a delay measure on the system is not consulted.
ComplexMatrix transfer_hyperbolic(Complex lambda, const SystemSpec& spec);

/// e^{(lambda/rho)(x-1)}: scalar lift for leftward transport on [0,1] with
/// the boundary condition imposed at x = 1.
Complex dirichlet_transport(Complex lambda, double rho, double x);

/// sinh(a(pi-x)) / (a cosh(a pi)) with a = sqrt(lambda/sigma), and the
/// (pi - x) limit at lambda = 0. Near the seam the ratio is evaluated by
/// series to avoid 0/0 cancellation; very large a uses scaled exponentials.
double dirichlet_heat(double lambda, double sigma, double x);

/// Laplace transform of the measure: sum_j e^{lambda theta_j} W_j plus the
/// closed-form integral of e^{lambda theta} against each constant density
/// piece. Returns a 0x0 matrix for the empty measure.
ComplexMatrix mu_hat(Complex lambda, const DelayMeasure& mu);

/// diag( int_0^1 e^{-lambda x/d_i} dx ) = diag( (d_i/lambda)(1-e^{-lambda/d_i}) ),
/// identity at lambda = 0.
ComplexMatrix g_integral(Complex lambda, const SystemSpec& spec);

/// mu_hat(lambda) * g_integral(lambda): the delay boundary-loop gain whose
/// value at 0 decides stability.
ComplexMatrix loop_gain_delay(Complex lambda, const SystemSpec& spec);

namespace detail {

/// (e^z - 1)/z, series near 0 so the lambda -> 0 limit is exact.
Complex expm1_over(Complex z);

/// int_a^b e^{lambda theta} d theta, stable for small |lambda|.
Complex exp_integral(Complex lambda, double a, double b);

}  // namespace detail

}  // namespace hypstab
