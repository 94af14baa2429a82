#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "hypstab/core.hpp"
#include "hypstab/operators.hpp"

namespace hypstab {

/// Rectangle in the complex plane searched for characteristic roots.
struct RootSearchRegion {
  double re_min = 0.0;
  double re_max = 0.0;
  double im_min = 0.0;
  double im_max = 0.0;
  int samples_per_side = 64;  // >= 16
};

struct DecayFit {
  double rate = 0.0;  // fitted omega, 1/time
  double r_squared = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;
};

/// Result of fit_decay_rate. all_zero marks a trajectory that is exactly
/// annihilated over the fitting window (the nilpotent case, rate -inf in
/// spirit); fit is meaningful only when all_zero is false.
struct DecayEstimate {
  bool all_zero = false;
  DecayFit fit;
  int excluded_underflow = 0;
};

/// max |eigenvalue|, via a dense eigensolver. Entrywise-nonnegative real
/// inputs are cross-checked against a power iteration on the matrix itself;
/// a converged power iteration that disagrees beyond 1e-8 raises
/// NonConvergence.
double spectral_radius(const Matrix& m);
double spectral_radius(const ComplexMatrix& m);

/// Verdict from r(K) for the boundary-coupled system without delay.
StabilityReport stability_hyperbolic(const SystemSpec& spec,
                                     double tol_marginal = kMarginalTolDefault);

/// Verdict from r(mu_hat(0) G(0)) = r(mu_hat(0)) for delay boundary data.
StabilityReport stability_delay(const SystemSpec& spec,
                                double tol_marginal = kMarginalTolDefault);

/// Sufficient test only: r(|mu|([-1,0])) < 1 certifies stability, false
/// certifies nothing.
bool small_delay_sufficient(const DelayMeasure& mu);

/// Verdict for the heat system with Robin feedback at x=0: loop gain k*pi.
StabilityReport stability_heat_robin(double k, double sigma,
                                     double tol_marginal = kMarginalTolDefault);

/// det(I - H(lambda)) without delay, det(I - mu_hat(lambda) G(lambda))
/// with. Zeros are the closed-loop eigenvalues.
Complex characteristic_value(Complex lambda, const SystemSpec& spec);

/// Winding number of characteristic_value along the positively-oriented
/// rectangle boundary, with adaptive refinement until every phase increment
/// is below pi/2.
int count_roots(const RootSearchRegion& region, const SystemSpec& spec);

struct AbscissaOptions {
  double im_cap = 0.0;   // <= 0 selects the default 4*pi*max(d_i)
  double tol = 1e-4;     // bisection width at exit
  double max_span = 64;  // widest searched interval left of re_max
  int samples_per_side = 64;
};

/// sup Re of characteristic roots located by bisection on vertical lines,
/// searching the half-strip |Im| <= im_cap left of re_max. nullopt when no
/// root lies in the searched box.
std::optional<double> spectral_abscissa_bound(const SystemSpec& spec, double re_max,
                                              const AbscissaOptions& options = {});

struct ResolventCheck {
  double max_abs_residual = 0.0;
  bool entrywise_order_ok = false;
  bool positivity_ok = false;
  double neumann_residual = 0.0;
  double loop_radius = 0.0;
};

/// Builds the upwind-discretized open loop, the exact discrete boundary
/// lift and read-out, and checks the closed-loop resolvent factorization
/// R(lambda, A_cl) = (I - D_lambda M)^{-1} R(lambda, A) together with the
/// entrywise order R(lambda, A_cl) >= R(lambda, A) >= 0 and a 51-term
/// Neumann-series cross-check of the small loop inverse.
ResolventCheck verify_resolvent_identity(const SystemSpec& spec, double lambda,
                                         int m_cells);

/// Least-squares slope of log(norm) vs t over the trailing window_fraction
/// of samples. Underflowed samples are excluded and counted; a window that
/// is exactly zero yields the all_zero verdict.
DecayEstimate fit_decay_rate(const std::vector<std::pair<double, double>>& norms,
                             double window_fraction);

}  // namespace hypstab
