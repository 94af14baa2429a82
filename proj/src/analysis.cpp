#include "hypstab/analysis.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace hypstab {

namespace {

constexpr double kBoundaryZeroTol = 1e-12;

struct PowerEstimate {
  double value = 0.0;
  bool converged = false;
};

// l1-ratio power iteration from the ones vector. Nonnegative matrices keep
// the iterate nonnegative, so the ratio tracks the Perron root; an exactly
// annihilated iterate identifies radius 0.
PowerEstimate power_iteration_radius(const Matrix& m, int max_iter, double tol) {
  const Eigen::Index n = m.rows();
  Vector x = Vector::Ones(n);
  double prev = -1.0;
  int stable = 0;
  for (int it = 0; it < max_iter; ++it) {
    Vector y = m * x;
    const double norm = y.lpNorm<1>();
    if (norm == 0.0) return {0.0, true};
    const double est = norm / x.lpNorm<1>();
    x = y / norm;
    if (std::abs(est - prev) <= tol * std::max(1.0, est)) {
      if (++stable >= 4) return {est, true};
    } else {
      stable = 0;
    }
    prev = est;
  }
  return {prev, false};
}

void cross_check_nonnegative(const Matrix& m, double r) {
  const PowerEstimate pe = power_iteration_radius(m, 10000, 1e-12);
  if (pe.converged && std::abs(pe.value - r) > 1e-8 * std::max(1.0, r))
    throw NonConvergence("power-iteration radius disagrees with the eigensolver");
}

void require_square_finite(Eigen::Index rows, Eigen::Index cols, bool finite) {
  if (rows != cols) throw std::invalid_argument("spectral_radius requires a square matrix");
  if (!finite) throw std::invalid_argument("spectral_radius requires finite entries");
}

bool measure_is_nonnegative(const DelayMeasure& mu) {
  for (const auto& atom : mu.atoms)
    if ((atom.weight.array() < 0.0).any()) return false;
  for (const auto& v : mu.density.values)
    if ((v.array() < 0.0).any()) return false;
  return true;
}

}  // namespace

double spectral_radius(const Matrix& m) {
  require_square_finite(m.rows(), m.cols(), m.allFinite());
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success)
    throw NonConvergence("dense eigensolver failed to converge");
  const double r = solver.eigenvalues().cwiseAbs().maxCoeff();
  if ((m.array() >= 0.0).all()) cross_check_nonnegative(m, r);
  return r;
}

double spectral_radius(const ComplexMatrix& m) {
  require_square_finite(m.rows(), m.cols(), m.allFinite());
  if (m.size() == 0) return 0.0;
  if ((m.imag().array() == 0.0).all()) return spectral_radius(Matrix(m.real()));
  Eigen::ComplexEigenSolver<ComplexMatrix> solver(m, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success)
    throw NonConvergence("dense eigensolver failed to converge");
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

StabilityReport stability_hyperbolic(const SystemSpec& spec, double tol_marginal) {
  if (spec.has_delay())
    throw std::invalid_argument("stability_hyperbolic handles systems without delay");
  if ((spec.coupling.array() < 0.0).any())
    throw PositivityViolation("coupling has a negative entry; the r(K) criterion "
                              "is proved for positive boundary feedback");
  return make_stability_report(spectral_radius(spec.coupling),
                               "coupling-spectral-radius", tol_marginal);
}

StabilityReport stability_delay(const SystemSpec& spec, double tol_marginal) {
  if (!spec.delay.has_value())
    throw std::invalid_argument("stability_delay requires a delay measure");
  if (!measure_is_nonnegative(*spec.delay))
    throw PositivityViolation("delay measure has a negative entry; the r(mu_hat(0)) "
                              "criterion is proved for positive measures");
  const double r = spectral_radius(loop_gain_delay(Complex(0.0, 0.0), spec));
  return make_stability_report(r, "delay-mass-spectral-radius", tol_marginal);
}

bool small_delay_sufficient(const DelayMeasure& mu) {
  if (mu.empty()) return true;
  return spectral_radius(mu.total_variation()) < 1.0;
}

StabilityReport stability_heat_robin(double k, double sigma, double tol_marginal) {
  if (k < 0.0) throw std::invalid_argument("stability_heat_robin requires k >= 0");
  const double r = k * dirichlet_heat(0.0, sigma, 0.0);  // = k * pi
  return make_stability_report(r, "heat-robin-gain", tol_marginal);
}

Complex characteristic_value(Complex lambda, const SystemSpec& spec) {
  const int n = spec.n();
  const ComplexMatrix loop = spec.has_delay() ? loop_gain_delay(lambda, spec)
                                              : transfer_hyperbolic(lambda, spec);
  return (ComplexMatrix::Identity(n, n) - loop).determinant();
}

namespace {

struct ContourSample {
  Complex z;
  Complex f;
};

ContourSample eval_sample(Complex z, const SystemSpec& spec) {
  const Complex f = characteristic_value(z, spec);
  if (std::abs(f) < kBoundaryZeroTol)
    throw RootOnBoundary("characteristic value vanishes on the search contour");
  return {z, f};
}

// Phase increment along one contour segment, subdividing until each piece
// stays below pi/2 so the branch of the argument is unambiguous.
double segment_phase(const ContourSample& a, const ContourSample& b,
                     const SystemSpec& spec, int depth, long& budget) {
  const double dphi = std::arg(b.f / a.f);
  if (std::abs(dphi) < std::numbers::pi / 2.0) return dphi;
  if (depth >= 48 || --budget <= 0)
    throw NonConvergence("contour refinement cap reached in count_roots");
  const ContourSample mid = eval_sample(0.5 * (a.z + b.z), spec);
  return segment_phase(a, mid, spec, depth + 1, budget) +
         segment_phase(mid, b, spec, depth + 1, budget);
}

}  // namespace

int count_roots(const RootSearchRegion& region, const SystemSpec& spec) {
  if (!(region.re_min < region.re_max) || !(region.im_min < region.im_max))
    throw std::invalid_argument("count_roots requires a nondegenerate rectangle");
  if (region.samples_per_side < 16)
    throw std::invalid_argument("count_roots requires samples_per_side >= 16");

  const Complex corners[4] = {{region.re_min, region.im_min},
                              {region.re_max, region.im_min},
                              {region.re_max, region.im_max},
                              {region.re_min, region.im_max}};
  std::vector<ContourSample> samples;
  samples.reserve(static_cast<std::size_t>(region.samples_per_side) * 4 + 1);
  for (int side = 0; side < 4; ++side) {
    const Complex from = corners[side];
    const Complex to = corners[(side + 1) % 4];
    for (int k = 0; k < region.samples_per_side; ++k) {
      const double s = static_cast<double>(k) / region.samples_per_side;
      samples.push_back(eval_sample(from + s * (to - from), spec));
    }
  }
  samples.push_back(samples.front());

  long budget = 200000;
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < samples.size(); ++k)
    total += segment_phase(samples[k], samples[k + 1], spec, 0, budget);

  const double winding = total / (2.0 * std::numbers::pi);
  const long rounded = std::lround(winding);
  if (std::abs(winding - static_cast<double>(rounded)) > 0.25)
    throw NonConvergence("winding number did not settle to an integer");
  if (rounded < 0)
    throw NonConvergence("negative winding number for an entire function");
  return static_cast<int>(rounded);
}

namespace {

// count_roots with retries: a root sitting exactly on the default strip
// boundary (the scalar families have Im = 2 pi k d) is dodged by slightly
// enlarging the strip and nudging the left edge.
int robust_count(const SystemSpec& spec, double re_lo, double re_hi, double im_cap,
                 int samples_per_side, double nudge) {
  for (int attempt = 0;; ++attempt) {
    try {
      RootSearchRegion region{re_lo, re_hi, -im_cap, im_cap, samples_per_side};
      return count_roots(region, spec);
    } catch (const RootOnBoundary&) {
      if (attempt >= 4) throw;
    } catch (const NonConvergence&) {
      if (attempt >= 4) throw;
    }
    im_cap *= 1.0137;
    re_lo -= nudge;
  }
}

}  // namespace

std::optional<double> spectral_abscissa_bound(const SystemSpec& spec, double re_max,
                                              const AbscissaOptions& options) {
  constexpr double pi = std::numbers::pi;
  const double im_cap =
      options.im_cap > 0.0 ? options.im_cap : 4.0 * pi * spec.max_velocity();
  const double nudge = 0.0917 * options.tol;
  auto count_right_of = [&](double c) {
    if (c >= re_max - 1e-13) return 0;  // degenerate box holds no roots
    return robust_count(spec, c, re_max, im_cap, options.samples_per_side, nudge);
  };

  // Expand leftward until the box catches a root.
  double span = 1.0;
  double lo = re_max - span;
  double hi = re_max;
  while (count_right_of(lo) == 0) {
    hi = lo;
    span *= 2.0;
    if (span > options.max_span) return std::nullopt;
    lo = re_max - span;
  }

  // Bisection: roots exist right of lo, none right of hi.
  while (hi - lo > options.tol) {
    const double mid = 0.5 * (lo + hi);
    if (count_right_of(mid) >= 1) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

Matrix solve_refined(const Matrix& m, const Matrix& rhs) {
  Eigen::PartialPivLU<Matrix> lu(m);
  Matrix x = lu.solve(rhs);
  x.noalias() += lu.solve(rhs - m * x);
  return x;
}

double induced_inf_norm(const Matrix& m) {
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace

ResolventCheck verify_resolvent_identity(const SystemSpec& spec, double lambda,
                                         int m_cells) {
  if (spec.has_delay())
    throw std::invalid_argument("verify_resolvent_identity handles systems without delay");
  if (m_cells < 4 || m_cells > 512)
    throw std::invalid_argument("verify_resolvent_identity requires 4 <= m_cells <= 512");

  const int n = spec.n();
  const int N = m_cells * n;
  const double dx = 1.0 / m_cells;
  auto idx = [&](int comp, int cell) { return comp * m_cells + cell; };

  for (int i = 0; i < n; ++i)
    if (std::abs(lambda + spec.velocities(i) / dx) < 1e-8)
      throw SingularResolvent("lambda coincides with a discrete open-loop eigenvalue");

  // Open-loop upwind generator with zero inflow: block lower bidiagonal.
  Matrix a = Matrix::Zero(N, N);
  for (int i = 0; i < n; ++i) {
    const double c = spec.velocities(i) / dx;
    for (int j = 0; j < m_cells; ++j) {
      a(idx(i, j), idx(i, j)) = -c;
      if (j > 0) a(idx(i, j), idx(i, j - 1)) = c;
    }
  }

  // Exact discrete boundary lift: the kernel recurrence of (lambda - A_m,h)
  // gives geometric columns gamma_i^j, the discrete analogue of e^{-lambda x/d_i}.
  Matrix dirichlet = Matrix::Zero(N, n);
  for (int i = 0; i < n; ++i) {
    const double c = spec.velocities(i) / dx;
    const double gamma = c / (lambda + c);
    double g = gamma;
    for (int j = 0; j < m_cells; ++j) {
      dirichlet(idx(i, j), i) = g;
      g *= gamma;
    }
  }

  // Boundary read-out: K times the last cell of each component.
  Matrix readout = Matrix::Zero(n, N);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      readout(i, idx(k, m_cells - 1)) = spec.coupling(i, k);

  const Matrix loop = readout * dirichlet;
  ResolventCheck check;
  check.loop_radius = spectral_radius(ComplexMatrix(loop.cast<Complex>()));
  if (check.loop_radius >= 1.0)
    throw std::invalid_argument("discrete loop radius must be < 1 at this lambda");
  {
    Eigen::EigenSolver<Matrix> es(loop, false);
    if ((es.eigenvalues().array() - Complex(1.0, 0.0)).abs().minCoeff() < 1e-8)
      throw SingularResolvent("lambda coincides with a discrete closed-loop eigenvalue");
  }

  Matrix closed = a;
  for (int i = 0; i < n; ++i) {
    const double c = spec.velocities(i) / dx;
    for (int k = 0; k < n; ++k)
      closed(idx(i, 0), idx(k, m_cells - 1)) += c * spec.coupling(i, k);
  }

  const Matrix identity = Matrix::Identity(N, N);
  const Matrix r_open = solve_refined(lambda * identity - a, identity);
  const Matrix r_closed = solve_refined(lambda * identity - closed, identity);
  const Matrix factored = solve_refined(identity - dirichlet * readout, r_open);

  check.max_abs_residual = induced_inf_norm(r_closed - factored);
  check.entrywise_order_ok = ((r_closed - r_open).minCoeff() >= -1e-12) &&
                             (r_open.minCoeff() >= -1e-12);
  check.positivity_ok = (r_open.minCoeff() >= -1e-12) && (r_closed.minCoeff() >= -1e-12);

  // Neumann-series route for the small loop inverse.
  const Matrix loop_eye = Matrix::Identity(n, n);
  Matrix partial = loop_eye;
  Matrix power = loop_eye;
  for (int j = 1; j <= 50; ++j) {
    power = power * loop;
    partial += power;
  }
  const Matrix direct = solve_refined(loop_eye - loop, loop_eye);
  check.neumann_residual = induced_inf_norm(direct - partial);
  return check;
}

DecayEstimate fit_decay_rate(const std::vector<std::pair<double, double>>& norms,
                             double window_fraction) {
  if (!(window_fraction > 0.0 && window_fraction < 1.0))
    throw std::invalid_argument("window_fraction must lie in (0, 1)");
  const std::size_t total = norms.size();
  const auto window =
      std::min(total, static_cast<std::size_t>(
                          std::ceil(window_fraction * static_cast<double>(total))));
  if (window == 0) throw InsufficientData("no samples in the fitting window");
  const std::size_t start = total - window;

  constexpr double kUnderflow = 1e-300;
  DecayEstimate estimate;
  std::vector<double> ts, logs;
  ts.reserve(window);
  logs.reserve(window);
  for (std::size_t k = start; k < total; ++k) {
    const auto& [t, norm] = norms[k];
    if (norm < 0.0 || !std::isfinite(norm))
      throw std::invalid_argument("norms must be finite and nonnegative");
    if (norm <= kUnderflow) {
      ++estimate.excluded_underflow;
      continue;
    }
    ts.push_back(t);
    logs.push_back(std::log(norm));
  }
  if (ts.empty()) {
    estimate.all_zero = true;
    estimate.fit.t_start = norms[start].first;
    estimate.fit.t_end = norms.back().first;
    return estimate;
  }
  if (ts.size() < 10)
    throw InsufficientData("fewer than 10 usable samples in the fitting window");

  const auto count = static_cast<double>(ts.size());
  double t_mean = 0.0, y_mean = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    t_mean += ts[k];
    y_mean += logs[k];
  }
  t_mean /= count;
  y_mean /= count;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double dt = ts[k] - t_mean;
    const double dy = logs[k] - y_mean;
    stt += dt * dt;
    sty += dt * dy;
    syy += dy * dy;
  }
  if (stt <= 0.0) throw InsufficientData("degenerate time window");

  estimate.fit.rate = sty / stt;
  const double ss_res = std::max(0.0, syy - sty * sty / stt);
  estimate.fit.r_squared = syy <= 1e-30 ? 1.0 : 1.0 - ss_res / syy;
  estimate.fit.t_start = ts.front();
  estimate.fit.t_end = ts.back();
  return estimate;
}

}  // namespace hypstab
