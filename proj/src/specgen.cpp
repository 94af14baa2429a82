#include "hypstab/specgen.hpp"

#include <algorithm>
#include <cmath>

#include "hypstab/analysis.hpp"

namespace hypstab {

namespace {

double pick(std::mt19937_64& rng, const std::vector<double>& choices) {
  std::uniform_int_distribution<std::size_t> dist(0, choices.size() - 1);
  return choices[dist(rng)];
}

int pick_dim(std::mt19937_64& rng, int n_min, int n_max) {
  std::uniform_int_distribution<int> dist(n_min, n_max);
  return dist(rng);
}

Matrix uniform_matrix(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) m(r, c) = dist(rng);
  return m;
}

}  // namespace

Matrix random_coupling_with_radius(std::mt19937_64& rng, int n, double target_radius) {
  // Entries bounded away from zero keep the matrix primitive, so both the
  // radius and the power-iteration cross-check are well behaved.
  Matrix k = uniform_matrix(rng, n, 0.05, 1.0);
  const double r = spectral_radius(k);
  return k * (target_radius / r);
}

SystemSpec random_hyperbolic_spec(std::mt19937_64& rng, int n_min, int n_max,
                                  double radius_min, double radius_max,
                                  const std::vector<double>& velocity_choices) {
  const int n = pick_dim(rng, n_min, n_max);
  std::uniform_real_distribution<double> radius(radius_min, radius_max);
  SystemSpec spec;
  spec.velocities.resize(n);
  for (int i = 0; i < n; ++i) spec.velocities(i) = pick(rng, velocity_choices);
  spec.coupling = random_coupling_with_radius(rng, n, radius(rng));
  return spec;
}

DelayMeasure random_delay_measure(std::mt19937_64& rng, int n, double target_radius,
                                  double theta_max, bool allow_density) {
  std::uniform_int_distribution<int> atom_count(1, 2);
  std::uniform_real_distribution<double> theta_dist(-1.0, theta_max);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  DelayMeasure mu;
  const int atoms = atom_count(rng);
  std::vector<double> thetas;
  while (static_cast<int>(thetas.size()) < atoms) {
    const double theta = theta_dist(rng);
    const bool clashes = std::any_of(thetas.begin(), thetas.end(), [&](double other) {
      return std::abs(other - theta) < 0.05;
    });
    if (!clashes) thetas.push_back(theta);
  }
  std::sort(thetas.begin(), thetas.end());
  for (double theta : thetas)
    mu.atoms.push_back({theta, uniform_matrix(rng, n, 0.05, 1.0)});

  if (allow_density && coin(rng) < 0.5) {
    double a = theta_dist(rng);
    double b = theta_dist(rng);
    if (a > b) std::swap(a, b);
    if (b - a > 0.05) {
      mu.density.breakpoints = {a, b};
      mu.density.values = {uniform_matrix(rng, n, 0.0, 0.5)};
    }
  }

  const double r = spectral_radius(mu.total_mass());
  const double scale = target_radius / r;
  for (auto& atom : mu.atoms) atom.weight *= scale;
  for (auto& v : mu.density.values) v *= scale;
  return mu;
}

SystemSpec random_delay_spec(std::mt19937_64& rng, int n_min, int n_max,
                             double radius_min, double radius_max,
                             const std::vector<double>& velocity_choices) {
  const int n = pick_dim(rng, n_min, n_max);
  std::uniform_real_distribution<double> radius(radius_min, radius_max);
  SystemSpec spec;
  spec.velocities.resize(n);
  for (int i = 0; i < n; ++i) spec.velocities(i) = pick(rng, velocity_choices);
  spec.coupling = Matrix::Zero(n, n);
  spec.delay = random_delay_measure(rng, n, radius(rng));
  return spec;
}

Field random_nonnegative_field(std::mt19937_64& rng, int cells, int n) {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  return Field::sampled(cells, n, [&](double, int) { return dist(rng); });
}

}  // namespace hypstab
