#pragma once

#include <random>
#include <vector>

#include "hypstab/core.hpp"

namespace hypstab {

/// Seeded generators for the randomized verification batteries. All draws
/// come from the supplied engine, so identical seeds give identical specs.

Matrix random_coupling_with_radius(std::mt19937_64& rng, int n, double target_radius);

SystemSpec random_hyperbolic_spec(std::mt19937_64& rng, int n_min, int n_max,
                                  double radius_min, double radius_max,
                                  const std::vector<double>& velocity_choices = {1.0, 2.0,
                                                                                 4.0});

/// Atoms (and optionally one density piece) supported on [-1, theta_max],
/// entrywise nonnegative, scaled so r(total mass) equals target_radius.
DelayMeasure random_delay_measure(std::mt19937_64& rng, int n, double target_radius,
                                  double theta_max = -0.1, bool allow_density = true);

SystemSpec random_delay_spec(std::mt19937_64& rng, int n_min, int n_max,
                             double radius_min, double radius_max,
                             const std::vector<double>& velocity_choices = {1.0, 2.0});

/// Piecewise-linear field with node values uniform in [0, 1].
Field random_nonnegative_field(std::mt19937_64& rng, int cells, int n);

}  // namespace hypstab
