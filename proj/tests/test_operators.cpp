#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hypstab/operators.hpp"
#include "hypstab/specgen.hpp"

using namespace hypstab;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST_CASE("dirichlet_E closed forms") {
  SystemSpec spec;
  spec.velocities = Vector(2);
  spec.velocities << 1.0, 2.0;
  spec.coupling = Matrix::Zero(2, 2);

  const ComplexMatrix at_zero = dirichlet_E(Complex(0.0, 0.0), 0.7, spec);
  CHECK((at_zero - ComplexMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);

  const SystemSpec scalar = scalar_transport_spec(1.0, 0.0);
  const ComplexMatrix e1 = dirichlet_E(Complex(1.0, 0.0), 1.0, scalar);
  CHECK(std::abs(e1(0, 0) - std::exp(-1.0)) < 1e-15);

  const ComplexMatrix e2 = dirichlet_E(Complex(2.0, 0.0), 1.0, spec);
  CHECK(std::abs(e2(0, 0) - std::exp(-2.0)) < 1e-15);
  CHECK(std::abs(e2(1, 1) - std::exp(-1.0)) < 1e-15);
  CHECK(std::abs(e2(0, 1)) == 0.0);
}

TEST_CASE("transfer_hyperbolic closed forms") {
  SystemSpec spec = scalar_transport_spec(1.0, 0.25);

  // H(0) = K exactly
  const ComplexMatrix h0 = transfer_hyperbolic(Complex(0.0, 0.0), spec);
  CHECK(h0(0, 0) == Complex(0.25, 0.0));

  spec.coupling(0, 0) = 0.0;
  for (double lambda : {-1.0, 0.0, 3.0})
    CHECK(transfer_hyperbolic(Complex(lambda, 0.0), spec).cwiseAbs().maxCoeff() == 0.0);

  spec.coupling(0, 0) = 0.8;
  for (double lambda : {-0.5, 0.3, 2.0}) {
    const ComplexMatrix h = transfer_hyperbolic(Complex(lambda, 0.0), spec);
    CHECK(std::abs(h(0, 0) - 0.8 * std::exp(-lambda)) < 1e-14);
  }
}

TEST_CASE("dirichlet_transport closed forms") {
  CHECK(dirichlet_transport(Complex(0.0, 0.0), 2.0, 0.3) == Complex(1.0, 0.0));
  CHECK(dirichlet_transport(Complex(5.0, 1.0), 2.0, 1.0) == Complex(1.0, 0.0));
  CHECK(std::abs(dirichlet_transport(Complex(1.0, 0.0), 1.0, 0.0) -
                 Complex(std::exp(-1.0), 0.0)) < 1e-15);
}

TEST_CASE("dirichlet_heat branches") {
  CHECK(dirichlet_heat(0.0, 1.0, 0.0) == pi);
  CHECK(dirichlet_heat(0.0, 1.0, pi) == 0.0);
  // continuity at the lambda = 0 seam
  CHECK(std::abs(dirichlet_heat(1e-12, 1.0, 0.0) - pi) < 1e-6);
  CHECK(std::abs(dirichlet_heat(1e-10, 2.0, 1.0) - (pi - 1.0)) < 1e-8);
  // series and direct branches agree near the switchover
  const double a_seam = 1e-4 / pi;
  const double lambda_seam = a_seam * a_seam;  // sigma = 1
  CHECK(dirichlet_heat(lambda_seam * 0.99, 1.0, 1.0) ==
        doctest::Approx(dirichlet_heat(lambda_seam * 1.01, 1.0, 1.0)).epsilon(1e-10));
  // large-argument branch agrees with the direct formula where both work
  const double a = 35.0 / pi;  // a*pi = 35 selects the scaled-exponential branch
  const double lambda_big = a * a;
  const double direct = std::sinh(a * (pi - 0.5)) / (a * std::cosh(a * pi));
  CHECK(dirichlet_heat(lambda_big, 1.0, 0.5) ==
        doctest::Approx(direct).epsilon(1e-13));
  // far beyond the overflow point of cosh the value underflows cleanly
  CHECK(std::isfinite(dirichlet_heat(1e7, 1.0, 0.5)));
}

TEST_CASE("mu_hat closed forms") {
  DelayMeasure mu;
  mu.atoms.push_back({-1.0, Matrix::Constant(1, 1, 0.5)});
  mu.atoms.push_back({-0.5, Matrix::Constant(1, 1, 0.25)});
  mu.density.breakpoints = {-0.75, -0.25};
  mu.density.values = {Matrix::Constant(1, 1, 2.0)};

  // lambda = 0: the total mass
  const ComplexMatrix at_zero = mu_hat(Complex(0.0, 0.0), mu);
  CHECK(std::abs(at_zero(0, 0) - Complex(0.5 + 0.25 + 2.0 * 0.5, 0.0)) < 1e-14);

  // single atom at -1: e^{-lambda} L
  DelayMeasure atom;
  atom.atoms.push_back({-1.0, Matrix::Constant(1, 1, 0.5)});
  for (double lambda : {-1.0, 0.5, 2.0})
    CHECK(std::abs(mu_hat(Complex(lambda, 0.0), atom)(0, 0) -
                   0.5 * std::exp(-lambda)) < 1e-14);

  const DelayMeasure empty;
  CHECK(mu_hat(Complex(1.0, 0.0), empty).size() == 0);

  // density piece against quadrature: int_a^b e^{lambda t} dt
  const Complex lambda(0.7, 0.3);
  const Complex direct = (std::exp(lambda * -0.25) - std::exp(lambda * -0.75)) / lambda;
  DelayMeasure dens;
  dens.density.breakpoints = {-0.75, -0.25};
  dens.density.values = {Matrix::Constant(1, 1, 1.0)};
  CHECK(std::abs(mu_hat(lambda, dens)(0, 0) - direct) < 1e-14);
}

TEST_CASE("g_integral closed forms") {
  const SystemSpec scalar = scalar_transport_spec(1.0, 0.0);
  const ComplexMatrix at_zero = g_integral(Complex(0.0, 0.0), scalar);
  CHECK(at_zero(0, 0) == Complex(1.0, 0.0));

  const ComplexMatrix at_one = g_integral(Complex(1.0, 0.0), scalar);
  CHECK(std::abs(at_one(0, 0) - (1.0 - std::exp(-1.0))) < 1e-15);

  const ComplexMatrix near_zero = g_integral(Complex(1e-10, 0.0), scalar);
  CHECK(std::abs(near_zero(0, 0) - 1.0) < 1e-8);
}

TEST_CASE("loop_gain_delay closed forms") {
  SystemSpec spec = scalar_transport_spec(1.0, 0.0);
  DelayMeasure mu;
  mu.atoms.push_back({-1.0, Matrix::Constant(1, 1, 0.5)});
  spec.delay = mu;

  // G(0) = I so the loop at 0 is the total mass
  CHECK(std::abs(loop_gain_delay(Complex(0.0, 0.0), spec)(0, 0) - Complex(0.5, 0.0)) <
        1e-14);

  SystemSpec empty = scalar_transport_spec(1.0, 0.0);
  empty.delay = DelayMeasure{};
  for (double lambda : {-1.0, 0.0, 2.0})
    CHECK(loop_gain_delay(Complex(lambda, 0.0), empty).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("transfer entries decrease along the positive real axis") {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 10; ++rep) {
    const SystemSpec spec = random_hyperbolic_spec(rng, 1, 3, 0.2, 1.5);
    std::uniform_real_distribution<double> dist(0.01, 20.0);
    double l1 = dist(rng), l2 = dist(rng);
    if (l1 > l2) std::swap(l1, l2);
    const Matrix h1 = transfer_hyperbolic(Complex(l1, 0.0), spec).real();
    const Matrix h2 = transfer_hyperbolic(Complex(l2, 0.0), spec).real();
    CHECK(((h1 - h2).array() >= -1e-14).all());
  }
}

TEST_CASE("loops vanish at the far evaluation point") {
  std::mt19937_64 rng(22);
  for (int rep = 0; rep < 5; ++rep) {
    const SystemSpec spec = random_hyperbolic_spec(rng, 1, 3, 0.2, 1.5);
    const double lambda =
        50.0 * spec.max_velocity() * (1.0 + std::log(1.0 + spec.coupling.norm()));
    CHECK(transfer_hyperbolic(Complex(lambda, 0.0), spec).norm() < 1e-6);

    SystemSpec dspec;
    dspec.velocities = spec.velocities;
    dspec.coupling = Matrix::Zero(spec.n(), spec.n());
    dspec.delay = random_delay_measure(rng, spec.n(), 1.0, -0.25);
    CHECK(loop_gain_delay(Complex(50.0 * dspec.max_velocity(), 0.0), dspec).norm() < 1e-6);
  }
}

TEST_CASE("operators stay nonnegative for real lambda >= 0") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> lam(0.0, 40.0);
  for (int rep = 0; rep < 10; ++rep) {
    const SystemSpec spec = random_hyperbolic_spec(rng, 1, 3, 0.2, 1.5);
    const SystemSpec dspec = random_delay_spec(rng, 1, 2, 0.2, 1.5);
    const Complex lambda(lam(rng), 0.0);
    for (const ComplexMatrix& m :
         {dirichlet_E(lambda, 0.3, spec), transfer_hyperbolic(lambda, spec),
          mu_hat(lambda, *dspec.delay), g_integral(lambda, spec),
          loop_gain_delay(lambda, dspec)}) {
      CHECK(m.imag().cwiseAbs().maxCoeff() <= 1e-12);
      CHECK(m.real().minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("mu_hat and g_integral are continuous at lambda = 0") {
  std::mt19937_64 rng(24);
  for (int rep = 0; rep < 5; ++rep) {
    const SystemSpec dspec = random_delay_spec(rng, 1, 2, 0.2, 1.2);
    for (const Complex small : {Complex(1e-10, 0.0), Complex(0.0, 1e-10),
                                Complex(-7e-11, 7e-11)}) {
      CHECK((mu_hat(small, *dspec.delay) - mu_hat(Complex(0, 0), *dspec.delay))
                .cwiseAbs()
                .maxCoeff() < 1e-8);
      CHECK((g_integral(small, dspec) - g_integral(Complex(0, 0), dspec))
                .cwiseAbs()
                .maxCoeff() < 1e-8);
    }
  }
}
