#include <doctest.h>

#include <cmath>
#include <random>

#include "hypstab/solver_moc.hpp"
#include "hypstab/specgen.hpp"

using namespace hypstab;

namespace {

SystemSpec atom_delay_spec(double weight) {
  SystemSpec spec = scalar_transport_spec(1.0, 0.0);
  DelayMeasure mu;
  mu.atoms.push_back({-1.0, Matrix::Constant(1, 1, weight)});
  spec.delay = mu;
  return spec;
}

}  // namespace

TEST_CASE("solve_moc flushes the open loop to exact zeros") {
  std::mt19937_64 rng(51);
  SystemSpec spec;
  spec.velocities = Vector(2);
  spec.velocities << 1.0, 2.0;
  spec.coupling = Matrix::Zero(2, 2);
  const Field y0 = random_nonnegative_field(rng, 50, 2);
  const MocResult result = solve_moc(spec, y0, 2.0, 0.05, 1);
  for (std::size_t k = 0; k < result.times.size(); ++k) {
    if (result.times[k] < 1.0 - 1e-12) continue;
    CHECK(result.fields[k].linf_norm() == 0.0);
  }
}

TEST_CASE("solve_moc keeps a constant profile fixed under unit feedback") {
  const SystemSpec spec = scalar_transport_spec(1.0, 1.0);
  const Field y0 = Field::constant(40, Vector::Ones(1));
  const MocResult result = solve_moc(spec, y0, 3.0, 0.05, 10);
  for (const Field& f : result.fields) {
    CHECK((f.values().array() - 1.0).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("solve_moc reproduces the hand-unrolled boundary recursion") {
  // grid-aligned dt: u(t_j) = 0.5^(ceil(j/m)) for j >= 1, u(0) = 0.5
  const int m = 20;
  const SystemSpec spec = scalar_transport_spec(1.0, 0.5);
  const Field y0 = Field::constant(m, Vector::Ones(1));
  const double dt = 1.0 / m;
  const MocResult result = solve_moc(spec, y0, 3.0, dt, m);
  REQUIRE(result.trace.values.size() == static_cast<std::size_t>(3 * m + 1));
  CHECK(result.trace.values[0](0) == 0.5);
  for (int j = 1; j <= 3 * m; ++j) {
    const int generation = (j + m - 1) / m;  // ceil(j/m)
    const double expected = std::pow(0.5, generation);
    CHECK(result.trace.values[static_cast<std::size_t>(j)](0) ==
          doctest::Approx(expected).epsilon(1e-14));
  }
  // y(1, t) rides the trace one transit behind: y(1, 2) = u(1) = 0.5
  REQUIRE(result.times.size() == 4);  // stride m captures t = 0, 1, 2, 3
  const Field& at_two = result.fields[2];
  CHECK(at_two.values()(m, 0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("solve_moc preserves positivity") {
  std::mt19937_64 rng(52);
  for (int rep = 0; rep < 5; ++rep) {
    const SystemSpec spec = random_hyperbolic_spec(rng, 1, 3, 0.3, 1.5);
    const Field y0 = random_nonnegative_field(rng, 60, spec.n());
    const MocResult result = solve_moc(spec, y0, 3.0, 0.05, 5);
    for (const Field& f : result.fields) CHECK(f.values().minCoeff() >= -1e-12);
    for (const Vector& u : result.trace.values) CHECK(u.minCoeff() >= -1e-12);
  }
}

TEST_CASE("solve_moc is linear in the initial data") {
  std::mt19937_64 rng(53);
  const SystemSpec spec = random_hyperbolic_spec(rng, 2, 2, 0.4, 1.2);
  const Field a = random_nonnegative_field(rng, 50, 2);
  const Field b = random_nonnegative_field(rng, 50, 2);
  Field combo = a;
  combo.values() = 2.0 * a.values() + 3.0 * b.values();
  const auto ra = solve_moc(spec, a, 2.0, 0.02, 1 << 30);
  const auto rb = solve_moc(spec, b, 2.0, 0.02, 1 << 30);
  const auto rc = solve_moc(spec, combo, 2.0, 0.02, 1 << 30);
  const Matrix expect = 2.0 * ra.fields.back().values() + 3.0 * rb.fields.back().values();
  CHECK((rc.fields.back().values() - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("solve_moc checks its preconditions") {
  const SystemSpec spec = scalar_transport_spec(4.0, 0.5);
  const Field y0 = Field::constant(10, Vector::Ones(1));
  CHECK_THROWS_AS((void)solve_moc(spec, y0, 1.0, 0.1, 1), CflViolation);
  const SystemSpec slow = scalar_transport_spec(1.0, 0.5);
  CHECK_THROWS_AS((void)solve_moc(slow, y0, 1.05, 0.1, 1), std::invalid_argument);
}

TEST_CASE("solve_moc restart matches the direct run on aligned grids") {
  const SystemSpec spec = scalar_transport_spec(1.0, 0.5);
  const Field y0 = Field::sampled(64, 1, [](double x, int) { return 0.5 + 0.5 * x; });
  const double dt = 1.0 / 64.0;
  const auto direct = solve_moc(spec, y0, 3.0, dt, 1 << 30);
  const auto first = solve_moc(spec, y0, 1.5, dt, 1 << 30);
  const auto second = solve_moc(spec, first.fields.back(), 1.5, dt, 1 << 30);
  CHECK((second.fields.back().values() - direct.fields.back().values())
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("solve_moc_delay with an empty measure matches the open loop") {
  SystemSpec spec = scalar_transport_spec(1.0, 0.0);
  spec.delay = DelayMeasure{};
  const Field y0 = Field::constant(30, Vector::Ones(1));
  const HistoryBuffer phi = HistoryBuffer::constant(0.05, y0);
  const MocResult result = solve_moc_delay(spec, y0, phi, 2.0, 0.05, 1);
  for (std::size_t k = 0; k < result.times.size(); ++k) {
    if (result.times[k] < 1.0 - 1e-12) continue;
    CHECK(result.fields[k].linf_norm() == 0.0);
  }
  for (const Vector& u : result.trace.values) CHECK(u.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("solve_moc_delay boundary value follows the point-delay recursion") {
  // b(t) = l * Xbar(t-1); constant unit history gives b = l on (0, 1]
  const double l = 0.6;
  const SystemSpec spec = atom_delay_spec(l);
  const Field y0 = Field::constant(50, Vector::Ones(1));
  const HistoryBuffer phi = HistoryBuffer::constant(0.02, y0);
  const MocResult result = solve_moc_delay(spec, y0, phi, 2.0, 0.02, 1);
  for (int j = 0; j <= 50; ++j) {
    CHECK(result.trace.values[static_cast<std::size_t>(j)](0) ==
          doctest::Approx(l).epsilon(1e-12));
  }
}

TEST_CASE("solve_moc_delay decay follows the mass radius") {
  for (double l : {0.5, 1.5}) {
    const SystemSpec spec = atom_delay_spec(l);
    const Field y0 = Field::constant(60, Vector::Ones(1));
    const HistoryBuffer phi = HistoryBuffer::constant(0.02, y0);
    const MocResult result = solve_moc_delay(spec, y0, phi, 12.0, 0.02, 10);
    const double first = result.fields.front().l2_norm();
    const double last = result.fields.back().l2_norm();
    if (l < 1.0) CHECK(last < 0.5 * first);
    else CHECK(last > 2.0 * first);
  }
}

TEST_CASE("solve_moc_delay is scaling equivariant") {
  const SystemSpec spec = atom_delay_spec(0.8);
  const Field y0 = Field::sampled(40, 1, [](double x, int) { return 0.2 + x * (1 - x); });
  Field doubled = y0;
  doubled.values() *= 2.0;
  const HistoryBuffer phi = HistoryBuffer::constant(0.025, y0);
  const HistoryBuffer phi2 = HistoryBuffer::constant(0.025, doubled);
  const auto base = solve_moc_delay(spec, y0, phi, 3.0, 0.025, 1 << 30);
  const auto twice = solve_moc_delay(spec, doubled, phi2, 3.0, 0.025, 1 << 30);
  CHECK((twice.fields.back().values() - 2.0 * base.fields.back().values())
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("solve_moc_delay records a compatibility warning") {
  const SystemSpec spec = atom_delay_spec(0.5);
  const Field y0 = Field::constant(30, Vector::Ones(1));
  const Field mismatched = Field::constant(30, Vector::Constant(1, 2.0));
  const HistoryBuffer phi = HistoryBuffer::constant(0.05, mismatched);
  const MocResult result = solve_moc_delay(spec, y0, phi, 1.0, 0.05, 10);
  REQUIRE_FALSE(result.warnings.empty());
  CHECK(result.warnings.front().find("CompatibilityWarning") != std::string::npos);
}

TEST_CASE("solve_moc_delay restart continues the history") {
  const SystemSpec spec = atom_delay_spec(0.6);
  const double dt = 1.0 / 50.0;
  const Field y0 = Field::constant(50, Vector::Ones(1));
  const HistoryBuffer phi = HistoryBuffer::constant(dt, y0);
  const auto direct = solve_moc_delay(spec, y0, phi, 3.0, dt, 1 << 30);
  const auto first = solve_moc_delay(spec, y0, phi, 1.5, dt, 1 << 30);
  REQUIRE(first.history.has_value());
  std::vector<Field> snaps;
  for (std::size_t i = 0; i < first.history->size(); ++i)
    snaps.push_back(first.history->snapshot(i));
  const HistoryBuffer rebased(dt, 0.0, std::move(snaps));
  const auto second = solve_moc_delay(spec, first.fields.back(), rebased, 1.5, dt, 1 << 30);
  CHECK((second.fields.back().values() - direct.fields.back().values())
            .cwiseAbs()
            .maxCoeff() < 1e-9);
}

TEST_CASE("solve_moc_delay integrates a density piece exactly at startup") {
  // piece [-1, -0.5] of value 1 against unit history: b(t) = 0.5 while the
  // whole window still reads the history, then 0.5 - 0.25 (t - 1/2)^2 up to
  // t = 1 (Xbar(s) = 1 - s/2 once the fed-back half-strength layer grows)
  SystemSpec spec = scalar_transport_spec(1.0, 0.0);
  DelayMeasure mu;
  mu.density.breakpoints = {-1.0, -0.5};
  mu.density.values = {Matrix::Constant(1, 1, 1.0)};
  spec.delay = mu;
  const Field y0 = Field::constant(200, Vector::Ones(1));
  const HistoryBuffer phi = HistoryBuffer::constant(0.005, y0);
  const MocResult result = solve_moc_delay(spec, y0, phi, 1.0, 0.005, 200);
  for (double t : {0.0, 0.25, 0.5}) {
    CHECK(result.trace.at(t)(0) == doctest::Approx(0.5).epsilon(1e-9));
  }
  CHECK(result.trace.at(0.75)(0) ==
        doctest::Approx(0.5 - 0.25 * 0.0625).epsilon(2e-3));
  CHECK(result.trace.at(1.0)(0) == doctest::Approx(0.4375).epsilon(2e-3));
}

TEST_CASE("solve_moc_delay handles density mass reaching theta = 0") {
  // piece [-0.3, 0] of value 1 against unit data: the early boundary value
  // follows b(t) = 0.3 - 0.35 t^2 + O(t^3)
  SystemSpec spec = scalar_transport_spec(1.0, 0.0);
  DelayMeasure mu;
  mu.density.breakpoints = {-0.3, 0.0};
  mu.density.values = {Matrix::Constant(1, 1, 1.0)};
  spec.delay = mu;
  const Field y0 = Field::constant(400, Vector::Ones(1));
  const HistoryBuffer phi = HistoryBuffer::constant(0.0025, y0);
  const MocResult coarse = solve_moc_delay(spec, y0, phi, 2.0, 0.01, 1 << 30);
  const MocResult refined = solve_moc_delay(spec, y0, phi, 2.0, 0.0025, 1 << 30);
  CHECK(coarse.trace.values[0](0) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(refined.trace.at(0.1)(0) ==
        doctest::Approx(0.3 - 0.35 * 0.01).epsilon(1e-3));
  // halving dt twice moves the trajectory by no more than first order
  CHECK(coarse.fields.back().l2_norm() ==
        doctest::Approx(refined.fields.back().l2_norm()).epsilon(2e-2));
}

TEST_CASE("solve_moc_delay rejects gaps in the history") {
  const SystemSpec spec = atom_delay_spec(0.5);
  const Field y0 = Field::constant(20, Vector::Ones(1));
  std::vector<Field> snaps(HistoryBuffer::ring_length(0.05), y0);
  const HistoryBuffer late(0.05, 0.5, snaps);  // anchored after t = 0
  CHECK_THROWS_AS((void)solve_moc_delay(spec, y0, late, 1.0, 0.05, 1), HistoryGap);
}
