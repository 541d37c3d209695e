#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "dinilab/errors.hpp"
#include "dinilab/oracles.hpp"
#include "dinilab/solver.hpp"

using namespace dinilab;

namespace {

// max relative interior error of the Newton solution against the exact blow-up profile
double blowup_error(int n) {
  ProblemSpec s;
  s.N = 1;
  s.p = 3.0;
  s.box = Box{{0.1}, {1.0}};
  s.potential = AbsorptionPotential::constant(1.0);
  s.bc = BoundaryData::profile_data([](std::span<const double> x) { return exact_1d_blowup(3.0, 1.0, x[0]); });
  const auto sys = discretize(s, {n});
  const auto r = newton_solve(sys, harmonic_solve(sys, 1.0));
  double e = 0.0;
  std::vector<double> x(1);
  for (std::size_t i = 1; i + 1 < r.field.size(); ++i) {
    r.field.coords(i, x);
    const double ex = exact_1d_blowup(3.0, 1.0, x[0]);
    e = std::max(e, std::abs(r.field.values[i] - ex) / ex);
  }
  return e;
}

ProblemSpec dirac_problem(const AbsorptionPotential& pot, double p) {
  ProblemSpec s;
  s.N = 2;
  s.p = p;
  s.box = Box{{-1.0, 0.0}, {1.0, 2.0}};
  s.potential = pot;
  s.bc = BoundaryData::dirac({0.0}, 1.0);
  return s;
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("linear data is reproduced exactly by the harmonic solve") {
  for (bool aniso : {false, true}) {
    CAPTURE(aniso);
    ProblemSpec s;
    s.N = 2;
    s.box = Box{{0.0, 0.0}, {1.0, 1.0}};
    if (aniso) s.coefficients = CoefficientField::constant({1.0, 0.2, 0.2, 1.0});
    s.bc = BoundaryData::profile_data([](std::span<const double> x) { return 3.0 + 2.0 * x[0] - x[1]; });
    const auto sys = discretize(s, {17, 17});
    const auto u = harmonic_solve(sys, 1.0);
    std::vector<double> x(2);
    double err = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      u.coords(i, x);
      err = std::max(err, std::abs(u.values[i] - (3.0 + 2.0 * x[0] - x[1])));
    }
    CHECK(err < 1e-8);
  }
}

TEST_CASE("1-D blow-up profile: 2% at 512 nodes, second order under refinement") {
  const double e512 = blowup_error(512);
  const double e1023 = blowup_error(1023);  // spacing halved
  CHECK(e512 <= 0.02);
  CHECK(e512 / e1023 >= 3.5);
}

TEST_CASE("comparison principle over a K sweep and across potentials") {
  const std::vector<double> K = {1e1, 1e2, 1e3, 1e4, 1e5};
  const auto pot = AbsorptionPotential::boundary(OmegaSpec::power(0.5));
  const auto reps = solve_sequence(dirac_problem(pot, 2.8), K, {64, 64});
  REQUIRE(reps.size() == 5);
  for (std::size_t j = 1; j < reps.size(); ++j) CHECK(comparison_violations(reps[j - 1].field, reps[j].field, 1e-10) == 0);

  // H1 <= H2 pointwise  =>  u1 >= u2
  const std::vector<std::pair<AbsorptionPotential, AbsorptionPotential>> pairs = {
      {AbsorptionPotential::constant(0.5), AbsorptionPotential::constant(1.0)},
      {AbsorptionPotential::boundary(OmegaSpec::power(0.5)), AbsorptionPotential::boundary(OmegaSpec::power(0.9))},
      {AbsorptionPotential::boundary(OmegaSpec::constant(1.0)), AbsorptionPotential::boundary(OmegaSpec::constant(0.1))},
  };
  for (const auto& [small, large] : pairs) {
    const auto s1 = discretize(dirac_problem(small, 2.8), {64, 64});
    const auto s2 = discretize(dirac_problem(large, 2.8), {64, 64});
    for (std::size_t i = 0; i < s1.H.size(); ++i) REQUIRE(s1.H[i] <= s2.H[i]);
    const auto u1 = solve_sequence(s1, {1e2, 1e4});
    const auto u2 = solve_sequence(s2, {1e2, 1e4});
    for (std::size_t j = 0; j < u1.size(); ++j) CHECK(comparison_violations(u2[j].field, u1[j].field, 1e-10) == 0);
  }
}

TEST_CASE("mollified Dirac data approximates K times the Poisson kernel") {
  ProblemSpec s;
  s.N = 2;
  s.box = Box{{-2.0, 0.0}, {2.0, 4.0}};
  s.bc = BoundaryData::dirac({0.0}, 1.0);
  const auto sys = discretize(s, {256, 256});
  const double K = 3.0;
  const auto u = harmonic_solve(sys, K);
  for (const auto& x : std::vector<std::vector<double>>{{0.0, 0.25}, {0.25, 0.25}, {0.0, 0.5}, {-0.3, 0.4}}) {
    const double P = poisson_kernel(KernelPoint{2, x, {0.0, 0.0}});
    CHECK(std::abs(probe(u, x) / (K * P) - 1.0) < 0.05);
  }
}

TEST_CASE("discretization rejects non-elliptic and non-M-matrix coefficients") {
  ProblemSpec s;
  s.N = 2;
  s.box = Box{{0.0, 0.0}, {1.0, 1.0}};
  s.coefficients = CoefficientField::constant({1.0, 2.0, 2.0, 1.0});  // eigenvalue -1
  CHECK_THROWS_AS(discretize(s, {16, 16}), ArgumentError);
  s.coefficients = CoefficientField::constant({1.0, 0.9, 0.9, 1.0});  // elliptic, but |a12| too large
  s.box = Box{{0.0, 0.0}, {4.0, 1.0}};
  CHECK_THROWS_AS(discretize(s, {16, 16}), ArgumentError);
  s.coefficients = CoefficientField::constant({1.0, 0.1, 0.3, 1.0});
  CHECK_THROWS_AS(discretize(s, {16, 16}), ArgumentError);
  s.coefficients = CoefficientField::identity();
  CHECK_THROWS_AS(discretize(s, {4, 16}), ArgumentError);
  s.p = 1.0;
  CHECK_THROWS_AS(discretize(s, {16, 16}), ArgumentError);
}

TEST_CASE("Newton: non-convergence, monotone descent from a supersolution") {
  auto spec = dirac_problem(AbsorptionPotential::constant(1.0), 2.0);
  spec.bc = BoundaryData::constant_level(50.0);
  const auto sys = discretize(spec, {24, 24});
  NewtonOptions one;
  one.max_iter = 1;
  CHECK_THROWS_AS(newton_solve(sys, sys.boundary_field(0.0), one), NonConvergenceError);

  // the constant K is a supersolution: iterates decrease and stay above 0
  auto init = sys.grid;
  std::fill(init.values.begin(), init.values.end(), 50.0);
  const auto r = newton_solve(sys, init);
  CHECK(r.monotone_flag);
  CHECK(r.final_residual <= 1e-9);
  const double mid[2] = {0.0, 1.0};
  const double v = probe(r.field, mid);
  CHECK(v > 0.0);
  CHECK(v < 50.0);
}

TEST_CASE("patch data: weights and the ramp warning") {
  ProblemSpec s = dirac_problem(AbsorptionPotential::boundary(OmegaSpec::power(0.5)), 2.0);
  s.bc = BoundaryData::patch_levels({Patch{{-0.5}, 0.1, 1.0}, Patch{{0.5}, 0.1, 0.25}}, 0.05, 10.0);
  const auto sys = discretize(s, {41, 41});
  CHECK(sys.warnings.empty());
  const auto b = sys.boundary_field(10.0);
  const double left[2] = {-0.5, 0.0}, right[2] = {0.5, 0.0}, gap[2] = {0.0, 0.0}, top[2] = {0.0, 2.0};
  CHECK(probe(b, left) == doctest::Approx(10.0));
  CHECK(probe(b, right) == doctest::Approx(2.5));
  CHECK(probe(b, gap) == 0.0);
  CHECK(probe(b, top) == 0.0);

  s.bc.ramp = 0.3;  // >= s_max / 2
  CHECK(!discretize(s, {41, 41}).warnings.empty());
}

TEST_CASE("3-D line geometry solve") {
  ProblemSpec s;
  s.N = 3;
  s.p = 1.8;
  s.box = Box{{-1.0, -1.0, 0.0}, {1.0, 1.0, 2.0}};
  s.potential = AbsorptionPotential::line(OmegaSpec::power(0.5));
  s.bc = BoundaryData::constant_level(1.0);
  const auto reps = solve_sequence(s, {1.0, 10.0}, {12, 12, 12});
  REQUIRE(reps.size() == 2);
  CHECK(comparison_violations(reps[0].field, reps[1].field) == 0);
  for (double v : reps[1].field.values) CHECK(v <= 10.0 + 1e-9);
}

}  // TEST_SUITE
