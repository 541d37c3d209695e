#include <doctest.h>

#include <cmath>

#include "dinilab/errors.hpp"
#include "dinilab/potentials.hpp"

using namespace dinilab;

TEST_SUITE("potentials") {

TEST_CASE("closed-form omega families") {
  const auto p = OmegaSpec::power(0.5);
  CHECK(eval_omega(p, 0.25) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(eval_mu(p, 0.25) == doctest::Approx(2.0).epsilon(1e-15));

  const auto c = OmegaSpec::constant(0.3);
  CHECK(eval_omega(c, 1e-9) == 0.3);
  CHECK(eval_mu(c, 0.1) == doctest::Approx(3.0));

  const auto l = OmegaSpec::inverse_log(0.5);
  const double s = 0.01;
  CHECK(eval_omega(l, s) == doctest::Approx(std::pow(std::log(std::exp(1.0) / s), -1.5)).epsilon(1e-14));
}

TEST_CASE("log-space evaluation agrees with direct evaluation") {
  for (const auto& w : {OmegaSpec::power(0.25), OmegaSpec::inverse_log(0.0), OmegaSpec::constant(1.0),
                        OmegaSpec::tabulated({0.01, 0.1, 0.5}, {0.1, 0.3, 0.7})}) {
    for (double s : {1e-6, 1e-3, 0.05, 0.4}) {
      CHECK(w.omega_at_log(std::log(s)) == doctest::Approx(eval_omega(w, s)).epsilon(1e-13));
      CHECK(w.mu_at_log(std::log(s)) == doctest::Approx(eval_mu(w, s)).epsilon(1e-13));
    }
  }
  // far below the smallest double: still finite in log form
  const auto p = OmegaSpec::power(0.5);
  CHECK(p.log_mu_at_log(-2000.0) == doctest::Approx(1000.0));
}

TEST_CASE("domain and argument errors") {
  const auto p = OmegaSpec::power(0.5);
  CHECK_THROWS_AS(eval_omega(p, 0.0), DomainError);
  CHECK_THROWS_AS(eval_omega(p, -1.0), DomainError);
  CHECK_THROWS_AS(eval_omega(p, 0.6), DomainError);
  CHECK_THROWS_AS(OmegaSpec::power(0.0), ArgumentError);
  CHECK_THROWS_AS(OmegaSpec::power(1.5), ArgumentError);
  CHECK_THROWS_AS(OmegaSpec::constant(-1.0), ArgumentError);
  CHECK_THROWS_AS(OmegaSpec::inverse_log(-0.1), ArgumentError);
  CHECK_THROWS_AS(OmegaSpec::inverse_log(0.0, 3.0), ArgumentError);
  CHECK_THROWS_AS(OmegaSpec::tabulated({0.1}, {0.2}), ArgumentError);
  CHECK_THROWS_AS(OmegaSpec::tabulated({0.1, 0.05}, {0.2, 0.3}), ArgumentError);
  CHECK_THROWS_AS(OmegaSpec::tabulated({0.1, 0.2}, {0.3, 0.2}), ArgumentError);
}

TEST_CASE("tabulated omega: nodes, interpolation and tails") {
  const auto t = OmegaSpec::tabulated({0.01, 0.04, 0.2}, {0.1, 0.2, 0.4}, 0.5);
  CHECK(eval_omega(t, 0.04) == doctest::Approx(0.2));
  CHECK(eval_omega(t, 0.12) == doctest::Approx(0.3));
  CHECK(eval_omega(t, 0.45) == doctest::Approx(0.4));
  // below the table: s^g through the first two samples, g = ln 2 / ln 4 = 1/2
  CHECK(eval_omega(t, 0.0025) == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("h vanishes at the degeneracy set and is monotone in the distance") {
  const auto pot = AbsorptionPotential::boundary(OmegaSpec::power(0.5));
  CHECK(eval_h(pot, 0.0) == 0.0);
  CHECK(eval_h(pot, 0.04) == doctest::Approx(std::exp(-5.0)));
  // mu = 1/sqrt(s) > 700 for s < 2.04e-6: clamped to 0
  CHECK(eval_h(pot, 1e-6) == 0.0);
  double prev = 0.0;
  for (double d = 0.01; d < 3.0; d *= 1.3) {
    const double h = eval_h(pot, d);
    CHECK(h >= prev);
    prev = h;
  }
  const auto con = AbsorptionPotential::constant(2.5);
  CHECK(!con.is_degenerate());
  CHECK(eval_h(con, 0.0) == 2.5);

  const double x3[3] = {5.0, 0.3, 0.4};
  CHECK(AbsorptionPotential::line(OmegaSpec::power(0.5)).distance(x3) == doctest::Approx(0.5));
  CHECK(AbsorptionPotential::boundary(OmegaSpec::power(0.5)).distance(x3) == doctest::Approx(0.4));
}

TEST_CASE("admissibility flags") {
  const auto grid = geometric_grid(1e-6, 0.5, 64);
  CHECK(check_admissibility(OmegaSpec::power(0.5), grid).admissible_for_chain());
  CHECK(check_admissibility(OmegaSpec::inverse_log(0.0), grid).admissible_for_chain());

  const auto cst = check_admissibility(OmegaSpec::constant(1.0), grid);
  CHECK(cst.admissible_for_chain());
  CHECK(!cst.omega_vanishes);
  REQUIRE(cst.worst_ratio);
  CHECK(*cst.worst_ratio == doctest::Approx(0.5));

  // mu = 1: not strictly decreasing, ratio 1
  const auto lin = check_admissibility(OmegaSpec::power(1.0), grid);
  CHECK(!lin.mu_monotone);
  CHECK(!lin.admissible_for_chain());

  // inverse_log with eps = 1: mu increases past s = e^{-1}; s_max = 0.5 is flagged
  const auto il = check_admissibility(OmegaSpec::inverse_log(1.0), grid);
  CHECK(!il.mu_monotone);
  const auto il_ok = check_admissibility(OmegaSpec::inverse_log(1.0, 0.3), geometric_grid(1e-6, 0.3, 64));
  CHECK(il_ok.mu_monotone);

  const auto tb = check_admissibility(OmegaSpec::power(0.5), grid, TechnicalBound{0.6, 1.0});
  REQUIRE(tb.technical_bound);
  CHECK(*tb.technical_bound);
  CHECK_THROWS_AS(check_admissibility(OmegaSpec::power(0.5), geometric_grid(1e-3, 0.5, 8)), ArgumentError);
}

TEST_CASE("worst dyadic mu ratio") {
  // power: mu(2^{-j+1})/mu(2^{-j}) = 2^{gamma-1}
  CHECK(worst_mu_ratio(OmegaSpec::power(0.5), 8, 40) == doctest::Approx(std::pow(2.0, -0.5)));
}

TEST_CASE("json round trip and schema errors") {
  const auto w = OmegaSpec::inverse_log(0.5, 0.3);
  nlohmann::json j = w;
  const auto back = omega_from_json(j);
  CHECK(back.label() == w.label());
  CHECK(back.s_max() == 0.3);

  const auto pot = potential_from_json(
      nlohmann::json::parse(R"({"geometry":"line_distance","omega":{"family":"power","params":{"gamma":0.5}}})"));
  CHECK(pot.geometry == PotentialGeometry::line_distance);

  CHECK_THROWS_AS(omega_from_json(nlohmann::json::parse(R"({"family":"nope"})")), ConfigError);
  CHECK_THROWS_AS(omega_from_json(nlohmann::json::parse(R"({"family":"power","params":{}})")), ConfigError);
  CHECK_THROWS_AS(omega_from_json(nlohmann::json::parse(R"({"family":"power","params":{"gamma":2}})")), ConfigError);
  CHECK_THROWS_AS(potential_from_json(nlohmann::json::parse(R"({"geometry":"boundary_distance"})")), ConfigError);
}

}  // TEST_SUITE
