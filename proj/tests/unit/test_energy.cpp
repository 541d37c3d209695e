#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "dinilab/energy.hpp"
#include "dinilab/errors.hpp"

using namespace dinilab;

namespace {

double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST_SUITE("energy") {

TEST_CASE("cutoff profile") {
  const CutoffProfile z{0.2};
  CHECK(z(0.1) == 1.0);
  CHECK(z(0.2) == 1.0);
  CHECK(z(0.3) == doctest::Approx(0.5));
  CHECK(z(0.4) == 0.0);
  double worst = 0.0;
  for (double d = 0.2; d <= 0.4; d += 1e-4) worst = std::max(worst, std::abs(z.derivative(d)));
  CHECK(worst <= z.slope_bound() + 1e-12);
  CHECK(worst == doctest::Approx(z.slope_bound()).epsilon(1e-3));
}

TEST_CASE("I(s) of simple fields by node counting") {
  // 11 x 11 nodes on the unit square; d > 0.25 keeps x, y in {0.3, ..., 0.7}: 25 nodes
  auto lin = GridField::on_box(Box{{0.0, 0.0}, {1.0, 1.0}}, {11, 11});
  std::vector<double> x(2);
  for (std::size_t i = 0; i < lin.size(); ++i) {
    lin.coords(i, x);
    lin.values[i] = 2.0 * x[0] + 3.0;
  }
  CHECK(energy_I(lin, AbsorptionPotential::constant(0.0), 2.0, 0.25) == doctest::Approx(25 * 0.01 * 4.0));

  auto one = GridField::on_box(Box{{0.0, 0.0}, {1.0, 1.0}}, {11, 11}, 1.0);
  CHECK(energy_I(one, AbsorptionPotential::constant(2.0), 2.0, 0.25) == doctest::Approx(25 * 0.01 * 2.0));
  CHECK_THROWS_AS(energy_I(one, AbsorptionPotential::constant(2.0), 2.0, 0.6), ArgumentError);
}

TEST_CASE("J(s, tau) excludes the patch neighbourhoods") {
  // u = 1, H = 1: integrand is zeta_s; rows x_N = 0.1, 0.2, 0.3 weigh 1, 1, 1/2
  const auto f = GridField::on_box(Box{{-1.0, 0.0}, {1.0, 1.0}}, {21, 11}, 1.0);
  const auto pot = AbsorptionPotential::constant(1.0);
  CHECK(energy_J(f, pot, 2.0, 0.2, 0.0, {}) == doctest::Approx(21 * 2.5 * 0.01).epsilon(1e-9));
  // |x| - 0.2 < 0.15 drops the 7 columns |x| <= 0.3
  CHECK(energy_J(f, pot, 2.0, 0.2, 0.15, {Patch{{0.0}, 0.2, 1.0}}) == doctest::Approx(14 * 2.5 * 0.01).epsilon(1e-9));
  CHECK_THROWS_AS(energy_J(f, pot, 2.0, 0.2, 0.1, {Patch{{0.0, 0.0}, 0.2, 1.0}}), ArgumentError);
}

TEST_CASE("Lemma bound: constant potential closed form") {
  for (double p : {2.0, 3.0}) {
    for (double a : {0.5, 2.0}) {
      const double s = 0.1;
      const double truth = std::pow(std::pow(a, 2.0 / (p + 3.0)) * s, -(p + 3.0) / (p - 1.0));
      const auto b = lemma31_bound(AbsorptionPotential::constant(a), p, s);
      CHECK(!b.infinite);
      CHECK(b.value == doctest::Approx(truth).epsilon(1e-12));
      CHECK(b.log_value == doctest::Approx(std::log(truth)).epsilon(1e-12));
    }
  }
  CHECK(lemma31_bound(AbsorptionPotential::constant(0.0), 2.0, 0.1).infinite);
}

TEST_CASE("Lemma bound: degenerate potential against direct quadrature") {
  // p = 3: [int_0^s exp(-(1/3) r^{-1/2}) dr]^{-3}
  const double s = 0.3;
  const double inner = simpson([](double r) { return r > 0 ? std::exp(-std::pow(r, -0.5) / 3.0) : 0.0; }, 0.0, s, 200000);
  const auto b = lemma31_bound(OmegaSpec::power(0.5), 3.0, s);
  CHECK(b.value == doctest::Approx(std::pow(inner, -3.0)).epsilon(1e-8));
  // far inside: the inner integral underflows but the log survives
  const auto tiny = lemma31_bound(OmegaSpec::power(0.5), 3.0, 1e-5);
  CHECK(std::isfinite(tiny.log_value));
  CHECK(tiny.log_value > 300.0);
}

TEST_CASE("inequality on the 144-cell matrix") {
  const auto ss = geometric_grid(1e-4, 0.5, 16);
  int cells = 0, held = 0;
  for (const auto& w : {OmegaSpec::power(0.5), OmegaSpec::inverse_log(0.0), OmegaSpec::constant(1.0)})
    for (double a : {0.5, 1.0, 2.0})
      for (double s : ss) {
        ++cells;
        held += check_ineq_330(w, a, s).holds ? 1 : 0;
      }
  CHECK(cells == 144);
  CHECK(held == 144);
}

TEST_CASE("inequality sides against direct quadrature") {
  // scaled lhs = int_0^s exp(-a (mu(t) - mu(s))) dt, mu(t) = t^{-1/2}
  const double a = 1.0, s = 0.1;
  const double mus = std::pow(s, -0.5);
  const double lhs = simpson([&](double t) { return t > 0 ? std::exp(-a * (std::pow(t, -0.5) - mus)) : 0.0; }, 0.0, s, 200000);
  const auto r = check_ineq_330(OmegaSpec::power(0.5), a, s);
  CHECK(r.lhs_scaled == doctest::Approx(lhs).epsilon(1e-8));
  CHECK(r.rhs_scaled == doctest::Approx(s * s / (2 * s + a * std::sqrt(s))).epsilon(1e-12));
}

TEST_CASE("audit bookkeeping") {
  auto f = GridField::on_box(Box{{-1.0, 0.0}, {1.0, 2.0}}, {33, 33}, 2.0);
  const auto pot = AbsorptionPotential::boundary(OmegaSpec::power(0.5));
  const auto a = audit_energy(f, pot, 3.0, {0.1, 0.2, 0.4});
  REQUIRE(a.ratios.size() == 3);
  double mx = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(a.I_values[k] == energy_I(f, pot, 3.0, a.s_samples[k]));
    CHECK(a.ratios[k] == doctest::Approx(a.I_values[k] / a.bound_values[k]));
    mx = std::max(mx, a.ratios[k]);
  }
  CHECK(a.fitted_d3 == mx);
}

}  // TEST_SUITE
