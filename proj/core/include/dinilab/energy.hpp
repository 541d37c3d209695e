#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "dinilab/grid.hpp"
#include "dinilab/potentials.hpp"
#include "dinilab/solver.hpp"

namespace dinilab {

/// zeta_s(d): 1 for d <= s, 0 for d >= 2s, cubic smoothstep ramp between (|zeta'| <= 1.5/s).
struct CutoffProfile {
  double s = 1.0;
  double operator()(double d) const;
  double derivative(double d) const;
  double slope_bound() const { return 1.5 / s; }
};

/// I(s) = int over {dist(x, box boundary) > s} of |grad u|^2 + h(d(x)) u^{p+1}, with d the
/// distance to the box boundary (constant potentials use their coefficient). Centered
/// gradients, one-sided at the grid edges, nodal volume quadrature.
double energy_I(const GridField& field, const AbsorptionPotential& pot, double p, double s);

/// J(s, tau) = int over {0 < x_N - lo_N < 2s, tangential distance to every patch >= tau} of
/// (|grad u|^2 + H(x) u^{p+1}) zeta_s(x_N - lo_N).
double energy_J(const GridField& field, const AbsorptionPotential& pot, double p, double s, double tau,
                const std::vector<Patch>& patches);

struct BoundValue {
  double value = 0.0;      // +inf when infinite
  double log_value = 0.0;  // natural log of value
  bool infinite = false;   // inner integral underflowed
};

/// [int_0^s h(r)^{2/(p+3)} dr]^{-(p+3)/(p-1)}, computed in log form.
BoundValue lemma31_bound(const AbsorptionPotential& pot, double p, double s);
BoundValue lemma31_bound(const OmegaSpec& spec, double p, double s);

struct Ineq330 {
  bool holds = false;
  double lhs = 0.0, rhs = 0.0;                // may underflow to 0
  double lhs_scaled = 0.0, rhs_scaled = 0.0;  // both multiplied by exp(a mu(s))
};

/// int_0^s exp(-a omega(t)/t) dt >= s^2/(2s + a omega(s)) exp(-a omega(s)/s), compared in
/// scaled form so that neither side underflows.
Ineq330 check_ineq_330(const OmegaSpec& spec, double a, double s);

struct EnergyAudit {
  std::vector<double> s_samples;
  std::vector<double> I_values;
  std::vector<double> bound_values;
  std::vector<double> ratios;  // I / bound, 0 where the bound is infinite
  double fitted_d3 = 0.0;      // max ratio
};

EnergyAudit audit_energy(const GridField& field, const AbsorptionPotential& pot, double p,
                         const std::vector<double>& s_samples);

void to_json(nlohmann::json& j, const EnergyAudit& a);

}  // namespace dinilab
