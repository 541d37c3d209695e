#include "dinilab/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dinilab/errors.hpp"
#include "dinilab/quadrature.hpp"

namespace dinilab {

namespace {

// mu with omega frozen beyond s_max, matching eval_h
double mu_frozen(const OmegaSpec& w, double r) {
  const double ls = std::log(r);
  return std::exp(std::log(w.omega_at_log(std::min(ls, std::log(w.s_max())))) - ls);
}

double grad_sq(const GridField& f, std::size_t idx, const std::vector<std::ptrdiff_t>& st, std::vector<int>& ijk) {
  f.unravel(idx, ijk);
  double g2 = 0.0;
  for (std::size_t d = 0; d < f.shape.size(); ++d) {
    const int i = ijk[d], n = f.shape[d];
    const auto at = [&](std::ptrdiff_t off) { return f.values[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(idx) + off)]; };
    double g;
    if (i == 0) g = (at(st[d]) - at(0)) / f.spacing[d];
    else if (i == n - 1) g = (at(0) - at(-st[d])) / f.spacing[d];
    else g = (at(st[d]) - at(-st[d])) / (2.0 * f.spacing[d]);
    g2 += g * g;
  }
  return g2;
}

double node_volume(const GridField& f) {
  double v = 1.0;
  for (double h : f.spacing) v *= h;
  return v;
}

}  // namespace

double CutoffProfile::operator()(double d) const {
  if (d <= s) return 1.0;
  if (d >= 2.0 * s) return 0.0;
  const double t = (d - s) / s;
  return 1.0 - t * t * (3.0 - 2.0 * t);
}

double CutoffProfile::derivative(double d) const {
  if (d <= s || d >= 2.0 * s) return 0.0;
  const double t = (d - s) / s;
  return -6.0 * t * (1.0 - t) / s;
}

double energy_I(const GridField& f, const AbsorptionPotential& pot, double p, double s) {
  const Box b = f.box();
  double half = std::numeric_limits<double>::infinity();
  for (int d = 0; d < b.dim(); ++d) half = std::min(half, 0.5 * b.extent(d));
  if (!(s > 0.0) || !(s < half)) throw ArgumentError("energy_I: s must lie in (0, half the box height)");
  const auto st = f.strides();
  std::vector<int> ijk(f.shape.size());
  std::vector<double> x(f.shape.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.coords(i, x);
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < x.size(); ++k) d = std::min({d, x[k] - b.lo[k], b.hi[k] - x[k]});
    if (!(d > s)) continue;
    const double u = f.values[i];
    acc += grad_sq(f, i, st, ijk) + eval_h(pot, d) * std::pow(std::abs(u), p + 1.0);
  }
  return acc * node_volume(f);
}

double energy_J(const GridField& f, const AbsorptionPotential& pot, double p, double s, double tau,
                const std::vector<Patch>& patches) {
  if (!(s > 0.0)) throw ArgumentError("energy_J: s must be > 0");
  if (!(tau >= 0.0)) throw ArgumentError("energy_J: tau must be >= 0");
  const std::size_t N = f.shape.size();
  for (const auto& P : patches)
    if (P.center.size() + 1 != N) throw ArgumentError("energy_J: patch geometry does not match the field dimension");
  const CutoffProfile zeta{s};
  const auto st = f.strides();
  std::vector<int> ijk(N);
  std::vector<double> x(N);
  double acc = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.coords(i, x);
    const double d = x[N - 1] - f.origin[N - 1];
    if (!(d > 0.0) || !(d < 2.0 * s)) continue;
    bool near = false;
    for (const auto& P : patches) {
      double r2 = 0.0;
      for (std::size_t k = 0; k + 1 < N; ++k) r2 += (x[k] - P.center[k]) * (x[k] - P.center[k]);
      if (std::sqrt(r2) - P.radius < tau) {
        near = true;
        break;
      }
    }
    if (near) continue;
    const double u = f.values[i];
    acc += (grad_sq(f, i, st, ijk) + pot.at(x) * std::pow(std::abs(u), p + 1.0)) * zeta(d);
  }
  return acc * node_volume(f);
}

BoundValue lemma31_bound(const AbsorptionPotential& pot, double p, double s) {
  if (!(p > 1.0)) throw ArgumentError("lemma31_bound: p must be > 1");
  if (!(s > 0.0)) throw ArgumentError("lemma31_bound: s must be > 0");
  const double q = 2.0 / (p + 3.0);
  const double expo = -(p + 3.0) / (p - 1.0);
  BoundValue out;
  double log_inner;
  if (!pot.is_degenerate()) {
    if (pot.coefficient == 0.0) {
      out.infinite = true;
      out.value = out.log_value = std::numeric_limits<double>::infinity();
      return out;
    }
    log_inner = q * std::log(pot.coefficient) + std::log(s);
  } else {
    const OmegaSpec& w = *pot.omega;
    const double mus = mu_frozen(w, s);
    // inner = e^{-q mu(s)} int_0^s exp(-q (mu(r) - mu(s))) dr
    QuadratureOptions opt;
    opt.rel_tol = 1e-10;
    const auto J = integrate(
        [&](double r) {
          if (r <= 0.0) return 0.0;
          return std::exp(-q * (mu_frozen(w, r) - mus));
        },
        0.0, s, opt);
    if (!(J.value > 0.0)) {
      out.infinite = true;
      out.value = out.log_value = std::numeric_limits<double>::infinity();
      return out;
    }
    log_inner = -q * mus + std::log(J.value);
  }
  out.log_value = expo * log_inner;
  if (out.log_value > std::log(std::numeric_limits<double>::max())) {
    out.infinite = true;
    out.value = std::numeric_limits<double>::infinity();
  } else {
    out.value = std::exp(out.log_value);
  }
  return out;
}

BoundValue lemma31_bound(const OmegaSpec& spec, double p, double s) {
  return lemma31_bound(AbsorptionPotential::boundary(spec), p, s);
}

Ineq330 check_ineq_330(const OmegaSpec& spec, double a, double s) {
  if (!(a > 0.0)) throw ArgumentError("check_ineq_330: a must be > 0");
  const double ws = eval_omega(spec, s);
  const double mus = ws / s;
  QuadratureOptions opt;
  opt.rel_tol = 1e-12;
  const auto L = integrate(
      [&](double t) {
        if (t <= 0.0) return 0.0;
        return std::exp(-a * (spec.mu_at_log(std::log(t)) - mus));
      },
      0.0, s, opt);
  Ineq330 r;
  r.lhs_scaled = L.value;
  r.rhs_scaled = s * s / (2.0 * s + a * ws);
  const double damp = std::exp(-a * mus);
  r.lhs = r.lhs_scaled * damp;
  r.rhs = r.rhs_scaled * damp;
  r.holds = r.lhs_scaled >= r.rhs_scaled;
  return r;
}

EnergyAudit audit_energy(const GridField& field, const AbsorptionPotential& pot, double p,
                         const std::vector<double>& s_samples) {
  EnergyAudit a;
  for (std::size_t k = 0; k < s_samples.size(); ++k)
    if (k > 0 && !(s_samples[k] > s_samples[k - 1])) throw ArgumentError("audit_energy: s samples must increase");
  for (double s : s_samples) {
    const double I = energy_I(field, pot, p, s);
    const auto B = lemma31_bound(pot, p, s);
    a.s_samples.push_back(s);
    a.I_values.push_back(I);
    a.bound_values.push_back(B.value);
    const double ratio = B.infinite ? 0.0 : I / B.value;
    a.ratios.push_back(ratio);
    a.fitted_d3 = std::max(a.fitted_d3, ratio);
  }
  return a;
}

void to_json(nlohmann::json& j, const EnergyAudit& a) {
  j = {{"s", a.s_samples}, {"I", a.I_values}, {"ratio", a.ratios}, {"fitted_d3", a.fitted_d3}};
  nlohmann::json b = nlohmann::json::array();
  for (double v : a.bound_values) b.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json("inf"));
  j["bound"] = b;
}

}  // namespace dinilab
