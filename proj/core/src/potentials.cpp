#include "dinilab/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "dinilab/errors.hpp"

namespace dinilab {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

bool within_range(const OmegaSpec& spec, double s) {
  // a few ulps of slack so that s_max itself round-trips through exp/log
  return s > 0.0 && s <= spec.s_max() * (1.0 + 4 * std::numeric_limits<double>::epsilon());
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void require_positive_finite(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ArgumentError(std::string(what) + " must be positive and finite");
}

}  // namespace

std::string to_string(OmegaFamily f) {
  switch (f) {
    case OmegaFamily::power: return "power";
    case OmegaFamily::constant: return "constant";
    case OmegaFamily::inverse_log: return "inverse_log";
    case OmegaFamily::tabulated: return "tabulated";
  }
  return "unknown";
}

OmegaSpec OmegaSpec::power(double gamma, double s_max) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ArgumentError("power family needs gamma in (0, 1]");
  require_positive_finite(s_max, "s_max");
  OmegaSpec o;
  o.family_ = OmegaFamily::power;
  o.param_ = gamma;
  o.s_max_ = s_max;
  return o;
}

OmegaSpec OmegaSpec::constant(double omega0, double s_max) {
  require_positive_finite(omega0, "omega0");
  require_positive_finite(s_max, "s_max");
  OmegaSpec o;
  o.family_ = OmegaFamily::constant;
  o.param_ = omega0;
  o.s_max_ = s_max;
  return o;
}

OmegaSpec OmegaSpec::inverse_log(double eps, double s_max) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw ArgumentError("inverse_log family needs eps >= 0");
  require_positive_finite(s_max, "s_max");
  // ln(e/s) must stay positive on (0, s_max]
  if (s_max >= std::exp(1.0)) throw ArgumentError("inverse_log family needs s_max < e");
  OmegaSpec o;
  o.family_ = OmegaFamily::inverse_log;
  o.param_ = eps;
  o.s_max_ = s_max;
  return o;
}

OmegaSpec OmegaSpec::tabulated(std::vector<double> s, std::vector<double> omega, double s_max) {
  require_positive_finite(s_max, "s_max");
  if (s.size() != omega.size()) throw ArgumentError("tabulated omega: s and omega differ in length");
  if (s.size() < 2) throw ArgumentError("tabulated omega needs at least two samples");
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s[i] > 0.0) || !std::isfinite(s[i])) throw ArgumentError("tabulated omega: abscissae must be positive");
    if (!(omega[i] > 0.0) || !std::isfinite(omega[i]))
      throw ArgumentError("tabulated omega: values must be positive");
    if (i > 0 && !(s[i] > s[i - 1])) throw ArgumentError("tabulated omega: abscissae must be strictly increasing");
    if (i > 0 && omega[i] < omega[i - 1]) throw ArgumentError("tabulated omega: values must be nondecreasing");
  }
  OmegaSpec o;
  o.family_ = OmegaFamily::tabulated;
  o.param_ = 0.0;
  o.s_max_ = s_max;
  const double g = std::log(omega[1] / omega[0]) / std::log(s[1] / s[0]);
  o.tail_exponent_ = std::clamp(g, 0.0, 1.0);
  o.table_s_ = std::move(s);
  o.table_w_ = std::move(omega);
  return o;
}

OmegaSpec OmegaSpec::with_s_max(double s_max) const {
  switch (family_) {
    case OmegaFamily::power: return power(param_, s_max);
    case OmegaFamily::constant: return constant(param_, s_max);
    case OmegaFamily::inverse_log: return inverse_log(param_, s_max);
    case OmegaFamily::tabulated: return tabulated(table_s_, table_w_, s_max);
  }
  return *this;
}

double OmegaSpec::tabulated_at_log(double log_s) const {
  const double ls0 = std::log(table_s_.front());
  if (log_s <= ls0) return table_w_.front() * std::exp(tail_exponent_ * (log_s - ls0));
  const double s = std::exp(log_s);
  if (s >= table_s_.back()) return table_w_.back();
  auto it = std::upper_bound(table_s_.begin(), table_s_.end(), s);
  const std::size_t i = static_cast<std::size_t>(it - table_s_.begin());
  const double t = (s - table_s_[i - 1]) / (table_s_[i] - table_s_[i - 1]);
  return table_w_[i - 1] + t * (table_w_[i] - table_w_[i - 1]);
}

double OmegaSpec::omega_at_log(double log_s) const {
  switch (family_) {
    case OmegaFamily::power: return std::exp(param_ * log_s);
    case OmegaFamily::constant: return param_;
    case OmegaFamily::inverse_log: return std::pow(1.0 - log_s, -1.0 - param_);
    case OmegaFamily::tabulated: return tabulated_at_log(log_s);
  }
  return 0.0;
}

double OmegaSpec::log_mu_at_log(double log_s) const {
  switch (family_) {
    case OmegaFamily::power: return (param_ - 1.0) * log_s;
    case OmegaFamily::constant: return std::log(param_) - log_s;
    case OmegaFamily::inverse_log: return (-1.0 - param_) * std::log(1.0 - log_s) - log_s;
    case OmegaFamily::tabulated: return std::log(tabulated_at_log(log_s)) - log_s;
  }
  return 0.0;
}

double OmegaSpec::mu_at_log(double log_s) const { return std::exp(log_mu_at_log(log_s)); }

std::string OmegaSpec::label() const {
  if (family_ == OmegaFamily::tabulated) return "tabulated(" + std::to_string(table_s_.size()) + ")";
  return to_string(family_) + "(" + fmt(param_) + ")";
}

double eval_omega(const OmegaSpec& spec, double s) {
  if (!within_range(spec, s)) throw DomainError("eval_omega: s=" + fmt(s) + " outside (0, s_max]");
  // Power and inverse_log are cheaper and exact enough directly in s.
  switch (spec.family()) {
    case OmegaFamily::power: return std::pow(s, spec.parameter());
    case OmegaFamily::constant: return spec.parameter();
    default: return spec.omega_at_log(std::log(s));
  }
}

double eval_mu(const OmegaSpec& spec, double s) { return eval_omega(spec, s) / s; }

AbsorptionPotential AbsorptionPotential::boundary(OmegaSpec spec) {
  AbsorptionPotential p;
  p.omega = std::move(spec);
  p.geometry = PotentialGeometry::boundary_distance;
  return p;
}

AbsorptionPotential AbsorptionPotential::line(OmegaSpec spec) {
  AbsorptionPotential p;
  p.omega = std::move(spec);
  p.geometry = PotentialGeometry::line_distance;
  return p;
}

AbsorptionPotential AbsorptionPotential::constant(double a) {
  if (!(a >= 0.0) || !std::isfinite(a)) throw ArgumentError("constant potential needs a >= 0");
  AbsorptionPotential p;
  p.geometry = PotentialGeometry::constant_coefficient;
  p.coefficient = a;
  return p;
}

double AbsorptionPotential::distance(std::span<const double> x) const {
  if (x.empty()) throw ArgumentError("distance: empty point");
  switch (geometry) {
    case PotentialGeometry::boundary_distance: return x.back();
    case PotentialGeometry::line_distance: {
      double r2 = 0.0;
      for (std::size_t i = 1; i < x.size(); ++i) r2 += x[i] * x[i];
      return std::sqrt(r2);
    }
    case PotentialGeometry::constant_coefficient: return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

double AbsorptionPotential::at(std::span<const double> x) const { return eval_h(*this, distance(x)); }

double eval_h(const AbsorptionPotential& pot, double distance) {
  if (pot.geometry == PotentialGeometry::constant_coefficient) return pot.coefficient;
  if (std::isnan(distance)) throw DomainError("eval_h: distance is NaN");
  if (distance <= 0.0) return 0.0;
  if (!pot.omega) throw ArgumentError("eval_h: degenerate potential without omega");
  const OmegaSpec& w = *pot.omega;
  // Past s_max omega is frozen at omega(s_max); mu = omega/d keeps decreasing.
  const double ls = std::log(distance);
  const double lw = std::log(w.omega_at_log(std::min(ls, std::log(w.s_max()))));
  const double mu = std::exp(lw - ls);
  if (!(mu <= pot.exponent_clamp)) return 0.0;
  return std::exp(-mu);
}

std::vector<double> geometric_grid(double s_min, double s_max, int n) {
  if (!(s_min > 0.0) || !(s_max > s_min) || n < 2) throw ArgumentError("geometric_grid: need 0 < s_min < s_max, n >= 2");
  std::vector<double> g(static_cast<std::size_t>(n));
  const double a = std::log(s_min), b = std::log(s_max);
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
  g.front() = s_min;
  g.back() = s_max;
  return g;
}

double worst_mu_ratio(const OmegaSpec& spec, int j_min, int j_max) {
  if (j_min > j_max) throw ArgumentError("worst_mu_ratio: empty j-range");
  double worst = 0.0;
  for (int j = j_min; j <= j_max; ++j) {
    const double r = std::exp(spec.log_mu_at_log(-(j - 1) * kLn2) - spec.log_mu_at_log(-j * kLn2));
    worst = std::max(worst, r);
  }
  return worst;
}

bool AdmissibilityReport::admissible_for_chain() const {
  return omega_positive && omega_monotone && mu_monotone && mu_blows_up && ratio_condition;
}

AdmissibilityReport check_admissibility(const OmegaSpec& spec, std::span<const double> grid,
                                        std::optional<TechnicalBound> bound) {
  if (grid.size() < 16) throw ArgumentError("check_admissibility: grid needs at least 16 points");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!within_range(spec, grid[i])) throw ArgumentError("check_admissibility: grid point outside (0, s_max]");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw ArgumentError("check_admissibility: grid not strictly increasing");
  }

  AdmissibilityReport r;
  const std::size_t n = grid.size();
  std::vector<double> w(n), lmu(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ls = std::log(grid[i]);
    w[i] = spec.omega_at_log(ls);
    lmu[i] = spec.log_mu_at_log(ls);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(w[i] > 0.0)) r.omega_positive = false;
    if (i == 0) continue;
    if (w[i] < w[i - 1] * (1.0 - 1e-14)) r.omega_monotone = false;
    if (!(lmu[i] < lmu[i - 1])) r.mu_monotone = false;
  }
  if (!r.omega_positive) r.violations.push_back("omega not positive on the grid");
  if (!r.omega_monotone) r.violations.push_back("omega not nondecreasing on the grid");
  if (!r.mu_monotone) r.violations.push_back("mu not strictly decreasing on the grid");

  // Trends toward s -> 0, judged on the four smallest samples plus overall span.
  for (std::size_t i = 1; i < 4; ++i) {
    if (!(lmu[i] < lmu[i - 1])) r.mu_blows_up = false;
    if (!(w[i] > w[i - 1])) r.omega_vanishes = false;
  }
  if (!(lmu.front() - lmu.back() > std::log(2.0))) r.mu_blows_up = false;
  if (!(w.front() < 0.5 * w.back())) r.omega_vanishes = false;
  if (!r.mu_blows_up) r.violations.push_back("mu does not blow up as s -> 0 (sampled)");
  if (!r.omega_vanishes) r.violations.push_back("omega does not vanish as s -> 0 (sampled)");

  if (bound) {
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::pow(grid[i], bound->gamma1) > w[i] || !(w[i] < bound->omega0)) ok = false;
    }
    r.technical_bound = ok;
    if (!ok) r.violations.push_back("technical bound s^gamma1 <= omega < omega0 fails");
  }

  // j-range: 2^{-j+1} <= s_max and 2^{-j} >= s_min, j >= 8.
  r.ratio_j_min = std::max(8, static_cast<int>(std::ceil(1.0 - std::log2(spec.s_max()) - 1e-12)));
  r.ratio_j_max = static_cast<int>(std::floor(-std::log2(grid.front()) + 1e-12));
  if (r.ratio_j_min <= r.ratio_j_max) {
    r.worst_ratio = worst_mu_ratio(spec, r.ratio_j_min, r.ratio_j_max);
    r.ratio_condition = *r.worst_ratio < 1.0;
    if (!r.ratio_condition) r.violations.push_back("estimated limsup of dyadic mu-ratio is >= 1");
  } else {
    r.violations.push_back("grid too narrow to estimate the dyadic mu-ratio (needs 2^-8 coverage)");
  }
  return r;
}

void to_json(nlohmann::json& j, const OmegaSpec& spec) {
  nlohmann::json params;
  switch (spec.family()) {
    case OmegaFamily::power: params = {{"gamma", spec.parameter()}}; break;
    case OmegaFamily::constant: params = {{"omega0", spec.parameter()}}; break;
    case OmegaFamily::inverse_log: params = {{"eps", spec.parameter()}}; break;
    case OmegaFamily::tabulated: params = {{"s", spec.table_s()}, {"omega", spec.table_omega()}}; break;
  }
  j = {{"family", to_string(spec.family())}, {"params", params}, {"s_max", spec.s_max()}};
}

OmegaSpec omega_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("family")) throw ConfigError("omega: expected object with \"family\"");
  const std::string fam = j.at("family").get<std::string>();
  const double s_max = j.value("s_max", kDefaultRho0);
  const nlohmann::json params = j.value("params", nlohmann::json::object());
  auto need = [&](const char* key) {
    if (!params.contains(key)) throw ConfigError("omega." + fam + ": missing params." + key);
    return params.at(key);
  };
  try {
    if (fam == "power") return OmegaSpec::power(need("gamma").get<double>(), s_max);
    if (fam == "constant") return OmegaSpec::constant(need("omega0").get<double>(), s_max);
    if (fam == "inverse_log") return OmegaSpec::inverse_log(need("eps").get<double>(), s_max);
    if (fam == "tabulated")
      return OmegaSpec::tabulated(need("s").get<std::vector<double>>(), need("omega").get<std::vector<double>>(), s_max);
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("omega: ") + e.what());
  }
  throw ConfigError("omega: unknown family \"" + fam + "\"");
}

void from_json(const nlohmann::json& j, OmegaSpec& spec) { spec = omega_from_json(j); }

void to_json(nlohmann::json& j, const AbsorptionPotential& pot) {
  switch (pot.geometry) {
    case PotentialGeometry::boundary_distance: j = {{"geometry", "boundary_distance"}}; break;
    case PotentialGeometry::line_distance: j = {{"geometry", "line_distance"}}; break;
    case PotentialGeometry::constant_coefficient: j = {{"geometry", "constant"}, {"a", pot.coefficient}}; break;
  }
  if (pot.omega) j["omega"] = *pot.omega;
  j["exponent_clamp"] = pot.exponent_clamp;
}

AbsorptionPotential potential_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("potential: expected object");
  const std::string geo = j.value("geometry", std::string("boundary_distance"));
  AbsorptionPotential p;
  if (geo == "constant") {
    const double a = j.value("a", 1.0);
    if (!(a >= 0.0)) throw ConfigError("potential: a must be >= 0");
    p = AbsorptionPotential::constant(a);
  } else if (geo == "boundary_distance" || geo == "line_distance") {
    if (!j.contains("omega")) throw ConfigError("potential: degenerate geometry needs \"omega\"");
    OmegaSpec w = omega_from_json(j.at("omega"));
    p = geo == "boundary_distance" ? AbsorptionPotential::boundary(w) : AbsorptionPotential::line(w);
  } else {
    throw ConfigError("potential: unknown geometry \"" + geo + "\"");
  }
  p.exponent_clamp = j.value("exponent_clamp", kDefaultExponentClamp);
  if (!(p.exponent_clamp > 0.0)) throw ConfigError("potential: exponent_clamp must be positive");
  return p;
}

void to_json(nlohmann::json& j, const AdmissibilityReport& r) {
  j = {{"omega_positive", r.omega_positive},
       {"omega_monotone", r.omega_monotone},
       {"mu_monotone", r.mu_monotone},
       {"mu_blows_up", r.mu_blows_up},
       {"omega_vanishes", r.omega_vanishes},
       {"ratio_condition", r.ratio_condition},
       {"ratio_estimated_over_j", {r.ratio_j_min, r.ratio_j_max}},
       {"violations", r.violations}};
  j["worst_ratio_estimated"] = r.worst_ratio ? nlohmann::json(*r.worst_ratio) : nlohmann::json(nullptr);
  j["technical_bound"] = r.technical_bound ? nlohmann::json(*r.technical_bound) : nlohmann::json(nullptr);
}

}  // namespace dinilab
