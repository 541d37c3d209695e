#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace dinilab {

/// Default upper validity bound of omega when a config does not give one.
inline constexpr double kDefaultRho0 = 0.5;

/// Exponents above this make exp(-mu) underflow in double precision.
inline constexpr double kDefaultExponentClamp = 700.0;

enum class OmegaFamily { power, constant, inverse_log, tabulated };

std::string to_string(OmegaFamily f);

/// Degeneracy rate omega(s) on (0, s_max].
///
/// Families:
///  - power:       omega(s) = s^gamma,            0 < gamma <= 1
///  - constant:    omega(s) = omega0,             omega0 > 0
///  - inverse_log: omega(s) = ln(e/s)^(-1-eps),   eps >= 0, s_max < e
///  - tabulated:   monotone piecewise-linear through sorted samples; below the
///                 first sample a power tail s^g through the first two samples
///                 (g clamped to [0, 1]), above the last sample held constant.
///
/// Every evaluation is also available from ln(s), so that arguments far below
/// the smallest positive double (deep dyadic shells) stay representable.
class OmegaSpec {
 public:
  static OmegaSpec power(double gamma, double s_max = kDefaultRho0);
  static OmegaSpec constant(double omega0, double s_max = kDefaultRho0);
  static OmegaSpec inverse_log(double eps, double s_max = kDefaultRho0);
  static OmegaSpec tabulated(std::vector<double> s, std::vector<double> omega,
                             double s_max = kDefaultRho0);

  OmegaFamily family() const noexcept { return family_; }
  double s_max() const noexcept { return s_max_; }
  /// gamma, omega0 or eps depending on the family; 0 for tabulated.
  double parameter() const noexcept { return param_; }
  const std::vector<double>& table_s() const noexcept { return table_s_; }
  const std::vector<double>& table_omega() const noexcept { return table_w_; }

  /// Same family and parameters with a different validity bound.
  OmegaSpec with_s_max(double s_max) const;

  /// omega(exp(log_s)); no range check.
  double omega_at_log(double log_s) const;
  /// ln mu(exp(log_s)) = ln omega - log_s; no range check.
  double log_mu_at_log(double log_s) const;
  /// mu(exp(log_s)); may overflow to +inf.
  double mu_at_log(double log_s) const;

  /// Short human-readable label, e.g. "power(0.5)".
  std::string label() const;

 private:
  OmegaSpec() = default;
  double tabulated_at_log(double log_s) const;

  OmegaFamily family_ = OmegaFamily::power;
  double param_ = 0.5;
  double s_max_ = kDefaultRho0;
  std::vector<double> table_s_;
  std::vector<double> table_w_;
  double tail_exponent_ = 0.0;
};

/// omega(s); throws DomainError unless 0 < s <= s_max.
double eval_omega(const OmegaSpec& spec, double s);
/// mu(s) = omega(s)/s; throws DomainError unless 0 < s <= s_max.
double eval_mu(const OmegaSpec& spec, double s);

enum class PotentialGeometry { boundary_distance, line_distance, constant_coefficient };

/// Absorption potential H(x).
///
/// boundary_distance: H = h_omega(x_N); line_distance: H = h_omega(|x'|) with
/// x' = (x_2, ..., x_N); constant_coefficient: H = a. Beyond s_max omega is held
/// at omega(s_max), which keeps h nondecreasing in the distance.
struct AbsorptionPotential {
  std::optional<OmegaSpec> omega;
  PotentialGeometry geometry = PotentialGeometry::boundary_distance;
  double coefficient = 1.0;  // value of H for constant_coefficient
  double exponent_clamp = kDefaultExponentClamp;

  static AbsorptionPotential boundary(OmegaSpec spec);
  static AbsorptionPotential line(OmegaSpec spec);
  static AbsorptionPotential constant(double a);

  bool is_degenerate() const noexcept { return geometry != PotentialGeometry::constant_coefficient; }

  /// Distance from a point to the degeneracy set under this geometry.
  double distance(std::span<const double> x) const;
  /// H at a point (uses distance()).
  double at(std::span<const double> x) const;
};

/// h_omega(distance) for the potential; 0 at distance 0 and when mu exceeds the clamp.
double eval_h(const AbsorptionPotential& pot, double distance);

/// Geometric grid of n points from s_min to s_max inclusive (increasing).
std::vector<double> geometric_grid(double s_min, double s_max, int n);

/// Optional constants of the technical bound s^gamma1 <= omega(s) < omega0.
struct TechnicalBound {
  double gamma1 = 0.5;
  double omega0 = 1.0;
};

struct AdmissibilityReport {
  bool omega_positive = true;
  bool omega_monotone = true;   // nondecreasing on the grid
  bool mu_monotone = true;      // strictly decreasing on the grid
  bool mu_blows_up = true;      // sampled trend toward s -> 0
  bool omega_vanishes = true;   // sampled trend toward s -> 0
  std::optional<bool> technical_bound;
  /// max over the dyadic j-range (j >= 8) of mu(2^{-j+1}) / mu(2^{-j}); an
  /// estimate of the limsup, not the limsup itself.
  std::optional<double> worst_ratio;
  int ratio_j_min = 0;
  int ratio_j_max = -1;
  bool ratio_condition = false;  // worst_ratio < 1
  std::vector<std::string> violations;

  /// Conditions needed by the propagation chain: monotone omega/mu, mu -> inf, ratio < 1.
  bool admissible_for_chain() const;
};

/// Samples the structural conditions on omega over a geometric grid (>= 16 points).
AdmissibilityReport check_admissibility(const OmegaSpec& spec, std::span<const double> grid,
                                        std::optional<TechnicalBound> bound = std::nullopt);

/// Worst dyadic mu-ratio mu(2^{-j+1})/mu(2^{-j}) for j in [j_min, j_max].
double worst_mu_ratio(const OmegaSpec& spec, int j_min, int j_max);

void to_json(nlohmann::json& j, const OmegaSpec& spec);
void from_json(const nlohmann::json& j, OmegaSpec& spec);
OmegaSpec omega_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const AbsorptionPotential& pot);
AbsorptionPotential potential_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const AdmissibilityReport& r);

}  // namespace dinilab
