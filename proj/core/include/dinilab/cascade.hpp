#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dinilab/dini.hpp"
#include "dinilab/potentials.hpp"

namespace dinilab {

/// Free constants of the propagation chain. All default to 1 with zero offsets; with
/// derive_offsets the offsets come from the defining relations of tau_j instead:
///   c1 = y1_0 + (ln alpha  + ln2 (3-p)/(p-1)) / sqrt(lambda1)
///   c2 =        (ln alpha1 + ln2 (3-p)/(p-1)) / sqrt(lambda1)
struct ChainConstants {
  double lambda1 = 0.0;  // 0: taken from eigenpair_halfball(N)
  double alpha = 1.0, alpha1 = 1.0, y1_0 = 1.0, beta = 1.0, beta1 = 1.0;
  double c1 = 0.0, c2 = 0.0;
  bool derive_offsets = false;

  /// Multiplies every free constant (alpha, alpha1, y1_0, beta, beta1, c1, c2) by f.
  ChainConstants scaled(double f) const;
  /// Offsets actually used for the given p and lambda1.
  std::pair<double, double> offsets(double p, double lambda1) const;
};

struct ChainRow {
  int j = 0;
  double r = 0.0, mu = 0.0;
  double log_a = 0.0, a = 0.0;  // a = exp(-mu), may underflow; log kept exactly
  double log_A = 0.0, A = 0.0;
  double log_K = 0.0, K = 0.0;
  double tau = 0.0;       // body term (offset c2)
  double tau_head = 0.0;  // the same index as the head of a chain (offset c1)
  double partial_sum = 0.0;  // sum_{i=j_start}^{j-1} tau_i + tau_head_j
  bool sandwich = false;     // r dmu/(sqrt(l1)(p-1)) <= tau <= 2 r dmu/(sqrt(l1)(p-1))
  bool beta_ok = false;      // tau > beta1 r
};

enum class ChainVerdictKind { reaches_distance, bounded };

struct ChainVerdict {
  ChainVerdictKind kind = ChainVerdictKind::bounded;
  double g = 1.0;
  /// reaches_distance: "explicit" when some partial sum within j_max exceeds g;
  /// "dini_divergence" when the sum is certified unbounded by the divergent Dini
  /// integral and the lower bound sum tau >= ae1 int omega/s, with jbar located by
  /// continuing the closed-form chain past j_max.
  std::string certificate;
  std::optional<int> jbar;
  double sum_at_jbar = 0.0;
  /// bounded: extrapolated total and method
  double total = 0.0;
  std::string method;
  double fitted_ratio = 0.0;
};

struct CascadeChain {
  double p = 2.0;
  int N = 2;
  int j_start = 2, j_max = 64;
  ChainConstants constants;
  double lambda1 = 0.0;
  double c1_used = 0.0, c2_used = 0.0;
  std::string omega_label;
  std::vector<ChainRow> rows;
  double ae = 0.0;   // max mu(r_{j-1})/mu(r_j) over the chain range
  double ae1 = 0.0;  // (1 - ae)/(sqrt(lambda1)(p-1))
  int j_prime = 0;   // first index from which the sandwich holds for all later rows
  bool sandwich_all = false;
  ChainVerdict verdict;
};

struct ChainOptions {
  ChainConstants constants;
  DiniOptions dini;
  int extension_limit = 1 << 20;  // largest index tried when locating jbar past j_max
};

/// Builds r_j, a_j, A_j, K_j, tau_j for j in [j_start, j_max] and the propagation verdict.
/// Requires 1 < p < p_critical(N) and an omega admissible for the chain (AdmissibilityError).
CascadeChain build_chain(const OmegaSpec& spec, double p, int N, int j_start, int j_max, double g,
                         const ChainOptions& opts = {});

struct LowerBoundCheck {
  double ae1 = 0.0;
  /// windows anchored at i = j_start + 1: sum_{k=i}^{j} tau_k and ae1 int_{r_j}^{r_{i-1}} omega/s ds
  std::vector<int> window_end;
  std::vector<double> lhs_sums, rhs_integrals;
  bool holds = false;  // over every window i <= j inside the chain
  int windows_checked = 0;
  int windows_failed = 0;
};

LowerBoundCheck chain_sum_lowerbound(const CascadeChain& chain, const OmegaSpec& spec);

struct ScheduleRow {
  int j = 0;
  double log_Kbar = 0.0;  // e^j
  double mu = 0.0;        // mu(s_j)
  double s = 0.0, log_s = 0.0;
  double tau = 0.0;
  bool bound_348 = false;  // (theta/2) ln Kbar <= kappa mu(s_j) <= theta ln Kbar
  bool bound_349 = false;  // s_j <= C3 e^{-j}
  bool past_j_prime = false;
};

struct PhiRow {
  int n = 0;  // j - i
  bool available = false;  // C3 e^{-n} <= s_max
  double phi = 0.0;
  double budget = 0.0;  // delta + C2/C3 Phi
  bool fits = false;    // budget <= rho0/2
};

struct SufficiencySchedule {
  static constexpr double theta = 0.18393972058572117;  // 1/(2e)
  double p = 2.0, nu = 1.0, C_nu = 1.0, delta = 0.05, rho0 = 0.5;
  double c_tilde = 1.0, c_bar = 1.0, omega0 = 0.0;
  double kappa = 0.0;  // 2/(p-1) + nu
  double C2 = 0.0, C3 = 0.0;
  double j_prime = 0.0;  // -inf when C_nu <= 1
  std::vector<ScheduleRow> rows;
  bool diverges = false;  // Dini-divergent omega: Phi unbounded
  DiniVerdict dini;
  std::vector<PhiRow> phi;
  std::optional<int> j0_star;
  std::optional<int> j1;  // first j with delta >= K_j^{-(p-1)}
};

struct ScheduleOptions {
  double c_tilde = 1.0;
  double c_bar = 1.0;
  std::optional<double> omega0;  // default omega(s_max)
  int phi_n_max = 40;
  DiniOptions dini;
};

/// s_j from C(nu) h(s_j)^{-kappa} = Kbar_j^theta by bisection in ln s, tau_j = 2 c~ s_j (1-theta) e^j,
/// Phi(n) for n = 0..phi_n_max. Throws RangeError when some j has no bracket inside (0, s_max].
SufficiencySchedule build_sufficiency_schedule(const OmegaSpec& spec, double p, double nu, double C_nu,
                                               double delta, double rho0, int j_min, int j_max,
                                               const ScheduleOptions& opts = {});

struct BudgetReport {
  bool diverges = false;
  std::vector<double> g_list;  // half-width budgets compared against delta + C2/C3 Phi
  struct Row {
    int n = 0;
    bool available = false;
    double phi = 0.0, budget = 0.0;
    std::vector<bool> fits;
  };
  std::vector<Row> rows;
  std::vector<double> shell_evidence;  // divergent specs
};

BudgetReport schedule_budget_report(const SufficiencySchedule& schedule, const std::vector<double>& g_list);

void to_json(nlohmann::json& j, const ChainConstants& c);
void to_json(nlohmann::json& j, const ChainVerdict& v);
void to_json(nlohmann::json& j, const CascadeChain& c);
void to_json(nlohmann::json& j, const LowerBoundCheck& c);
void to_json(nlohmann::json& j, const SufficiencySchedule& s);
ChainConstants chain_constants_from_json(const nlohmann::json& j);

}  // namespace dinilab
