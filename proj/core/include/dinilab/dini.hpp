#pragma once

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "dinilab/potentials.hpp"

namespace dinilab {

/// Frozen shell-decay test shared by the Dini classifier and the integrability criterion.
struct DecayPolicy {
  double ratio_threshold = 0.95;  // fitted ratio at or above this => non-summable
  int window = 8;                 // number of trailing shells used by the fit
};

enum class ShellState { undecided, converges, diverges };

struct ShellAssessment {
  ShellState state = ShellState::undecided;
  double fitted_ratio = 0.0;   // exp(slope) of a least-squares fit of ln I_k over the window
  double tail_estimate = 0.0;  // I_last * r / (1 - r) when decaying
  bool nondecreasing = false;  // every step in the window was >= the previous one
};

/// Applies the decay policy to the shell contributions seen so far. Converges only
/// once the extrapolated tail is at most rel_tol times the running sum.
ShellAssessment assess_shells(std::span<const double> shells, const DecayPolicy& policy, double rel_tol);

enum class DiniKind { converges, diverges };

struct DiniVerdict {
  DiniKind kind = DiniKind::diverges;
  double value = 0.0;  // integral estimate, tail included (converges only)
  double error = 0.0;  // tail estimate plus accumulated quadrature error
  double fitted_ratio = 0.0;
  int shells_used = 0;
  /// Contribution of condensed shell m: s in [c 2^{-(2^{m+1}-1)}, c 2^{-(2^m-1)}].
  std::vector<double> shells;
  DecayPolicy policy;
  double rel_tol = 0.0;

  bool converges() const noexcept { return kind == DiniKind::converges; }
};

struct DiniOptions {
  int max_shells = 64;
  double rel_tol = 1e-8;
  DecayPolicy policy;
};

/// int_lower^upper omega(s)/s ds by adaptive Gauss-Kronrod in ln s (relative target 1e-10).
double dini_integral(const OmegaSpec& spec, double lower, double upper);

/// Classifies int_0^c omega(s)/s ds.
///
/// Plain dyadic shells of a convergent integral decay only algebraically for the
/// inverse-log family, so the shells here are Cauchy-condensed: shell m spans
/// log2(c/s) in [2^m - 1, 2^{m+1} - 1]. Summability is unchanged (omega is monotone)
/// and the condensed contributions decay geometrically exactly when the integral
/// converges. Throws IndeterminateError when max_shells pass without a verdict.
DiniVerdict classify_dini(const OmegaSpec& spec, double c, const DiniOptions& opts = {});

/// As classify_dini with c given by its logarithm (c may underflow a double).
DiniVerdict classify_dini_log(const OmegaSpec& spec, double log_c, const DiniOptions& opts = {});

struct PhiValue {
  bool diverges = false;
  double value = 0.0;  // valid when !diverges
  double error = 0.0;
  DiniVerdict verdict;
};

/// Phi(s) = int_0^{C3 e^{-s}} omega(r)/r dr. Throws DomainError unless C3 e^{-s} <= s_max.
PhiValue phi_tail(const OmegaSpec& spec, double s, double C3, const DiniOptions& opts = {});

void to_json(nlohmann::json& j, const DecayPolicy& p);
void to_json(nlohmann::json& j, const DiniVerdict& v);

}  // namespace dinilab
