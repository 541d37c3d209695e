#include "dinilab/dini.hpp"

#include <cmath>
#include <string>

#include "dinilab/errors.hpp"
#include "dinilab/quadrature.hpp"

namespace dinilab {

namespace {
constexpr double kLn2 = 0.69314718055994530942;
}

ShellAssessment assess_shells(std::span<const double> shells, const DecayPolicy& policy, double rel_tol) {
  ShellAssessment a;
  const int w = policy.window;
  const int n = static_cast<int>(shells.size());
  if (w < 2 || n < w) return a;

  double sum = 0.0;
  for (double v : shells) sum += v;
  const double last = shells[static_cast<std::size_t>(n - 1)];

  if (last == 0.0) {
    // contributions underflowed: nothing left to sum
    a.state = ShellState::converges;
    a.fitted_ratio = 0.0;
    return a;
  }

  a.nondecreasing = true;
  for (int k = n - w + 1; k < n; ++k)
    if (shells[static_cast<std::size_t>(k)] < shells[static_cast<std::size_t>(k - 1)]) a.nondecreasing = false;

  // least squares of ln I_k against k, positive entries only
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (int k = n - w; k < n; ++k) {
    const double v = shells[static_cast<std::size_t>(k)];
    if (!(v > 0.0)) continue;
    const double x = k, y = std::log(v);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++m;
  }
  if (m < 2) return a;
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  a.fitted_ratio = std::exp(slope);

  if (a.nondecreasing || a.fitted_ratio >= policy.ratio_threshold) {
    a.state = ShellState::diverges;
    return a;
  }
  a.tail_estimate = last * a.fitted_ratio / (1.0 - a.fitted_ratio);
  if (a.tail_estimate <= rel_tol * std::abs(sum)) a.state = ShellState::converges;
  return a;
}

double dini_integral(const OmegaSpec& spec, double lower, double upper) {
  if (!(lower > 0.0)) throw ArgumentError("dini_integral: lower must be > 0");
  if (!(upper >= lower)) throw ArgumentError("dini_integral: need lower <= upper");
  if (upper > spec.s_max() * (1 + 1e-15)) throw DomainError("dini_integral: upper exceeds s_max");
  if (upper == lower) return 0.0;
  QuadratureOptions q;
  q.rel_tol = 1e-10;
  const auto r = integrate([&](double x) { return spec.omega_at_log(x); }, std::log(lower), std::log(upper), q);
  return r.value;
}

DiniVerdict classify_dini_log(const OmegaSpec& spec, double log_c, const DiniOptions& opts) {
  if (!(log_c <= std::log(spec.s_max()) + 1e-12)) throw DomainError("classify_dini: c exceeds s_max");
  if (opts.max_shells < 16) throw ArgumentError("classify_dini: max_shells must be >= 16");

  DiniVerdict v;
  v.policy = opts.policy;
  v.rel_tol = opts.rel_tol;
  QuadratureOptions q;
  q.rel_tol = 1e-12;
  double quad_err = 0.0;

  for (int m = 0; m < opts.max_shells; ++m) {
    // t = ln(c/s); shell m spans t in [(2^m - 1) ln2, (2^{m+1} - 1) ln2]
    const double t0 = (std::ldexp(1.0, m) - 1.0) * kLn2;
    const double t1 = (std::ldexp(1.0, m + 1) - 1.0) * kLn2;
    const auto r = integrate([&](double t) { return spec.omega_at_log(log_c - t); }, t0, t1, q);
    v.shells.push_back(r.value);
    quad_err += r.error;
    v.shells_used = m + 1;

    const auto a = assess_shells(v.shells, opts.policy, opts.rel_tol);
    v.fitted_ratio = a.fitted_ratio;
    if (a.state == ShellState::diverges) {
      v.kind = DiniKind::diverges;
      return v;
    }
    if (a.state == ShellState::converges) {
      double sum = 0.0;
      for (double s : v.shells) sum += s;
      v.kind = DiniKind::converges;
      v.value = sum + a.tail_estimate;
      v.error = a.tail_estimate + quad_err;
      return v;
    }
  }
  throw IndeterminateError("classify_dini: no verdict within " + std::to_string(opts.max_shells) + " shells",
                           opts.max_shells);
}

DiniVerdict classify_dini(const OmegaSpec& spec, double c, const DiniOptions& opts) {
  if (!(c > 0.0)) throw DomainError("classify_dini: c must be > 0");
  if (c > spec.s_max() * (1 + 1e-15)) throw DomainError("classify_dini: c exceeds s_max");
  return classify_dini_log(spec, std::log(c), opts);
}

PhiValue phi_tail(const OmegaSpec& spec, double s, double C3, const DiniOptions& opts) {
  if (!(C3 > 0.0)) throw ArgumentError("phi_tail: C3 must be > 0");
  if (!(s >= 0.0)) throw ArgumentError("phi_tail: s must be >= 0");
  const double log_upper = std::log(C3) - s;
  if (log_upper > std::log(spec.s_max()) + 1e-12) throw DomainError("phi_tail: C3 e^{-s} exceeds s_max");
  PhiValue out;
  out.verdict = classify_dini_log(spec, log_upper, opts);
  out.diverges = !out.verdict.converges();
  if (!out.diverges) {
    out.value = out.verdict.value;
    out.error = out.verdict.error;
  }
  return out;
}

void to_json(nlohmann::json& j, const DecayPolicy& p) {
  j = {{"ratio_threshold", p.ratio_threshold}, {"window", p.window}};
}

void to_json(nlohmann::json& j, const DiniVerdict& v) {
  j = {{"kind", v.converges() ? "converges" : "diverges"},
       {"shells_used", v.shells_used},
       {"fitted_ratio", v.fitted_ratio},
       {"shells", v.shells},
       {"shell_scheme", "condensed: shell m spans log2(c/s) in [2^m-1, 2^(m+1)-1]"},
       {"policy", v.policy},
       {"rel_tol", v.rel_tol}};
  if (v.converges()) {
    j["value"] = v.value;
    j["error_bound"] = v.error;
  }
}

}  // namespace dinilab
