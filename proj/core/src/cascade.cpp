#include "dinilab/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "dinilab/errors.hpp"
#include "dinilab/oracles.hpp"

namespace dinilab {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

double log_sum_exp(double a, double b) {
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

std::string fmtg(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

ChainConstants ChainConstants::scaled(double f) const {
  ChainConstants c = *this;
  c.alpha *= f;
  c.alpha1 *= f;
  c.y1_0 *= f;
  c.beta *= f;
  c.beta1 *= f;
  c.c1 *= f;
  c.c2 *= f;
  return c;
}

std::pair<double, double> ChainConstants::offsets(double p, double lambda1) const {
  if (!derive_offsets) return {c1, c2};
  const double sl = std::sqrt(lambda1);
  const double shift = kLn2 * (3.0 - p) / (p - 1.0);
  return {y1_0 + (std::log(alpha) + shift) / sl, (std::log(alpha1) + shift) / sl};
}

CascadeChain build_chain(const OmegaSpec& spec, double p, int N, int j_start, int j_max, double g,
                         const ChainOptions& opts) {
  if (N != 2 && N != 3) throw ArgumentError("build_chain: N must be 2 or 3");
  const double pc = p_critical(N);
  if (!(p > 1.0 && p < pc)) throw ArgumentError("build_chain: p must lie in (1, " + fmtg(pc) + ")");
  if (!(g > 0.0)) throw ArgumentError("build_chain: g must be > 0");
  const int j_floor = 1 + static_cast<int>(std::ceil(-std::log2(spec.s_max()) - 1e-12));
  if (j_start < std::max(1, j_floor))
    throw ArgumentError("build_chain: j_start must satisfy r_{j_start-1} <= s_max (j_start >= " +
                        std::to_string(std::max(1, j_floor)) + ")");
  const DecayPolicy& pol = opts.dini.policy;
  if (j_max < j_start + pol.window) throw ArgumentError("build_chain: need at least window+1 indices");

  const auto grid = geometric_grid(std::ldexp(1.0, -j_max), spec.s_max(), 64);
  const auto adm = check_admissibility(spec, grid);
  if (!adm.admissible_for_chain()) {
    std::string why;
    for (const auto& v : adm.violations) {
      if (v.find("vanish") != std::string::npos) continue;  // not needed by the chain
      why += (why.empty() ? "" : "; ") + v;
    }
    throw AdmissibilityError("build_chain: omega not admissible: " + why);
  }

  CascadeChain ch;
  ch.p = p;
  ch.N = N;
  ch.j_start = j_start;
  ch.j_max = j_max;
  ch.constants = opts.constants;
  ch.lambda1 = opts.constants.lambda1 > 0 ? opts.constants.lambda1 : eigenpair_halfball(N).lambda1;
  std::tie(ch.c1_used, ch.c2_used) = opts.constants.offsets(p, ch.lambda1);
  ch.omega_label = spec.label();
  const double denom = std::sqrt(ch.lambda1) * (p - 1.0);

  // r_j (mu_j - mu_{j-1}) = omega(r_j) - omega(r_{j-1})/2, free of cancellation in mu
  auto body = [&](int j) {
    return (spec.omega_at_log(-j * kLn2) - 0.5 * spec.omega_at_log(-(j - 1) * kLn2)) / denom;
  };

  double S = 0.0;  // sum of body terms (offset c2) up to j-1
  ch.ae = 0.0;
  for (int j = j_start; j <= j_max; ++j) {
    ChainRow row;
    row.j = j;
    const double ls = -j * kLn2;
    row.r = std::ldexp(1.0, -j);
    const double lmu = spec.log_mu_at_log(ls);
    row.mu = std::exp(lmu);
    row.log_a = -row.mu;
    row.a = std::exp(-row.mu);
    row.log_A = (-row.mu + 2.0 * ls) / (p - 1.0);
    row.A = std::exp(row.log_A);
    row.log_K = -row.log_A + (N - 1) * ls;
    row.K = std::exp(row.log_K);
    const double b = body(j);
    row.tau = b + ch.c2_used * row.r;
    row.tau_head = b + ch.c1_used * row.r;
    row.partial_sum = S + row.tau_head;
    S += row.tau;
    const double tol = 1e-12 * std::abs(b);
    row.sandwich = b <= row.tau + tol && row.tau <= 2.0 * b + tol;
    row.beta_ok = row.tau > ch.constants.beta1 * row.r;
    ch.ae = std::max(ch.ae, std::exp(spec.log_mu_at_log(ls + kLn2) - lmu));
    ch.rows.push_back(row);
  }
  ch.ae1 = (1.0 - ch.ae) / denom;
  ch.sandwich_all = std::all_of(ch.rows.begin(), ch.rows.end(), [](const ChainRow& r) { return r.sandwich; });
  ch.j_prime = j_max + 1;
  for (int k = static_cast<int>(ch.rows.size()) - 1; k >= 0 && ch.rows[static_cast<std::size_t>(k)].sandwich; --k)
    ch.j_prime = ch.rows[static_cast<std::size_t>(k)].j;

  ChainVerdict& v = ch.verdict;
  v.g = g;
  for (const auto& row : ch.rows) {
    if (row.partial_sum > g) {
      v.kind = ChainVerdictKind::reaches_distance;
      v.certificate = "explicit";
      v.jbar = row.j;
      v.sum_at_jbar = row.partial_sum;
      return ch;
    }
  }

  std::vector<double> taus;
  for (const auto& row : ch.rows) taus.push_back(row.tau);
  const auto st = assess_shells(taus, pol, 0.0);
  v.fitted_ratio = st.fitted_ratio;
  if (st.fitted_ratio < pol.ratio_threshold && !st.nondecreasing) {
    const double r = st.fitted_ratio;
    v.kind = ChainVerdictKind::bounded;
    v.total = S + taus.back() * r / (1.0 - r);
    v.method = "geometric tail: tau_last*r/(1-r), r fitted over last " + std::to_string(pol.window) +
               " terms (r=" + fmtg(r) + ")";
    return ch;
  }

  // No geometric decay: decide with the Dini integral below r_{j_start-1}.
  const DiniVerdict dv = classify_dini_log(spec, -(j_start - 1) * kLn2, opts.dini);
  if (dv.converges()) {
    // tau_i <= 2 omega(r_i)/denom + c2 r_i and sum_{i>J} omega(r_i) <= (1/ln2) int_0^{r_J} omega/s ds
    const DiniVerdict tail = classify_dini_log(spec, -j_max * kLn2, opts.dini);
    v.kind = ChainVerdictKind::bounded;
    v.total = S + 2.0 / denom * tail.value / kLn2 + std::max(0.0, ch.c2_used) * std::ldexp(1.0, -j_max);
    v.method = "upper bound: partial sum + 2/(sqrt(lambda1)(p-1)) * Dini tail / ln2";
    return ch;
  }
  const auto lb = chain_sum_lowerbound(ch, spec);
  if (!lb.holds)
    throw IndeterminateError("build_chain: Dini integral diverges but the chain lower bound failed; "
                             "raise j_max",
                             dv.shells_used);
  v.kind = ChainVerdictKind::reaches_distance;
  v.certificate = "dini_divergence";
  double Sx = S;
  for (int j = j_max + 1; j <= opts.extension_limit; ++j) {
    const double b = body(j);
    const double r = std::ldexp(1.0, -j);
    if (Sx + b + ch.c1_used * r > g) {
      v.jbar = j;
      v.sum_at_jbar = Sx + b + ch.c1_used * r;
      break;
    }
    Sx += b + ch.c2_used * r;
  }
  return ch;
}

LowerBoundCheck chain_sum_lowerbound(const CascadeChain& ch, const OmegaSpec& spec) {
  LowerBoundCheck out;
  out.ae1 = ch.ae1;
  const std::size_t n = ch.rows.size();
  // I_k = int_{r_k}^{r_{k-1}} omega/s ds, one per row
  std::vector<double> I(n);
  for (std::size_t k = 0; k < n; ++k) {
    const int j = ch.rows[k].j;
    I[k] = dini_integral(spec, std::ldexp(1.0, -j), std::ldexp(1.0, -(j - 1)));
  }
  out.holds = true;
  for (std::size_t i = 0; i < n; ++i) {
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t j = i; j < n; ++j) {
      lhs += ch.rows[j].tau;
      rhs += ch.ae1 * I[j];
      ++out.windows_checked;
      if (lhs < rhs * (1.0 - 1e-10)) {
        ++out.windows_failed;
        out.holds = false;
      }
      if (i == 0) {
        out.window_end.push_back(ch.rows[j].j);
        out.lhs_sums.push_back(lhs);
        out.rhs_integrals.push_back(rhs);
      }
    }
  }
  return out;
}

SufficiencySchedule build_sufficiency_schedule(const OmegaSpec& spec, double p, double nu, double C_nu,
                                               double delta, double rho0, int j_min, int j_max,
                                               const ScheduleOptions& opts) {
  if (!(p > 1.0)) throw ArgumentError("schedule: p must be > 1");
  if (!(nu > 0.0 && nu <= 1.0)) throw ArgumentError("schedule: nu must lie in (0, 1]");
  if (!(C_nu > 0.0)) throw ArgumentError("schedule: C(nu) must be > 0");
  if (!(delta > 0.0) || !(rho0 > 0.0)) throw ArgumentError("schedule: delta and rho0 must be > 0");
  if (j_min < 0 || j_max < j_min || j_max > 700) throw ArgumentError("schedule: need 0 <= j_min <= j_max <= 700");

  SufficiencySchedule sc;
  const double theta = SufficiencySchedule::theta;
  sc.p = p;
  sc.nu = nu;
  sc.C_nu = C_nu;
  sc.delta = delta;
  sc.rho0 = rho0;
  sc.c_tilde = opts.c_tilde;
  sc.c_bar = opts.c_bar;
  sc.kappa = 2.0 / (p - 1.0) + nu;
  sc.omega0 = opts.omega0 ? *opts.omega0 : eval_omega(spec, spec.s_max());
  sc.C3 = 2.0 * sc.kappa * sc.omega0 / theta;
  sc.C2 = 4.0 * (1.0 - theta) * sc.c_tilde * sc.kappa / theta;
  sc.j_prime = C_nu > 1.0 ? std::log(std::log(C_nu)) + std::log(1.0 / theta) + kLn2
                          : -std::numeric_limits<double>::infinity();

  const double ls_max = std::log(spec.s_max());
  for (int j = j_min; j <= j_max; ++j) {
    ScheduleRow row;
    row.j = j;
    row.log_Kbar = std::exp(static_cast<double>(j));
    const double target = (theta * row.log_Kbar - std::log(C_nu)) / sc.kappa;
    if (!(target > 0.0)) throw RangeError("schedule: no s_j for j=" + std::to_string(j) + " (target mu <= 0)");
    const double L = std::log(target);
    double hi = ls_max;
    if (!(spec.log_mu_at_log(hi) < L))
      throw RangeError("schedule: s_max too small to bracket s_j for j=" + std::to_string(j));
    double lo = hi - 1.0;
    while (!(spec.log_mu_at_log(lo) > L)) {
      lo = hi - 2.0 * (hi - lo);
      if (lo < -1e7) throw RangeError("schedule: could not bracket s_j for j=" + std::to_string(j));
    }
    double flo = spec.log_mu_at_log(lo), fhi = spec.log_mu_at_log(hi);
    for (int it = 0; it < 300 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = spec.log_mu_at_log(mid);
      if (!(fm < flo && fm > fhi))
        throw RangeError("schedule: s -> h(s)^{-kappa} not strictly monotone on the bracket (j=" + std::to_string(j) + ")");
      if (fm > L) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
        fhi = fm;
      }
    }
    row.log_s = 0.5 * (lo + hi);
    row.s = std::exp(row.log_s);
    row.mu = std::exp(spec.log_mu_at_log(row.log_s));
    row.tau = 2.0 * sc.c_tilde * row.s * (1.0 - theta) * row.log_Kbar;
    const double km = sc.kappa * row.mu;
    const double rt = 1e-10;
    row.bound_348 = 0.5 * theta * row.log_Kbar <= km * (1 + rt) && km <= theta * row.log_Kbar * (1 + rt);
    row.bound_349 = row.s <= sc.C3 * std::exp(-static_cast<double>(j)) * (1 + rt);
    row.past_j_prime = j >= sc.j_prime;
    sc.rows.push_back(row);
  }

  sc.dini = classify_dini(spec, spec.s_max(), opts.dini);
  sc.diverges = !sc.dini.converges();
  for (int n = 0; n <= opts.phi_n_max; ++n) {
    PhiRow r;
    r.n = n;
    r.available = std::log(sc.C3) - n <= ls_max + 1e-12;
    if (r.available) {
      if (sc.diverges) {
        r.phi = std::numeric_limits<double>::infinity();
      } else {
        r.phi = phi_tail(spec, n, sc.C3, opts.dini).value;
      }
      r.budget = delta + sc.C2 / sc.C3 * r.phi;
      r.fits = r.budget <= 0.5 * rho0;
      if (r.fits && !sc.j0_star) sc.j0_star = n;
    }
    sc.phi.push_back(r);
  }

  // j^(1): first j with delta >= K_j^{-(p-1)}, K_j from ln Kbar_j = ln c_bar + ln(K^{p+1} + K^2/delta)
  const double need = -std::log(delta) / (p - 1.0);
  for (const auto& row : sc.rows) {
    auto f = [&](double lk) { return std::log(sc.c_bar) + log_sum_exp((p + 1.0) * lk, 2.0 * lk - std::log(delta)); };
    double a = -100.0, b = row.log_Kbar + 100.0;
    if (f(a) > row.log_Kbar) continue;
    for (int it = 0; it < 200; ++it) {
      const double m = 0.5 * (a + b);
      (f(m) > row.log_Kbar ? b : a) = m;
    }
    if (0.5 * (a + b) >= need) {
      sc.j1 = row.j;
      break;
    }
  }
  return sc;
}

BudgetReport schedule_budget_report(const SufficiencySchedule& sc, const std::vector<double>& g_list) {
  BudgetReport rep;
  rep.g_list = g_list;
  rep.diverges = sc.diverges;
  if (sc.diverges) {
    rep.shell_evidence = sc.dini.shells;
    return rep;
  }
  for (const auto& r : sc.phi) {
    BudgetReport::Row row;
    row.n = r.n;
    row.available = r.available;
    row.phi = r.phi;
    row.budget = r.budget;
    for (double g : g_list) row.fits.push_back(r.available && r.budget <= g);
    rep.rows.push_back(row);
  }
  return rep;
}

void to_json(nlohmann::json& j, const ChainConstants& c) {
  j = {{"lambda1", c.lambda1}, {"alpha", c.alpha}, {"alpha1", c.alpha1}, {"y1_0", c.y1_0}, {"beta", c.beta},
       {"beta1", c.beta1},     {"c1", c.c1},       {"c2", c.c2},         {"derive_offsets", c.derive_offsets}};
}

ChainConstants chain_constants_from_json(const nlohmann::json& j) {
  ChainConstants c;
  c.lambda1 = j.value("lambda1", 0.0);
  c.alpha = j.value("alpha", 1.0);
  c.alpha1 = j.value("alpha1", 1.0);
  c.y1_0 = j.value("y1_0", 1.0);
  c.beta = j.value("beta", 1.0);
  c.beta1 = j.value("beta1", 1.0);
  c.c1 = j.value("c1", 0.0);
  c.c2 = j.value("c2", 0.0);
  c.derive_offsets = j.value("derive_offsets", false);
  if (!(c.alpha > 0 && c.alpha1 > 0 && c.beta > 0 && c.beta1 > 0 && c.lambda1 >= 0))
    throw ConfigError("constants: alpha, alpha1, beta, beta1 must be positive");
  return c;
}

void to_json(nlohmann::json& j, const ChainVerdict& v) {
  if (v.kind == ChainVerdictKind::reaches_distance) {
    j = {{"kind", "reaches_distance"}, {"g", v.g}, {"certificate", v.certificate}};
    j["jbar"] = v.jbar ? nlohmann::json(*v.jbar) : nlohmann::json(nullptr);
    j["sum_at_jbar"] = v.sum_at_jbar;
  } else {
    j = {{"kind", "bounded"}, {"g", v.g}, {"total", v.total}, {"method", v.method}};
  }
  j["fitted_ratio"] = v.fitted_ratio;
}

void to_json(nlohmann::json& j, const CascadeChain& c) {
  j = {{"omega", c.omega_label}, {"p", c.p},           {"N", c.N},           {"j_start", c.j_start},
       {"j_max", c.j_max},       {"lambda1", c.lambda1}, {"c1_used", c.c1_used}, {"c2_used", c.c2_used},
       {"ae", c.ae},             {"ae1", c.ae1},       {"j_prime", c.j_prime}, {"sandwich_all", c.sandwich_all},
       {"constants", c.constants}, {"verdict", c.verdict}};
}

void to_json(nlohmann::json& j, const LowerBoundCheck& c) {
  j = {{"ae1", c.ae1},
       {"holds", c.holds},
       {"windows_checked", c.windows_checked},
       {"windows_failed", c.windows_failed}};
}

void to_json(nlohmann::json& j, const SufficiencySchedule& s) {
  j = {{"theta", SufficiencySchedule::theta}, {"p", s.p}, {"nu", s.nu}, {"C_nu", s.C_nu}, {"delta", s.delta},
       {"rho0", s.rho0}, {"c_tilde", s.c_tilde}, {"c_bar", s.c_bar}, {"omega0", s.omega0}, {"kappa", s.kappa},
       {"C2", s.C2}, {"C3", s.C3}, {"diverges", s.diverges}};
  j["j_prime"] = std::isfinite(s.j_prime) ? nlohmann::json(s.j_prime) : nlohmann::json("-inf");
  j["j0_star"] = s.j0_star ? nlohmann::json(*s.j0_star) : nlohmann::json(nullptr);
  j["j1"] = s.j1 ? nlohmann::json(*s.j1) : nlohmann::json(nullptr);
}

}  // namespace dinilab
