// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
// usage: dinilab_acceptance <work-dir>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "dinilab/cascade.hpp"
#include "dinilab/csv.hpp"
#include "dinilab/dini.hpp"
#include "dinilab/energy.hpp"
#include "dinilab/errors.hpp"
#include "dinilab/lab.hpp"
#include "dinilab/oracles.hpp"
#include "dinilab/parallel.hpp"
#include "dinilab/solver.hpp"

using namespace dinilab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char b[64];
  std::snprintf(b, sizeof b, f, v);
  return b;
}

using Table = std::vector<std::map<std::string, std::string>>;

Table read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::vector<std::string> head;
  Table t;
  auto split = [](const std::string& l) {
    std::vector<std::string> out;
    std::string cur;
    bool q = false;
    for (char ch : l) {
      if (ch == '"') q = !q;
      else if (ch == ',' && !q) out.push_back(std::move(cur)), cur.clear();
      else cur += ch;
    }
    out.push_back(cur);
    return out;
  };
  if (std::getline(in, line)) head = split(line);
  while (std::getline(in, line)) {
    const auto cells = split(line);
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < head.size() && i < cells.size(); ++i) row[head[i]] = cells[i];
    t.push_back(row);
  }
  return t;
}

ExperimentConfig config(Scenario s, const std::string& file) {
  return load_config(std::string(DINILAB_CONFIG_DIR) + "/" + file, s);
}

// ---------- criteria ----------

double blowup_error(int n) {
  ProblemSpec s;
  s.N = 1;
  s.p = 3.0;
  s.box = Box{{0.1}, {1.0}};
  s.potential = AbsorptionPotential::constant(1.0);
  s.bc = BoundaryData::profile_data([](std::span<const double> x) { return exact_1d_blowup(3.0, 1.0, x[0]); });
  const auto sys = discretize(s, {n});
  const auto r = newton_solve(sys, harmonic_solve(sys, 1.0));
  double e = 0.0;
  std::vector<double> x(1);
  for (std::size_t i = 1; i + 1 < r.field.size(); ++i) {
    r.field.coords(i, x);
    const double ex = exact_1d_blowup(3.0, 1.0, x[0]);
    e = std::max(e, std::abs(r.field.values[i] - ex) / ex);
  }
  return e;
}

Outcome c1() {
  const auto t0 = std::chrono::steady_clock::now();
  const double e1 = blowup_error(512), e2 = blowup_error(1023);
  const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {e1 <= 0.02 && e1 / e2 >= 3.5 && t < 10.0,
          "max rel error " + fmt("%.3g", e1) + " at 512 nodes, refinement factor " + fmt("%.3g", e1 / e2)};
}

Outcome c2() {
  const double m = kernel_normalization(2, 1.0, 1e4);
  auto P = [](double a, double b) { return poisson_kernel(KernelPoint{2, {a, b}, {0.0, 0.0}}); };
  const double x = 0.3, y = 0.7;
  std::vector<double> res;
  for (double h : {0.1, 0.05, 0.025, 0.0125})
    res.push_back(std::abs((P(x + h, y) + P(x - h, y) + P(x, y + h) + P(x, y - h) - 4 * P(x, y)) / (h * h)));
  double worst = INFINITY;
  for (std::size_t i = 1; i < res.size(); ++i) worst = std::min(worst, std::log2(res[i - 1] / res[i]));
  return {std::abs(m - 1.0) <= 1e-4 && worst >= 1.8,
          "normalization " + fmt("%.9f", m) + ", harmonicity order >= " + fmt("%.3f", worst)};
}

Outcome c3() {
  struct Row {
    OmegaSpec w;
    double truth;  // < 0: divergent
  };
  const double e = std::numbers::e;
  const std::vector<Row> rows = {
      {OmegaSpec::power(0.25), std::pow(0.5, 0.25) / 0.25},
      {OmegaSpec::power(0.5), std::pow(0.5, 0.5) / 0.5},
      {OmegaSpec::power(0.9), std::pow(0.5, 0.9) / 0.9},
      {OmegaSpec::inverse_log(0.0), -1},
      {OmegaSpec::inverse_log(0.5), std::pow(std::log(e / 0.5), -0.5) / 0.5},
      {OmegaSpec::inverse_log(1.0), std::pow(std::log(e / 0.5), -1.0) / 1.0},
      {OmegaSpec::constant(0.1), -1},
      {OmegaSpec::constant(1.0), -1}};
  const auto t0 = std::chrono::steady_clock::now();
  int ok = 0;
  double worst = 0.0;
  for (const auto& r : rows) {
    try {
      const auto v = classify_dini(r.w, 0.5);
      if (r.truth < 0) {
        ok += v.kind == DiniKind::diverges;
      } else if (v.converges()) {
        const double rel = std::abs(v.value - r.truth) / r.truth;
        worst = std::max(worst, rel);
        ok += rel <= 1e-6;
      }
    } catch (const Error&) {
    }
  }
  const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {ok == 8 && t < 1.0, std::to_string(ok) + "/8 classified, worst rel error " + fmt("%.2g", worst) + ", " +
                                  fmt("%.3f", t) + " s"};
}

Outcome c4() {
  const double a[2] = {0.0, 0.0};
  const auto one = AbsorptionPotential::constant(1.0);
  const bool lo = mv_integrability(2, 2.75, one, 1.0, a).finite;
  const bool hi = mv_integrability(2, 3.25, one, 1.0, a).finite;
  return {lo && !hi, std::string("p=2.75 ") + (lo ? "Finite" : "Infinite") + ", p=3.25 " + (hi ? "Finite" : "Infinite")};
}

ProblemSpec prop_problem(const AbsorptionPotential& pot) {
  ProblemSpec s;
  s.N = 2;
  s.p = 2.8;
  s.box = Box{{-1.0, 0.0}, {1.0, 2.0}};
  s.potential = pot;
  s.bc = BoundaryData::dirac({0.0}, 1.0);
  return s;
}

Outcome c5() {
  std::size_t sweep = 0;
  const auto reps = solve_sequence(prop_problem(AbsorptionPotential::boundary(OmegaSpec::power(0.5))),
                                   {1e1, 1e2, 1e3, 1e4, 1e5}, {64, 64});
  for (std::size_t j = 1; j < reps.size(); ++j) sweep += comparison_violations(reps[j - 1].field, reps[j].field, 1e-10);
  const std::vector<std::pair<AbsorptionPotential, AbsorptionPotential>> pairs = {
      {AbsorptionPotential::constant(0.5), AbsorptionPotential::constant(1.0)},
      {AbsorptionPotential::boundary(OmegaSpec::power(0.5)), AbsorptionPotential::boundary(OmegaSpec::power(0.9))},
      {AbsorptionPotential::boundary(OmegaSpec::constant(1.0)), AbsorptionPotential::boundary(OmegaSpec::constant(0.1))}};
  int pairs_ok = 0;
  for (const auto& [h1, h2] : pairs) {
    const auto s1 = discretize(prop_problem(h1), {64, 64});
    const auto s2 = discretize(prop_problem(h2), {64, 64});
    bool ordered = true;
    for (std::size_t i = 0; i < s1.H.size(); ++i) ordered = ordered && s1.H[i] <= s2.H[i];
    const auto u1 = solve_sequence(s1, {1e2, 1e4});
    const auto u2 = solve_sequence(s2, {1e2, 1e4});
    std::size_t v = 0;
    for (std::size_t j = 0; j < u1.size(); ++j) v += comparison_violations(u2[j].field, u1[j].field, 1e-10);
    pairs_ok += ordered && v == 0;
  }
  return {sweep == 0 && pairs_ok == 3,
          std::to_string(sweep) + " violations over 5 levels, " + std::to_string(pairs_ok) + "/3 potential pairs ordered"};
}

Outcome c6() {
  int cells = 0, held = 0;
  for (const auto& w : {OmegaSpec::power(0.5), OmegaSpec::inverse_log(0.0), OmegaSpec::constant(1.0)})
    for (double a : {0.5, 1.0, 2.0})
      for (double s : geometric_grid(1e-4, 0.5, 16)) {
        ++cells;
        held += check_ineq_330(w, a, s).holds;
      }
  return {cells == 144 && held == 144, std::to_string(held) + "/" + std::to_string(cells) + " cells hold"};
}

Outcome c7(const fs::path& work) {
  const auto dir = work / "c7";
  run_energy_audit(config(Scenario::energy_audit, "energy.json"), dir.string());
  const auto d3 = read_csv(dir / "energy_d3.csv");
  const auto sm = read_csv(dir / "energy_summary.csv");
  if (sm.empty()) return {false, "no summary"};
  const double spread = std::stod(sm[0].at("spread"));
  return {d3.size() == 5 && spread < 2.0,
          std::to_string(d3.size()) + " levels, d3 in [" + sm[0].at("d3_min") + ", " + sm[0].at("d3_max") +
              "], spread " + fmt("%.3f", spread)};
}

Outcome c8() {
  const auto t0 = std::chrono::steady_clock::now();
  struct Case {
    OmegaSpec w;
    ChainVerdictKind want;
  };
  const std::vector<Case> cases = {{OmegaSpec::constant(1.0), ChainVerdictKind::reaches_distance},
                                   {OmegaSpec::inverse_log(0.0), ChainVerdictKind::reaches_distance},
                                   {OmegaSpec::power(0.5), ChainVerdictKind::bounded}};
  int verdicts = 0, sandwich = 0, lower = 0, runs = 0;
  for (const auto& c : cases)
    for (double f : {1.0, 0.5, 2.0}) {
      ChainOptions o;
      o.constants = ChainConstants{}.scaled(f);
      const auto ch = build_chain(c.w, 2.0, 2, 2, 64, 1.0, o);
      ++runs;
      verdicts += ch.verdict.kind == c.want;
      sandwich += ch.sandwich_all;
      lower += chain_sum_lowerbound(ch, c.w).holds;
    }
  const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = verdicts == runs && sandwich == runs && lower == runs && t < 1.0;
  return {ok, std::to_string(verdicts) + "/" + std::to_string(runs) + " verdicts, sandwich " + std::to_string(sandwich) +
                  "/" + std::to_string(runs) + ", lower bound " + std::to_string(lower) + "/" + std::to_string(runs) +
                  ", " + fmt("%.3f", t) + " s"};
}

Outcome c9() {
  const auto sc = build_sufficiency_schedule(OmegaSpec::power(0.5), 2.0, 1.0, 1.0, 0.05, 0.5, 4, 30);
  int checked = 0, held = 0;
  for (const auto& r : sc.rows)
    if (r.past_j_prime) ++checked, held += r.bound_348;
  bool mono = true;
  double prev = INFINITY, last = INFINITY;
  for (const auto& ph : sc.phi) {
    if (!ph.available) continue;
    mono = mono && ph.phi <= prev;
    prev = last = ph.phi;
  }
  const auto cst = build_sufficiency_schedule(OmegaSpec::constant(1.0), 2.0, 1.0, 1.0, 0.05, 0.5, 4, 30);
  const bool theta = SufficiencySchedule::theta == 0.5 / std::numbers::e;
  const bool ok = checked > 0 && held == checked && mono && last < 1e-6 && sc.j0_star && cst.diverges && theta;
  return {ok, "two-sided bound " + std::to_string(held) + "/" + std::to_string(checked) + ", Phi monotone " +
                  (mono ? "yes" : "no") + " (last " + fmt("%.2g", last) + "), j0* " +
                  (sc.j0_star ? std::to_string(*sc.j0_star) : std::string("none")) + ", constant(1) " +
                  (cst.diverges ? "Diverges" : "not flagged") + ", theta exact " + (theta ? "yes" : "no")};
}

Outcome c10(const fs::path& work) {
  const auto dir = work / "c10";
  const auto t0 = std::chrono::steady_clock::now();
  run_propagation(config(Scenario::propagation, "propagation.json"), dir.string());
  const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::map<std::string, std::pair<double, std::string>> v;
  for (const auto& r : read_csv(dir / "propagation_verdict.csv")) v[r.at("omega")] = {std::stod(r.at("metric")), r.at("verdict")};
  if (!v.count("power(0.5)") || !v.count("constant(1)")) return {false, "missing rows"};
  const auto& pw = v["power(0.5)"];
  const auto& cs = v["constant(1)"];
  const bool ok = pw.first < cs.first && pw.second == "Plateau" && cs.second == "Propagating" && t < 300.0;
  return {ok, "power(0.5) " + pw.second + " " + fmt("%.3f", pw.first) + ", constant(1) " + cs.second + " " +
                  fmt("%.3f", cs.first) + ", " + fmt("%.1f", t) + " s"};
}

Outcome c11(const fs::path& work) {
  const std::vector<std::pair<Scenario, std::string>> all = {
      {Scenario::dini_check, "dini.json"},     {Scenario::kernel_check, "kernel.json"},
      {Scenario::solve, "solve_1d.json"},      {Scenario::propagation, "propagation.json"},
      {Scenario::uniqueness, "uniqueness.json"}, {Scenario::energy_audit, "energy.json"},
      {Scenario::cascade, "cascade.json"}};
  for (const char* run : {"run_a", "run_b"})
    for (const auto& [s, f] : all) run_scenario(config(s, f), (work / run / to_string(s)).string());
  int files = 0, same = 0;
  std::string first_diff;
  for (const auto& e : fs::recursive_directory_iterator(work / "run_a")) {
    if (e.path().extension() != ".csv") continue;
    ++files;
    const auto other = work / "run_b" / fs::relative(e.path(), work / "run_a");
    auto slurp = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      return ss.str();
    };
    if (fs::exists(other) && slurp(e.path()) == slurp(other)) ++same;
    else if (first_diff.empty()) first_diff = fs::relative(e.path(), work / "run_a").string();
  }
  return {files > 0 && same == files, std::to_string(same) + "/" + std::to_string(files) + " CSVs byte-identical" +
                                          (first_diff.empty() ? "" : " (first difference: " + first_diff + ")")};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "dinilab_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);
  std::printf("threads: %d\n", thread_count());

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, c1}, {2, c2}, {3, c3}, {4, c4}, {5, c5}, {6, c6}, {7, [&] { return c7(work); }},
      {8, c8}, {9, c9}, {10, [&] { return c10(work); }}, {11, [&] { return c11(work); }}};
  int failed = 0;
  for (const auto& [id, fn] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %2d: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", id, o.detail.c_str(), t);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
