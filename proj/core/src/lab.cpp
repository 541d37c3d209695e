#include "dinilab/lab.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>

#include "dinilab/cascade.hpp"
#include "dinilab/csv.hpp"
#include "dinilab/dini.hpp"
#include "dinilab/energy.hpp"
#include "dinilab/errors.hpp"
#include "dinilab/oracles.hpp"

namespace dinilab {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::dini_check: return "dini";
    case Scenario::kernel_check: return "kernel";
    case Scenario::solve: return "solve";
    case Scenario::propagation: return "propagation";
    case Scenario::uniqueness: return "uniqueness";
    case Scenario::energy_audit: return "energy";
    case Scenario::cascade: return "cascade";
  }
  return "?";
}

Scenario scenario_from_string(const std::string& s) {
  for (auto sc : {Scenario::dini_check, Scenario::kernel_check, Scenario::solve, Scenario::propagation,
                  Scenario::uniqueness, Scenario::energy_audit, Scenario::cascade})
    if (to_string(sc) == s) return sc;
  if (s == "dini_check") return Scenario::dini_check;
  if (s == "kernel_check") return Scenario::kernel_check;
  if (s == "energy_audit") return Scenario::energy_audit;
  throw ConfigError("unknown scenario \"" + s + "\"");
}

ExperimentConfig config_from_json(const json& j, Scenario expected) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  if (j.contains("scenario")) {
    if (!j.at("scenario").is_string()) throw ConfigError("\"scenario\" must be a string");
    const Scenario s = scenario_from_string(j.at("scenario").get<std::string>());
    if (s != expected)
      throw ConfigError("config is for scenario \"" + to_string(s) + "\", not \"" + to_string(expected) + "\"");
  }
  return {expected, j};
}

ExperimentConfig load_config(const std::string& path, Scenario expected) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(j, expected);
}

std::vector<double> k_schedule_from_json(const json& j) {
  std::vector<double> K;
  if (j.is_array()) {
    for (const auto& v : j) K.push_back(v.get<double>());
  } else if (j.is_object()) {
    if (j.value("rule", std::string("geometric")) != "geometric") throw ConfigError("K_schedule: unknown rule");
    const double base = j.value("base", 10.0);
    const int j0 = j.value("j_min", 1), j1 = j.value("j_max", 6);
    if (!(base > 1.0) || j1 < j0) throw ConfigError("K_schedule: need base > 1 and j_min <= j_max");
    for (int k = j0; k <= j1; ++k) K.push_back(std::pow(base, k));
  } else {
    throw ConfigError("K_schedule must be a list or a rule object");
  }
  if (K.empty()) throw ConfigError("K_schedule is empty");
  for (std::size_t i = 0; i < K.size(); ++i) {
    if (!(K[i] >= 0.0)) throw ConfigError("K_schedule: levels must be >= 0");
    if (i && !(K[i] > K[i - 1])) throw ConfigError("K_schedule: levels must increase strictly");
  }
  return K;
}

std::vector<LabProbe> probes_from_json(const json& j, int N) {
  std::vector<LabProbe> out;
  if (!j.is_array()) throw ConfigError("probes must be a list");
  for (const auto& p : j) {
    LabProbe q;
    q.id = p.value("id", "p" + std::to_string(out.size()));
    q.x = p.at("x").get<std::vector<double>>();
    if (static_cast<int>(q.x.size()) != N) throw ConfigError("probe " + q.id + ": wrong dimension");
    out.push_back(q);
  }
  return out;
}

PlateauVerdict plateau_verdict(const std::vector<double>& trace, const PlateauThresholds& t) {
  PlateauVerdict v;
  auto incr = [](double a, double b) {
    if (a == 0.0) return b == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return (b - a) / std::abs(a);
  };
  if (trace.size() < 2) {
    v.metric = v.first_increment = std::numeric_limits<double>::quiet_NaN();
    v.verdict = "Inconclusive";
    return v;
  }
  v.first_increment = incr(trace[0], trace[1]);
  v.metric = incr(trace[trace.size() - 2], trace.back());
  v.verdict = v.metric < t.plateau ? "Plateau" : v.metric >= t.propagating ? "Propagating" : "Inconclusive";
  return v;
}

namespace {

// ---------- plumbing ----------

struct Out {
  fs::path dir;
  RunReport rep;

  explicit Out(const std::string& d) : dir(d) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory " + d);
  }
  std::unique_ptr<CsvWriter> csv(const std::string& name, std::vector<std::string> cols) {
    rep.files.push_back(name);
    return std::make_unique<CsvWriter>((dir / name).string(), std::move(cols));
  }
  void text(const std::string& name, const std::string& body) {
    rep.files.push_back(name);
    std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
    f << body;
  }
  void summary(const json& j) { text("summary.json", j.dump(2) + "\n"); }
};

template <class T>
T get_or(const json& j, const char* key, T dflt) {
  if (!j.contains(key)) return dflt;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("\"") + key + "\": " + e.what());
  }
}

std::vector<OmegaSpec> omegas_from(const json& cfg, std::vector<OmegaSpec> dflt) {
  if (!cfg.contains("omegas")) return dflt;
  std::vector<OmegaSpec> out;
  for (const auto& o : cfg.at("omegas")) out.push_back(omega_from_json(o));
  if (out.empty()) throw ConfigError("\"omegas\" is empty");
  return out;
}

std::vector<double> s_samples_from(const json& j) {
  std::vector<double> s;
  if (j.is_array()) {
    s = j.get<std::vector<double>>();
  } else {
    const double a = j.value("min", 0.1), b = j.value("max", 0.9);
    const int n = j.value("n", 8);
    if (!(a > 0.0 && b > a) || n < 2) throw ConfigError("s samples: need 0 < min < max and n >= 2");
    s = geometric_grid(a, b, n);
  }
  if (s.empty()) throw ConfigError("s samples are empty");
  return s;
}

NewtonOptions newton_from(const json& cfg) {
  NewtonOptions o;
  if (!cfg.contains("newton")) return o;
  const auto& j = cfg.at("newton");
  o.tol = j.value("tol", o.tol);
  o.max_iter = j.value("max_iter", o.max_iter);
  o.max_halvings = j.value("max_halvings", o.max_halvings);
  o.cg_tol = j.value("cg_tol", o.cg_tol);
  if (!(o.tol > 0.0) || o.max_iter < 1 || o.max_halvings < 0 || !(o.cg_tol > 0.0))
    throw ConfigError("newton: tol, cg_tol > 0, max_iter >= 1, max_halvings >= 0");
  return o;
}

std::vector<int> resolution_from(const json& cfg, int N, int dflt) {
  std::vector<int> r = get_or(cfg, "resolution", std::vector<int>(static_cast<std::size_t>(N), dflt));
  if (static_cast<int>(r.size()) != N) throw ConfigError("resolution must have N entries");
  for (int n : r)
    if (n < 8) throw ConfigError("resolution: at least 8 nodes per axis");
  return r;
}

ProblemSpec problem_or(const json& cfg, const json& dflt) {
  json j = dflt;
  if (cfg.contains("problem")) j.merge_patch(cfg.at("problem"));
  return problem_from_json(j);
}

std::string dini_class(const OmegaSpec& w) {
  try {
    return classify_dini(w, w.s_max()).converges() ? "converges" : "diverges";
  } catch (const IndeterminateError&) {
    return "indeterminate";
  }
}

std::string gp_header(const std::string& title, const std::string& png) {
  return "# gnuplot script; run: gnuplot " + png.substr(0, png.size() - 4) + ".gp\n"
         "set terminal pngcairo size 900,600\n"
         "set output '" + png + "'\n"
         "set datafile separator ','\n"
         "set key autotitle columnhead outside\n"
         "set title '" + title + "'\n";
}

std::string gp_series(const std::string& csv, const std::vector<std::string>& labels, int xcol, int ycol) {
  std::string s = "plot ";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    s += (i ? ", \\\n     " : "") + std::string("'") + csv + "' using " + std::to_string(xcol) + ":(strcol(1) eq '" +
         labels[i] + "' ? $" + std::to_string(ycol) + " : NaN) with linespoints title '" + labels[i] + "'";
  }
  return s + "\n";
}

std::vector<std::string> labels_of(const std::vector<OmegaSpec>& ws) {
  std::vector<std::string> l;
  for (const auto& w : ws) l.push_back(w.label());
  return l;
}

std::vector<CsvCell> with_coords(std::vector<CsvCell> head, const std::vector<double>& x, double value) {
  for (double v : x) head.emplace_back(v);
  head.emplace_back(value);
  return head;
}

std::vector<std::string> coord_cols(std::vector<std::string> head, int N) {
  for (int d = 0; d < N; ++d) head.push_back("x" + std::to_string(d));
  head.push_back("value");
  return head;
}

}  // namespace

// ---------- dini ----------

RunReport run_dini(const ExperimentConfig& cfg, const std::string& out_dir) {
  const json& c = cfg.body;
  const auto ws = omegas_from(c, {OmegaSpec::power(0.25), OmegaSpec::power(0.5), OmegaSpec::power(0.9),
                                  OmegaSpec::inverse_log(0.0), OmegaSpec::inverse_log(0.5),
                                  OmegaSpec::inverse_log(1.0), OmegaSpec::constant(0.1), OmegaSpec::constant(1.0)});
  DiniOptions opt;
  opt.max_shells = get_or(c, "max_shells", opt.max_shells);
  opt.rel_tol = get_or(c, "rel_tol", opt.rel_tol);
  if (c.contains("policy")) {
    opt.policy.ratio_threshold = c.at("policy").value("ratio_threshold", opt.policy.ratio_threshold);
    opt.policy.window = c.at("policy").value("window", opt.policy.window);
  }
  if (opt.max_shells < 16 || !(opt.rel_tol > 0.0) || !(opt.policy.ratio_threshold > 0.0 && opt.policy.ratio_threshold < 1.0) ||
      opt.policy.window < 2)
    throw ConfigError("dini: bad classifier options");
  const double c_upper = get_or(c, "c", 0.0);  // 0: s_max of each family

  Out out(out_dir);
  auto tab = out.csv("dini.csv", {"omega", "family", "c", "verdict", "value", "error", "fitted_ratio", "shells_used",
                                  "ratio_threshold", "window", "rel_tol"});
  auto sh = out.csv("dini_shells.csv", {"omega", "m", "contribution"});
  json summary = json::array();
  for (const auto& w : ws) {
    const double cu = c_upper > 0.0 ? c_upper : w.s_max();
    if (!(cu > 0.0 && cu <= w.s_max())) throw ConfigError("dini: c must lie in (0, s_max]");
    std::string verdict;
    DiniVerdict v;
    try {
      v = classify_dini(w, cu, opt);
      verdict = v.converges() ? "converges" : "diverges";
    } catch (const IndeterminateError& e) {
      verdict = "indeterminate";
      v.shells_used = e.shells_used();
      out.rep.exit_code = 4;
    }
    tab->row({w.label(), to_string(w.family()), cu, verdict, v.value, v.error, v.fitted_ratio, v.shells_used,
              opt.policy.ratio_threshold, opt.policy.window, opt.rel_tol});
    for (std::size_t m = 0; m < v.shells.size(); ++m) sh->row({w.label(), m, v.shells[m]});
    out.rep.verdicts.push_back(w.label() + ": " + verdict);
    summary.push_back({{"omega", w}, {"verdict", verdict}, {"value", v.value}});
  }
  out.text("dini.gp", gp_header("condensed shell contributions", "dini.png") + "set logscale y\nset xlabel 'shell m'\n" +
                          gp_series("dini_shells.csv", labels_of(ws), 2, 3));
  out.summary({{"scenario", "dini"}, {"results", summary}});
  return out.rep;
}

// ---------- kernel ----------

RunReport run_kernel(const ExperimentConfig& cfg, const std::string& out_dir) {
  const json& c = cfg.body;
  Out out(out_dir);
  json summary = {{"scenario", "kernel"}};

  const json nj = c.value("normalization", json::object());
  const auto Ns = get_or(nj, "N", std::vector<int>{2, 3});
  const double xN = get_or(nj, "x_N", 1.0);
  const auto Rs = get_or(nj, "R", std::vector<double>{1e1, 1e2, 1e3, 1e4});
  if (!(xN > 0.0)) throw ConfigError("normalization: x_N must be > 0");
  auto nt = out.csv("kernel_normalization.csv", {"N", "x_N", "R", "mass", "deficit"});
  for (int N : Ns) {
    if (N < 2 || N > 3) throw ConfigError("normalization: N must be 2 or 3");
    for (double R : Rs) {
      if (!(R > 0.0)) throw ConfigError("normalization: R must be > 0");
      const double m = kernel_normalization(N, xN, R);
      nt->row({N, xN, R, m, 1.0 - m});
    }
  }

  if (c.contains("points")) {
    auto pt = out.csv("kernel_points.csv", {"N", "x", "z", "value"});
    for (const auto& pj : c.at("points")) {
      KernelPoint k;
      k.N = pj.value("N", 2);
      k.x = pj.at("x").get<std::vector<double>>();
      k.z = pj.at("z").get<std::vector<double>>();
      if (static_cast<int>(k.x.size()) != k.N || static_cast<int>(k.z.size()) != k.N)
        throw ConfigError("points: x and z need N coordinates");
      auto join = [](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_double(v[i]);
        return s;
      };
      double val;
      try {
        val = poisson_kernel(k);
      } catch (const DomainError& e) {
        throw ConfigError(std::string("points: ") + e.what());
      }
      pt->row({k.N, join(k.x), join(k.z), val});
    }
  }

  const json ij = c.value("integrability", json::object());
  const int N = get_or(ij, "N", 2);
  const auto ps = get_or(ij, "p", std::vector<double>{2.75, 3.25});
  const double R = get_or(ij, "R", 1.0);
  const auto pot = ij.contains("potential") ? potential_from_json(ij.at("potential")) : AbsorptionPotential::constant(1.0);
  const auto a = get_or(ij, "a", std::vector<double>(static_cast<std::size_t>(N), 0.0));
  IntegrabilityOptions io;
  io.max_shells = get_or(ij, "max_shells", io.max_shells);
  io.rel_tol = get_or(ij, "rel_tol", io.rel_tol);
  if (N < 2 || N > 3 || static_cast<int>(a.size()) != N || !(R > 0.0)) throw ConfigError("integrability: bad N, a or R");
  auto it = out.csv("integrability.csv", {"N", "p", "p_critical", "potential", "verdict", "value", "error",
                                          "fitted_ratio", "shells_used", "ratio_threshold", "window", "rel_tol"});
  auto is = out.csv("integrability_shells.csv", {"p", "k", "contribution"});
  json ires = json::array();
  const std::string plabel = pot.is_degenerate() ? pot.omega->label() : "constant(" + format_double(pot.coefficient) + ")";
  for (double p : ps) {
    if (!(p > 1.0)) throw ConfigError("integrability: p must be > 1");
    std::string verdict;
    IntegrabilityResult r;
    try {
      r = mv_integrability(N, p, pot, R, a, io);
      verdict = r.finite ? "finite" : "infinite";
    } catch (const IndeterminateError& e) {
      verdict = "indeterminate";
      r.shells_used = e.shells_used();
      out.rep.exit_code = 4;
    }
    it->row({N, p, p_critical(N), plabel, verdict, r.value, r.error, r.fitted_ratio, r.shells_used,
             io.policy.ratio_threshold, io.policy.window, io.rel_tol});
    for (std::size_t k = 0; k < r.shells.size(); ++k) is->row({p, k, r.shells[k]});
    out.rep.verdicts.push_back("integrability p=" + format_double(p) + ": " + verdict);
    ires.push_back({{"p", p}, {"verdict", verdict}});
  }
  summary["integrability"] = ires;
  out.text("kernel.gp", gp_header("Poisson kernel mass deficit", "kernel.png") +
                            "set logscale xy\nset xlabel 'R'\nset ylabel '1 - mass'\n"
                            "plot 'kernel_normalization.csv' using 3:($1==2 ? $5 : NaN) with linespoints title 'N=2', \\\n"
                            "     'kernel_normalization.csv' using 3:($1==3 ? $5 : NaN) with linespoints title 'N=3'\n");
  out.summary(summary);
  return out.rep;
}

// ---------- solve ----------

RunReport run_solve(const ExperimentConfig& cfg, const std::string& out_dir) {
  const json& c = cfg.body;
  if (!c.contains("problem")) throw ConfigError("solve: missing \"problem\"");
  const ProblemSpec spec = problem_from_json(c.at("problem"));
  const auto res = resolution_from(c, spec.N, 64);
  const auto K = c.contains("K_schedule") ? k_schedule_from_json(c.at("K_schedule")) : std::vector<double>{spec.bc.level};
  const auto probes = probes_from_json(c.value("probes", json::array()), spec.N);
  const auto nopt = newton_from(c);
  const bool write = get_or(c, "write_field", true);

  Out out(out_dir);
  DiscreteSystem sys;
  try {
    sys = discretize(spec, res);
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("solve: ") + e.what());
  }
  auto tab = out.csv("solve.csv", {"K", "newton_iterations", "final_residual", "residual_abs", "monotone_flag",
                                   "cg_iterations", "max_value"});
  std::unique_ptr<CsvWriter> pt;
  if (!probes.empty()) pt = out.csv("probes.csv", coord_cols({"K", "probe_id"}, spec.N));
  const auto reps = solve_sequence(sys, K, nopt, [&](const SolveReport& r) {
    const double mx = *std::max_element(r.field.values.begin(), r.field.values.end());
    tab->row({r.level, r.newton_iterations, r.final_residual, r.residual_abs, r.monotone_flag, r.cg_iterations, mx});
    for (const auto& q : probes) pt->row(with_coords({r.level, q.id}, q.x, probe(r.field, q.x)));
  });
  if (write) {
    out.rep.files.push_back("field.bin");
    out.rep.files.push_back("field.json");
    write_field(reps.back().field, (out.dir / "field").string());
  }
  out.text("solve.gp", gp_header("Newton iterations per level", "solve.png") +
                           "set logscale x\nset xlabel 'K'\nplot 'solve.csv' using 1:2 with linespoints\n");
  json sj;
  to_json(sj, spec);
  out.summary({{"scenario", "solve"}, {"problem", sj}, {"resolution", res}, {"warnings", sys.warnings},
               {"newton_tol", nopt.tol}, {"levels", K.size()}});
  out.rep.verdicts.push_back("solved " + std::to_string(K.size()) + " level(s)");
  return out.rep;
}

// ---------- propagation ----------

namespace {

json propagation_default_problem() {
  return {{"N", 2},
          {"p", 2.8},
          {"box", {{"lo", {-1.0, 0.0}}, {"hi", {1.0, 2.0}}}},
          {"potential", {{"geometry", "boundary_distance"}, {"omega", {{"family", "power"}, {"params", {{"gamma", 0.5}}}}}}},
          {"boundary", {{"kind", "mollified_dirac"}, {"center", {0.0}}, {"level", 1.0}, {"width_cells", 2.0}}}};
}

}  // namespace

RunReport run_propagation(const ExperimentConfig& cfg, const std::string& out_dir) {
  const json& c = cfg.body;
  ProblemSpec base = problem_or(c, propagation_default_problem());
  const int N = base.N;
  if (N < 2 || !base.potential.is_degenerate()) throw ConfigError("propagation: need N >= 2 and a degenerate potential");
  if (base.bc.kind != BoundaryData::Kind::mollified_dirac) throw ConfigError("propagation: boundary must be mollified_dirac");
  const auto res = resolution_from(c, N, 128);
  const auto K = k_schedule_from_json(c.value("K_schedule", json{{"rule", "geometric"}, {"base", 10.0}, {"j_min", 1}, {"j_max", 6}}));
  const auto ws = omegas_from(c, {*base.potential.omega});
  const double g = get_or(c, "g", 0.5);
  const double hc = get_or(c, "probe_height_cells", 4.0);
  PlateauThresholds th;
  if (c.contains("thresholds")) {
    th.plateau = c.at("thresholds").value("plateau", th.plateau);
    th.propagating = c.at("thresholds").value("propagating", th.propagating);
  }
  if (!(th.plateau > 0.0 && th.propagating >= th.plateau)) throw ConfigError("thresholds: need 0 < plateau <= propagating");
  if (!(g > 0.0) || !(hc > 0.0)) throw ConfigError("propagation: g and probe_height_cells must be > 0");
  const auto extra = probes_from_json(c.value("probes", json::array()), N);
  const auto nopt = newton_from(c);

  // a on the degeneracy face; probes near a, at distance g along the degeneracy set, and off it
  const double dN = (base.box.hi[N - 1] - base.box.lo[N - 1]) / (res[static_cast<std::size_t>(N - 1)] - 1);
  const double hgt = base.box.lo[N - 1] + hc * dN;
  std::vector<double> a(base.bc.center);
  a.push_back(base.box.lo[N - 1]);
  std::vector<LabProbe> pr;
  {
    LabProbe near{"near", a}, away{"away", a}, off{"off", a};
    near.x[N - 1] = away.x[N - 1] = hgt;
    away.x[0] += g;
    if (base.potential.geometry == PotentialGeometry::line_distance && N >= 3) {
      off.x[1] += g;  // beside the degenerate line, same height
      off.x[N - 1] = hgt;
    } else {
      off.x[N - 1] = base.box.lo[N - 1] + g;  // the whole face degenerates: step into the interior
    }
    pr = {near, away, off};
    for (const auto& q : extra) pr.push_back(q);
  }
  for (const auto& q : pr)
    for (int d = 0; d < N; ++d)
      if (q.x[static_cast<std::size_t>(d)] < base.box.lo[static_cast<std::size_t>(d)] ||
          q.x[static_cast<std::size_t>(d)] > base.box.hi[static_cast<std::size_t>(d)])
        throw ConfigError("propagation: probe " + q.id + " lies outside the box");

  Out out(out_dir);
  auto growth = out.csv("propagation_growth.csv",
                        {"omega", "j", "K", "newton_iterations", "final_residual", "near", "away", "off"});
  auto pcsv = out.csv("probes.csv", coord_cols({"omega", "K", "probe_id"}, N));
  auto vcsv = out.csv("propagation_verdict.csv",
                      {"omega", "dini", "metric", "first_increment", "plateau_threshold", "propagating_threshold",
                       "verdict", "probe", "g", "height", "K_first", "K_last", "resolution", "p"});
  json results = json::array();
  double max_conv = -1.0, min_div = std::numeric_limits<double>::infinity();
  bool any_conv = false, any_div = false;
  for (const auto& w : ws) {
    ProblemSpec spec = base;
    spec.potential.omega = w;
    DiscreteSystem sys;
    try {
      sys = discretize(spec, res);
    } catch (const ArgumentError& e) {
      throw ConfigError(std::string("propagation: ") + e.what());
    }
    std::vector<double> away_trace;
    int jj = 0;
    solve_sequence(sys, K, nopt, [&](const SolveReport& r) {
      std::vector<double> v;
      for (const auto& q : pr) v.push_back(probe(r.field, q.x));
      growth->row({w.label(), ++jj, r.level, r.newton_iterations, r.final_residual, v[0], v[1], v[2]});
      for (std::size_t i = 0; i < pr.size(); ++i) pcsv->row(with_coords({w.label(), r.level, pr[i].id}, pr[i].x, v[i]));
      away_trace.push_back(v[1]);
    });
    const auto pv = plateau_verdict(away_trace, th);
    const std::string dc = dini_class(w);
    std::string rs;
    for (std::size_t i = 0; i < res.size(); ++i) rs += (i ? "x" : "") + std::to_string(res[i]);
    vcsv->row({w.label(), dc, pv.metric, pv.first_increment, th.plateau, th.propagating, pv.verdict, "away", g, hgt,
               K.front(), K.back(), rs, spec.p});
    out.rep.verdicts.push_back(w.label() + " (" + dc + "): " + pv.verdict + ", metric " + format_double(pv.metric));
    results.push_back({{"omega", w}, {"dini", dc}, {"metric", pv.metric}, {"verdict", pv.verdict}});
    if (dc == "converges") any_conv = true, max_conv = std::max(max_conv, pv.metric);
    if (dc == "diverges") any_div = true, min_div = std::min(min_div, pv.metric);
  }
  if (any_conv && any_div) {
    auto oc = out.csv("propagation_ordering.csv", {"max_metric_convergent", "min_metric_divergent", "ordering_holds"});
    oc->row({max_conv, min_div, max_conv < min_div});
    out.rep.verdicts.push_back(std::string("ordering convergent < divergent: ") + (max_conv < min_div ? "holds" : "fails"));
  }
  out.text("propagation.gp", gp_header("away-probe growth", "propagation.png") +
                                 "set logscale xy\nset xlabel 'K'\nset ylabel 'u(away)'\n" +
                                 gp_series("propagation_growth.csv", labels_of(ws), 3, 7));
  json bj;
  to_json(bj, base);
  out.summary({{"scenario", "propagation"}, {"problem", bj}, {"resolution", res}, {"K", K},
               {"thresholds", {{"plateau", th.plateau}, {"propagating", th.propagating}}}, {"results", results}});
  return out.rep;
}

// ---------- uniqueness ----------

namespace {

json uniqueness_default_problem() {
  return {{"N", 2},
          {"p", 3.0},
          {"box", {{"lo", {-1.0, 0.0}}, {"hi", {1.0, 2.0}}}},
          {"potential", {{"geometry", "boundary_distance"}, {"omega", {{"family", "power"}, {"params", {{"gamma", 0.5}}}}}}},
          {"boundary", {{"kind", "constant"}, {"level", 1.0}}}};
}

}  // namespace

RunReport run_uniqueness(const ExperimentConfig& cfg, const std::string& out_dir) {
  const json& c = cfg.body;
  const ProblemSpec base = problem_or(c, uniqueness_default_problem());
  const int N = base.N;
  const auto res = resolution_from(c, N, 64);
  const auto K = k_schedule_from_json(c.value("K_schedule", json::array({1e2, 1e3, 1e4, 1e5})));
  const auto shrink = get_or(c, "shrink", std::vector<double>{0.2, 0.1, 0.05, 0.025});
  const double K_big = get_or(c, "K_big", 1e6);
  const double margin = get_or(c, "core_margin", 0.25);
  const auto nopt = newton_from(c);
  if (shrink.size() != K.size()) throw ConfigError("uniqueness: \"shrink\" and \"K_schedule\" must have equal length");
  for (std::size_t i = 0; i < shrink.size(); ++i)
    if (!(shrink[i] >= 0.0) || (i && !(shrink[i] < shrink[i - 1])))
      throw ConfigError("uniqueness: shrink offsets must be >= 0 and strictly decreasing");
  if (!(K_big > 0.0)) throw ConfigError("uniqueness: K_big must be > 0");
  double half = std::numeric_limits<double>::infinity();
  for (int d = 0; d < N; ++d) half = std::min(half, 0.5 * base.box.extent(d));
  if (!(margin > shrink.front() && margin < half)) throw ConfigError("uniqueness: need shrink[0] < core_margin < half the box");
  std::vector<OmegaSpec> ws;
  if (c.contains("omegas")) ws = omegas_from(c, {});

  Out out(out_dir);
  auto gap = out.csv("uniqueness_gap.csv", {"omega", "step", "K", "s", "K_big", "gap", "violations", "core_nodes",
                                            "core_margin"});
  auto trend = out.csv("uniqueness_trend.csv", {"omega", "dini", "first_gap", "last_gap", "gaps_decreasing"});
  json results = json::array();

  const std::size_t runs = ws.empty() ? 1 : ws.size();
  for (std::size_t wi = 0; wi < runs; ++wi) {
    ProblemSpec spec = base;
    spec.bc = BoundaryData::constant_level(1.0);
    std::string label = "constant(" + format_double(spec.potential.coefficient) + ")";
    std::string dc = "n/a";
    if (!ws.empty()) spec.potential.omega = ws[wi];
    if (spec.potential.is_degenerate()) {
      label = spec.potential.omega->label();
      dc = dini_class(*spec.potential.omega);
    }
    // (a) minimal approximant: data K on the whole boundary, K sweeping upward
    const auto lows = solve_sequence(spec, K, res, nopt);
    const GridField& grid = lows.front().field;
    std::vector<std::size_t> core;
    std::vector<double> x(static_cast<std::size_t>(N));
    for (std::size_t i = 0; i < grid.size(); ++i) {
      grid.coords(i, x);
      bool in = true;
      for (int d = 0; d < N; ++d) {
        const auto du = static_cast<std::size_t>(d);
        in = in && x[du] >= base.box.lo[du] + margin && x[du] <= base.box.hi[du] - margin;
      }
      if (in) core.push_back(i);
    }
    std::vector<double> gaps;
    for (std::size_t k = 0; k < K.size(); ++k) {
      // (b) maximal approximant: data K_big on the box offset inward by s
      const double s = shrink[k];
      ProblemSpec sh = spec;
      std::vector<int> rs(static_cast<std::size_t>(N));
      for (int d = 0; d < N; ++d) {
        const auto du = static_cast<std::size_t>(d);
        sh.box.lo[du] += s;
        sh.box.hi[du] -= s;
        const double h = base.box.extent(d) / (res[du] - 1);
        rs[du] = std::max(8, static_cast<int>(std::lround((sh.box.hi[du] - sh.box.lo[du]) / h)) + 1);
      }
      std::vector<double> ramp;
      for (double L = 10.0; L < K_big; L *= 10.0) ramp.push_back(L);
      ramp.push_back(K_big);
      const auto highs = solve_sequence(sh, ramp, rs, nopt);
      const GridField& up = highs.back().field;
      double gmax = 0.0;
      std::size_t viol = 0;
      for (std::size_t i : core) {
        grid.coords(i, x);
        const double lo = lows[k].field.values[i];
        const double hi = probe(up, x);
        if (hi < lo * (1.0 - 1e-10)) ++viol;
        gmax = std::max(gmax, std::abs(hi - lo) / std::max(lo, std::numeric_limits<double>::min()));
      }
      gaps.push_back(gmax);
      gap->row({label, k, K[k], s, K_big, gmax, viol, core.size(), margin});
    }
    bool dec = true;
    for (std::size_t k = 1; k < gaps.size(); ++k) dec = dec && gaps[k] < gaps[k - 1];
    trend->row({label, dc, gaps.front(), gaps.back(), dec});
    out.rep.verdicts.push_back(label + ": gap " + format_double(gaps.front()) + " -> " + format_double(gaps.back()) +
                               (dec ? " (decreasing)" : " (not monotone)"));
    results.push_back({{"omega", label}, {"dini", dc}, {"gaps", gaps}});
  }
  out.text("uniqueness.gp", gp_header("minimal vs maximal approximant gap on the core", "uniqueness.png") +
                                "set logscale y\nset xlabel 'step'\nset ylabel 'relative gap'\n"
                                "plot 'uniqueness_gap.csv' using 2:6 with linespoints\n");
  json bj;
  to_json(bj, base);
  out.summary({{"scenario", "uniqueness"}, {"problem", bj}, {"resolution", res}, {"K", K}, {"shrink", shrink},
               {"K_big", K_big}, {"results", results}});
  return out.rep;
}

// ---------- energy ----------

namespace {

json energy_default_problem() {
  return {{"N", 2},
          {"p", 3.0},
          {"box", {{"lo", {-1.0, 0.0}}, {"hi", {1.0, 2.0}}}},
          {"potential", {{"geometry", "boundary_distance"}, {"omega", {{"family", "power"}, {"params", {{"gamma", 0.5}}}}}}},
          {"boundary", {{"kind", "constant"}, {"level", 1.0}}}};
}

}  // namespace

RunReport run_energy_audit(const ExperimentConfig& cfg, const std::string& out_dir) {
  const json& c = cfg.body;
  const ProblemSpec spec = problem_or(c, energy_default_problem());
  const auto res = resolution_from(c, spec.N, 128);
  const auto K = k_schedule_from_json(c.value("K_schedule", json{{"rule", "geometric"}, {"base", 10.0}, {"j_min", 4}, {"j_max", 8}}));
  const auto ss = s_samples_from(c.value("s_samples", json{{"min", 0.1}, {"max", 0.9}, {"n", 8}}));
  const double factor = get_or(c, "uniformity_factor", 2.0);
  const auto nopt = newton_from(c);
  if (!(factor > 1.0)) throw ConfigError("energy: uniformity_factor must be > 1");

  Out out(out_dir);
  auto at = out.csv("energy_audit.csv", {"K", "s", "I", "bound", "ratio"});
  auto dt = out.csv("energy_d3.csv", {"K", "fitted_d3"});
  std::unique_ptr<CsvWriter> jt;
  double Js = 0.0, Jtau = 0.0;
  if (c.contains("J")) {
    Js = c.at("J").value("s", 0.1);
    Jtau = c.at("J").value("tau", 0.05);
    jt = out.csv("energy_J.csv", {"K", "s", "tau", "J"});
  }
  const auto reps = solve_sequence(spec, K, res, nopt);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& r : reps) {
    EnergyAudit a;
    try {
      a = audit_energy(r.field, spec.potential, spec.p, ss);
    } catch (const ArgumentError& e) {
      throw ConfigError(std::string("energy: ") + e.what());
    }
    for (std::size_t i = 0; i < ss.size(); ++i) at->row({r.level, ss[i], a.I_values[i], a.bound_values[i], a.ratios[i]});
    dt->row({r.level, a.fitted_d3});
    lo = std::min(lo, a.fitted_d3);
    hi = std::max(hi, a.fitted_d3);
    if (jt) jt->row({r.level, Js, Jtau, energy_J(r.field, spec.potential, spec.p, Js, Jtau, spec.bc.patches)});
  }
  const double spread = hi / lo;
  auto sm = out.csv("energy_summary.csv", {"d3_min", "d3_max", "spread", "uniformity_factor", "uniform", "p", "levels"});
  sm->row({lo, hi, spread, factor, spread < factor, spec.p, K.size()});
  out.rep.verdicts.push_back("d3 spread " + format_double(spread) + (spread < factor ? " < " : " >= ") +
                             format_double(factor));

  // (3.30)-type lower bound on the layer integral, as an independent table
  const json ij = c.value("ineq330", json::object());
  if (ij.value("enabled", true)) {
    const auto ws = omegas_from(ij, {OmegaSpec::power(0.5), OmegaSpec::inverse_log(0.0), OmegaSpec::constant(1.0)});
    const auto as = get_or(ij, "a", std::vector<double>{0.5, 1.0, 2.0});
    const auto s3 = s_samples_from(ij.value("s", json{{"min", 1e-4}, {"max", 0.5}, {"n", 16}}));
    auto it = out.csv("ineq330.csv", {"omega", "a", "s", "lhs_scaled", "rhs_scaled", "holds"});
    int cells = 0, held = 0;
    for (const auto& w : ws)
      for (double a : as)
        for (double s : s3) {
          if (!(a > 0.0) || !(s > 0.0 && s <= w.s_max())) throw ConfigError("ineq330: need a > 0 and s in (0, s_max]");
          const auto r = check_ineq_330(w, a, s);
          it->row({w.label(), a, s, r.lhs_scaled, r.rhs_scaled, r.holds});
          ++cells;
          held += r.holds ? 1 : 0;
        }
    out.rep.verdicts.push_back("layer inequality holds in " + std::to_string(held) + "/" + std::to_string(cells) + " cells");
  }
  out.text("energy.gp", gp_header("I(s) / bound(s) per level", "energy.png") +
                            "set logscale xy\nset xlabel 's'\nset ylabel 'ratio'\n"
                            "plot 'energy_audit.csv' using 2:5 with linespoints\n");
  json bj;
  to_json(bj, spec);
  out.summary({{"scenario", "energy"}, {"problem", bj}, {"resolution", res}, {"K", K}, {"s", ss},
               {"d3_spread", spread}});
  return out.rep;
}

// ---------- cascade ----------

RunReport run_cascade(const ExperimentConfig& cfg, const std::string& out_dir) {
  const json& c = cfg.body;
  const auto ws = omegas_from(c, {OmegaSpec::constant(1.0), OmegaSpec::inverse_log(0.0), OmegaSpec::power(0.5)});
  const double p = get_or(c, "p", 2.0);
  const int N = get_or(c, "N", 2);
  const int j_start = get_or(c, "j_start", 2);
  const int j_max = get_or(c, "j_max", 64);
  const double g = get_or(c, "g", 1.0);
  const auto scales = get_or(c, "scales", std::vector<double>{1.0, 0.5, 2.0});
  ChainOptions base;
  if (c.contains("constants")) base.constants = chain_constants_from_json(c.at("constants"));
  for (double f : scales)
    if (!(f > 0.0)) throw ConfigError("cascade: scales must be > 0");

  Out out(out_dir);
  auto rows = out.csv("cascade_chain.csv", {"omega", "scale", "j", "r", "mu", "log_a", "log_A", "log_K", "tau",
                                            "tau_head", "partial_sum", "sandwich", "beta_ok"});
  auto vt = out.csv("cascade_verdict.csv",
                    {"omega", "scale", "p", "N", "j_start", "j_max", "g", "lambda1", "c1", "c2", "alpha", "alpha1",
                     "y1_0", "beta", "beta1", "verdict", "certificate", "jbar", "sum_at_jbar", "total", "method",
                     "fitted_ratio", "ratio_threshold", "window", "ae", "ae1", "j_prime", "sandwich_all",
                     "lowerbound_holds", "windows_checked", "windows_failed"});
  auto lbt = out.csv("cascade_lowerbound.csv", {"omega", "scale", "window_end", "lhs", "rhs"});
  json results = json::array();
  for (const auto& w : ws) {
    for (double f : scales) {
      ChainOptions o = base;
      o.constants = base.constants.scaled(f);
      CascadeChain ch;
      try {
        ch = build_chain(w, p, N, j_start, j_max, g, o);
      } catch (const ArgumentError& e) {
        throw ConfigError(std::string("cascade: ") + e.what());
      }
      const auto lb = chain_sum_lowerbound(ch, w);
      for (const auto& r : ch.rows)
        rows->row({w.label(), f, r.j, r.r, r.mu, r.log_a, r.log_A, r.log_K, r.tau, r.tau_head, r.partial_sum,
                   r.sandwich, r.beta_ok});
      for (std::size_t i = 0; i < lb.window_end.size(); ++i)
        lbt->row({w.label(), f, lb.window_end[i], lb.lhs_sums[i], lb.rhs_integrals[i]});
      const auto& v = ch.verdict;
      const bool reach = v.kind == ChainVerdictKind::reaches_distance;
      const auto& k = ch.constants;
      vt->row({w.label(), f, p, N, j_start, j_max, g, ch.lambda1, ch.c1_used, ch.c2_used, k.alpha, k.alpha1, k.y1_0,
               k.beta, k.beta1, reach ? "ReachesDistance" : "Bounded", v.certificate,
               v.jbar ? CsvCell(*v.jbar) : CsvCell(""), v.sum_at_jbar, v.total, v.method, v.fitted_ratio,
               o.dini.policy.ratio_threshold, o.dini.policy.window, ch.ae, ch.ae1, ch.j_prime, ch.sandwich_all,
               lb.holds, lb.windows_checked, lb.windows_failed});
      out.rep.verdicts.push_back(w.label() + " x" + format_double(f) + ": " +
                                 (reach ? "ReachesDistance (" + v.certificate + ", jbar " +
                                              (v.jbar ? std::to_string(*v.jbar) : std::string("?")) + ")"
                                        : "Bounded (total " + format_double(v.total) + ")"));
      json cj;
      to_json(cj, ch);
      cj["scale"] = f;
      results.push_back(cj);
    }
  }

  json sched = json::array();
  const json sj = c.value("schedule", json::object());
  if (sj.value("enabled", true)) {
    const double sp = get_or(sj, "p", 2.0), nu = get_or(sj, "nu", 1.0), Cn = get_or(sj, "C_nu", 1.0);
    const double delta = get_or(sj, "delta", 0.05), rho0 = get_or(sj, "rho0", 0.5);
    const int j0 = get_or(sj, "j_min", 4), j1 = get_or(sj, "j_max", 30);
    ScheduleOptions so;
    so.c_tilde = get_or(sj, "c_tilde", so.c_tilde);
    so.c_bar = get_or(sj, "c_bar", so.c_bar);
    so.phi_n_max = get_or(sj, "phi_n_max", so.phi_n_max);
    if (sj.contains("omega0")) so.omega0 = sj.at("omega0").get<double>();
    const auto g_list = get_or(sj, "g_list", std::vector<double>{0.5 * rho0});
    const auto sws = omegas_from(sj, ws);
    auto srow = out.csv("schedule_rows.csv", {"omega", "j", "log_Kbar", "mu", "s", "log_s", "tau", "bound_348",
                                              "bound_349", "past_j_prime"});
    auto sphi = out.csv("schedule_phi.csv", {"omega", "n", "available", "phi", "budget", "fits"});
    auto ssum = out.csv("schedule_summary.csv", {"omega", "theta", "p", "nu", "C_nu", "kappa", "delta", "rho0",
                                                 "c_tilde", "c_bar", "omega0", "C2", "C3", "j_prime", "diverges",
                                                 "j0_star", "j1"});
    auto sbud = out.csv("schedule_budget.csv", {"omega", "n", "g", "budget", "fits"});
    for (const auto& w : sws) {
      SufficiencySchedule s;
      try {
        s = build_sufficiency_schedule(w, sp, nu, Cn, delta, rho0, j0, j1, so);
      } catch (const ArgumentError& e) {
        throw ConfigError(std::string("schedule: ") + e.what());
      } catch (const RangeError& e) {
        throw ConfigError(std::string("schedule: ") + e.what());
      }
      for (const auto& r : s.rows)
        srow->row({w.label(), r.j, r.log_Kbar, r.mu, r.s, r.log_s, r.tau, r.bound_348, r.bound_349, r.past_j_prime});
      for (const auto& r : s.phi) sphi->row({w.label(), r.n, r.available, r.phi, r.budget, r.fits});
      ssum->row({w.label(), SufficiencySchedule::theta, s.p, s.nu, s.C_nu, s.kappa, s.delta, s.rho0, s.c_tilde,
                 s.c_bar, s.omega0, s.C2, s.C3, s.j_prime, s.diverges, s.j0_star ? CsvCell(*s.j0_star) : CsvCell(""),
                 s.j1 ? CsvCell(*s.j1) : CsvCell("")});
      const auto br = schedule_budget_report(s, g_list);
      for (const auto& r : br.rows)
        for (std::size_t i = 0; i < g_list.size(); ++i)
          if (r.available) sbud->row({w.label(), r.n, g_list[i], r.budget, static_cast<bool>(r.fits[i])});
      out.rep.verdicts.push_back("schedule " + w.label() + ": " +
                                 (s.diverges ? std::string("Diverges")
                                             : "j0* " + (s.j0_star ? std::to_string(*s.j0_star) : std::string("none"))));
      json j;
      to_json(j, s);
      j["omega"] = w.label();
      sched.push_back(j);
    }
    out.text("schedule_phi.gp", gp_header("Phi(n) tail of the Dini integral", "schedule_phi.png") +
                                    "set logscale y\nset xlabel 'n'\n" +
                                    gp_series("schedule_phi.csv", labels_of(sws), 2, 4));
  }
  out.text("cascade.gp", gp_header("chain partial sums", "cascade.png") + "set xlabel 'j'\nset ylabel 'partial sum'\n" +
                             "plot 'cascade_chain.csv' using 3:(strcol(1) eq '" + ws.front().label() +
                             "' && $2 == 1 ? $11 : NaN) with linespoints title '" + ws.front().label() + "'" +
                             [&] {
                               std::string s;
                               for (std::size_t i = 1; i < ws.size(); ++i)
                                 s += ", \\\n     'cascade_chain.csv' using 3:(strcol(1) eq '" + ws[i].label() +
                                      "' && $2 == 1 ? $11 : NaN) with linespoints title '" + ws[i].label() + "'";
                               return s;
                             }() + "\n");
  out.summary({{"scenario", "cascade"}, {"chains", results}, {"schedules", sched}});
  return out.rep;
}

RunReport run_scenario(const ExperimentConfig& cfg, const std::string& out_dir) {
  switch (cfg.scenario) {
    case Scenario::dini_check: return run_dini(cfg, out_dir);
    case Scenario::kernel_check: return run_kernel(cfg, out_dir);
    case Scenario::solve: return run_solve(cfg, out_dir);
    case Scenario::propagation: return run_propagation(cfg, out_dir);
    case Scenario::uniqueness: return run_uniqueness(cfg, out_dir);
    case Scenario::energy_audit: return run_energy_audit(cfg, out_dir);
    case Scenario::cascade: return run_cascade(cfg, out_dir);
  }
  throw ConfigError("unknown scenario");
}

}  // namespace dinilab
