// dinilab: run one experiment scenario from a JSON config.
//
//   dinilab <dini|kernel|solve|propagation|uniqueness|energy|cascade> --config PATH --out DIR
//
// Exit codes: 0 ok, 1 internal error, 2 config error, 3 solver non-convergence,
// 4 indeterminate classification. LAB_THREADS pins the worker count.

#include <cstdio>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dinilab/errors.hpp"
#include "dinilab/lab.hpp"
#include "dinilab/parallel.hpp"

namespace {

enum Exit { kOk = 0, kInternal = 1, kConfig = 2, kNoConvergence = 3, kIndeterminate = 4 };

int run(dinilab::Scenario sc, const std::string& config, const std::string& out) {
  try {
    const auto cfg = dinilab::load_config(config, sc);
    const auto rep = dinilab::run_scenario(cfg, out);
    for (const auto& v : rep.verdicts) std::printf("%s\n", v.c_str());
    for (const auto& f : rep.files) std::printf("wrote %s/%s\n", out.c_str(), f.c_str());
    return rep.exit_code;
  } catch (const dinilab::NonConvergenceError& e) {
    std::fprintf(stderr, "dinilab: solver did not converge: %s (last residual %g)\n", e.what(), e.last_residual());
    return kNoConvergence;
  } catch (const dinilab::IndeterminateError& e) {
    std::fprintf(stderr, "dinilab: indeterminate: %s (%d shells)\n", e.what(), e.shells_used());
    return kIndeterminate;
  } catch (const dinilab::InvariantError& e) {
    std::fprintf(stderr, "dinilab: invariant violated: %s\n", e.what());
    return kInternal;
  } catch (const dinilab::Error& e) {
    // ConfigError and every input-driven failure (bad ranges, inadmissible omega, ...)
    std::fprintf(stderr, "dinilab: config error: %s\n", e.what());
    return kConfig;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "dinilab: config error: %s\n", e.what());
    return kConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "dinilab: %s\n", e.what());
    return kInternal;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for -Lu + H(x) u^p = 0 with degenerate absorption"};
  app.require_subcommand(1);
  std::string config, out;
  int exit_code = kOk;
  for (const char* name : {"dini", "kernel", "solve", "propagation", "uniqueness", "energy", "cascade"}) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name + " scenario");
    sub->add_option("--config", config, "JSON config file")->required();
    sub->add_option("--out", out, "output directory")->required();
    sub->callback([&, name] {
      std::printf("dinilab %s: %d thread(s)\n", name, dinilab::thread_count());
      exit_code = run(dinilab::scenario_from_string(name), config, out);
    });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }
  return exit_code;
}
