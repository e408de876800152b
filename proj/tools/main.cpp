#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "settrig/settrig.hpp"

// Command-line frontend. Exit codes: 0 success, 1 usage or configuration
// problems, 2 infeasibility or violated model assumptions, 3 numerical
// failures inside the solvers. SETTRIG_TOL overrides the feasibility
// tolerance from the environment.

namespace {

settrig::ExperimentConfig load(const std::string& config_path) {
  settrig::ExperimentConfig cfg = settrig::load_config(config_path);
  if (const char* env = std::getenv("SETTRIG_TOL")) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end == env || v <= 0.0) throw settrig::ConfigError("SETTRIG_TOL must be a positive number");
    cfg.tol.feas_tol = v;
  }
  return cfg;
}

void print_error(const char* type, const std::string& message) {
  settrig::Json err{{"error", {{"type", type}, {"message", message}}}};
  std::cout << err.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contractive-set toolkit for self-triggered control"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string set_path;
  std::string map_path;
  int algorithm = 1;
  int workers = 1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config JSON")->required();
    cmd->add_option("--out", out_dir, "output directory (overrides config)");
  };

  CLI::App* contract = app.add_subcommand("contract", "compute and certify a contractive set");
  add_common(contract);

  CLI::App* emap = app.add_subcommand("explicit-map", "build the per-shell transmission map");
  add_common(emap);
  emap->add_option("--set", set_path, "reuse a contractive set artifact");

  CLI::App* sim = app.add_subcommand("simulate", "run the closed loop");
  add_common(sim);
  sim->add_option("--algorithm", algorithm, "1 = online, 2 = explicit map")->check(CLI::Range(1, 2));
  sim->add_option("--set", set_path, "reuse a contractive set artifact");
  sim->add_option("--map", map_path, "reuse an explicit map artifact");

  CLI::App* sweep = app.add_subcommand("sweep", "simulate over the config's weight grid");
  add_common(sweep);
  sweep->add_option("--algorithm", algorithm, "1 = online, 2 = explicit map")->check(CLI::Range(1, 2));
  sweep->add_option("--workers", workers, "concurrent sweep entries")->check(CLI::PositiveNumber);

  CLI::App* verify = app.add_subcommand("verify", "re-check previously emitted artifacts");
  add_common(verify);
  verify->add_option("--set", set_path, "contractive set artifact");
  verify->add_option("--map", map_path, "explicit map artifact");

  CLI11_PARSE(app, argc, argv);

  try {
    settrig::ExperimentConfig cfg = load(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (contract->parsed()) return settrig::cmd_contract(cfg, std::cout);
    if (emap->parsed()) return settrig::cmd_explicit_map(cfg, set_path, std::cout);
    if (sim->parsed()) return settrig::cmd_simulate(cfg, algorithm, set_path, map_path, std::cout);
    if (sweep->parsed()) return settrig::cmd_sweep(cfg, algorithm, workers, std::cout);
    if (verify->parsed()) return settrig::cmd_verify(cfg, set_path, map_path, std::cout);
    return 1;
  } catch (const settrig::EmptyIterate& e) {
    print_error("infeasible", e.what());
    return 2;
  } catch (const settrig::NotContractive& e) {
    print_error("infeasible", e.what());
    return 2;
  } catch (const settrig::EmptyCandidates& e) {
    print_error("infeasible", e.what());
    return 2;
  } catch (const settrig::AssumptionViolated& e) {
    print_error("assumption_violated", e.what());
    return 2;
  } catch (const settrig::StateOutsideS& e) {
    print_error("assumption_violated", e.what());
    return 2;
  } catch (const settrig::NotCSet& e) {
    print_error("assumption_violated", e.what());
    return 2;
  } catch (const settrig::EmptySet& e) {
    print_error("infeasible", e.what());
    return 2;
  } catch (const settrig::NumericalFailure& e) {
    print_error("numerical_failure", e.what());
    return 3;
  } catch (const settrig::ConfigError& e) {
    print_error("config_error", e.what());
    return 1;
  } catch (const settrig::Error& e) {
    print_error("error", e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("error", e.what());
    return 1;
  }
}
