#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "settrig/config.hpp"
#include "settrig/io.hpp"

// Batch pipeline commands behind the command-line tool. Each one reads an
// ExperimentConfig, produces artifacts under out_dir, and prints a short
// human summary; errors surface as exceptions for the frontend to map onto
// exit codes.

namespace settrig {

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

inline std::string format_weight(double w) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", w);
  return buf;
}

inline ContractiveSet obtain_set(const ExperimentConfig& cfg, const std::string& set_path) {
  if (!set_path.empty()) {
    std::ifstream in(set_path);
    if (!in) throw ConfigError("cannot open contractive set file " + set_path);
    Json j;
    in >> j;
    return contractive_set_from_json(j);
  }
  return compute_contractive_set(cfg.sys, cfg.cs, cfg.lambda, cfg.max_iter, cfg.tol);
}

inline ShellDecomposition shells_of(const ExperimentConfig& cfg) {
  if (cfg.rho.empty()) throw ConfigError("config: shells are required for the explicit map");
  return ShellDecomposition{cfg.rho};
}

}  // namespace detail

inline int cmd_contract(const ExperimentConfig& cfg, std::ostream& out) {
  std::filesystem::create_directories(cfg.out_dir);
  const ContractiveSet S =
      compute_contractive_set(cfg.sys, cfg.cs, cfg.lambda, cfg.max_iter, cfg.tol);
  const VerifyResult vr = verify_contractive(cfg.sys, cfg.cs, S.S, S.lambda_certified, cfg.tol);

  Json report{{"lambda_target", S.lambda_target},
              {"lambda_certified", S.lambda_certified},
              {"iterations_used", S.iterations_used},
              {"facet_count", S.S.facets()},
              {"vertex_count", S.V.count()},
              {"worst_factor", vr.worst_factor},
              {"contractive", vr.contractive}};
  Json warnings = Json::array();
  for (const std::string& w : check_assumptions(cfg.sys, cfg.tol)) warnings.push_back(w);
  report["warnings"] = std::move(warnings);

  const auto dir = std::filesystem::path(cfg.out_dir);
  detail::write_text_file(dir / "contractive_set.json", contractive_set_to_json(S).dump(2) + "\n");
  detail::write_text_file(dir / "certification.json", report.dump(2) + "\n");
  out << "contractive set: " << S.S.facets() << " facets, " << S.V.count() << " vertices, "
      << S.iterations_used << " iterations\n"
      << "certified factor " << S.lambda_certified << " (worst vertex factor " << vr.worst_factor
      << ")\n";
  if (!vr.contractive) throw NotContractive("certification re-check failed");
  return 0;
}

inline int cmd_explicit_map(const ExperimentConfig& cfg, const std::string& set_path,
                            std::ostream& out) {
  std::filesystem::create_directories(cfg.out_dir);
  const ContractiveSet S = detail::obtain_set(cfg, set_path);
  const ShellDecomposition shells = detail::shells_of(cfg);
  const ExplicitMap map = build_explicit_map(cfg.sys, cfg.cs, S, shells, cfg.online, cfg.tol);

  const auto dir = std::filesystem::path(cfg.out_dir);
  if (set_path.empty()) {
    detail::write_text_file(dir / "contractive_set.json", contractive_set_to_json(S).dump(2) + "\n");
  }
  detail::write_text_file(dir / "explicit_map.json", explicit_map_to_json(map).dump(2) + "\n");

  std::ostringstream table;
  table << "ell,rho,feasible_intervals,j_star,eps\n";
  out << "ell  rho    J_ell                j*   eps\n";
  char buf[32];
  for (int ell = 1; ell <= shells.L(); ++ell) {
    const auto& J = map.feasible_sets[static_cast<size_t>(ell - 1)];
    std::string jlist;
    for (size_t i = 0; i < J.size(); ++i) jlist += (i ? ";" : "") + std::to_string(J[i]);
    std::snprintf(buf, sizeof buf, "%.17g", map.solutions[static_cast<size_t>(ell - 1)].eps);
    table << ell << ',' << shells.rho[static_cast<size_t>(ell - 1)] << ",\"" << jlist << "\","
          << map.j_star[static_cast<size_t>(ell - 1)] << ',' << buf << '\n';
    std::snprintf(buf, sizeof buf, "%-20s", (std::to_string(J.front()) + ".." + std::to_string(J.back())).c_str());
    out << ell << "    " << shells.rho[static_cast<size_t>(ell - 1)] << "    " << buf
        << " " << map.j_star[static_cast<size_t>(ell - 1)] << "    "
        << map.solutions[static_cast<size_t>(ell - 1)].eps << '\n';
  }
  detail::write_text_file(dir / "shell_table.csv", table.str());
  return 0;
}

inline int cmd_simulate(const ExperimentConfig& cfg, int algorithm, const std::string& set_path,
                        const std::string& map_path, std::ostream& out) {
  if (algorithm != 1 && algorithm != 2) throw ConfigError("algorithm must be 1 or 2");
  if (!cfg.x0) throw ConfigError("config: x0 is required for simulation");
  std::filesystem::create_directories(cfg.out_dir);

  const ContractiveSet S = detail::obtain_set(cfg, set_path);
  std::optional<ExplicitMap> map;
  if (algorithm == 2) {
    if (!map_path.empty()) {
      std::ifstream in(map_path);
      if (!in) throw ConfigError("cannot open explicit map file " + map_path);
      Json j;
      in >> j;
      map = explicit_map_from_json(j);
    } else {
      map = build_explicit_map(cfg.sys, cfg.cs, S, detail::shells_of(cfg), cfg.online, cfg.tol);
    }
  }

  const Controller controller = (algorithm == 1)
                                    ? make_online_controller(cfg.sys, cfg.cs, S, cfg.online, cfg.tol)
                                    : make_explicit_controller(*map, cfg.tol);
  const SimTrace trace = simulate(controller, cfg.sys, cfg.cs, S, *cfg.x0, cfg.horizon, cfg.tol);
  const RunMetrics m = metrics(trace, cfg.metrics_opts);

  const auto dir = std::filesystem::path(cfg.out_dir);
  const std::string tag = "alg" + std::to_string(algorithm);
  std::ostringstream csv;
  trace_to_csv(csv, trace, S, cfg.tol);
  detail::write_text_file(dir / ("trace_" + tag + ".csv"), csv.str());
  detail::write_text_file(dir / ("metrics_" + tag + ".json"), metrics_to_json(m).dump(2) + "\n");

  out << "algorithm " << algorithm << ": " << trace.transmissions.size() << " transmissions over "
      << cfg.horizon << " steps, " << m.transmission_count << " in the counting window\n"
      << "convergence step: ";
  if (m.convergence_step) {
    out << *m.convergence_step;
  } else {
    out << "not reached";
  }
  out << ", constraint violations: " << m.constraint_violations << "\n";
  return 0;
}

inline int cmd_sweep(const ExperimentConfig& cfg, int algorithm, int workers, std::ostream& out) {
  if (algorithm != 1 && algorithm != 2) throw ConfigError("algorithm must be 1 or 2");
  if (cfg.sweep_weights.empty()) throw ConfigError("config: sweep weight grid is required");
  if (!cfg.x0) throw ConfigError("config: x0 is required for simulation");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  std::filesystem::create_directories(cfg.out_dir);

  const ContractiveSet S = compute_contractive_set(cfg.sys, cfg.cs, cfg.lambda, cfg.max_iter, cfg.tol);
  const auto dir = std::filesystem::path(cfg.out_dir);
  detail::write_text_file(dir / "contractive_set.json", contractive_set_to_json(S).dump(2) + "\n");

  const size_t total = cfg.sweep_weights.size();
  std::vector<RunMetrics> results(total);
  std::vector<std::string> errors(total);
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (size_t i = next.fetch_add(1); i < total; i = next.fetch_add(1)) {
      const auto [w1, w2] = cfg.sweep_weights[i];
      OnlineConfig oc = cfg.online;
      oc.w1 = w1;
      oc.w2 = w2;
      try {
        Controller controller;
        if (algorithm == 1) {
          controller = make_online_controller(cfg.sys, cfg.cs, S, oc, cfg.tol);
        } else {
          auto map = std::make_shared<ExplicitMap>(
              build_explicit_map(cfg.sys, cfg.cs, S, detail::shells_of(cfg), oc, cfg.tol));
          controller = [map, tol = cfg.tol](const Vector& x) { return algorithm2_step(*map, x, tol); };
        }
        const SimTrace trace = simulate(controller, cfg.sys, cfg.cs, S, *cfg.x0, cfg.horizon, cfg.tol);
        results[i] = metrics(trace, cfg.metrics_opts);
        const std::string tag = "w1-" + detail::format_weight(w1) + "_w2-" + detail::format_weight(w2);
        std::ostringstream csv;
        trace_to_csv(csv, trace, S, cfg.tol);
        detail::write_text_file(dir / ("trace_" + tag + ".csv"), csv.str());
        detail::write_text_file(dir / ("metrics_" + tag + ".json"),
                                metrics_to_json(results[i]).dump(2) + "\n");
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  const size_t count = std::min<size_t>(static_cast<size_t>(workers), total);
  pool.reserve(count);
  for (size_t t = 0; t < count; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  for (size_t i = 0; i < total; ++i) {
    if (!errors[i].empty()) throw Error("sweep entry " + std::to_string(i) + ": " + errors[i]);
  }

  std::ostringstream agg;
  agg << "w1,w2,transmission_count,convergence_step,constraint_violations\n";
  out << "w1      w2      transmissions  convergence  violations\n";
  for (size_t i = 0; i < total; ++i) {
    const auto [w1, w2] = cfg.sweep_weights[i];
    agg << detail::format_weight(w1) << ',' << detail::format_weight(w2) << ','
        << results[i].transmission_count << ',';
    if (results[i].convergence_step) agg << *results[i].convergence_step;
    agg << ',' << results[i].constraint_violations << '\n';
    out << detail::format_weight(w1) << "\t" << detail::format_weight(w2) << "\t"
        << results[i].transmission_count << "\t"
        << (results[i].convergence_step ? std::to_string(*results[i].convergence_step)
                                        : std::string("none"))
        << "\t" << results[i].constraint_violations << "\n";
  }
  detail::write_text_file(dir / "sweep.csv", agg.str());
  return 0;
}

/// Re-checks emitted artifacts: the stored set must still certify its
/// factor, every stored shell interval must still solve, and sampled
/// closed-loop steps must contract the gauge.
inline int cmd_verify(const ExperimentConfig& cfg, const std::string& set_path,
                      const std::string& map_path, std::ostream& out) {
  if (set_path.empty() && map_path.empty()) {
    throw ConfigError("verify needs a contractive set or explicit map artifact");
  }
  bool ok = true;

  std::optional<ContractiveSet> S;
  if (!set_path.empty()) {
    S = detail::obtain_set(cfg, set_path);
    const VerifyResult vr = verify_contractive(cfg.sys, cfg.cs, S->S, S->lambda_certified, cfg.tol);
    out << "contractive set: worst factor " << vr.worst_factor << " vs certified "
        << S->lambda_certified << (vr.contractive ? " [ok]" : " [FAILED]") << "\n";
    ok = ok && vr.contractive;
  }

  std::optional<ExplicitMap> map;
  if (!map_path.empty()) {
    std::ifstream in(map_path);
    if (!in) throw ConfigError("cannot open explicit map file " + map_path);
    Json j;
    in >> j;
    map = explicit_map_from_json(j);
    if (!S) S = map->S;
    for (size_t i = 0; i < map->solutions.size(); ++i) {
      const double rho = map->decomposition.rho[i];
      const int j_star = map->j_star[i];
      const auto re = solve_problem2(cfg.sys, cfg.cs, map->S, rho, j_star, cfg.tol);
      const bool good = re.has_value() && re->eps <= map->solutions[i].eps + 1e-6;
      out << "shell " << (i + 1) << ": interval " << j_star
          << (good ? " still solves [ok]" : " no longer solves [FAILED]") << "\n";
      ok = ok && good;
    }
  }

  // Seeded spot-check: one closed-loop decision from random states in S
  // must contract the gauge by the certified factor.
  std::mt19937 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double bound = 0.0;
  for (const Vector& v : S->V.vertices) bound = std::max(bound, v.cwiseAbs().maxCoeff());
  int checked = 0;
  int attempts = 0;
  while (checked < 20 && attempts < 4000) {
    ++attempts;
    Vector x(S->S.dim());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = bound * unit(rng);
    if (gauge(S->S, x, cfg.tol) > 1.0) continue;
    ++checked;
    const double before = gauge(S->S, x, cfg.tol);
    IntervalSolution d;
    if (map) {
      d = algorithm2_step(*map, x, cfg.tol);
    } else {
      d = algorithm1_step(cfg.sys, cfg.cs, *S, x, cfg.online, cfg.tol);
    }
    Vector xk = x;
    for (int step = 0; step < d.j; ++step) xk = cfg.sys.A * xk + cfg.sys.B * d.u;
    if (gauge(S->S, xk, cfg.tol) > S->lambda_certified * before + cfg.tol.feas_tol) {
      out << "decrease check failed at a sampled state\n";
      ok = false;
      break;
    }
  }
  out << "sampled " << checked << " states for the decrease check\n";
  out << (ok ? "verify: all checks passed\n" : "verify: FAILURES detected\n");
  if (!ok) throw NotContractive("artifact verification failed");
  return 0;
}

}  // namespace settrig
