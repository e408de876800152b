#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "settrig/io.hpp"
#include "settrig/online.hpp"
#include "settrig/sim.hpp"

// Experiment descriptions arrive as one JSON document; everything here is
// validated up front so the pipeline never starts on ill-posed input.

namespace settrig {

struct ExperimentConfig {
  SystemModel sys;  // already discretized when the input was continuous
  ConstraintSet cs;
  double lambda = 0.99;
  int max_iter = 100;
  OnlineConfig online;
  std::vector<double> rho;  // shell radii, outermost 1
  std::optional<Vector> x0;
  int horizon = 200;
  unsigned seed = 0;
  std::string out_dir = ".";
  std::vector<std::pair<double, double>> sweep_weights;
  MetricsOptions metrics_opts;
  Tolerance tol;
};

namespace detail {

// Constraint sets accept three spellings: explicit {"H", "h"}, a
// {"lo","hi"} box, or the {"inf_norm_bound": r} shorthand.
inline HPolytope constraint_from_json(const Json& j, int dim, const std::string& name) {
  if (j.contains("inf_norm_bound")) {
    const double r = j.at("inf_norm_bound").get<double>();
    if (r <= 0.0) throw ConfigError("config: " + name + " inf_norm_bound must be positive");
    return HPolytope::inf_norm_box(dim, r);
  }
  if (j.contains("lo") && j.contains("hi")) {
    const Vector lo = vector_from_json(j.at("lo"));
    const Vector hi = vector_from_json(j.at("hi"));
    if (lo.size() != dim) throw ConfigError("config: " + name + " box dimension mismatch");
    return HPolytope::box(lo, hi);
  }
  if (j.contains("H") && j.contains("h")) {
    HPolytope P = polytope_from_json(j);
    if (P.dim() != dim) throw ConfigError("config: " + name + " dimension mismatch");
    return P;
  }
  throw ConfigError("config: " + name + " needs inf_norm_bound, lo/hi, or H/h");
}

}  // namespace detail

inline ExperimentConfig parse_config(const Json& j) {
  ExperimentConfig cfg;

  if (!j.contains("system")) throw ConfigError("config: missing system");
  const Json& sys = j.at("system");
  if (sys.contains("continuous")) {
    const Json& c = sys.at("continuous");
    ContinuousModel cm;
    cm.A_c = matrix_from_json(c.at("A"));
    cm.B_c = matrix_from_json(c.at("B"));
    cm.T = c.at("T").get<double>();
    cfg.sys = zoh_discretize(cm);
  } else if (sys.contains("discrete")) {
    const Json& d = sys.at("discrete");
    cfg.sys = SystemModel::make(matrix_from_json(d.at("A")), matrix_from_json(d.at("B")));
  } else {
    throw ConfigError("config: system needs continuous or discrete matrices");
  }
  const int n = cfg.sys.state_dim();
  const int m = cfg.sys.input_dim();

  if (!j.contains("constraints")) throw ConfigError("config: missing constraints");
  cfg.cs.X = detail::constraint_from_json(j.at("constraints").at("X"), n, "X");
  cfg.cs.U = detail::constraint_from_json(j.at("constraints").at("U"), m, "U");

  cfg.lambda = j.value("lambda", cfg.lambda);
  if (cfg.lambda < 0.0 || cfg.lambda >= 1.0) throw ConfigError("config: lambda outside [0,1)");
  cfg.max_iter = j.value("max_iter", cfg.max_iter);
  if (cfg.max_iter < 1) throw ConfigError("config: max_iter must be at least 1");

  cfg.online.j_max = j.value("j_max", 1);
  if (j.contains("weights")) {
    cfg.online.w1 = j.at("weights").value("w1", 0.0);
    cfg.online.w2 = j.at("weights").value("w2", 0.0);
  }
  cfg.online.exponential_mode = j.value("exponential_mode", false);
  cfg.online.validate();

  if (j.contains("shells")) {
    const Json& sh = j.at("shells");
    if (sh.contains("rho")) {
      for (const Json& r : sh.at("rho")) cfg.rho.push_back(r.get<double>());
    } else if (sh.contains("L")) {
      cfg.rho = ShellDecomposition::uniform(sh.at("L").get<int>()).rho;
    } else {
      throw ConfigError("config: shells needs rho or L");
    }
    ShellDecomposition{cfg.rho}.validate();
  }

  if (j.contains("x0")) {
    Vector x0 = vector_from_json(j.at("x0"));
    if (x0.size() != n) throw ConfigError("config: x0 dimension mismatch");
    cfg.x0 = std::move(x0);
  }
  cfg.horizon = j.value("horizon", cfg.horizon);
  if (cfg.horizon < 1) throw ConfigError("config: horizon must be at least 1");
  cfg.seed = j.value("seed", cfg.seed);
  cfg.out_dir = j.value("out_dir", cfg.out_dir);

  if (j.contains("sweep")) {
    for (const Json& w : j.at("sweep").at("weights")) {
      if (!w.is_array() || w.size() != 2) throw ConfigError("config: sweep weights must be [w1, w2] pairs");
      cfg.sweep_weights.emplace_back(w[0].get<double>(), w[1].get<double>());
      if (cfg.sweep_weights.back().first < 0.0 || cfg.sweep_weights.back().second < 0.0) {
        throw ConfigError("config: sweep weights must be nonnegative");
      }
    }
    if (cfg.sweep_weights.empty()) throw ConfigError("config: sweep weight grid is empty");
  }

  cfg.metrics_opts.convergence_threshold =
      j.value("convergence_threshold", cfg.metrics_opts.convergence_threshold);
  cfg.metrics_opts.transmission_window =
      j.value("transmission_window", cfg.metrics_opts.transmission_window);
  cfg.metrics_opts.use_inf_norm = j.value("convergence_norm", std::string("euclidean")) == "inf";

  cfg.tol.feas_tol = j.value("feas_tol", cfg.tol.feas_tol);
  cfg.tol.rank_tol = j.value("rank_tol", cfg.tol.rank_tol);
  if (cfg.tol.feas_tol <= 0.0 || cfg.tol.rank_tol <= 0.0) {
    throw ConfigError("config: tolerances must be positive");
  }

  // Surface dimension errors now, not at first use.
  cfg.cs.validated(cfg.tol);
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace settrig
