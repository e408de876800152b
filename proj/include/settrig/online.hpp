#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

#include "settrig/invariance.hpp"
#include "settrig/polytope.hpp"
#include "settrig/types.hpp"

// Online self-triggered control. At each transmission the controller
// solves, for every candidate inter-transmission interval j, one LP that
// holds a single input for j steps while contracting the gauge of the state
// as much as possible, then picks the interval with the best
// performance/communication reward.

namespace settrig {

struct OnlineConfig {
  int j_max = 1;
  double w1 = 0.0;
  double w2 = 0.0;
  bool exponential_mode = false;

  void validate() const {
    if (j_max < 1) throw ConfigError("config: j_max must be at least 1");
    if (w1 < 0.0 || w2 < 0.0) throw ConfigError("config: weights must be nonnegative");
  }
};

struct IntervalSolution {
  int j = 0;
  Vector u;
  double eps = 0.0;
};

namespace detail {

// a_pow[k] = A^k and input_map[k] = sum_{i=1..k} A^{i-1} B, the matrices
// mapping a held input across k plant steps.
struct StepMatrices {
  std::vector<Matrix> a_pow;
  std::vector<Matrix> input_map;

  StepMatrices(const SystemModel& sys, int j_max) {
    const int n = sys.state_dim();
    const int m = sys.input_dim();
    a_pow.reserve(static_cast<size_t>(j_max) + 1);
    input_map.reserve(static_cast<size_t>(j_max) + 1);
    a_pow.push_back(Matrix::Identity(n, n));
    input_map.push_back(Matrix::Zero(n, m));
    for (int k = 1; k <= j_max; ++k) {
      input_map.push_back(a_pow.back() * sys.B + input_map.back());
      a_pow.push_back(sys.A * a_pow.back());
    }
  }
};

// Shared LP core of the online and shell problems: one held input u must
// keep z, A z + B u, ..., inside X for every intermediate step and land the
// j-th state in (eps * target_scale) S, minimizing eps.
inline std::optional<IntervalSolution> solve_held_input_lp(const SystemModel& sys,
                                                           const ConstraintSet& cs,
                                                           const ContractiveSet& S, const Vector& z,
                                                           int j, double target_scale,
                                                           const StepMatrices& sm,
                                                           const Tolerance& tol) {
  const int m = sys.input_dim();
  const int fx = cs.X.facets();
  const int fs = S.S.facets();
  const int fu = cs.U.facets();
  const Eigen::Index rows = static_cast<Eigen::Index>(j) * fx + fs + fu;

  LinearProgram lp = LinearProgram::with_variables(m + 1);
  lp.cost(m) = 1.0;
  lp.lower(m) = 0.0;
  lp.upper(m) = S.lambda_certified;
  Matrix A = Matrix::Zero(rows, m + 1);
  Vector b(rows);
  Eigen::Index r = 0;
  for (int jp = 1; jp <= j; ++jp) {
    A.block(r, 0, fx, m) = cs.X.H * sm.input_map[static_cast<size_t>(jp)];
    b.segment(r, fx) = cs.X.h - cs.X.H * (sm.a_pow[static_cast<size_t>(jp)] * z);
    r += fx;
  }
  A.block(r, 0, fs, m) = S.S.H * sm.input_map[static_cast<size_t>(j)];
  A.block(r, m, fs, 1) = -target_scale * S.S.h;
  b.segment(r, fs) = -S.S.H * (sm.a_pow[static_cast<size_t>(j)] * z);
  r += fs;
  A.block(r, 0, fu, m) = cs.U.H;
  b.segment(r, fu) = cs.U.h;
  lp.a_ub = std::move(A);
  lp.b_ub = std::move(b);

  const LpResult res = solve(lp, tol);
  if (res.status != LpStatus::Optimal) return std::nullopt;
  return IntervalSolution{j, res.solution.head(m), res.solution(m)};
}

}  // namespace detail

/// min eps s.t. the held input keeps the first j-1 successors in X and puts
/// the j-th one in eps * gauge(x) * S. A state at the origin short-circuits
/// to the zero input, which holds it there.
inline std::optional<IntervalSolution> solve_problem1(const SystemModel& sys,
                                                      const ConstraintSet& cs,
                                                      const ContractiveSet& S, const Vector& x,
                                                      int j, const Tolerance& tol = {}) {
  if (j < 1) throw InvalidArgument("interval must be at least 1");
  const double eps_x = gauge(S.S, x, tol);
  if (eps_x <= tol.rank_tol) {
    return IntervalSolution{j, Vector::Zero(sys.input_dim()), 0.0};
  }
  const detail::StepMatrices sm(sys, j);
  return detail::solve_held_input_lp(sys, cs, S, x, j, eps_x, sm, tol);
}

inline std::vector<int> feasible_intervals(const SystemModel& sys, const ConstraintSet& cs,
                                           const ContractiveSet& S, const Vector& x,
                                           const OnlineConfig& cfg, const Tolerance& tol = {}) {
  cfg.validate();
  const double eps_x = gauge(S.S, x, tol);
  std::vector<int> out;
  if (eps_x <= tol.rank_tol) {
    out.resize(static_cast<size_t>(cfg.j_max));
    std::iota(out.begin(), out.end(), 1);
    return out;
  }
  const detail::StepMatrices sm(sys, cfg.j_max);
  for (int j = 1; j <= cfg.j_max; ++j) {
    if (detail::solve_held_input_lp(sys, cs, S, x, j, eps_x, sm, tol)) out.push_back(j);
  }
  return out;
}

/// Reward w1 (1 - eps_j)/j + w2 j over the feasible intervals, ties going
/// to the smallest interval. In exponential mode candidates must contract
/// at least geometrically (eps_j <= lambda^j); when none does, j = 1 is
/// used, which always qualifies.
inline int select_interval(const std::map<int, double>& eps_by_j, const OnlineConfig& cfg,
                           double lambda_certified, const Tolerance& tol = {}) {
  cfg.validate();
  if (eps_by_j.empty()) throw EmptyCandidates("select_interval: no feasible interval");
  std::map<int, double> pool = eps_by_j;
  if (cfg.exponential_mode) {
    std::map<int, double> filtered;
    for (const auto& [j, eps] : eps_by_j) {
      if (eps <= std::pow(lambda_certified, j) + tol.feas_tol) filtered.emplace(j, eps);
    }
    if (filtered.empty()) return eps_by_j.begin()->first;
    pool = std::move(filtered);
  }
  int best_j = 0;
  double best_r = -kInf;
  for (const auto& [j, eps] : pool) {
    const double reward = cfg.w1 * (1.0 - eps) / j + cfg.w2 * j;
    if (reward > best_r) {
      best_r = reward;
      best_j = j;
    }
  }
  return best_j;
}

/// One full transmission decision: solve every interval, pick by reward,
/// return the winning input / interval / contraction.
inline IntervalSolution algorithm1_step(const SystemModel& sys, const ConstraintSet& cs,
                                        const ContractiveSet& S, const Vector& x,
                                        const OnlineConfig& cfg, const Tolerance& tol = {}) {
  cfg.validate();
  const double eps_x = gauge(S.S, x, tol);
  if (eps_x > 1.0 + tol.feas_tol) {
    throw StateOutsideS("algorithm1_step: state gauge " + std::to_string(eps_x));
  }
  if (eps_x <= tol.rank_tol) {
    std::map<int, double> zero_eps;
    for (int j = 1; j <= cfg.j_max; ++j) zero_eps.emplace(j, 0.0);
    const int j = select_interval(zero_eps, cfg, S.lambda_certified, tol);
    return {j, Vector::Zero(sys.input_dim()), 0.0};
  }
  const detail::StepMatrices sm(sys, cfg.j_max);
  std::map<int, IntervalSolution> sols;
  std::map<int, double> eps_by_j;
  for (int j = 1; j <= cfg.j_max; ++j) {
    if (auto s = detail::solve_held_input_lp(sys, cs, S, x, j, eps_x, sm, tol)) {
      eps_by_j.emplace(j, s->eps);
      sols.emplace(j, std::move(*s));
    }
  }
  const int j = select_interval(eps_by_j, cfg, S.lambda_certified, tol);
  return sols.at(j);
}

}  // namespace settrig
