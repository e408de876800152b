#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "settrig/online.hpp"

// Offline variant. The contractive set is sliced into concentric shells
// rho_1 S, rho_2 S \ rho_1 S, ..., and one interval plus one input per
// vertex is precomputed per shell. Online work then reduces to locating the
// shell of the current state and blending the stored vertex inputs.

namespace settrig {

struct ShellDecomposition {
  std::vector<double> rho;

  int L() const { return static_cast<int>(rho.size()); }

  void validate() const {
    if (rho.empty()) throw ConfigError("shells: empty radius list");
    double prev = 0.0;
    for (const double r : rho) {
      if (r <= prev) throw ConfigError("shells: radii must be strictly increasing and positive");
      prev = r;
    }
    if (rho.back() != 1.0) throw ConfigError("shells: outermost radius must be 1");
  }

  static ShellDecomposition uniform(int L) {
    if (L < 1) throw ConfigError("shells: L must be at least 1");
    ShellDecomposition d;
    d.rho.resize(static_cast<size_t>(L));
    for (int ell = 1; ell <= L; ++ell) d.rho[static_cast<size_t>(ell - 1)] = static_cast<double>(ell) / L;
    d.rho.back() = 1.0;
    return d;
  }
};

struct ShellSolution {
  int ell = 0;  // assigned by the map builder
  int j = 0;
  double eps = 0.0;
  std::vector<Vector> u_per_vertex;
};

struct ExplicitMap {
  ShellDecomposition decomposition;
  std::vector<int> j_star;               // j_star[ell-1]
  std::vector<ShellSolution> solutions;  // solutions[ell-1], at interval j_star[ell-1]
  ContractiveSet S;
  std::vector<std::vector<int>> feasible_sets;  // J_ell per shell, kept for reporting
};

/// Shared-eps problem over all scaled vertices rho * v_n of S. Each vertex
/// has its own held input, and eps couples them only through the shared
/// minimum, so the joint LP splits exactly into per-vertex LPs whose worst
/// optimum is the shared one.
inline std::optional<ShellSolution> solve_problem2(const SystemModel& sys, const ConstraintSet& cs,
                                                   const ContractiveSet& S, double rho, int j,
                                                   const Tolerance& tol = {}) {
  if (rho <= 0.0 || rho > 1.0) throw InvalidArgument("shell radius outside (0,1]");
  if (j < 1) throw InvalidArgument("interval must be at least 1");
  const detail::StepMatrices sm(sys, j);
  ShellSolution out;
  out.j = j;
  out.eps = 0.0;
  out.u_per_vertex.reserve(S.V.vertices.size());
  for (const Vector& v : S.V.vertices) {
    const auto sol = detail::solve_held_input_lp(sys, cs, S, rho * v, j, rho, sm, tol);
    if (!sol) return std::nullopt;
    out.eps = std::max(out.eps, sol->eps);
    out.u_per_vertex.push_back(sol->u);
  }
  return out;
}

inline std::vector<int> feasible_intervals_shell(const SystemModel& sys, const ConstraintSet& cs,
                                                 const ContractiveSet& S, double rho, int j_max,
                                                 const Tolerance& tol = {}) {
  std::vector<int> out;
  for (int j = 1; j <= j_max; ++j) {
    if (solve_problem2(sys, cs, S, rho, j, tol)) out.push_back(j);
  }
  return out;
}

/// Precomputes, for every shell, the feasible intervals, the reward-optimal
/// one, and its per-vertex inputs.
inline ExplicitMap build_explicit_map(const SystemModel& sys, const ConstraintSet& cs,
                                      const ContractiveSet& S, const ShellDecomposition& shells,
                                      const OnlineConfig& cfg, const Tolerance& tol = {}) {
  shells.validate();
  cfg.validate();
  ExplicitMap map;
  map.decomposition = shells;
  map.S = S;
  for (int ell = 1; ell <= shells.L(); ++ell) {
    const double rho = shells.rho[static_cast<size_t>(ell - 1)];
    std::map<int, ShellSolution> sols;
    std::map<int, double> eps_by_j;
    for (int j = 1; j <= cfg.j_max; ++j) {
      if (auto s = solve_problem2(sys, cs, S, rho, j, tol)) {
        eps_by_j.emplace(j, s->eps);
        sols.emplace(j, std::move(*s));
      }
    }
    if (sols.empty()) {
      throw EmptyCandidates("explicit map: no feasible interval for shell " + std::to_string(ell));
    }
    const int j = select_interval(eps_by_j, cfg, S.lambda_certified, tol);
    ShellSolution chosen = std::move(sols.at(j));
    chosen.ell = ell;
    map.j_star.push_back(j);
    map.solutions.push_back(std::move(chosen));
    std::vector<int> J;
    for (const auto& [jj, e] : eps_by_j) J.push_back(jj);
    map.feasible_sets.push_back(std::move(J));
  }
  return map;
}

/// Index of the innermost shell whose outer radius covers x.
inline int point_locate(const ExplicitMap& map, const Vector& x, const Tolerance& tol = {}) {
  const double g = gauge(map.S.S, x, tol);
  if (g > 1.0 + tol.feas_tol) throw StateOutsideS("point_locate: state gauge " + std::to_string(g));
  for (int ell = 1; ell <= map.decomposition.L(); ++ell) {
    if (g <= map.decomposition.rho[static_cast<size_t>(ell - 1)] + tol.feas_tol) return ell;
  }
  return map.decomposition.L();
}

/// Convex weights lambda_n >= 0, sum 1, with sum lambda_n v_n = y, found by
/// the deterministic phase-1 LP so repeated calls pick the same
/// decomposition among the many valid ones.
inline Vector convex_coefficients(const ContractiveSet& S, const Vector& y,
                                  const Tolerance& tol = {}) {
  const int N = S.V.count();
  const int n = static_cast<int>(y.size());
  if (N == 0 || S.V.dim() != n) throw DimensionMismatch("convex_coefficients: dimension mismatch");
  LinearProgram lp = LinearProgram::with_variables(N);
  lp.lower.setZero();
  Matrix Aeq = Matrix::Zero(n + 1, N);
  Vector beq(n + 1);
  for (int k = 0; k < N; ++k) Aeq.block(0, k, n, 1) = S.V.vertices[static_cast<size_t>(k)];
  Aeq.row(n).setOnes();
  beq.head(n) = y;
  beq(n) = 1.0;
  lp.a_eq = std::move(Aeq);
  lp.b_eq = std::move(beq);
  const LpResult r = solve(lp, tol);
  if (r.status != LpStatus::Optimal) {
    throw DecompositionFailed("convex_coefficients: no convex combination found");
  }
  return r.solution;
}

/// Table lookup plus input blending: locate the shell, scale the state back
/// onto the boundary of the shell's outer set, decompose it over the
/// vertices, and blend the stored vertex inputs with the same weights.
inline IntervalSolution algorithm2_step(const ExplicitMap& map, const Vector& x,
                                        const Tolerance& tol = {}) {
  const double eps_x = gauge(map.S.S, x, tol);
  if (eps_x > 1.0 + tol.feas_tol) {
    throw StateOutsideS("algorithm2_step: state gauge " + std::to_string(eps_x));
  }
  const int m = static_cast<int>(map.solutions.front().u_per_vertex.front().size());
  if (eps_x <= tol.rank_tol) {
    return {map.j_star.front(), Vector::Zero(m), 0.0};
  }
  const int ell = point_locate(map, x, tol);
  const ShellSolution& sol = map.solutions[static_cast<size_t>(ell - 1)];
  const double rho = map.decomposition.rho[static_cast<size_t>(ell - 1)];
  const Vector lambda = convex_coefficients(map.S, x / eps_x, tol);
  Vector u = Vector::Zero(m);
  for (int k = 0; k < map.S.V.count(); ++k) {
    u += lambda(k) * sol.u_per_vertex[static_cast<size_t>(k)];
  }
  u *= eps_x / rho;
  return {sol.j, std::move(u), sol.eps};
}

}  // namespace settrig
