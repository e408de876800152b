#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "settrig/polytope.hpp"
#include "settrig/types.hpp"

// Contractive-set construction for x(k+1) = Ax(k) + Bu(k) under polytopic
// state and input constraints: the one-step preimage operator, its fixed
// point iteration, and the vertex-wise contraction certificate that turns
// the resulting gauge into a Lyapunov function.

namespace settrig {

struct SystemModel {
  Matrix A;
  Matrix B;

  int state_dim() const { return static_cast<int>(A.rows()); }
  int input_dim() const { return static_cast<int>(B.cols()); }

  static SystemModel make(Matrix A_in, Matrix B_in) {
    if (A_in.rows() != A_in.cols()) throw DimensionMismatch("system: A not square");
    if (B_in.rows() != A_in.rows()) throw DimensionMismatch("system: B row count differs from A");
    return {std::move(A_in), std::move(B_in)};
  }
};

/// Stabilizability prerequisites are assumptions about the plant, not
/// runtime requirements, so marginal failures come back as warnings for the
/// caller to surface instead of aborting the pipeline.
inline std::vector<std::string> check_assumptions(const SystemModel& sys, const Tolerance& tol = {}) {
  std::vector<std::string> warnings;
  const int n = sys.state_dim();
  const int m = sys.input_dim();

  Eigen::JacobiSVD<Matrix> svd_b(sys.B);
  if (svd_b.singularValues().size() == 0 ||
      svd_b.singularValues()(svd_b.singularValues().size() - 1) <=
          tol.rank_tol * svd_b.singularValues()(0)) {
    warnings.push_back("input matrix is rank deficient");
  }

  Matrix ctrb(n, n * m);
  Matrix Ak = Matrix::Identity(n, n);
  for (int k = 0; k < n; ++k) {
    ctrb.middleCols(k * m, m) = Ak * sys.B;
    Ak = sys.A * Ak;
  }
  Eigen::JacobiSVD<Matrix> svd_c(ctrb);
  if (svd_c.singularValues()(0) <= 0.0 ||
      svd_c.singularValues()(std::min<Eigen::Index>(n, svd_c.singularValues().size()) - 1) <=
          tol.rank_tol * svd_c.singularValues()(0)) {
    warnings.push_back("controllability matrix is rank deficient");
  }
  return warnings;
}

struct ConstraintSet {
  HPolytope X;
  HPolytope U;

  /// Returns a copy with both sets normalized; throws NotCSet when either
  /// fails the compactness / interior-origin requirements.
  ConstraintSet validated(const Tolerance& tol = {}) const {
    return {normalize(X, tol), normalize(U, tol)};
  }
};

struct ContractiveSet {
  HPolytope S;  // normalized (h = 1)
  VPolytope V;
  double lambda_target = 0.0;
  double lambda_certified = 0.0;
  int iterations_used = 0;
};

/// States of X from which an admissible input reaches lambda * D in one
/// step: the projection onto x of {H_D (Ax + Bu) <= lambda h_D, u in U,
/// x in X}.
inline HPolytope preimage(const SystemModel& sys, const ConstraintSet& cs, const HPolytope& D,
                          double lambda, const Tolerance& tol = {}) {
  if (lambda < 0.0 || lambda > 1.0) throw InvalidArgument("preimage: lambda outside [0,1]");
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  if (D.dim() != n || cs.X.dim() != n || cs.U.dim() != m) {
    throw DimensionMismatch("preimage: dimension mismatch");
  }
  const Eigen::Index rows = D.facets() + cs.U.facets() + cs.X.facets();
  Matrix H = Matrix::Zero(rows, n + m);
  Vector h(rows);
  Eigen::Index r = 0;
  H.block(r, 0, D.facets(), n) = D.H * sys.A;
  H.block(r, n, D.facets(), m) = D.H * sys.B;
  h.segment(r, D.facets()) = lambda * D.h;
  r += D.facets();
  H.block(r, n, cs.U.facets(), m) = cs.U.H;
  h.segment(r, cs.U.facets()) = cs.U.h;
  r += cs.U.facets();
  H.block(r, 0, cs.X.facets(), n) = cs.X.H;
  h.segment(r, cs.X.facets()) = cs.X.h;
  return project_eliminate(HPolytope{std::move(H), std::move(h)}, n, tol);
}

struct VerifyResult {
  bool contractive = false;
  double worst_factor = kInf;
};

/// Vertex certificate: at every vertex v of S the cheapest one-step
/// contraction min {eps : Av + Bu in eps S, u in U} must not exceed lambda.
/// Convexity extends the bound from vertices to all of S.
inline VerifyResult verify_contractive(const SystemModel& sys, const ConstraintSet& cs,
                                       const HPolytope& S, double lambda,
                                       const Tolerance& tol = {}) {
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  if (S.dim() != n) throw DimensionMismatch("verify_contractive: set dimension mismatch");
  const VPolytope V = vertices(S, tol);
  double worst = 0.0;
  for (const Vector& v : V.vertices) {
    // variables (u, eps)
    LinearProgram lp = LinearProgram::with_variables(m + 1);
    lp.cost(m) = 1.0;
    lp.lower(m) = 0.0;
    const Eigen::Index rows = S.facets() + cs.U.facets();
    Matrix A = Matrix::Zero(rows, m + 1);
    Vector b(rows);
    A.block(0, 0, S.facets(), m) = S.H * sys.B;
    A.block(0, m, S.facets(), 1) = -S.h;
    b.head(S.facets()) = -S.H * sys.A * v;
    A.block(S.facets(), 0, cs.U.facets(), m) = cs.U.H;
    b.tail(cs.U.facets()) = cs.U.h;
    lp.a_ub = std::move(A);
    lp.b_ub = std::move(b);
    const LpResult r = solve(lp, tol);
    if (r.status != LpStatus::Optimal) return {false, kInf};
    worst = std::max(worst, r.solution(m));
  }
  return {worst <= lambda + tol.feas_tol, worst};
}

namespace detail {

// Smallest certifiable factor in (lambda, 1), located by bisecting the
// certificate to 1e-3 resolution. The per-vertex optima do not depend on
// the probed factor, so the certificate is evaluated once and the bisection
// runs on its cached worst factor.
inline double fallback_factor(double lambda, double worst, const Tolerance& tol) {
  const double top = 1.0 - 1e-6;
  if (worst > top + tol.feas_tol) {
    throw NotContractive("no factor below 1 certifies the final iterate (worst " +
                         std::to_string(worst) + ")");
  }
  double lo = lambda;
  double hi = top;
  while (hi - lo > 1e-3) {
    const double mid = 0.5 * (lo + hi);
    if (worst <= mid + tol.feas_tol) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

}  // namespace detail

/// Fixed-point iteration Omega_0 = X, Omega_{j+1} = preimage(Omega_j) with
/// X folded into the lift. Reaching a fixed point certifies lambda itself;
/// hitting max_iter falls back to the smallest larger factor the final
/// iterate supports.
inline ContractiveSet compute_contractive_set(const SystemModel& sys, const ConstraintSet& cs_raw,
                                              double lambda, int max_iter = 100,
                                              const Tolerance& tol = {}) {
  if (lambda < 0.0 || lambda >= 1.0) throw InvalidArgument("contractive set: lambda outside [0,1)");
  if (max_iter < 1) throw InvalidArgument("contractive set: max_iter < 1");
  const ConstraintSet cs = cs_raw.validated(tol);

  HPolytope omega = cs.X;
  int used = 0;
  bool fixed_point = false;
  for (int it = 1; it <= max_iter; ++it) {
    HPolytope next = preimage(sys, cs, omega, lambda, tol);
    if (is_empty(next, tol)) {
      throw EmptyIterate("contractive set: iterate " + std::to_string(it) + " is empty");
    }
    if (!contains(omega, next, tol)) {
      throw NumericalFailure("contractive set: iterate escaped its predecessor");
    }
    used = it;
    if (contains(next, omega, tol)) {
      omega = std::move(next);
      fixed_point = true;
      break;
    }
    omega = std::move(next);
  }

  ContractiveSet out;
  out.S = normalize(omega, tol);
  out.V = vertices(out.S, tol);
  out.lambda_target = lambda;
  out.iterations_used = used;
  if (fixed_point) {
    out.lambda_certified = lambda;
  } else {
    const VerifyResult vr = verify_contractive(sys, cs, out.S, lambda, tol);
    out.lambda_certified = detail::fallback_factor(lambda, vr.worst_factor, tol);
  }
  return out;
}

inline bool lyapunov_decrease_check(const ContractiveSet& S, const Vector& x, const Vector& x_next,
                                    double rho, const Tolerance& tol = {}) {
  return gauge(S.S, x_next, tol) <= rho * gauge(S.S, x, tol) + tol.feas_tol;
}

}  // namespace settrig
