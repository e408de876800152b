#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

#include "settrig/lp.hpp"
#include "settrig/types.hpp"

// Halfspace and vertex representations of convex polytopes, with the
// operations needed to iterate one-step preimages: membership, gauge,
// scaling, intersection, containment, redundancy removal, vertex
// enumeration, and Fourier-Motzkin projection.

namespace settrig {

/// {x : Hx <= h}
struct HPolytope {
  Matrix H;
  Vector h;

  int dim() const { return static_cast<int>(H.cols()); }
  int facets() const { return static_cast<int>(H.rows()); }

  static HPolytope from_rows(Matrix H_in, Vector h_in) {
    if (H_in.rows() != h_in.size()) throw DimensionMismatch("polytope: H has " + std::to_string(H_in.rows()) + " rows but h has " + std::to_string(h_in.size()) + " entries");
    return {std::move(H_in), std::move(h_in)};
  }

  static HPolytope box(const Vector& lo, const Vector& hi) {
    if (lo.size() != hi.size()) throw DimensionMismatch("box: bound size mismatch");
    const int n = static_cast<int>(lo.size());
    Matrix H(2 * n, n);
    Vector h(2 * n);
    H.topRows(n) = Matrix::Identity(n, n);
    H.bottomRows(n) = -Matrix::Identity(n, n);
    h.head(n) = hi;
    h.tail(n) = -lo;
    return {std::move(H), std::move(h)};
  }

  static HPolytope inf_norm_box(int n, double bound) {
    return box(Vector::Constant(n, -bound), Vector::Constant(n, bound));
  }
};

/// co{v_1, ..., v_N}
struct VPolytope {
  std::vector<Vector> vertices;

  int count() const { return static_cast<int>(vertices.size()); }
  int dim() const { return vertices.empty() ? 0 : static_cast<int>(vertices.front().size()); }
};

struct SupportResult {
  double value = 0.0;
  Vector maximizer;
  bool feasible = false;
  bool bounded = false;
};

/// max_{x in P} direction . x
inline SupportResult support(const HPolytope& P, const Vector& direction, const Tolerance& tol = {}) {
  if (direction.size() != P.dim()) throw DimensionMismatch("support: direction dimension mismatch");
  LinearProgram lp = LinearProgram::with_variables(P.dim());
  lp.cost = -direction;
  lp.a_ub = P.H;
  lp.b_ub = P.h;
  const LpResult r = solve(lp, tol);
  if (r.status == LpStatus::Infeasible) return {-kInf, Vector(), false, true};
  if (r.status == LpStatus::Unbounded) return {kInf, Vector(), true, false};
  return {direction.dot(r.solution), r.solution, true, true};
}

inline bool is_empty(const HPolytope& P, const Tolerance& tol = {}) {
  LinearProgram lp = LinearProgram::with_variables(P.dim());
  lp.a_ub = P.H;
  lp.b_ub = P.h;
  return solve(lp, tol).status == LpStatus::Infeasible;
}

inline bool is_bounded(const HPolytope& P, const Tolerance& tol = {}) {
  for (int i = 0; i < P.dim(); ++i) {
    for (const double sgn : {1.0, -1.0}) {
      Vector dir = Vector::Zero(P.dim());
      dir(i) = sgn;
      const SupportResult s = support(P, dir, tol);
      if (s.feasible && !s.bounded) return false;
    }
  }
  return true;
}

inline bool membership(const HPolytope& P, const Vector& x, const Tolerance& tol = {}) {
  if (x.size() != P.dim()) throw DimensionMismatch("membership: point dimension mismatch");
  if (P.facets() == 0) return true;
  return ((P.H * x - P.h).maxCoeff() <= tol.feas_tol);
}

/// Rescales every facet of a C-set so that h_i = 1.
inline HPolytope normalize(const HPolytope& P, const Tolerance& tol = {}) {
  std::vector<int> rows;
  rows.reserve(static_cast<size_t>(P.facets()));
  for (int i = 0; i < P.facets(); ++i) {
    if (P.H.row(i).norm() <= tol.rank_tol) {
      if (P.h(i) < -tol.feas_tol) throw NotCSet("normalize: contradictory zero facet");
      continue;  // vacuous 0 <= h row
    }
    if (P.h(i) <= tol.feas_tol) throw NotCSet("normalize: origin not strictly interior");
    rows.push_back(i);
  }
  if (rows.empty() || !is_bounded(P, tol)) throw NotCSet("normalize: set unbounded");
  Matrix H(static_cast<Eigen::Index>(rows.size()), P.dim());
  for (size_t k = 0; k < rows.size(); ++k) H.row(static_cast<Eigen::Index>(k)) = P.H.row(rows[k]) / P.h(rows[k]);
  return {std::move(H), Vector::Ones(static_cast<Eigen::Index>(rows.size()))};
}

/// Minkowski function of a normalized C-set, max_i H_i . x clamped at zero.
inline double gauge(const HPolytope& S, const Vector& x, const Tolerance& tol = {}) {
  if (x.size() != S.dim()) throw DimensionMismatch("gauge: point dimension mismatch");
  if (S.facets() == 0 || (S.h - Vector::Ones(S.facets())).cwiseAbs().maxCoeff() > tol.rank_tol) {
    throw NotCSet("gauge: set not normalized");
  }
  return std::max(0.0, (S.H * x).maxCoeff());
}

inline HPolytope scale(const HPolytope& S, double alpha) {
  if (alpha < 0.0) throw NegativeScale("scale: factor " + std::to_string(alpha));
  return {S.H, alpha * S.h};
}

namespace detail {

// Drops vacuous zero rows and merges rows that coincide after unit-normal
// scaling. Contradictory zero rows (0 <= negative) are kept so that
// emptiness survives the filter.
inline HPolytope dedupe_rows(const HPolytope& P, const Tolerance& tol) {
  std::vector<Eigen::RowVectorXd> keys;
  std::vector<int> kept;
  for (int i = 0; i < P.facets(); ++i) {
    const double nrm = P.H.row(i).norm();
    if (nrm <= tol.rank_tol) {
      if (P.h(i) < -tol.feas_tol) {
        kept.push_back(i);
        keys.emplace_back();  // zero rows never merge
      }
      continue;
    }
    Eigen::RowVectorXd key(P.dim() + 1);
    key << P.H.row(i) / nrm, P.h(i) / nrm;
    bool dup = false;
    for (size_t k = 0; k < keys.size(); ++k) {
      if (keys[k].size() == key.size() && (keys[k] - key).cwiseAbs().maxCoeff() <= tol.rank_tol) {
        dup = true;
        break;
      }
    }
    if (!dup) {
      keys.push_back(std::move(key));
      kept.push_back(i);
    }
  }
  Matrix H(static_cast<Eigen::Index>(kept.size()), P.dim());
  Vector h(static_cast<Eigen::Index>(kept.size()));
  for (size_t k = 0; k < kept.size(); ++k) {
    H.row(static_cast<Eigen::Index>(k)) = P.H.row(kept[k]);
    h(static_cast<Eigen::Index>(k)) = P.h(kept[k]);
  }
  return {std::move(H), std::move(h)};
}

}  // namespace detail

/// Minimal facet set describing the same point set. A row is dropped only
/// when an LP over the remaining rows certifies it cannot be violated.
inline HPolytope remove_redundancy(const HPolytope& P, const Tolerance& tol = {}) {
  const HPolytope Q = detail::dedupe_rows(P, tol);
  const int n = Q.facets();
  if (n <= 1) return Q;
  std::vector<bool> keep(static_cast<size_t>(n), true);
  for (int i = 0; i < n; ++i) {
    std::vector<int> others;
    for (int j = 0; j < n; ++j) {
      if (j != i && keep[static_cast<size_t>(j)]) others.push_back(j);
    }
    if (others.empty()) break;
    Matrix A(static_cast<Eigen::Index>(others.size()), Q.dim());
    Vector b(static_cast<Eigen::Index>(others.size()));
    for (size_t k = 0; k < others.size(); ++k) {
      A.row(static_cast<Eigen::Index>(k)) = Q.H.row(others[k]);
      b(static_cast<Eigen::Index>(k)) = Q.h(others[k]);
    }
    LinearProgram lp = LinearProgram::with_variables(Q.dim());
    lp.cost = -Q.H.row(i).transpose();
    lp.a_ub = std::move(A);
    lp.b_ub = std::move(b);
    const LpResult r = solve(lp, tol);
    if (r.status == LpStatus::Optimal && -r.objective <= Q.h(i) + tol.feas_tol) {
      keep[static_cast<size_t>(i)] = false;
    }
  }
  std::vector<int> rows;
  for (int i = 0; i < n; ++i) {
    if (keep[static_cast<size_t>(i)]) rows.push_back(i);
  }
  Matrix H(static_cast<Eigen::Index>(rows.size()), Q.dim());
  Vector h(static_cast<Eigen::Index>(rows.size()));
  for (size_t k = 0; k < rows.size(); ++k) {
    H.row(static_cast<Eigen::Index>(k)) = Q.H.row(rows[k]);
    h(static_cast<Eigen::Index>(k)) = Q.h(rows[k]);
  }
  return {std::move(H), std::move(h)};
}

struct IntersectResult {
  HPolytope set;
  bool empty = false;
};

inline IntersectResult intersect(const HPolytope& P, const HPolytope& Q, const Tolerance& tol = {}) {
  if (P.dim() != Q.dim()) throw DimensionMismatch("intersect: dimension mismatch");
  HPolytope raw{detail::vstack({P.H, Q.H}), detail::vconcat({P.h, Q.h})};
  if (is_empty(raw, tol)) return {std::move(raw), true};
  return {remove_redundancy(raw, tol), false};
}

/// True iff Q is a subset of P: every facet of P bounds Q from above.
inline bool contains(const HPolytope& P, const HPolytope& Q, const Tolerance& tol = {}) {
  if (P.dim() != Q.dim()) throw DimensionMismatch("contains: dimension mismatch");
  for (int i = 0; i < P.facets(); ++i) {
    const SupportResult s = support(Q, P.H.row(i).transpose(), tol);
    if (!s.feasible) return true;  // empty Q is contained in anything
    if (!s.bounded || s.value > P.h(i) + tol.feas_tol) return false;
  }
  return true;
}

/// Extreme points, found by solving every dim-subset of facets as a square
/// system and keeping feasible, non-repeated solutions.
inline VPolytope vertices(const HPolytope& P, const Tolerance& tol = {}) {
  if (is_empty(P, tol)) throw EmptySet("vertices: empty polytope");
  if (!is_bounded(P, tol)) throw UnboundedSet("vertices: unbounded polyhedron");
  const HPolytope Q = remove_redundancy(P, tol);
  const int n = Q.facets();
  const int d = Q.dim();
  if (n < d) throw UnboundedSet("vertices: fewer facets than dimensions");

  std::vector<Vector> out;
  std::vector<int> idx(static_cast<size_t>(d));
  std::iota(idx.begin(), idx.end(), 0);
  Matrix A(d, d);
  Vector b(d);
  while (true) {
    for (int k = 0; k < d; ++k) {
      A.row(k) = Q.H.row(idx[static_cast<size_t>(k)]);
      b(k) = Q.h(idx[static_cast<size_t>(k)]);
    }
    Eigen::FullPivLU<Matrix> lu(A);
    lu.setThreshold(tol.rank_tol);
    if (lu.rank() == d) {
      const Vector x = lu.solve(b);
      if ((Q.H * x - Q.h).maxCoeff() <= tol.feas_tol) {
        bool dup = false;
        for (const Vector& v : out) {
          if ((v - x).cwiseAbs().maxCoeff() <= tol.rank_tol) {
            dup = true;
            break;
          }
        }
        if (!dup) out.push_back(x);
      }
    }
    int t = d - 1;
    while (t >= 0 && idx[static_cast<size_t>(t)] == n - d + t) --t;
    if (t < 0) break;
    ++idx[static_cast<size_t>(t)];
    for (int s = t + 1; s < d; ++s) idx[static_cast<size_t>(s)] = idx[static_cast<size_t>(s - 1)] + 1;
  }
  if (out.empty()) throw EmptySet("vertices: no extreme points found");
  std::sort(out.begin(), out.end(), [](const Vector& a, const Vector& b2) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (a(i) != b2(i)) return a(i) < b2(i);
    }
    return false;
  });
  return {std::move(out)};
}

/// Shadow of P on its first `keep` coordinates, by Fourier-Motzkin
/// elimination of the trailing ones. Redundancy is removed after every
/// eliminated variable to hold the row count down.
inline HPolytope project_eliminate(const HPolytope& P, int keep, const Tolerance& tol = {}) {
  if (keep < 1 || keep > P.dim()) throw InvalidArgument("project_eliminate: keep out of range");
  HPolytope cur = P;
  for (int t = P.dim() - 1; t >= keep; --t) {
    std::vector<int> pos, neg, zer;
    for (int i = 0; i < cur.facets(); ++i) {
      const double a = cur.H(i, t);
      if (a > tol.rank_tol) {
        pos.push_back(i);
      } else if (a < -tol.rank_tol) {
        neg.push_back(i);
      } else {
        zer.push_back(i);
      }
    }
    const size_t m = zer.size() + pos.size() * neg.size();
    Matrix H(static_cast<Eigen::Index>(m), t);
    Vector h(static_cast<Eigen::Index>(m));
    Eigen::Index r = 0;
    for (const int i : zer) {
      H.row(r) = cur.H.row(i).head(t);
      h(r) = cur.h(i);
      ++r;
    }
    for (const int p : pos) {
      for (const int q : neg) {
        const double ap = cur.H(p, t);
        const double aq = -cur.H(q, t);
        Eigen::RowVectorXd row = aq * cur.H.row(p).head(t) + ap * cur.H.row(q).head(t);
        double rhs = aq * cur.h(p) + ap * cur.h(q);
        const double mx = std::max(row.cwiseAbs().maxCoeff(), std::abs(rhs));
        if (mx > 0.0) {
          row /= mx;
          rhs /= mx;
        }
        H.row(r) = row;
        h(r) = rhs;
        ++r;
      }
    }
    cur = remove_redundancy(HPolytope{std::move(H), std::move(h)}, tol);
  }
  return cur;
}

}  // namespace settrig
