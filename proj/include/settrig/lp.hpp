#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "settrig/types.hpp"

// Dense linear programming via the two-phase simplex method with Bland's
// anti-cycling rule. The pivot order is fixed, so identical inputs produce
// bitwise-identical solutions. Geared to the problem sizes this library
// produces: a handful of variables, up to a few hundred constraints.

namespace settrig {

enum class LpStatus { Optimal, Infeasible, Unbounded };

/// minimize cost . z  subject to
///   a_ub z <= b_ub,  a_eq z = b_eq,  lower <= z <= upper  (+-inf allowed)
struct LinearProgram {
  Vector cost;
  Matrix a_ub;
  Vector b_ub;
  Matrix a_eq;
  Vector b_eq;
  Vector lower;
  Vector upper;

  static LinearProgram with_variables(int nv) {
    LinearProgram lp;
    lp.cost = Vector::Zero(nv);
    lp.a_ub = Matrix(0, nv);
    lp.b_ub = Vector(0);
    lp.a_eq = Matrix(0, nv);
    lp.b_eq = Vector(0);
    lp.lower = Vector::Constant(nv, -kInf);
    lp.upper = Vector::Constant(nv, kInf);
    return lp;
  }

  int variable_count() const { return static_cast<int>(cost.size()); }
};

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Vector solution;
  double objective = 0.0;
};

namespace detail {

// One simplex column of the standard-form program, mapping back to an
// original variable: z_var = offset + sign * y_col. Free variables get two
// columns (a positive and a negated copy).
struct StdColumn {
  int var;
  double sign;
  double offset;
};

class SimplexTableau {
 public:
  SimplexTableau(Matrix rows, Vector rhs, int n_real, int n_slack, std::vector<int> basis)
      : tab_(std::move(rows)), rhs_(std::move(rhs)), n_real_(n_real), n_slack_(n_slack),
        basis_(std::move(basis)), active_(static_cast<size_t>(tab_.rows()), true) {}

  int rows() const { return static_cast<int>(tab_.rows()); }
  int cols() const { return static_cast<int>(tab_.cols()); }
  int art_begin() const { return n_real_ + n_slack_; }

  // Runs Bland-rule pivoting on the current objective row until no entering
  // column remains. `limit` excludes columns >= limit from entering (used to
  // ban artificials in phase 2). Returns false on unboundedness.
  bool iterate(int limit) {
    const double rc_tol = 1e-9;
    const double piv_tol = 1e-9;
    const long max_pivots = 10000 + 50L * (rows() + cols());
    for (long it = 0; it < max_pivots; ++it) {
      int enter = -1;
      for (int j = 0; j < limit; ++j) {
        if (obj_(j) < -rc_tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;

      int leave = -1;
      double best = 0.0;
      for (int i = 0; i < rows(); ++i) {
        if (!active_[static_cast<size_t>(i)]) continue;
        const double a = tab_(i, enter);
        if (a <= piv_tol) continue;
        const double ratio = rhs_(i) / a;
        if (leave < 0) {
          leave = i;
          best = ratio;
          continue;
        }
        const double tie = 1e-12 * (1.0 + std::abs(best));
        if (ratio < best - tie) {
          leave = i;
          best = ratio;
        } else if (ratio <= best + tie &&
                   basis_[static_cast<size_t>(i)] < basis_[static_cast<size_t>(leave)]) {
          leave = i;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
    throw NumericalFailure("simplex: pivot limit exceeded");
  }

  void pivot(int row, int col) {
    const double p = tab_(row, col);
    tab_.row(row) /= p;
    rhs_(row) /= p;
    for (int i = 0; i < rows(); ++i) {
      if (i == row) continue;
      const double f = tab_(i, col);
      if (f != 0.0) {
        tab_.row(i) -= f * tab_.row(row);
        rhs_(i) -= f * rhs_(row);
      }
    }
    const double f = obj_(col);
    if (f != 0.0) {
      obj_ -= f * tab_.row(row).transpose();
      obj_val_ -= f * rhs_(row);
    }
    basis_[static_cast<size_t>(row)] = col;
  }

  // Phase 1: minimize the sum of artificial variables.
  bool run_phase1(double feas_tol) {
    obj_ = Vector::Zero(cols());
    obj_val_ = 0.0;
    for (int j = art_begin(); j < cols(); ++j) obj_(j) = 1.0;
    for (int i = 0; i < rows(); ++i) {
      if (basis_[static_cast<size_t>(i)] >= art_begin()) {
        obj_ -= tab_.row(i).transpose();
        obj_val_ -= rhs_(i);
      }
    }
    if (!iterate(cols())) throw NumericalFailure("simplex: phase 1 unbounded");
    // obj_val_ holds -(sum of artificials)
    if (-obj_val_ > feas_tol) return false;
    drive_out_artificials();
    return true;
  }

  // Phase 2 from a feasible basis.
  LpStatus run_phase2(const Vector& std_cost) {
    obj_ = Vector::Zero(cols());
    obj_.head(std_cost.size()) = std_cost;
    obj_val_ = 0.0;
    for (int i = 0; i < rows(); ++i) {
      if (!active_[static_cast<size_t>(i)]) continue;
      const int b = basis_[static_cast<size_t>(i)];
      const double f = obj_(b);
      if (f != 0.0) {
        obj_ -= f * tab_.row(i).transpose();
        obj_val_ -= f * rhs_(i);
      }
    }
    return iterate(art_begin()) ? LpStatus::Optimal : LpStatus::Unbounded;
  }

  Vector basic_values(int n_cols_wanted) const {
    Vector y = Vector::Zero(n_cols_wanted);
    for (int i = 0; i < rows(); ++i) {
      if (!active_[static_cast<size_t>(i)]) continue;
      const int b = basis_[static_cast<size_t>(i)];
      if (b < n_cols_wanted) y(b) = rhs_(i);
    }
    return y;
  }

 private:
  // After phase 1 any artificial still basic sits at value zero; pivot it out
  // on an arbitrary nonzero structural column, or deactivate the (redundant)
  // row when none exists.
  void drive_out_artificials() {
    for (int i = 0; i < rows(); ++i) {
      if (basis_[static_cast<size_t>(i)] < art_begin()) continue;
      int col = -1;
      for (int j = 0; j < art_begin(); ++j) {
        if (std::abs(tab_(i, j)) > 1e-9) {
          col = j;
          break;
        }
      }
      if (col >= 0) {
        pivot(i, col);
      } else {
        active_[static_cast<size_t>(i)] = false;
      }
    }
  }

  Matrix tab_;
  Vector rhs_;
  int n_real_;
  int n_slack_;
  std::vector<int> basis_;
  std::vector<bool> active_;
  Vector obj_;
  double obj_val_ = 0.0;
};

inline void validate_program(const LinearProgram& lp) {
  const Eigen::Index nv = lp.cost.size();
  if (nv == 0) throw MalformedProgram("lp: no variables");
  if (lp.a_ub.rows() != lp.b_ub.size()) throw MalformedProgram("lp: a_ub/b_ub row mismatch");
  if (lp.a_eq.rows() != lp.b_eq.size()) throw MalformedProgram("lp: a_eq/b_eq row mismatch");
  if (lp.a_ub.rows() > 0 && lp.a_ub.cols() != nv) throw MalformedProgram("lp: a_ub column mismatch");
  if (lp.a_eq.rows() > 0 && lp.a_eq.cols() != nv) throw MalformedProgram("lp: a_eq column mismatch");
  if (lp.lower.size() != nv || lp.upper.size() != nv) throw MalformedProgram("lp: bounds size mismatch");
  for (Eigen::Index i = 0; i < nv; ++i) {
    if (std::isnan(lp.lower(i)) || std::isnan(lp.upper(i))) throw MalformedProgram("lp: NaN bound");
  }
}

}  // namespace detail

inline LpResult solve(const LinearProgram& lp, const Tolerance& tol = {}) {
  detail::validate_program(lp);
  const int nv = lp.variable_count();

  for (int i = 0; i < nv; ++i) {
    if (lp.lower(i) > lp.upper(i)) return {LpStatus::Infeasible, Vector(), 0.0};
  }

  // Variable transform to nonnegative standard-form columns.
  std::vector<detail::StdColumn> cols;
  std::vector<std::pair<int, double>> ub_rows;  // (first column of var, range) for double-bounded vars
  std::vector<int> var_col(static_cast<size_t>(nv), -1);
  std::vector<bool> var_split(static_cast<size_t>(nv), false);
  for (int i = 0; i < nv; ++i) {
    const double lo = lp.lower(i);
    const double up = lp.upper(i);
    var_col[static_cast<size_t>(i)] = static_cast<int>(cols.size());
    if (std::isfinite(lo)) {
      cols.push_back({i, 1.0, lo});
      if (std::isfinite(up)) ub_rows.emplace_back(static_cast<int>(cols.size()) - 1, up - lo);
    } else if (std::isfinite(up)) {
      cols.push_back({i, -1.0, up});
    } else {
      var_split[static_cast<size_t>(i)] = true;
      cols.push_back({i, 1.0, 0.0});
      cols.push_back({i, -1.0, 0.0});
    }
  }
  const int n_real = static_cast<int>(cols.size());

  const int m_ub = static_cast<int>(lp.a_ub.rows()) + static_cast<int>(ub_rows.size());
  const int m_eq = static_cast<int>(lp.a_eq.rows());
  const int m = m_ub + m_eq;

  // Transformed rows over the standard columns. Finite-bound offsets move to
  // the right-hand side; split (free) variables carry no offset.
  Matrix rows = Matrix::Zero(m, n_real);
  Vector rhs(m);
  int r = 0;
  for (Eigen::Index k = 0; k < lp.a_ub.rows(); ++k, ++r) {
    double shift = 0.0;
    for (int c = 0; c < n_real; ++c) {
      const detail::StdColumn& sc = cols[static_cast<size_t>(c)];
      rows(r, c) = lp.a_ub(k, sc.var) * sc.sign;
    }
    for (int i = 0; i < nv; ++i) {
      if (!var_split[static_cast<size_t>(i)]) {
        shift += lp.a_ub(k, i) * cols[static_cast<size_t>(var_col[static_cast<size_t>(i)])].offset;
      }
    }
    rhs(r) = lp.b_ub(k) - shift;
  }
  for (const auto& [col, range] : ub_rows) {
    rows(r, col) = 1.0;
    rhs(r) = range;
    ++r;
  }
  for (Eigen::Index k = 0; k < lp.a_eq.rows(); ++k, ++r) {
    double shift = 0.0;
    for (int c = 0; c < n_real; ++c) {
      const detail::StdColumn& sc = cols[static_cast<size_t>(c)];
      rows(r, c) = lp.a_eq(k, sc.var) * sc.sign;
    }
    for (int i = 0; i < nv; ++i) {
      if (!var_split[static_cast<size_t>(i)]) {
        shift += lp.a_eq(k, i) * cols[static_cast<size_t>(var_col[static_cast<size_t>(i)])].offset;
      }
    }
    rhs(r) = lp.b_eq(k) - shift;
  }

  // Slack columns for inequality rows; flip rows with negative rhs so every
  // right-hand side is nonnegative.
  const int n_slack = m_ub;
  std::vector<int> needs_artificial;
  std::vector<int> slack_of_row(static_cast<size_t>(m), -1);
  for (int i = 0; i < m_ub; ++i) slack_of_row[static_cast<size_t>(i)] = n_real + i;
  for (int i = 0; i < m; ++i) {
    if (rhs(i) < 0.0) {
      rows.row(i) = -rows.row(i);
      rhs(i) = -rhs(i);
      if (i < m_ub) {
        needs_artificial.push_back(i);  // slack coefficient is now -1
      }
    }
    if (i >= m_ub) needs_artificial.push_back(i);
  }
  const int n_art = static_cast<int>(needs_artificial.size());

  Matrix tab = Matrix::Zero(m, n_real + n_slack + n_art);
  tab.leftCols(n_real) = rows;
  std::vector<int> basis(static_cast<size_t>(m), -1);
  for (int i = 0; i < m_ub; ++i) {
    const bool flipped = std::find(needs_artificial.begin(), needs_artificial.end(), i) !=
                         needs_artificial.end();
    tab(i, n_real + i) = flipped ? -1.0 : 1.0;
    if (!flipped) basis[static_cast<size_t>(i)] = n_real + i;
  }
  for (int k = 0; k < n_art; ++k) {
    const int row_i = needs_artificial[static_cast<size_t>(k)];
    tab(row_i, n_real + n_slack + k) = 1.0;
    basis[static_cast<size_t>(row_i)] = n_real + n_slack + k;
  }

  detail::SimplexTableau simplex(std::move(tab), rhs, n_real, n_slack, std::move(basis));
  if (n_art > 0) {
    if (!simplex.run_phase1(tol.feas_tol)) return {LpStatus::Infeasible, Vector(), 0.0};
  }

  Vector std_cost = Vector::Zero(n_real);
  for (int c = 0; c < n_real; ++c) {
    const detail::StdColumn& sc = cols[static_cast<size_t>(c)];
    std_cost(c) = lp.cost(sc.var) * sc.sign;
  }
  const LpStatus status = simplex.run_phase2(std_cost);
  if (status != LpStatus::Optimal) return {status, Vector(), 0.0};

  const Vector y = simplex.basic_values(n_real);
  Vector z(nv);
  for (int i = 0; i < nv; ++i) {
    const int c = var_col[static_cast<size_t>(i)];
    if (var_split[static_cast<size_t>(i)]) {
      z(i) = y(c) - y(c + 1);
    } else {
      const detail::StdColumn& sc = cols[static_cast<size_t>(c)];
      z(i) = sc.offset + sc.sign * y(c);
    }
  }

  // Sanity: the reported optimum must actually satisfy the program.
  const double check_tol = tol.feas_tol * 10.0 + 1e-12;
  for (Eigen::Index k = 0; k < lp.a_ub.rows(); ++k) {
    if (lp.a_ub.row(k) * z > lp.b_ub(k) + check_tol * (1.0 + std::abs(lp.b_ub(k)))) {
      throw NumericalFailure("lp: optimal point violates an inequality");
    }
  }
  for (Eigen::Index k = 0; k < lp.a_eq.rows(); ++k) {
    if (std::abs(lp.a_eq.row(k) * z - lp.b_eq(k)) > check_tol * (1.0 + std::abs(lp.b_eq(k)))) {
      throw NumericalFailure("lp: optimal point violates an equality");
    }
  }

  const double objective = lp.cost.dot(z);
  return {LpStatus::Optimal, std::move(z), objective};
}

}  // namespace settrig
