#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "settrig/explicit_map.hpp"
#include "settrig/invariance.hpp"
#include "settrig/online.hpp"

// Plant discretization and closed-loop simulation with inputs held between
// transmissions, plus the convergence / communication metrics used to
// compare the two schemes.

namespace settrig {

struct ContinuousModel {
  Matrix A_c;
  Matrix B_c;
  double T = 0.0;
};

namespace detail {

// exp(M) by scaling-and-squaring over a truncated power series. The series
// is summed at norm <= 0.5 until terms fall below 1e-16 relative, well past
// the 1e-10 relative accuracy the discretization needs.
inline Matrix expm(const Matrix& M) {
  const Eigen::Index n = M.rows();
  const double nrm = M.cwiseAbs().rowwise().sum().maxCoeff();
  int s = 0;
  while (nrm / std::pow(2.0, s) > 0.5) ++s;
  const Matrix X = M / std::pow(2.0, s);
  Matrix sum = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int k = 1; k <= 64; ++k) {
    term = (term * X) / static_cast<double>(k);
    sum += term;
    if (term.cwiseAbs().maxCoeff() <= 1e-16 * sum.cwiseAbs().maxCoeff()) break;
  }
  for (int k = 0; k < s; ++k) sum = sum * sum;
  return sum;
}

}  // namespace detail

/// Discrete model of the held-input plant: A = exp(A_c T) and
/// B = (integral of exp(A_c tau) d tau) B_c, both read off the exponential
/// of the augmented block matrix [[A_c, B_c], [0, 0]] T.
inline SystemModel zoh_discretize(const ContinuousModel& cm) {
  if (cm.T <= 0.0) throw InvalidArgument("discretize: sampling interval must be positive");
  if (cm.A_c.rows() != cm.A_c.cols() || cm.B_c.rows() != cm.A_c.rows()) {
    throw DimensionMismatch("discretize: matrix shape mismatch");
  }
  const Eigen::Index n = cm.A_c.rows();
  const Eigen::Index m = cm.B_c.cols();
  Matrix aug = Matrix::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = cm.A_c * cm.T;
  aug.topRightCorner(n, m) = cm.B_c * cm.T;
  const Matrix E = detail::expm(aug);
  return SystemModel{E.topLeftCorner(n, n), E.topRightCorner(n, m)};
}

struct TransmissionRecord {
  int k = 0;
  int j = 0;
  double eps = 0.0;
  double psi = 0.0;  // gauge of the state at this transmission
};

struct SimTrace {
  Matrix states;  // row k = x(k), k = 0..horizon
  Matrix inputs;  // row k = u(k), k = 0..horizon-1
  std::vector<TransmissionRecord> transmissions;
  int constraint_violations = 0;
};

/// Controllers map a transmission-time state to an input, the number of
/// steps it is held, and the certified contraction.
using Controller = std::function<IntervalSolution(const Vector&)>;

inline Controller make_online_controller(const SystemModel& sys, const ConstraintSet& cs,
                                         const ContractiveSet& S, const OnlineConfig& cfg,
                                         const Tolerance& tol = {}) {
  cfg.validate();
  return [&sys, &cs, &S, cfg, tol](const Vector& x) {
    return algorithm1_step(sys, cs, S, x, cfg, tol);
  };
}

inline Controller make_explicit_controller(const ExplicitMap& map, const Tolerance& tol = {}) {
  return [&map, tol](const Vector& x) { return algorithm2_step(map, x, tol); };
}

/// Runs x(k+1) = A x(k) + B u(k) with u held constant between
/// transmissions. Constraint violations are counted rather than fatal so a
/// run can be audited afterwards.
inline SimTrace simulate(const Controller& controller, const SystemModel& sys,
                         const ConstraintSet& cs, const ContractiveSet& S, const Vector& x0,
                         int horizon, const Tolerance& tol = {}) {
  if (horizon < 1) throw InvalidArgument("simulate: horizon must be at least 1");
  if (x0.size() != sys.state_dim()) throw DimensionMismatch("simulate: x0 dimension mismatch");
  const double g0 = gauge(S.S, x0, tol);
  if (g0 > 1.0 + tol.feas_tol) {
    throw AssumptionViolated("simulate: initial state outside the contractive set (gauge " +
                             std::to_string(g0) + ")");
  }

  SimTrace trace;
  trace.states = Matrix::Zero(horizon + 1, sys.state_dim());
  trace.inputs = Matrix::Zero(horizon, sys.input_dim());
  trace.states.row(0) = x0.transpose();

  Vector x = x0;
  Vector held = Vector::Zero(sys.input_dim());
  int next_transmission = 0;
  for (int k = 0; k < horizon; ++k) {
    if (k == next_transmission) {
      const IntervalSolution d = controller(x);
      held = d.u;
      next_transmission = k + d.j;
      trace.transmissions.push_back({k, d.j, d.eps, gauge(S.S, x, tol)});
    }
    if (!membership(cs.U, held, tol)) ++trace.constraint_violations;
    x = sys.A * x + sys.B * held;
    if (!membership(cs.X, x, tol)) ++trace.constraint_violations;
    trace.inputs.row(k) = held.transpose();
    trace.states.row(k + 1) = x.transpose();
  }
  return trace;
}

struct MetricsOptions {
  double convergence_threshold = 1e-3;
  int transmission_window = 100;
  bool use_inf_norm = false;
};

struct RunMetrics {
  std::optional<int> convergence_step;
  int transmission_count = 0;
  int constraint_violations = 0;
};

/// Convergence step (first k with the state norm under the threshold),
/// transmissions inside the counting window, and the violation tally
/// carried by the trace.
inline RunMetrics metrics(const SimTrace& trace, const MetricsOptions& opt = {}) {
  RunMetrics out;
  for (Eigen::Index k = 0; k < trace.states.rows(); ++k) {
    const double nrm = opt.use_inf_norm ? trace.states.row(k).cwiseAbs().maxCoeff()
                                        : trace.states.row(k).norm();
    if (nrm <= opt.convergence_threshold) {
      out.convergence_step = static_cast<int>(k);
      break;
    }
  }
  for (const TransmissionRecord& t : trace.transmissions) {
    if (t.k <= opt.transmission_window) ++out.transmission_count;
  }
  out.constraint_violations = trace.constraint_violations;
  return out;
}

}  // namespace settrig
