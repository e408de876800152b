#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "settrig/explicit_map.hpp"
#include "settrig/invariance.hpp"
#include "settrig/polytope.hpp"
#include "settrig/sim.hpp"

// JSON, CSV and plain-text readers/writers for the artifact types that
// cross process boundaries.

namespace settrig {

using Json = nlohmann::json;

inline Json matrix_to_json(const Matrix& M) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("matrix: expected a nonempty array of rows");
  const size_t cols = j.front().is_array() ? j.front().size() : 0;
  if (cols == 0) throw ConfigError("matrix: rows must be nonempty arrays");
  Matrix M(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw ConfigError("matrix: ragged rows");
    for (size_t k = 0; k < cols; ++k) M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
  }
  return M;
}

inline Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw ConfigError("vector: expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

inline Json polytope_to_json(const HPolytope& P) {
  return Json{{"H", matrix_to_json(P.H)}, {"h", vector_to_json(P.h)}};
}

inline HPolytope polytope_from_json(const Json& j) {
  if (!j.contains("H") || !j.contains("h")) throw ConfigError("polytope: missing H or h");
  return HPolytope::from_rows(matrix_from_json(j.at("H")), vector_from_json(j.at("h")));
}

/// One facet per line, normal coefficients then the offset.
inline std::string polytope_to_text(const HPolytope& P) {
  std::ostringstream os;
  char buf[32];
  for (int i = 0; i < P.facets(); ++i) {
    for (int k = 0; k < P.dim(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", P.H(i, k));
      os << buf << ' ';
    }
    std::snprintf(buf, sizeof buf, "%.17g", P.h(i));
    os << buf << '\n';
  }
  return os.str();
}

inline HPolytope polytope_from_text(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (row.size() < 2) throw ConfigError("polytope text: facet line needs a normal and an offset");
    if (!rows.empty() && row.size() != rows.front().size()) throw ConfigError("polytope text: ragged lines");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError("polytope text: no facets");
  const Eigen::Index d = static_cast<Eigen::Index>(rows.front().size()) - 1;
  Matrix H(static_cast<Eigen::Index>(rows.size()), d);
  Vector h(static_cast<Eigen::Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index k = 0; k < d; ++k) H(static_cast<Eigen::Index>(i), k) = rows[i][static_cast<size_t>(k)];
    h(static_cast<Eigen::Index>(i)) = rows[i].back();
  }
  return {std::move(H), std::move(h)};
}

inline Json contractive_set_to_json(const ContractiveSet& S) {
  Json verts = Json::array();
  for (const Vector& v : S.V.vertices) verts.push_back(vector_to_json(v));
  return Json{{"H", matrix_to_json(S.S.H)},
              {"h", vector_to_json(S.S.h)},
              {"vertices", std::move(verts)},
              {"lambda_target", S.lambda_target},
              {"lambda_certified", S.lambda_certified},
              {"iterations_used", S.iterations_used}};
}

inline ContractiveSet contractive_set_from_json(const Json& j) {
  ContractiveSet S;
  S.S = HPolytope::from_rows(matrix_from_json(j.at("H")), vector_from_json(j.at("h")));
  for (const Json& v : j.at("vertices")) S.V.vertices.push_back(vector_from_json(v));
  S.lambda_target = j.at("lambda_target").get<double>();
  S.lambda_certified = j.at("lambda_certified").get<double>();
  S.iterations_used = j.at("iterations_used").get<int>();
  return S;
}

inline Json explicit_map_to_json(const ExplicitMap& map) {
  Json sols = Json::array();
  for (const ShellSolution& s : map.solutions) {
    Json u = Json::array();
    for (const Vector& un : s.u_per_vertex) u.push_back(vector_to_json(un));
    sols.push_back(Json{{"ell", s.ell}, {"j", s.j}, {"eps", s.eps}, {"u_per_vertex", std::move(u)}});
  }
  Json rho = Json::array();
  for (const double r : map.decomposition.rho) rho.push_back(r);
  Json jstar = Json::array();
  for (const int j : map.j_star) jstar.push_back(j);
  return Json{{"rho", std::move(rho)},
              {"j_star", std::move(jstar)},
              {"solutions", std::move(sols)},
              {"contractive_set", contractive_set_to_json(map.S)}};
}

inline ExplicitMap explicit_map_from_json(const Json& j) {
  ExplicitMap map;
  for (const Json& r : j.at("rho")) map.decomposition.rho.push_back(r.get<double>());
  for (const Json& s : j.at("j_star")) map.j_star.push_back(s.get<int>());
  for (const Json& s : j.at("solutions")) {
    ShellSolution sol;
    sol.ell = s.at("ell").get<int>();
    sol.j = s.at("j").get<int>();
    sol.eps = s.at("eps").get<double>();
    for (const Json& u : s.at("u_per_vertex")) sol.u_per_vertex.push_back(vector_from_json(u));
    map.solutions.push_back(std::move(sol));
  }
  map.S = contractive_set_from_json(j.at("contractive_set"));
  return map;
}

inline Json metrics_to_json(const RunMetrics& m) {
  Json out;
  if (m.convergence_step) {
    out["convergence_step"] = *m.convergence_step;
  } else {
    out["convergence_step"] = nullptr;
  }
  out["transmission_count"] = m.transmission_count;
  out["constraint_violations"] = m.constraint_violations;
  return out;
}

/// Columns: k, x_1..x_n, u_1..u_m, is_transmission, j_m, eps_m, psi.
/// The final row carries the terminal state with blank input cells.
inline void trace_to_csv(std::ostream& os, const SimTrace& trace, const ContractiveSet& S,
                         const Tolerance& tol = {}) {
  const Eigen::Index n = trace.states.cols();
  const Eigen::Index m = trace.inputs.cols();
  os << "k";
  for (Eigen::Index i = 1; i <= n; ++i) os << ",x_" << i;
  for (Eigen::Index i = 1; i <= m; ++i) os << ",u_" << i;
  os << ",is_transmission,j_m,eps_m,psi\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
  };
  size_t t = 0;
  for (Eigen::Index k = 0; k < trace.states.rows(); ++k) {
    os << k;
    for (Eigen::Index i = 0; i < n; ++i) {
      os << ',';
      put(trace.states(k, i));
    }
    for (Eigen::Index i = 0; i < m; ++i) {
      os << ',';
      if (k < trace.inputs.rows()) put(trace.inputs(k, i));
    }
    const bool is_tx = t < trace.transmissions.size() &&
                       trace.transmissions[t].k == static_cast<int>(k);
    os << ',' << (is_tx ? 1 : 0) << ',';
    if (is_tx) os << trace.transmissions[t].j;
    os << ',';
    if (is_tx) put(trace.transmissions[t].eps);
    os << ',';
    put(gauge(S.S, trace.states.row(k).transpose(), tol));
    os << '\n';
    if (is_tx) ++t;
  }
}

}  // namespace settrig
