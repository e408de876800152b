#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include "settrig/explicit_map.hpp"
#include "settrig/invariance.hpp"

using namespace settrig;

namespace {

struct Pilot {
  SystemModel sys = SystemModel::make(Matrix::Ones(1, 1), Matrix::Ones(1, 1));
  ConstraintSet cs{HPolytope::inf_norm_box(1, 1.0), HPolytope::inf_norm_box(1, 0.5)};
  ContractiveSet S;
  Pilot() { S = compute_contractive_set(sys, cs, 0.5); }
};

struct Planar {
  SystemModel sys;
  ConstraintSet cs{HPolytope::inf_norm_box(2, 1.0), HPolytope::inf_norm_box(1, 1.0)};
  ContractiveSet S;
  Planar()
      : sys(SystemModel::make((Matrix(2, 2) << 0.6, 0.2, -0.1, 0.8).finished(),
                              (Matrix(2, 1) << 0.0, 1.0).finished())) {
    S = compute_contractive_set(sys, cs, 0.7);
  }
};

// sweep reference for the scalar shared-contraction problem: each scaled
// vertex gets its own swept input, the shared factor is the worse of the two
std::optional<double> pilot_shell_oracle(double rho, int j) {
  double shared = 0.0;
  for (const double v : {-1.0, 1.0}) {
    const double z = rho * v;
    double best = kInf;
    auto eval = [&](double u) {
      for (int jp = 1; jp <= j; ++jp) {
        if (std::abs(z + jp * u) > 1.0 + 1e-12) return;
      }
      best = std::min(best, std::abs(z + j * u) / rho);
    };
    for (int iu = -5000; iu <= 5000; ++iu) eval(iu * 1e-4);
    if (best > 0.5 + 1e-9) return std::nullopt;
    shared = std::max(shared, best);
  }
  return shared;
}

}  // namespace

TEST_CASE("shell lists must be increasing and end at one") {
  CHECK_THROWS_AS((ShellDecomposition{{}}.validate()), ConfigError);
  CHECK_THROWS_AS((ShellDecomposition{{0.5, 0.5, 1.0}}.validate()), ConfigError);
  CHECK_THROWS_AS((ShellDecomposition{{-0.1, 1.0}}.validate()), ConfigError);
  CHECK_THROWS_AS((ShellDecomposition{{0.3, 0.9}}.validate()), ConfigError);
  CHECK_NOTHROW((ShellDecomposition{{0.5, 1.0}}.validate()));
  CHECK_THROWS_AS(ShellDecomposition::uniform(0), ConfigError);
  CHECK(ShellDecomposition::uniform(4).rho == std::vector<double>{0.25, 0.5, 0.75, 1.0});
}

TEST_CASE("shared contraction on the outer shell") {
  const Pilot p;
  const auto sol = solve_problem2(p.sys, p.cs, p.S, 1.0, 1);
  REQUIRE(sol);
  CHECK_THAT(sol->eps, Catch::Matchers::WithinAbs(0.5, 1e-9));
  REQUIRE(sol->u_per_vertex.size() == 2);
  // vertex order is sorted, so index 0 is -1 and index 1 is +1
  CHECK_THAT(sol->u_per_vertex[0](0), Catch::Matchers::WithinAbs(0.5, 1e-9));
  CHECK_THAT(sol->u_per_vertex[1](0), Catch::Matchers::WithinAbs(-0.5, 1e-9));
}

TEST_CASE("inner shells reach zero contraction") {
  const Pilot p;
  const auto one = solve_problem2(p.sys, p.cs, p.S, 0.5, 1);
  REQUIRE(one);
  CHECK_THAT(one->eps, Catch::Matchers::WithinAbs(0.0, 1e-9));

  const auto three = solve_problem2(p.sys, p.cs, p.S, 0.5, 3);
  REQUIRE(three);
  CHECK_THAT(three->eps, Catch::Matchers::WithinAbs(0.0, 1e-9));
  CHECK_THAT(three->u_per_vertex[0](0), Catch::Matchers::WithinAbs(1.0 / 6.0, 1e-9));
  CHECK_THAT(three->u_per_vertex[1](0), Catch::Matchers::WithinAbs(-1.0 / 6.0, 1e-9));
}

TEST_CASE("shell problem validates its arguments") {
  const Pilot p;
  CHECK_THROWS_AS(solve_problem2(p.sys, p.cs, p.S, 0.0, 1), InvalidArgument);
  CHECK_THROWS_AS(solve_problem2(p.sys, p.cs, p.S, 1.2, 1), InvalidArgument);
  CHECK_THROWS_AS(solve_problem2(p.sys, p.cs, p.S, 0.5, 0), InvalidArgument);
}

TEST_CASE("shell optimum matches a sweep reference") {
  const Pilot p;
  for (const double rho : {0.2, 0.35, 0.5, 0.65, 0.8, 1.0}) {
    for (int j = 1; j <= 3; ++j) {
      const auto got = solve_problem2(p.sys, p.cs, p.S, rho, j);
      const auto want = pilot_shell_oracle(rho, j);
      REQUIRE(got.has_value() == want.has_value());
      if (got) CHECK_THAT(got->eps, Catch::Matchers::WithinAbs(*want, 2e-3));
    }
  }
}

TEST_CASE("every interval is feasible for the scalar pilot shells") {
  const Pilot p;
  CHECK(feasible_intervals_shell(p.sys, p.cs, p.S, 0.5, 3) == std::vector<int>{1, 2, 3});
  for (const double rho : {0.1, 0.4, 0.7, 1.0}) {
    const std::vector<int> J = feasible_intervals_shell(p.sys, p.cs, p.S, rho, 4);
    REQUIRE_FALSE(J.empty());
    CHECK(J.front() == 1);
  }
}

TEST_CASE("map construction picks the advertised intervals") {
  const Pilot p;
  const ShellDecomposition shells{{0.5, 1.0}};

  const ExplicitMap lazy = build_explicit_map(p.sys, p.cs, p.S, shells, OnlineConfig{3, 0.0, 1.0});
  CHECK(lazy.j_star == std::vector<int>{3, 3});
  REQUIRE(lazy.solutions.size() == 2);
  CHECK(lazy.solutions[0].ell == 1);
  CHECK(lazy.solutions[1].ell == 2);
  CHECK(lazy.feasible_sets[0] == std::vector<int>{1, 2, 3});
  CHECK(lazy.feasible_sets[1] == std::vector<int>{1, 2, 3});

  const ExplicitMap greedy =
      build_explicit_map(p.sys, p.cs, p.S, shells, OnlineConfig{3, 1.0, 0.0});
  CHECK(greedy.j_star == std::vector<int>{1, 1});
  CHECK_THAT(greedy.solutions[0].eps, Catch::Matchers::WithinAbs(0.0, 1e-9));
  CHECK_THAT(greedy.solutions[1].eps, Catch::Matchers::WithinAbs(0.5, 1e-9));
}

TEST_CASE("map construction fails loudly when a shell has no interval") {
  const Pilot p;
  ContractiveSet doctored = p.S;
  // claiming a far stronger certified factor squeezes the contraction cap
  // below what one step can deliver from the outer shell
  doctored.lambda_certified = 0.01;
  CHECK_THROWS_AS(
      build_explicit_map(p.sys, p.cs, doctored, ShellDecomposition{{1.0}}, OnlineConfig{1, 0.0, 1.0}),
      EmptyCandidates);
}

TEST_CASE("point location returns the innermost covering shell") {
  const Pilot p;
  ExplicitMap map;
  map.decomposition = ShellDecomposition{{0.5, 1.0}};
  map.S = p.S;
  CHECK(point_locate(map, Vector::Constant(1, 0.25)) == 1);
  CHECK(point_locate(map, Vector::Constant(1, 0.75)) == 2);
  CHECK(point_locate(map, Vector::Constant(1, -0.5)) == 1);
  CHECK(point_locate(map, Vector::Zero(1)) == 1);
  CHECK_THROWS_AS(point_locate(map, Vector::Constant(1, 1.5)), StateOutsideS);

  ExplicitMap ten;
  ten.decomposition = ShellDecomposition::uniform(10);
  ten.S = p.S;
  CHECK(point_locate(ten, Vector::Constant(1, 0.35)) == 4);
  CHECK(point_locate(ten, Vector::Constant(1, 0.3)) == 3);
}

TEST_CASE("shell location partitions the set") {
  const Planar q;
  ExplicitMap map;
  map.decomposition = ShellDecomposition::uniform(5);
  map.S = q.S;
  double amp = 0.0;
  for (const Vector& v : q.S.V.vertices) amp = std::max(amp, v.cwiseAbs().maxCoeff());
  std::mt19937 rng(5150);
  std::uniform_real_distribution<double> ua(-amp, amp);
  int kept = 0;
  while (kept < 1000) {
    Vector x(2);
    x << ua(rng), ua(rng);
    const double g = gauge(q.S.S, x);
    if (g > 1.0 - 1e-9) continue;
    ++kept;
    const int ell = point_locate(map, x);
    const auto& rho = map.decomposition.rho;
    CHECK(g <= rho[static_cast<size_t>(ell - 1)] + 1e-7);
    if (ell > 1) CHECK(g > rho[static_cast<size_t>(ell - 2)] - 1e-7);
  }
}

TEST_CASE("convex weights reproduce the query point") {
  const Pilot p;
  const Vector right = convex_coefficients(p.S, Vector::Ones(1));
  CHECK_THAT(right(0), Catch::Matchers::WithinAbs(0.0, 1e-9));
  CHECK_THAT(right(1), Catch::Matchers::WithinAbs(1.0, 1e-9));
  const Vector left = convex_coefficients(p.S, Vector::Constant(1, -1.0));
  CHECK_THAT(left(0), Catch::Matchers::WithinAbs(1.0, 1e-9));
  CHECK_THAT(left(1), Catch::Matchers::WithinAbs(0.0, 1e-9));

  const Vector mid = convex_coefficients(p.S, Vector::Zero(1));
  CHECK(mid.minCoeff() >= -1e-12);
  CHECK_THAT(mid.sum(), Catch::Matchers::WithinAbs(1.0, 1e-9));
  CHECK_THAT(mid(1) - mid(0), Catch::Matchers::WithinAbs(0.0, 1e-9));

  CHECK_THROWS_AS(convex_coefficients(p.S, Vector::Constant(1, 1.5)), DecompositionFailed);
}

TEST_CASE("planar convex weights are valid and deterministic") {
  const Planar q;
  std::mt19937 rng(31337);
  double amp = 0.0;
  for (const Vector& v : q.S.V.vertices) amp = std::max(amp, v.cwiseAbs().maxCoeff());
  std::uniform_real_distribution<double> ua(-amp, amp);
  int kept = 0;
  while (kept < 50) {
    Vector y(2);
    y << ua(rng), ua(rng);
    if (gauge(q.S.S, y) > 1.0 - 1e-9) continue;
    ++kept;
    const Vector lam = convex_coefficients(q.S, y);
    REQUIRE(lam.size() == q.S.V.count());
    CHECK(lam.minCoeff() >= -1e-12);
    CHECK_THAT(lam.sum(), Catch::Matchers::WithinAbs(1.0, 1e-9));
    Vector rebuilt = Vector::Zero(2);
    for (int k = 0; k < q.S.V.count(); ++k) rebuilt += lam(k) * q.S.V.vertices[static_cast<size_t>(k)];
    CHECK((rebuilt - y).cwiseAbs().maxCoeff() < 1e-8);
    const Vector again = convex_coefficients(q.S, y);
    CHECK(lam == again);
  }
}

TEST_CASE("table lookup blends stored inputs") {
  const Pilot p;
  const ExplicitMap map =
      build_explicit_map(p.sys, p.cs, p.S, ShellDecomposition{{0.5, 1.0}}, OnlineConfig{3, 1.0, 0.0});

  const IntervalSolution at_quarter = algorithm2_step(map, Vector::Constant(1, 0.25));
  CHECK(at_quarter.j == 1);
  CHECK_THAT(at_quarter.u(0), Catch::Matchers::WithinAbs(-0.25, 1e-9));
  CHECK_THAT(at_quarter.eps, Catch::Matchers::WithinAbs(0.0, 1e-9));

  // a state sitting exactly on a scaled vertex reuses the stored input as is
  const IntervalSolution at_vertex = algorithm2_step(map, Vector::Constant(1, 0.5));
  CHECK_THAT(at_vertex.u(0), Catch::Matchers::WithinAbs(map.solutions[0].u_per_vertex[1](0), 1e-9));

  const IntervalSolution mirrored = algorithm2_step(map, Vector::Constant(1, -0.25));
  CHECK_THAT(mirrored.u(0), Catch::Matchers::WithinAbs(0.25, 1e-9));

  const IntervalSolution rest = algorithm2_step(map, Vector::Zero(1));
  CHECK(rest.j == map.j_star.front());
  CHECK(rest.u(0) == 0.0);
  CHECK(rest.eps == 0.0);

  CHECK_THROWS_AS(algorithm2_step(map, Vector::Constant(1, 1.5)), StateOutsideS);
}

TEST_CASE("stored shell factor bounds the realized contraction") {
  const Planar q;
  const ExplicitMap map =
      build_explicit_map(q.sys, q.cs, q.S, ShellDecomposition::uniform(4), OnlineConfig{4, 0.0, 1.0});
  double amp = 0.0;
  for (const Vector& v : q.S.V.vertices) amp = std::max(amp, v.cwiseAbs().maxCoeff());
  std::mt19937 rng(2718);
  std::uniform_real_distribution<double> ua(-amp, amp);
  for (int ell = 1; ell <= 4; ++ell) {
    const double lo = ell == 1 ? 0.0 : map.decomposition.rho[static_cast<size_t>(ell - 2)];
    const double hi = map.decomposition.rho[static_cast<size_t>(ell - 1)];
    int kept = 0;
    while (kept < 200) {
      Vector x(2);
      x << ua(rng), ua(rng);
      const double g = gauge(q.S.S, x);
      if (g <= lo + 1e-9 || g > hi - 1e-9) continue;
      ++kept;
      const IntervalSolution sol = algorithm2_step(map, x);
      CHECK(sol.j == map.j_star[static_cast<size_t>(ell - 1)]);
      CHECK(membership(q.cs.U, sol.u));
      Vector y = x;
      for (int jp = 0; jp < sol.j; ++jp) {
        y = q.sys.A * y + q.sys.B * sol.u;
        CHECK(membership(q.cs.X, y));
      }
      CHECK(gauge(q.S.S, y) <= sol.eps * g + 1e-6);
    }
  }
}

TEST_CASE("closed loop under the table contracts geometrically") {
  const Pilot p;
  const ExplicitMap map =
      build_explicit_map(p.sys, p.cs, p.S, ShellDecomposition{{0.5, 1.0}}, OnlineConfig{3, 0.0, 1.0});
  Vector x = Vector::Ones(1);
  int transmissions = 0;
  while (gauge(p.S.S, x) > 1e-9 && transmissions < 50) {
    const double psi = gauge(p.S.S, x);
    const IntervalSolution sol = algorithm2_step(map, x);
    ++transmissions;
    CHECK(sol.eps <= p.S.lambda_certified + 1e-9);
    for (int jp = 0; jp < sol.j; ++jp) x = p.sys.A * x + p.sys.B * sol.u;
    CHECK(gauge(p.S.S, x) <= sol.eps * psi + 1e-9);
  }
  CHECK(gauge(p.S.S, x) <= 1e-9);
}

TEST_CASE("shell intervals are feasible for every covered state") {
  const Planar q;
  const OnlineConfig cfg{4, 0.0, 1.0};
  const ExplicitMap map =
      build_explicit_map(q.sys, q.cs, q.S, ShellDecomposition::uniform(3), cfg);
  // inner shells never require more transmissions than outer ones
  for (size_t ell = 1; ell < map.j_star.size(); ++ell) {
    CHECK(map.j_star[ell - 1] >= map.j_star[ell]);
  }
  double amp = 0.0;
  for (const Vector& v : q.S.V.vertices) amp = std::max(amp, v.cwiseAbs().maxCoeff());
  std::mt19937 rng(8086);
  std::uniform_real_distribution<double> ua(-amp, amp);
  int kept = 0;
  while (kept < 100) {
    Vector x(2);
    x << ua(rng), ua(rng);
    if (gauge(q.S.S, x) > 1.0 - 1e-9 || gauge(q.S.S, x) < 1e-6) continue;
    ++kept;
    const int ell = point_locate(map, x);
    const std::vector<int> on_line = feasible_intervals(q.sys, q.cs, q.S, x, cfg);
    for (const int j : map.feasible_sets[static_cast<size_t>(ell - 1)]) {
      CHECK(std::find(on_line.begin(), on_line.end(), j) != on_line.end());
    }
    // the table therefore never waits longer than the online rule allows
    CHECK(map.j_star[static_cast<size_t>(ell - 1)] <= *std::max_element(on_line.begin(), on_line.end()));
  }
}
