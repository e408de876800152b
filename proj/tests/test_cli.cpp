#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "settrig/io.hpp"

// Drives the installed binary end to end through a shell, checking exit
// codes, emitted artifacts, and the machine-readable error line.

#ifndef SETTRIG_CLI_PATH
#error "SETTRIG_CLI_PATH must name the built command-line binary"
#endif

using namespace settrig;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string output;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Workspace {
  fs::path dir;
  fs::path pilot;
  fs::path outside;
  fs::path near_boundary;
  fs::path bad_input_set;
  fs::path hopeless;
  int run_counter = 0;
  bool have_artifacts = false;

  Workspace() {
    std::string tmpl = (fs::temp_directory_path() / "settrig_cli_XXXXXX").string();
    REQUIRE(mkdtemp(tmpl.data()) != nullptr);
    dir = tmpl;

    const char* pilot_json = R"({
      "system": {"discrete": {"A": [[1.0]], "B": [[1.0]]}},
      "constraints": {"X": {"inf_norm_bound": 1.0}, "U": {"inf_norm_bound": 0.5}},
      "lambda": 0.5,
      "j_max": 3,
      "weights": {"w1": 0.0, "w2": 1.0},
      "shells": {"rho": [0.5, 1.0]},
      "x0": [1.0],
      "horizon": 10,
      "sweep": {"weights": [[0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]}
    })";
    pilot = write_config("pilot.json", pilot_json);

    Json j = Json::parse(pilot_json);
    j["x0"] = Json::parse("[1.5]");
    outside = write_config("outside.json", j.dump());
    j["x0"] = Json::parse("[1.00001]");
    near_boundary = write_config("near.json", j.dump());

    j = Json::parse(pilot_json);
    j["constraints"]["U"] = Json::parse(R"({"H": [[1.0], [-1.0]], "h": [1.0, -0.5]})");
    bad_input_set = write_config("bad_u.json", j.dump());

    hopeless = write_config("hopeless.json", R"({
      "system": {"discrete": {"A": [[2.0]], "B": [[1.0]]}},
      "constraints": {"X": {"inf_norm_bound": 1.0}, "U": {"inf_norm_bound": 0.1}},
      "lambda": 0.5,
      "max_iter": 2,
      "j_max": 1
    })");
  }

  fs::path write_config(const std::string& name, const std::string& text) {
    const fs::path p = dir / name;
    std::ofstream out(p);
    out << text;
    return p;
  }

  RunResult run(const std::string& args, const std::string& env_prefix = "env -u SETTRIG_TOL") {
    const fs::path capture = dir / ("capture_" + std::to_string(run_counter++) + ".txt");
    const std::string cmd = env_prefix + " \"" + SETTRIG_CLI_PATH + "\" " + args + " > \"" +
                            capture.string() + "\" 2>&1";
    const int rc = std::system(cmd.c_str());
    RunResult r;
    r.code = rc == -1 ? -1 : (WIFEXITED(rc) ? WEXITSTATUS(rc) : -2);
    r.output = read_file(capture);
    return r;
  }

  fs::path fresh_out(const std::string& label) {
    const fs::path p = dir / label;
    fs::create_directories(p);
    return p;
  }

  // shared contract + explicit-map artifacts most tests reuse
  fs::path artifacts() {
    const fs::path p = dir / "artifacts";
    if (!have_artifacts) {
      fs::create_directories(p);
      REQUIRE(run("contract --config \"" + pilot.string() + "\" --out \"" + p.string() + "\"").code == 0);
      REQUIRE(run("explicit-map --config \"" + pilot.string() + "\" --out \"" + p.string() +
                  "\" --set \"" + (p / "contractive_set.json").string() + "\"")
                  .code == 0);
      have_artifacts = true;
    }
    return p;
  }

  static Workspace& get() {
    static Workspace w;
    return w;
  }
};

Json last_line_json(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::string last;
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
  }
  return Json::parse(last);
}

}  // namespace

TEST_CASE("contract emits a certified set artifact") {
  Workspace& w = Workspace::get();
  const fs::path out = w.artifacts();

  const ContractiveSet S =
      contractive_set_from_json(Json::parse(read_file(out / "contractive_set.json")));
  CHECK(S.lambda_certified == 0.5);
  CHECK(S.iterations_used == 1);
  CHECK(S.V.count() == 2);

  const Json cert = Json::parse(read_file(out / "certification.json"));
  CHECK(cert.at("contractive") == true);
  CHECK(cert.at("lambda_certified") == 0.5);
  CHECK(cert.at("worst_factor").get<double>() == 0.5);
  CHECK(cert.at("warnings").empty());
}

TEST_CASE("explicit-map reuses the stored set and tabulates shells") {
  Workspace& w = Workspace::get();
  const fs::path out = w.artifacts();

  const ExplicitMap map = explicit_map_from_json(Json::parse(read_file(out / "explicit_map.json")));
  CHECK(map.decomposition.rho == std::vector<double>{0.5, 1.0});
  CHECK(map.j_star == std::vector<int>{3, 3});

  std::istringstream table(read_file(out / "shell_table.csv"));
  std::string line;
  std::getline(table, line);
  CHECK(line == "ell,rho,feasible_intervals,j_star,eps");
  std::getline(table, line);
  CHECK(line == "1,0.5,\"1;2;3\",3,0");
  std::getline(table, line);
  CHECK(line == "2,1,\"1;2;3\",3,0");
}

TEST_CASE("simulate writes the trace and metrics for both algorithms") {
  Workspace& w = Workspace::get();
  const fs::path art = w.artifacts();
  const fs::path out = w.fresh_out("sim");

  const RunResult r1 = w.run("simulate --config \"" + w.pilot.string() + "\" --out \"" +
                             out.string() + "\" --algorithm 1 --set \"" +
                             (art / "contractive_set.json").string() + "\"");
  CHECK(r1.code == 0);
  const Json m1 = Json::parse(read_file(out / "metrics_alg1.json"));
  CHECK(m1.at("convergence_step") == 3);
  CHECK(m1.at("transmission_count") == 4);
  CHECK(m1.at("constraint_violations") == 0);
  const std::string trace1 = read_file(out / "trace_alg1.csv");
  CHECK(trace1.rfind("k,x_1,u_1,is_transmission,j_m,eps_m,psi\n", 0) == 0);

  const RunResult r2 = w.run("simulate --config \"" + w.pilot.string() + "\" --out \"" +
                             out.string() + "\" --algorithm 2 --set \"" +
                             (art / "contractive_set.json").string() + "\" --map \"" +
                             (art / "explicit_map.json").string() + "\"");
  CHECK(r2.code == 0);
  const Json m2 = Json::parse(read_file(out / "metrics_alg2.json"));
  CHECK(m2.at("convergence_step") == 3);
  CHECK(m2.at("transmission_count") == 4);
  CHECK(m2.at("constraint_violations") == 0);
}

TEST_CASE("repeat simulations are byte identical") {
  Workspace& w = Workspace::get();
  const fs::path art = w.artifacts();
  const fs::path a = w.fresh_out("det_a");
  const fs::path b = w.fresh_out("det_b");
  const std::string base = "simulate --config \"" + w.pilot.string() + "\" --algorithm 1 --set \"" +
                           (art / "contractive_set.json").string() + "\" --out \"";
  REQUIRE(w.run(base + a.string() + "\"").code == 0);
  REQUIRE(w.run(base + b.string() + "\"").code == 0);
  CHECK(read_file(a / "trace_alg1.csv") == read_file(b / "trace_alg1.csv"));
  CHECK(read_file(a / "metrics_alg1.json") == read_file(b / "metrics_alg1.json"));
}

TEST_CASE("sweep fans out over the weight grid") {
  Workspace& w = Workspace::get();
  const fs::path out = w.fresh_out("sweep");
  const RunResult r = w.run("sweep --config \"" + w.pilot.string() + "\" --out \"" + out.string() +
                            "\" --workers 2");
  CHECK(r.code == 0);

  std::istringstream csv(read_file(out / "sweep.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "w1,w2,transmission_count,convergence_step,constraint_violations");
  std::getline(csv, line);
  CHECK(line == "0,1,4,3,0");
  std::getline(csv, line);
  CHECK(line == "1,0,10,2,0");
  std::getline(csv, line);
  CHECK(line == "1,1,4,3,0");

  CHECK(fs::exists(out / "trace_w1-0_w2-1.csv"));
  CHECK(fs::exists(out / "metrics_w1-1_w2-0.json"));
  CHECK(fs::exists(out / "trace_w1-1_w2-1.csv"));
}

TEST_CASE("verify accepts the artifacts it is pointed at") {
  Workspace& w = Workspace::get();
  const fs::path art = w.artifacts();
  const RunResult r = w.run("verify --config \"" + w.pilot.string() + "\" --out \"" + art.string() +
                            "\" --set \"" + (art / "contractive_set.json").string() + "\" --map \"" +
                            (art / "explicit_map.json").string() + "\"");
  CHECK(r.code == 0);
}

TEST_CASE("starting outside the set is an assumption violation") {
  Workspace& w = Workspace::get();
  const fs::path out = w.fresh_out("outside");
  const RunResult r = w.run("simulate --config \"" + w.outside.string() + "\" --out \"" +
                            out.string() + "\" --algorithm 1");
  CHECK(r.code == 2);
  const Json err = last_line_json(r.output);
  CHECK(err.at("error").at("type") == "assumption_violated");
}

TEST_CASE("input sets without the origin are an assumption violation") {
  Workspace& w = Workspace::get();
  const fs::path out = w.fresh_out("bad_u");
  const RunResult r = w.run("contract --config \"" + w.bad_input_set.string() + "\" --out \"" +
                            out.string() + "\"");
  CHECK(r.code == 2);
  CHECK(last_line_json(r.output).at("error").at("type") == "assumption_violated");
}

TEST_CASE("uncontractable plants report infeasibility") {
  Workspace& w = Workspace::get();
  const fs::path out = w.fresh_out("hopeless");
  const RunResult r = w.run("contract --config \"" + w.hopeless.string() + "\" --out \"" +
                            out.string() + "\"");
  CHECK(r.code == 2);
  CHECK(last_line_json(r.output).at("error").at("type") == "infeasible");
}

TEST_CASE("the tolerance override rescues a boundary start") {
  Workspace& w = Workspace::get();
  const fs::path out = w.fresh_out("near");
  const std::string args = "simulate --config \"" + w.near_boundary.string() + "\" --out \"" +
                           out.string() + "\" --algorithm 1";
  CHECK(w.run(args).code == 2);
  CHECK(w.run(args, "env SETTRIG_TOL=1e-3").code == 0);
}

TEST_CASE("garbled tolerance overrides are configuration errors") {
  Workspace& w = Workspace::get();
  const fs::path out = w.fresh_out("badtol");
  const std::string args = "contract --config \"" + w.pilot.string() + "\" --out \"" +
                           out.string() + "\"";
  const RunResult alpha = w.run(args, "env SETTRIG_TOL=abc");
  CHECK(alpha.code == 1);
  CHECK(last_line_json(alpha.output).at("error").at("type") == "config_error");
  CHECK(w.run(args, "env SETTRIG_TOL=-1").code == 1);
}

TEST_CASE("usage errors exit nonzero without artifacts") {
  Workspace& w = Workspace::get();
  CHECK(w.run("simulate").code != 0);
  CHECK(w.run("frobnicate --config \"" + w.pilot.string() + "\"").code != 0);
  CHECK(w.run("").code != 0);
  CHECK(w.run("simulate --config /nonexistent.json --algorithm 1").code == 1);
}
