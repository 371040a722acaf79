#include <doctest.h>

#include "sloclab/errors.hpp"
#include "sloclab/experiment.hpp"

#include <array>
#include <clocale>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace sloclab;
namespace fs = std::filesystem;

namespace {

struct Completed {
  int code = -1;
  std::string output;
};

// Runs the CLI through the shell, merging stderr into the captured output.
Completed run_cli(const std::string& args, const std::string& env = {}) {
  const std::string cmd = env + " '" SLOCLAB_CLI_PATH "' " + args + " 2>&1";
  Completed c;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf{};
  while (fgets(buf.data(), static_cast<int>(buf.size()), pipe)) c.output += buf.data();
  const int status = pclose(pipe);
  c.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sloclab-test-" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("config defaults and round trip") {
    const ExperimentConfig d = parse_config("{}");
    CHECK(d.n_paths == 256);
    CHECK(d.tolerance_sigma == 4.0);
    CHECK(d.grid.points == 40);
    CHECK(d.grid.t_min == 0.01);
    CHECK(d.grid.t_max == 100.0);
    const ExperimentConfig c = parse_config(R"({"measure": "cube:8", "dim": 8, "n_paths": 100,
      "grid": {"kind": "geometric", "t_min": 0.1, "t_max": 10, "points": 12},
      "seed": 18446744073709551615, "checks": ["orthogonality", "guan-ratio"],
      "output_dir": "x", "tolerance_sigma": 3.5, "workers": 2, "driver": "sde"})");
    CHECK(c.measure == "cube:8");
    CHECK(c.seed == 18446744073709551615ULL);
    CHECK(c.checks.size() == 2);
    CHECK(c.driver == Driver::SDE);
    const ExperimentConfig back = parse_config(to_json(c));
    CHECK(to_json(back) == to_json(c));
  }

  TEST_CASE("config errors name the line or the field") {
    CHECK_THROWS_WITH_AS(parse_config("{\n  \"measure\": \"cube:2\",\n  oops\n}"),
                         doctest::Contains("line 3"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"measur": "cube:2"})"), doctest::Contains("measur"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"n_paths": "many"})"), doctest::Contains("n_paths"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"grid": {"t_min": 0}})"),
                         doctest::Contains("t_min must be positive"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"grid": {"points": 5}})"), doctest::Contains("points"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"n_paths": 1})"), doctest::Contains("n_paths"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"checks": ["no-such-check"]})"),
                         doctest::Contains("no-such-check"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config(R"({"measure": "cube:3", "dim": 4})"),
                         doctest::Contains("dim"), ConfigError);
  }

  TEST_CASE("environment overrides") {
    ExperimentConfig c;
    apply_overrides(c, {{"SLOCLAB_MEASURE", "ball:3"},
                        {"SLOCLAB_N_PATHS", "33"},
                        {"SLOCLAB_SEED", "9"},
                        {"SLOCLAB_CHECKS", "orthogonality,martingale"},
                        {"SLOCLAB_GRID_T_MAX", "50"}});
    CHECK(c.measure == "ball:3");
    CHECK(c.n_paths == 33);
    CHECK(c.seed == 9);
    CHECK(c.checks == std::vector<std::string>{"orthogonality", "martingale"});
    CHECK(c.grid.t_max == 50.0);
    CHECK_THROWS_AS(apply_overrides(c, {{"SLOCLAB_N_PATHS", "x"}}), ConfigError);
  }

  TEST_CASE("csv numbers") {
    CHECK(csv_double(0.1) == "0.10000000000000001");
    CHECK(csv_double(1.0) == "1");
    CHECK(std::stod(csv_double(1.0 / 3.0)) == 1.0 / 3.0);
    const char* old = std::setlocale(LC_NUMERIC, nullptr);
    const std::string saved = old ? old : "C";
    if (std::setlocale(LC_NUMERIC, "de_DE.UTF-8")) {
      CHECK(csv_double(2.5) == "2.5");
      std::setlocale(LC_NUMERIC, saved.c_str());
    }
  }

  TEST_CASE("registry") {
    const std::string text = list_checks_text();
    CHECK(text.find("variance-decomposition") != std::string::npos);
    CHECK(text.find("de-bruijn") != std::string::npos);
    const CheckInfo* g = find_check("guan-ratio");
    REQUIRE(g);
    CHECK(g->info_only);
    const CheckInfo* db = find_check("de-bruijn");
    REQUIRE(db);
    CHECK(db->note.find("tail") != std::string::npos);
    CHECK_FALSE(find_check("nope"));
  }

  TEST_CASE("gaussian smoke run: every check passes") {
    ExperimentConfig c;
    c.measure = "gaussian:4";
    c.output_dir = scratch("gauss");
    const RunResult r = run(c);
    CHECK(r.exit_code == 0);
    CHECK(r.reports.size() == check_registry().size());
    for (const auto& rep : r.reports) {
      CAPTURE(rep.check_id);
      CHECK(rep.verdict != Verdict::Fail);
    }
    CHECK(fs::exists(c.output_dir / "report.json"));
    CHECK(fs::exists(c.output_dir / "times.csv"));
    CHECK(fs::exists(c.output_dir / "follmer.csv"));
    const std::string report = slurp(c.output_dir / "report.json");
    CHECK(report.find("\"verdict\": \"PASS\"") != std::string::npos);
  }

  TEST_CASE("cube:8 seed 42 simulated twice gives identical csv files") {
    ExperimentConfig c;
    c.measure = "cube:8";
    c.seed = 42;
    c.output_dir = scratch("det-a");
    simulate(c);
    ExperimentConfig d = c;
    d.output_dir = scratch("det-b");
    d.workers = 1;
    simulate(d);
    for (const char* f : {"times.csv", "follmer.csv"}) {
      CAPTURE(f);
      const std::string a = slurp(c.output_dir / f);
      CHECK(!a.empty());
      CHECK(a == slurp(d.output_dir / f));
    }
    const std::string header = slurp(c.output_dir / "times.csv").substr(0, 40);
    CHECK(header.rfind("t,tr_EA", 0) == 0);
  }

  TEST_CASE("command line") {
    const fs::path dir = scratch("cli");
    fs::create_directories(dir);
    {
      std::ofstream(dir / "bad.json") << R"({"grid": {"t_min": 0}})";
    }
    const Completed bad = run_cli("verify --config '" + (dir / "bad.json").string() + "'");
    CHECK(bad.code == 1);
    CHECK(bad.output.find("t_min must be positive") != std::string::npos);

    const Completed syntax = run_cli("simulate --config '" + (dir / "missing.json").string() + "'");
    CHECK(syntax.code == 1);

    const Completed list = run_cli("list-checks");
    CHECK(list.code == 0);
    CHECK(list.output.find("guan-ratio") != std::string::npos);
    CHECK(list.output.find("INFO") != std::string::npos);

    const Completed probe = run_cli("tilt-probe --measure gaussian:1 --t 1 --theta 2");
    CHECK(probe.code == 0);
    CHECK(probe.output.find("t,theta_0,log_z,a_0,A_0_0") != std::string::npos);

    const Completed lk = run_cli("lk-table --measure product:exp");
    CHECK(lk.code == 0);
    CHECK(lk.output.find("0.36787944117144") != std::string::npos);

    const Completed v = run_cli("verify --measure gaussian:2 --paths 16 --out '" +
                                    (dir / "v").string() + "'",
                                "SLOCLAB_CHECKS=orthogonality,guan-ratio");
    CHECK(v.code == 0);
    CHECK(v.output.find("PASS  orthogonality") != std::string::npos);
    CHECK(v.output.find("INFO  guan-ratio") != std::string::npos);

    const Completed env_bad = run_cli("simulate --out '" + (dir / "e").string() + "'",
                                      "SLOCLAB_GRID_T_MIN=-1");
    CHECK(env_bad.code == 1);
  }
}
