#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "delta3b/config.hpp"

using namespace delta3b;
namespace fs = std::filesystem;

namespace {

std::string binary() {
  const char* p = std::getenv("DELTA3B_BIN");
  REQUIRE(p != nullptr);
  return p;
}

int run(const std::string& args) {
  int rc = std::system((binary() + " " + args + " > /dev/null 2>&1").c_str());
  return WEXITSTATUS(rc);
}

fs::path write_temp(const std::string& name, const std::string& text) {
  fs::path dir = fs::temp_directory_path() / "delta3b_cli_test";
  fs::create_directories(dir);
  fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing: schema violations carry field paths") {
  CHECK_THROWS_AS(parse_config_text("not json"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("{}"), ConfigError);  // masses missing
  CHECK_THROWS_AS(parse_config_text(R"({"masses": [1, 1]})"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(R"({"masses": [1, 1, -1]})"), ConfigError);
  try {
    parse_config_text(R"({"masses": [1,1,1], "grid": {"n": 13}})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("grid.n") != std::string::npos);
  }
}

TEST_CASE("config parsing: coupling consistency is enforced") {
  // alpha = -v0 a = -2 for this well; a mismatched declaration is rejected
  std::string good = R"({
    "masses": [1,1,1],
    "potentials": {"all": {"family": "square-well", "depth": 8.0,
                            "width": 0.25, "alpha": -2.0}}
  })";
  auto cfg = parse_config_text(good);
  CHECK(cfg.alphas.alpha[0] == Catch::Approx(-2.0));

  std::string bad = R"({
    "masses": [1,1,1],
    "potentials": {"all": {"family": "square-well", "depth": 8.0,
                            "width": 0.25, "alpha": -1.99}}
  })";
  CHECK_THROWS_AS(parse_config_text(bad), ConfigError);

  std::string bad2 = R"({
    "masses": [1,1,1],
    "potentials": {"all": {"family": "gaussian", "amplitude": 1.0, "width": 0.5}},
    "alphas": [1.0, 1.0, 1.0]
  })";
  CHECK_THROWS_AS(parse_config_text(bad2), ConfigError);
}

TEST_CASE("cli exit codes: config errors give 2, solver failures 3") {
  auto bad = write_temp("bad.json", R"({"masses": [1, 1]})");
  CHECK(run("stm-solve --config " + bad.string()) == 2);
  CHECK(run("stm-solve --config /nonexistent/file.json") == 2);

  // an impossible GMRES budget must surface as a solver failure
  auto hopeless = write_temp("hopeless.json", R"({
    "masses": [1,1,1],
    "potentials": {"all": {"family": "square-well", "depth": 8.0, "width": 0.25}},
    "grid": {"n": 32},
    "lambda": 5.0,
    "epsilon": 0.5,
    "solver": {"gmres_max_iterations": 1, "gmres_tol": 1e-14}
  })");
  CHECK(run("faddeev-solve --config " + hopeless.string() + " --out /tmp/d3b_hopeless") == 3);
}

TEST_CASE("stm-solve emits the documented files and reruns bitwise") {
  auto cfg = write_temp("stm.json", R"({
    "masses": [1,1,1],
    "alphas": [1.0, 1.0, 1.0],
    "grid": {"n": 48},
    "lambda": 5.0,
    "seed": 4242
  })");
  fs::path out1 = fs::temp_directory_path() / "delta3b_cli_test/out1";
  fs::path out2 = fs::temp_directory_path() / "delta3b_cli_test/out2";
  REQUIRE(run("stm-solve --config " + cfg.string() + " --out " + out1.string()) == 0);
  REQUIRE(fs::exists(out1 / "stm-solve.csv"));
  REQUIRE(fs::exists(out1 / "stm-solve.json"));

  auto rec = nlohmann::json::parse(slurp(out1 / "stm-solve.json"));
  CHECK(rec["schema_version"] == 1);
  CHECK(rec["experiment"] == "stm-solve");
  CHECK(rec.contains("config"));
  CHECK(rec.contains("timestamp"));
  CHECK(rec["outputs"]["charge_norms"].size() == 3);
  CHECK(rec["outputs"]["two_path_agreement"].get<double>() < 1e-8);
  CHECK(rec["diagnostics"].contains("condition"));

  // header row is part of the documented schema
  std::istringstream csv(slurp(out1 / "stm-solve.csv"));
  std::string header;
  std::getline(csv, header);
  CHECK(header == "index,p,xi1_re,xi1_im,xi2_re,xi2_im,xi3_re,xi3_im");

  // re-running from the echoed config reproduces the table bitwise
  auto echoed = write_temp("stm_echo.json", rec["config"].dump());
  REQUIRE(run("stm-solve --config " + echoed.string() + " --out " + out2.string()) == 0);
  CHECK(slurp(out1 / "stm-solve.csv") == slurp(out2 / "stm-solve.csv"));
}

TEST_CASE("bound-states finds the three-boson root near 4") {
  auto cfg = write_temp("bs.json", R"({
    "masses": [1,1,1],
    "alphas": [-2.0, -2.0, -2.0],
    "grid": {"n": 96},
    "lambda_scan": {"from": 2.0, "to": 6.5, "points": 8}
  })");
  fs::path out = fs::temp_directory_path() / "delta3b_cli_test/out_bs";
  REQUIRE(run("bound-states --config " + cfg.string() + " --out " + out.string()) == 0);
  auto rec = nlohmann::json::parse(slurp(out / "bound-states.json"));
  REQUIRE(rec["outputs"]["roots"].size() == 1);
  CHECK(rec["outputs"]["roots"][0]["lambda_det"].get<double>() ==
        Catch::Approx(4.0).margin(0.1));
  CHECK(rec["outputs"]["two_body_thresholds"][0].get<double>() ==
        Catch::Approx(1.0));
  CHECK(fs::exists(out / "bound-states.csv"));
}

TEST_CASE("two-body subcommand emits kernel diagnostics and pole column") {
  auto cfg = write_temp("tb.json", R"({
    "masses": [1,1,1],
    "potentials": {"all": {"family": "square-well", "depth": 8.0, "width": 0.25}},
    "grid": {"n": 96},
    "lambda": 10.0,
    "epsilons": [0.4, 0.2, 0.1, 0.05],
    "b_exponent": 0.99
  })");
  fs::path out = fs::temp_directory_path() / "delta3b_cli_test/out_tb";
  REQUIRE(run("two-body --config " + cfg.string() + " --out " + out.string()) == 0);
  auto rec = nlohmann::json::parse(slurp(out / "two-body.json"));
  CHECK(rec["outputs"]["weighted_diff_slope"].get<double>() ==
        Catch::Approx(0.99).margin(0.2));
  CHECK(rec["outputs"]["tau_pole_lambda"].get<double>() == Catch::Approx(1.0));
  std::istringstream csv(slurp(out / "two-body.csv"));
  std::string header;
  std::getline(csv, header);
  CHECK(header ==
        "eps,lambda,n,map_scale,sup_abs_t,weighted_sup_diff,b,pole_lambda");
  int rows = 0;
  for (std::string line; std::getline(csv, line);) ++rows;
  CHECK(rows == 4);
}

TEST_CASE("faddeev-solve emits components and gmres diagnostics") {
  auto cfg = write_temp("fd.json", R"({
    "masses": [1,1,1],
    "potentials": {"all": {"family": "square-well", "depth": 8.0, "width": 0.25}},
    "grid": {"n": 32},
    "lambda": 5.0,
    "epsilon": 0.5
  })");
  fs::path out = fs::temp_directory_path() / "delta3b_cli_test/out_fd";
  REQUIRE(run("faddeev-solve --config " + cfg.string() + " --out " + out.string()) == 0);
  auto rec = nlohmann::json::parse(slurp(out / "faddeev-solve.json"));
  CHECK(rec["diagnostics"]["gmres_iterations"].get<int>() > 0);
  CHECK(rec["diagnostics"]["gmres_residual"].get<double>() < 1e-8);
  CHECK(rec["outputs"]["component_norms"].size() == 3);
  std::istringstream csv(slurp(out / "faddeev-solve.csv"));
  std::string line;
  std::getline(csv, line);
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 32 * 32);
}
