#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "qrobust/errors.hpp"
#include "qrobust/scenario.hpp"

using namespace qrobust;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string error_text(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qrobust_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("simple keys") {
    const ScenarioConfig cfg = parse_config_text("mode = inner\nq = 2.5\nN = 4\n");
    CHECK(cfg.q == 2.5);
    CHECK(cfg.steps == 4);
    CHECK(cfg.mode == "inner");
  }
  SUBCASE("comments and blank lines") {
    const ScenarioConfig cfg =
        parse_config_text("# header\n\nmode = entropy  # trailing\n  gamma = 0.7\n");
    CHECK(cfg.mode == "entropy");
    CHECK(cfg.gamma == 0.7);
  }
  SUBCASE("q = 1 is rejected with the field named") {
    const std::string msg = error_text([] {
      parse_config_text("mode = inner\nq = 1.0\n").validate();
    });
    CHECK(msg.find("q") != std::string::npos);
  }
  SUBCASE("empty file needs a mode") {
    const std::string msg = error_text([] { parse_config_text("").validate(); });
    CHECK(msg.find("mode is required") != std::string::npos);
  }
  SUBCASE("unknown key carries its line number") {
    const std::string msg =
        error_text([] { parse_config_text("mode = inner\nwobble = 3\n"); });
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("wobble") != std::string::npos);
  }
  SUBCASE("missing value names the field") {
    const std::string msg = error_text([] { parse_config_text("gamma =\n"); });
    CHECK(msg.find("gamma") != std::string::npos);
    CHECK(msg.find("line 1") != std::string::npos);
  }
  SUBCASE("malformed number names the field") {
    const std::string msg = error_text([] { parse_config_text("gamma = banana\n"); });
    CHECK(msg.find("gamma") != std::string::npos);
  }
  SUBCASE("subcritical q needs the experimental flag and stays out of q > 1 modes") {
    CHECK_THROWS_AS(parse_config_text("mode = entropy\nq = 0.5\n").validate(), ConfigError);
    CHECK_NOTHROW(
        parse_config_text("mode = entropy\nq = 0.5\nexperimental_q = true\n").validate());
    CHECK_THROWS_AS(
        parse_config_text("mode = inner\nq = 0.5\nexperimental_q = true\n").validate(),
        ConfigError);
  }
  SUBCASE("adjoint density switch") {
    CHECK(parse_config_text("mode = optimize\nadjoint_density = sigma_theta\n").kernel() ==
          AdjointKernel::SigmaTheta);
    CHECK_THROWS_AS(
        parse_config_text("mode = optimize\nadjoint_density = nonsense\n").validate(),
        ConfigError);
  }
  SUBCASE("missing config file") {
    CHECK_THROWS_AS(parse_config("/nonexistent/path/scenario.cfg"), ConfigError);
  }
}

TEST_CASE("inner mode emits a passing result table") {
  ScenarioConfig cfg = parse_config_text("mode = inner\nN = 4\nseed = 9\n");
  const fs::path dir = fresh_dir("inner");
  run_scenario(cfg, dir.string());

  const std::string result = slurp(dir / "result.csv");
  CHECK(result.find("quantity,value,tolerance,status") == 0);
  CHECK(result.find("y0_closed_form") != std::string::npos);
  CHECK(result.find("attainment_residual") != std::string::npos);
  CHECK(result.find("FAIL") == std::string::npos);
  CHECK(slurp(dir / "value_process.csv").find("step,branch,Y,Z,eta_star") == 0);
}

TEST_CASE("oracle-compare mode passes at the default grid") {
  ScenarioConfig cfg = parse_config_text("mode = oracle-compare\nN = 4\ngrid_points = 2001\n");
  const fs::path dir = fresh_dir("oracle");
  run_scenario(cfg, dir.string());
  const std::string result = slurp(dir / "result.csv");
  CHECK(result.find("grid_vs_closed_gap_0") != std::string::npos);
  CHECK(result.find("FAIL") == std::string::npos);
  CHECK(slurp(dir / "convergence.csv").find("N,value,gap") == 0);
}

TEST_CASE("entropy mode passes its pinned rows") {
  ScenarioConfig cfg = parse_config_text("mode = entropy\n");
  const fs::path dir = fresh_dir("entropy");
  run_scenario(cfg, dir.string());
  const std::string result = slurp(dir / "result.csv");
  CHECK(result.find("two_state_q2_entropy_err") != std::string::npos);
  CHECK(result.find("quad_gap_ratio_8_16") != std::string::npos);
  CHECK(result.find("FAIL") == std::string::npos);
}

TEST_CASE("fixed seeds reproduce byte-identical outputs") {
  for (const std::string mode : {"inner", "optimize"}) {
    ScenarioConfig cfg = parse_config_text("mode = " + mode + "\nN = 4\nseed = 123\n");
    const fs::path dir_a = fresh_dir(mode + "_a");
    const fs::path dir_b = fresh_dir(mode + "_b");
    run_scenario(cfg, dir_a.string());
    run_scenario(cfg, dir_b.string());
    CHECK(slurp(dir_a / "result.csv") == slurp(dir_b / "result.csv"));
    CHECK(slurp(dir_a / "value_process.csv") == slurp(dir_b / "value_process.csv"));
  }
}

TEST_CASE("every checked row carries its tolerance") {
  ScenarioConfig cfg = parse_config_text("mode = example-nc\nN = 4\n");
  const fs::path dir = fresh_dir("nc");
  run_scenario(cfg, dir.string());
  std::istringstream lines(slurp(dir / "result.csv"));
  std::string line;
  std::getline(lines, line);  // header
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    const auto last_comma = line.rfind(',');
    const std::string status = line.substr(last_comma + 1);
    CHECK((status == "PASS" || status == "FAIL" || status == "INFO"));
    if (status != "INFO") {
      // tolerance field (third column) must be nonempty
      const auto first = line.find(',');
      const auto second = line.find(',', first + 1);
      CHECK(line.find(',', second + 1) > second + 1);
    }
  }
}
