#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mkv/errors.hpp"
#include "mkv/experiment.hpp"

using namespace mkv;
namespace fs = std::filesystem;

namespace {
std::string error_of(const std::string& text) {
  try {
    make_experiment(parse_config_text(text, "t.conf"));
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("mkv_cli_test_" + name);
  fs::remove_all(p);
  return p;
}
}  // namespace

TEST_CASE("text config parsing") {
  const auto f = parse_config_text("# comment\nexperiment = simulate\n\nmodel.kappa = 0.25   # trailing\nsim.T=2\n");
  CHECK(f.values.at("experiment") == "simulate");
  CHECK(f.values.at("model.kappa") == "0.25");
  CHECK(f.lines.at("sim.T") == 5);
  const auto c = make_experiment(f);
  CHECK(c.model_params.at("kappa") == 0.25);
  CHECK(c.sim.T == 2.0);
}

TEST_CASE("malformed config reports the line") {
  CHECK(error_of("sim.T = 1\nsim.h 0.1\n").find("t.conf:2") != std::string::npos);
  CHECK(error_of("sim.T = 1\nsim.T = 2\n").find("t.conf:2") != std::string::npos);
  CHECK(error_of("a = 1\nsim.N = -4\n").find("t.conf:") != std::string::npos);
  CHECK(error_of("sim.N = many\n").find("t.conf:1") != std::string::npos);
  CHECK(error_of("sim.typo = 1\n").find("unknown key") != std::string::npos);
  CHECK(error_of("experiment = dance\n").find("t.conf:1") != std::string::npos);
}

TEST_CASE("JSON config flattens to the same keys") {
  const auto j = parse_config_json(R"({"model": "stable", "sim": {"T": 2.5, "N": 300}, "couple": {"checkpoints": [1, 2]}})");
  const auto t = parse_config_text("model = stable\nsim.T = 2.5\nsim.N = 300\ncouple.checkpoints = 1,2\n");
  CHECK(j.values == t.values);
  CHECK_THROWS_AS(parse_config_json("{\"sim\": "), Error);
}

TEST_CASE("seed precedence: override beats config") {
  const auto f = parse_config_text("seed = 9\n");
  CHECK(make_experiment(f).seed == 9);
  CliOverrides cli;
  cli.seed = 4;
  const auto c = make_experiment(f, cli);
  CHECK(c.seed == 4);
  CHECK(c.sim.seed == 4);
  CHECK(c.resolved.at("seed") == "4");
}

TEST_CASE("rates experiment reports C1 = 2") {
  auto c = make_experiment(parse_config_text("rates.l1 = 1\nrates.l2 = 1\nrates.r0 = 1\nrates.alpha = 1\n"),
                           CliOverrides{Experiment::rates, {}, scratch("rates").string(), {}});
  std::ostringstream out;
  const auto res = run_experiment(c, out);
  CHECK(res.exit_code == 0);
  CHECK(res.report.at("C1") == 2.0);
  CHECK(res.report.contains("delta0"));
  CHECK(res.report.at("empirical") == false);
}

TEST_CASE("manifest lists every file and reproduces the run") {
  const auto dir = scratch("sim");
  auto c = make_experiment(parse_config_text("model = stable\nmodel.kappa = 0.2\nsim.T = 0.3\nsim.N = 200\n"),
                           CliOverrides{Experiment::simulate, 5, dir.string(), {}});
  std::ostringstream out;
  run_experiment(c, out);
  std::set<std::string> on_disk;
  for (const auto& e : fs::directory_iterator(dir)) on_disk.insert(e.path().filename().string());
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  std::set<std::string> listed;
  for (const auto& f : manifest.at("files")) listed.insert(f.get<std::string>());
  CHECK(listed == on_disk);
  CHECK(manifest.at("seed") == 5);
  CHECK(manifest.contains("noise_normalization"));

  const auto again = scratch("sim_again");
  auto c2 = make_experiment(load_config((dir / "manifest.json").string()),
                            CliOverrides{Experiment::simulate, {}, again.string(), {}});
  run_experiment(c2, out);
  for (const auto& name : on_disk)
    if (name.ends_with(".csv")) CHECK(slurp(dir / name) == slurp(again / name));
}

TEST_CASE("phase experiment: supercritical is an expected outcome") {
  auto c = make_experiment(parse_config_text("phase.epsilon = 1.2\nphase.mode = closed_form\n"),
                           CliOverrides{Experiment::phase, {}, scratch("phase").string(), {}});
  std::ostringstream out;
  const auto res = run_experiment(c, out);
  CHECK(res.exit_code == 0);
  CHECK(res.report.at("no_invariant_measure") == true);
}

TEST_CASE("verify filter") {
  auto c = make_experiment(FlatConfig{}, CliOverrides{Experiment::verify, {}, scratch("verify").string(), "measures"});
  std::ostringstream out;
  const auto res = run_experiment(c, out);
  CHECK(res.exit_code == 0);
  REQUIRE(res.report.size() == 1);
  CHECK(res.report[0].at("id") == 1);
  CHECK(out.str().find("OT oracle") != std::string::npos);
}

TEST_CASE("unknown model is a configuration error") {
  auto c = make_experiment(parse_config_text("model = nope\n"),
                           CliOverrides{Experiment::simulate, {}, scratch("bad").string(), {}});
  std::ostringstream out;
  try {
    run_experiment(c, out);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::configuration);
  }
}
