// mkv: batch entry point. One experiment per invocation.
//
//   mkv rates|simulate|couple|fixed-point|phase|verify [--config PATH] [--seed N] [--out DIR] [--only MODULE]
//
// Exit status: 0 pass or complete, 2 fail verdict, 3 configuration error,
// 1 any other runtime error.
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mkv/errors.hpp"
#include "mkv/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"McKean-Vlasov particle simulation and ergodicity checks", "mkv"};
  app.set_version_flag("--version", mkv::code_version());
  app.require_subcommand(1);

  std::string config_path, out_dir, only;
  std::uint64_t seed = 0;
  auto* config_opt = app.add_option("--config", config_path, "Config file (dotted keys or JSON)")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Seed; overrides MKV_SEED and the config");
  auto* out_opt = app.add_option("--out", out_dir, "Output directory");
  auto* only_opt = app.add_option("--only", only, "verify: module tag or criterion number(s)");
  for (auto* o : {config_opt, seed_opt, out_opt, only_opt}) o->configurable(false);
  app.fallthrough();

  for (const char* name : {"rates", "simulate", "couple", "fixed-point", "phase", "verify"})
    app.add_subcommand(name, std::string("run the ") + name + " experiment")->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mkv::exit_config;
  }

  try {
    mkv::CliOverrides cli;
    cli.experiment = mkv::experiment_from_string(app.get_subcommands().front()->get_name());
    if (*seed_opt) {
      cli.seed = seed;
    } else if (const char* env = std::getenv("MKV_SEED"); env && *env) {
      try {
        std::size_t used = 0;
        cli.seed = std::stoull(env, &used);
        if (used != std::string(env).size()) throw std::invalid_argument(env);
      } catch (const std::exception&) {
        std::cerr << "error: MKV_SEED must be a non-negative integer, got '" << env << "'\n";
        return mkv::exit_config;
      }
    }
    if (*out_opt) cli.output_dir = out_dir;
    if (*only_opt) cli.only = only;

    const mkv::FlatConfig flat = config_path.empty() ? mkv::FlatConfig{"<defaults>", {}, {}} : mkv::load_config(config_path);
    const mkv::ExperimentConfig config = mkv::make_experiment(flat, cli);
    const auto outcome = mkv::run_experiment(config, std::cout);
    std::cerr << "wrote " << outcome.files.size() + 1 << " files to " << config.output_dir << "\n";
    return outcome.exit_code;
  } catch (const mkv::Error& e) {
    std::cerr << "error (" << mkv::to_string(e.kind()) << "): " << e.what() << "\n";
    return e.kind() == mkv::ErrorKind::configuration ? mkv::exit_config : mkv::exit_runtime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return mkv::exit_runtime;
  }
}
