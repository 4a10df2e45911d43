#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mkv/analysis.hpp"
#include "mkv/rates.hpp"
#include "mkv/simulate.hpp"

namespace mkv {

// Flat dotted-key configuration, e.g.
//
//   experiment = simulate
//   model = corollary34
//   model.kappa = 0.1     # trailing comments allowed
//   sim.T = 4
//
// JSON input is flattened to the same keys ({"sim": {"T": 4}} -> sim.T).
struct FlatConfig {
  std::string source;
  std::map<std::string, std::string> values;
  std::map<std::string, int> lines;  // text input only

  std::string where(const std::string& key) const;
};

FlatConfig parse_config_text(const std::string& text, const std::string& source = "<config>");
FlatConfig parse_config_json(const std::string& text, const std::string& source = "<config>");
// Picks the encoding from the first non-blank character ('{' means JSON).
FlatConfig load_config(const std::string& path);

enum class Experiment { rates, simulate, couple, fixed_point, phase, verify };

std::string_view to_string(Experiment e);
// Accepts both "fixed-point" and "fixed_point".
Experiment experiment_from_string(const std::string& name);

struct ExperimentConfig {
  Experiment experiment = Experiment::simulate;
  std::string model = "corollary34";
  std::map<std::string, double> model_params;
  // Second model for two-system experiments; defaults to model with model2.* overrides.
  std::map<std::string, double> model2_params;
  SimConfig sim;
  std::uint64_t seed = 1;
  std::string output_dir = "mkv_out";

  // Initial cloud: N(init.mean, init.sd^2 I), or the CSV at init.file.
  double init_mean = 0.0;
  double init_sd = 1.0;
  std::string init_file;

  PhiSpec phi;
  double ellipticity_alpha = 1.0;
  ThresholdInputs thresholds;
  bool thresholds_from_phi = true;  // Brownian first order: take K, c0, lambda0 from phi

  std::string couple_kind = "contraction";  // contraction | time_change
  ContractionInputs contraction;
  std::vector<double> time_change_checkpoints{0.5, 1.0, 2.0, 4.0};

  FixedPointOptions fixed_point;

  double epsilon = 0.5;
  Example33Mode phase_mode = Example33Mode::simulate;

  std::string only;
  int threads_high = 8;

  // Every key as read, with the effective seed; stored in the manifest so a
  // re-run from it reproduces the outputs.
  std::map<std::string, std::string> resolved;
};

struct CliOverrides {
  std::optional<Experiment> experiment;
  std::optional<std::uint64_t> seed;  // --seed, else MKV_SEED
  std::optional<std::string> output_dir;
  std::optional<std::string> only;
};

// Throws Error(configuration) with a "source:line:" prefix on bad input.
ExperimentConfig make_experiment(const FlatConfig& flat, const CliOverrides& cli = {});

enum ExitCode : int { exit_ok = 0, exit_runtime = 1, exit_fail = 2, exit_config = 3 };

struct ExperimentOutcome {
  int exit_code = exit_ok;
  Verdict verdict = Verdict::pass;
  nlohmann::json report;
  std::vector<std::string> files;  // relative to output_dir
};

// Runs the experiment, writes manifest.json, CSV series and report.json into
// output_dir, and prints a short summary to `out`.
ExperimentOutcome run_experiment(const ExperimentConfig& config, std::ostream& out);

std::string code_version();

}  // namespace mkv
