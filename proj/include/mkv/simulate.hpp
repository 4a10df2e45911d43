#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mkv/kernels.hpp"
#include "mkv/measures.hpp"
#include "mkv/models.hpp"

namespace mkv {

struct SimConfig {
  double h = 1e-3;
  double T = 1.0;
  std::size_t N = 1000;
  std::uint64_t seed = 1;
  double couple_threshold = 0.0;  // <= 0: 0.5 sqrt(alpha h)
  double burn_in = 0.0;
  double window = 1.0;
  double tol_stationary = 0.05;
  double record_dt = 0.1;  // spacing of recorded series; rounded to whole steps
  // Index of the first step. A run continued from the terminal state of a run
  // with S steps uses start_step = S and reproduces the single long run.
  std::uint64_t start_step = 0;
  // Keep the full cloud at every record time t >= this value.
  double keep_clouds_after = std::numeric_limits<double>::infinity();
  Exec exec = Exec::parallel;

  void validate() const;
  std::uint64_t steps() const;
  std::uint64_t record_every() const;
  double start_time() const { return static_cast<double>(start_step) * h; }
};

nlohmann::json to_json(const SimConfig& c);

struct RunResult {
  std::vector<double> times;
  std::map<std::string, std::vector<double>> series;  // each aligned with times
  std::vector<EmpiricalMeasure> terminal;               // one cloud per system
  std::vector<double> cloud_times;
  std::vector<EmpiricalMeasure> clouds;  // system 0 at cloud_times
  std::vector<double> tau;               // per-pair coupling times, NaN if never
  bool diverged = false;
  double blowup_time = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t steps_taken = 0;
  std::uint64_t end_step = 0;
  nlohmann::json manifest = nlohmann::json::object();

  const std::vector<double>& at(const std::string& name) const;
  // Value of a series at the recorded time closest to t.
  double value_at(const std::string& name, double t) const;
};

// One Euler-Maruyama step of a single state against the law mu.
std::vector<double> em_step(const ModelSpec& model, std::span<const double> x, const EmpiricalMeasure& mu, double h,
                            RngStream& stream, double t = 0.0);

// Interacting particle system: the law in the coefficients is the particles'
// own empirical measure, refreshed every step.
RunResult run_mckean_vlasov(const ModelSpec& model, const EmpiricalMeasure& eta0, const SimConfig& config);

// Decoupled flow with the measure argument frozen at mu.
RunResult run_frozen(const ModelSpec& model, const EmpiricalMeasure& mu, const EmpiricalMeasure& eta0,
                     const SimConfig& config);

// Reflection coupling of N pairs under a frozen law. Pairs are matched by the
// W1-optimal assignment of eta1 and eta2.
RunResult reflection_coupled_pairs(const ModelSpec& model, const EmpiricalMeasure& mu_frozen,
                                   const EmpiricalMeasure& eta1, const EmpiricalMeasure& eta2,
                                   const SimConfig& config, const PairCost& psi = {});

struct SynchronousOptions {
  std::optional<EmpiricalMeasure> frozen_a;  // unset: system uses its own empirical law
  std::optional<EmpiricalMeasure> frozen_b;
  // When set, also track per pair A_t = sum e^{K (t - s_{k+1})} ||sigma^1 - sigma^2||_HS^2 dS_k
  // on the shared clock and record E sqrt(A_t) as "clock_sqrt".
  std::optional<double> clock_K;
  std::optional<EmpiricalMeasure> eta_b;  // unset: both systems start from eta0
};

// Two systems driven by identical increments (subordinator and Gaussian draws).
RunResult synchronous_coupled_runs(const ModelSpec& model_a, const ModelSpec& model_b, const EmpiricalMeasure& eta0,
                                   const SimConfig& config, const SynchronousOptions& opts = {});

struct FixedPointOptions {
  int max_iter = 10;
  double gap_tolerance = -1.0;  // < 0: config.tol_stationary
};

struct FixedPointResult {
  EmpiricalMeasure mu_star;
  std::vector<double> gaps;          // gaps[k] = W1(mu_{k+1}, mu_k)
  std::vector<double> stationarity;  // window W1 of each frozen run
  std::vector<std::string> warnings;
  bool converged = false;
};

// Gamma-hat(mu): terminal cloud of the frozen run from eta0 under mu. Every
// call uses the same seed and start cloud, so Gamma-hat is a deterministic map
// of mu. Throws nonstationarity if the last two windows differ by more than
// tol_stationary in W1.
EmpiricalMeasure gamma_hat(const ModelSpec& model, const EmpiricalMeasure& mu, const EmpiricalMeasure& eta0,
                           const SimConfig& config, double* window_gap = nullptr);

FixedPointResult gamma_fixed_point(const ModelSpec& model, const EmpiricalMeasure& mu0, const SimConfig& config,
                                   const FixedPointOptions& opts = {});

void write_series_csv(const std::string& path, const RunResult& r, const std::string& name);

}  // namespace mkv
