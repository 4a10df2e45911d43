#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mkv/models.hpp"
#include "mkv/rates.hpp"
#include "mkv/simulate.hpp"

namespace mkv {

enum class Verdict { pass, fail, inconclusive };
std::string_view to_string(Verdict v);

// n i.i.d. N(mean, sd^2 I_dim) points drawn from a stream reserved for initial
// clouds, so they never overlap particle streams.
EmpiricalMeasure sample_gaussian_cloud(std::size_t n, std::size_t dim, double mean, double sd, std::uint64_t seed,
                                       std::uint64_t tag = 0);

struct DecayFit {
  double lambda_hat = 0.0;
  double c_hat = 0.0;
  double r_squared = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  double slope_se = 0.0;
  std::size_t points = 0;
};

nlohmann::json to_json(const DecayFit& f);

// Least squares on (t, log w) over points of the window with w > 0. Default
// window: [t0 + 0.2 (t1 - t0), t0 + 0.8 (t1 - t0)] of the series' time span.
DecayFit decay_fit(std::span<const double> t, std::span<const double> w,
                   std::optional<std::pair<double, double>> window = std::nullopt);

struct ContractionInputs {
  std::optional<PhiSpec> phi;  // certified phi (Brownian first order only)
  std::vector<double> checkpoints{1.0, 2.0, 4.0, 8.0};
  double separation = 2.0;  // eta1 = N(-separation, sd^2), eta2 = N(+separation, sd^2)
  double sd = 0.5;
  // Gamma-factor estimation: number of measure pairs and the frozen-run config
  // (0 pairs skips it).
  std::size_t gamma_pairs = 0;
  SimConfig gamma_config;
};

struct DecayCheck {
  double t;
  double lhs;
  double rhs;
  double lhs_se;
  bool ok;
};

struct ContractionReport {
  Regime regime = Regime::brownian_first_order;
  bool empirical = true;
  std::optional<RateProfile> profile;
  DecayFit fit;
  bool fit_available = false;
  double c0_hat = 0.0;
  double lambda0_hat = 0.0;
  std::vector<DecayCheck> checks;
  double coupled_fraction = 0.0;
  std::vector<double> gamma_factors;
  bool gamma_degenerate = false;
  Verdict verdict = Verdict::inconclusive;
  std::vector<std::string> notes;
  std::string noise_normalization;

  nlohmann::json to_json() const;
};

ContractionReport contraction_report(const ModelSpec& model, const SimConfig& config, const ContractionInputs& in,
                                     RunResult* run = nullptr);

// W1(Gamma-hat(mu1), Gamma-hat(mu2)) / W1(mu1, mu2) with common random numbers;
// nullopt when mu1 = mu2.
std::optional<double> gamma_factor(const ModelSpec& model, const EmpiricalMeasure& mu1, const EmpiricalMeasure& mu2,
                                   const EmpiricalMeasure& eta0, const SimConfig& config);

// int |x + 1| exp(-x^2) dx over the line, by Gauss-Kronrod quadrature.
double example33_constant();

enum class Example33Mode { closed_form, simulate };

struct Example33Report {
  double epsilon = 0.0;
  double c_const = 0.0;
  double epsilon_star = 0.0;
  std::string regime;  // "subcritical", "supercritical" or "boundary"
  std::optional<double> a_star;
  std::optional<double> stationary_mean;
  std::optional<double> stationary_variance;
  bool no_invariant_measure = false;
  // simulate mode
  bool simulated = false;
  double m_hat_T = 0.0;
  double mean_abs_half = 0.0;  // E|X| at T/2
  double mean_abs_T = 0.0;
  double growth_ratio = 0.0;
  bool divergence_detected = false;
  Verdict verdict = Verdict::inconclusive;

  nlohmann::json to_json() const;
};

// Band of relative width around epsilon* reported as inconclusive.
inline constexpr double kExample33BoundaryBand = 0.01;

Example33Report example33(double epsilon, Example33Mode mode, const SimConfig& config, RunResult* run = nullptr);

struct Lemma51Inputs {
  EmpiricalMeasure mu1;  // frozen laws
  EmpiricalMeasure mu2;
  EmpiricalMeasure eta1;  // initial clouds, paired by index
  EmpiricalMeasure eta2;
  std::vector<double> checkpoints{0.5, 1.0, 2.0, 4.0};
};

struct Lemma51Check {
  double t;
  double lhs;
  double rhs;
  double se;
  double initial_term;
  double measure_term;
  double noise_term;
  bool ok;
};

struct Lemma51Report {
  double K = 0.0;
  double kappa = 0.0;
  double w1_mu = 0.0;
  std::vector<Lemma51Check> checks;
  Verdict verdict = Verdict::inconclusive;
  std::string noise_normalization;

  nlohmann::json to_json() const;
};

Lemma51Report lemma51_check(const ModelSpec& model1, const ModelSpec& model2, const Lemma51Inputs& in,
                            const SimConfig& config, RunResult* run = nullptr);

}  // namespace mkv
