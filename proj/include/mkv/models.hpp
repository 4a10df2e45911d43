#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mkv/measures.hpp"
#include "mkv/noise.hpp"

namespace mkv {

enum class DynamicsKind { first_order, kinetic };
enum class NoiseKind { brownian, alpha_stable };

// Finite summary of a law: the means of the model's registered point features
// (1/N) sum_i g(x_i). Every measure dependence goes through this vector.
struct MeasureSummary {
  std::vector<double> values;
};

// Constants of the structural assumptions. Only some are used at run time;
// the rest document what the built-in construction guarantees.
struct AssumptionParams {
  double kappa = 0.0;        // interaction strength
  double K0 = 0.0;           // Lipschitz constant of sigma_hat in (x, W1)
  double K0_tilde = 0.0;     // growth of |b(0, mu)|, stored only
  double L_b = 0.0;          // Lipschitz constant of b in x (kinetic)
  double K1 = 1.0;           // dissipativity / expansion constant
  double K2 = 1.0;           // far-field dissipativity (stable first order)
  double R = 1.0;            // dissipativity radius
  double delta_bound = 1.0;  // delta^{-1} <= sigma^2 <= delta
  // One-sided constant K with 2<b(x,mu1)-b(y,mu2), x-y> <= K|x-y|^2 + kappa W1^2.
  std::optional<double> one_sided_K;

  void validate() const;
};

using FeatureFn = std::function<void(std::span<const double> state, std::span<double> out)>;
using DriftFn = std::function<void(std::span<const double> x, const MeasureSummary& m, std::span<double> out)>;
using MatrixFn = std::function<void(std::span<const double> x, const MeasureSummary& m, std::span<double> out)>;
using ScalarSigmaFn = std::function<double(const MeasureSummary& m)>;

// sigma sigma^* = alpha I + sigma_hat sigma_hat^*.
struct EllipticSplit {
  double ellipticity_alpha = 1.0;
  MatrixFn sigma_hat;  // writes a dim x dim row-major matrix
};

struct ModelSpec {
  std::string name;
  std::size_t dim = 1;  // position dimension; kinetic state is 2 * dim
  DynamicsKind kind = DynamicsKind::first_order;
  NoiseKind noise = NoiseKind::brownian;
  StableParams stable;
  double gamma = 0.0;  // friction, kinetic only

  std::size_t feature_width = 0;
  FeatureFn features;  // acts on the full state (length state_dim())

  DriftFn drift;  // first order: b(x, mu); kinetic: b(position, mu)
  std::optional<EllipticSplit> elliptic;
  ScalarSigmaFn scalar_sigma;

  AssumptionParams assumptions;
  nlohmann::json parameters = nlohmann::json::object();

  std::size_t state_dim() const noexcept { return kind == DynamicsKind::kinetic ? 2 * dim : dim; }
  bool measure_dependent() const noexcept { return feature_width > 0; }

  MeasureSummary summarize(const EmpiricalMeasure& mu) const;
  MeasureSummary summarize(std::span<const double> coords, std::size_t n) const;
  void validate() const;
};

struct Coefficients {
  std::vector<double> drift;      // length dim
  std::vector<double> diffusion;  // dim x dim row-major symmetric root of sigma sigma^*
  std::optional<double> scalar;   // set when the diffusion is a scalar multiple of I
};

Coefficients eval_coefficients(const ModelSpec& model, std::span<const double> x, const EmpiricalMeasure& mu);

// Symmetric PSD square root of (sigma_product - alpha I).
std::vector<double> elliptic_decompose(std::span<const double> sigma_product, std::size_t dim,
                                       double ellipticity_alpha);

// Symmetric PSD square root of a symmetric PSD matrix.
std::vector<double> symmetric_sqrt(std::span<const double> matrix, std::size_t dim);

// Unit-diffusion kinetic model with drift sigma(mu)^{-1} b(sigma(mu) x, .).
// The returned model still expects the original-scale law as its measure
// argument.
ModelSpec kinetic_rescale(const ModelSpec& model, const EmpiricalMeasure& mu);
double kinetic_sigma(const ModelSpec& model, const EmpiricalMeasure& mu);

struct ResolventOptions {
  double tolerance = 1e-10;
  int max_iterations = 10000;
};

// Solves xbar - (1/m) btilde(xbar) = x for a fixed summary.
std::vector<double> solve_resolvent(const ModelSpec& model, std::span<const double> x, const MeasureSummary& m,
                                    int m_index, double K, const ResolventOptions& opts = {});

// Drift b^(m) = btilde^(m) + (K/2) id, btilde = b - (K/2) id.
ModelSpec yosida_regularize(const ModelSpec& model, int m, double K, const ResolventOptions& opts = {});

// btilde^(m)(x, mu) alone (without the (K/2) x shift).
std::vector<double> yosida_drift(const ModelSpec& model, std::span<const double> x, const MeasureSummary& m,
                                 int m_index, double K, const ResolventOptions& opts = {});

// ---------------------------------------------------------------- catalog

struct Corollary34Options {
  std::size_t dim = 1;
  double ellipticity_alpha = 1.0;
  double kappa = 0.0;
  double confinement = 1.6;  // linear restoring rate
  double bump = 2.4;         // amplitude of the bounded expanding term
  double bump_width = 0.2;
  double K0 = 0.3;
  double sigma_width = 0.5;
  double slack = 0.05;  // share of the small-distance margin spent on interaction
  double interaction_weight_override = -1.0;  // < 0: derived from kappa
};

struct KineticOptions {
  std::size_t dim = 1;
  double kappa = 0.0;
  double confinement = 2.0;
  double bump = 0.5;
  double bump_width = 0.5;
  double gamma = 5.0;
  double delta_bound = 4.0;
  NoiseKind noise = NoiseKind::brownian;
  StableParams stable;
};

struct StableOptions {
  std::size_t dim = 1;
  double kappa = 0.0;
  double confinement = 1.0;
  double bump = 0.0;
  double bump_width = 0.5;
  double sigma0 = 1.0;
  double delta_bound = 4.0;
  StableParams stable;
};

ModelSpec make_corollary34(const Corollary34Options& opts);
ModelSpec make_example33(double epsilon);
ModelSpec make_kinetic(const KineticOptions& opts);
ModelSpec make_stable(const StableOptions& opts);
// b(x) = -theta x, sigma = const. Brownian: elliptic split with sigma^2 = alpha.
ModelSpec make_linear(std::size_t dim, double theta, double sigma, NoiseKind noise = NoiseKind::brownian,
                      StableParams stable = {});
// b(x) = -x^3, unit diffusion.
ModelSpec make_cubic();

// Builds a catalog model from its name and a flat parameter map.
ModelSpec make_model(const std::string& name, const std::map<std::string, double>& params);
std::vector<std::string> catalog_names();

}  // namespace mkv
