#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mkv/noise.hpp"

namespace mkv {

enum class PhiKind {
  piecewise,         // l1 v / bridge / -l2 v, the three-branch form
  pure_dissipative,  // -l2 v everywhere
};

struct PhiSpec {
  double l1 = 1.0;
  double l2 = 1.0;
  double r0 = 1.0;
  PhiKind kind = PhiKind::piecewise;

  static PhiSpec pure_dissipative(double l2) { return PhiSpec{0.0, l2, 0.0, PhiKind::pure_dissipative}; }
  void validate() const;
  // Largest branch point; beyond it phi(v) = -l2 v.
  double last_branch() const noexcept { return kind == PhiKind::piecewise ? 2.0 * r0 : 0.0; }
};

double phi_eval(const PhiSpec& spec, double v);
// int_0^v phi, in closed form.
double phi_integral(const PhiSpec& spec, double v);

// psi(r) = int_0^r exp(-Phi(u)/2a) int_u^inf s exp(Phi(s)/2a) ds du, by
// adaptive Gauss-Kronrod quadrature (relative error <= 1e-8).
double psi_eval(const PhiSpec& spec, double ellipticity_alpha, double r);
double psi_prime(const PhiSpec& spec, double ellipticity_alpha, double r);
// psi'' = -phi psi' / 2a - r.
double psi_second(const PhiSpec& spec, double ellipticity_alpha, double r);

// Tabulated psi with Hermite interpolation; exact linear continuation past the
// last branch point. Cheap enough to evaluate per particle.
class PsiTable {
 public:
  PsiTable(const PhiSpec& spec, double ellipticity_alpha, std::size_t nodes = 2001);
  double operator()(double r) const;
  double slope_at_end() const noexcept { return tail_slope_; }

 private:
  double r_end_;
  double step_;
  double tail_slope_;
  std::vector<double> value_;
  std::vector<double> slope_;
};

struct Corollary34Constants {
  double C1;
  double C2;
  double K;
};

Corollary34Constants corollary34_constants(const PhiSpec& spec, double ellipticity_alpha);

struct ContractionConstants {
  double c0;
  double lambda0;
};

ContractionConstants lemma35_constants(double C1, double C2, double ellipticity_alpha);

struct RateProfile {
  double ellipticity_alpha;
  double C1;
  double C2;
  double K;
  double c0;
  double lambda0;
};

RateProfile make_rate_profile(const PhiSpec& spec, double ellipticity_alpha);

enum class Regime { brownian_first_order, brownian_kinetic, stable_first_order, stable_kinetic };

std::string_view to_string(Regime regime);
Regime regime_from_string(std::string_view name);

struct ThresholdInputs {
  Regime regime = Regime::brownian_first_order;
  // K (brownian first order), L_b (kinetic regimes) or K1 (stable first order).
  double drift_constant = 1.0;
  double c0 = 1.0;
  double lambda0 = 1.0;
  double stable_alpha = 1.5;  // stable regimes only
  bool empirical_constants = false;
  std::size_t grid_points = 4000;
  int bisection_iterations = 100;
};

struct ThresholdReport {
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta0 = 0.0;
  double t_star1 = 0.0;
  double t_star2 = 0.0;
  Regime regime = Regime::brownian_first_order;
  double c0 = 1.0;
  double lambda0 = 1.0;
  double t_min = 0.0;  // log(c0) / lambda0
  double t_cap = 0.0;
  bool empirical = false;
  bool delta2_clipped = false;
  std::vector<std::string> warnings;
};

nlohmann::json to_json(const ThresholdReport& r);

ThresholdReport threshold_scan(const ThresholdInputs& in);

// inf over the admissible window of H(t) + c0 exp(-lambda0 t) at a given kappa,
// with the minimising time.
struct WindowMinimum {
  double value;
  double t;
};
WindowMinimum stability_margin(const ThresholdInputs& in, double kappa);

// inf_t G(t) / (1 - c0 exp(-lambda0 t)): the contraction factor of the
// measure map at interaction strength kappa.
double gamma_contraction_factor(const ThresholdInputs& in, double kappa);

// G(t) bounding W1((P_t^{mu1})^* Gamma(mu2), Gamma(mu2)) / W1(mu1, mu2).
double coupling_growth(const ThresholdInputs& in, double kappa, double t);

bool kinetic_condition_check(double K1, double L_b, double gamma, Regime regime);

// E sqrt(S_1) = Gamma(1 - 1/alpha) / Gamma(1/2) under the plain Laplace normalization.
double stable_e_sqrt_s1(double stable_alpha);

struct StableMoments {
  double E_sqrt_S1;
  double mc_mean;
  double mc_stderr;
  std::size_t samples;
};

StableMoments stable_moments(const StableParams& params, std::size_t samples = 1000000, std::uint64_t seed = 1);

}  // namespace mkv
