#pragma once

// Independent reference computations used by the test suite and the verify
// command. Deliberately naive: brute force, fixed-step rules, closed forms.

#include <cstdint>
#include <span>
#include <vector>

#include "mkv/measures.hpp"
#include "mkv/rates.hpp"

namespace mkv::oracle {

// min over all permutations of (1/N) sum cost(|x_i - y_pi(i)|).
double brute_force_transport(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const PairCost& cost);

// int_0^inf s exp(Phi(s) / 2 alpha) ds by the composite trapezoid rule, with
// Phi integrated from phi by its own trapezoid rule on the same grid.
double trapezoid_C2(const PhiSpec& spec, double alpha, std::size_t nodes = 1000000);

// delta1 = m^{-2}, m the minimum over a uniform grid of (0, t_hi] of
// sqrt((e^{2Kt} - 1)/K) / (1 - c0 e^{-lambda0 t}).
double dense_grid_delta1(double K, double c0, double lambda0, double t_hi, std::size_t points);

// Kolmogorov survival function Q(x) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2).
double kolmogorov_q(double x);

// Asymptotic p-value of the two-sample Kolmogorov-Smirnov statistic.
double ks_two_sample_p(std::vector<double> a, std::vector<double> b);

// p-value of the one-sample KS test against a continuous CDF.
template <class Cdf>
double ks_one_sample_p(std::vector<double> a, Cdf&& cdf);

// Pearson chi-square p-value for counts against equal cell probabilities.
double chi_square_uniform_p(std::span<const std::size_t> counts);

// e^{-1} + sqrt(pi) erf(1): int |x+1| e^{-x^2} dx by hand reduction.
double example33_constant_closed_form();

// Resolvent of a linear map btilde(x) = -lambda x: -lambda x / (1 + lambda / m).
inline double linear_yosida(double lambda, int m, double x) { return -lambda * x / (1.0 + lambda / m); }

struct MeanSe {
  double mean;
  double se;
};
MeanSe mean_se(std::span<const double> v);

}  // namespace mkv::oracle

#include "mkv/verify/oracles_impl.hpp"
