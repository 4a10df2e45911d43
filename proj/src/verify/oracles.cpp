#include "mkv/verify/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>

#include "mkv/errors.hpp"

namespace mkv::oracle {

double brute_force_transport(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const PairCost& cost) {
  require(mu.size() == nu.size() && mu.dim() == nu.dim(), ErrorKind::shape, "brute force needs matching clouds");
  require(mu.size() <= 10, ErrorKind::capacity, "brute force limited to 10 points");
  const std::size_t n = mu.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += cost(euclidean_distance(mu.point(i), nu.point(perm[i])));
    best = std::min(best, s / static_cast<double>(n));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double trapezoid_C2(const PhiSpec& spec, double alpha, std::size_t nodes) {
  // Past 2 r0 the exponent falls like -l2 s^2 / 4 alpha; 40 widths is far
  // beyond double precision.
  const double upper = spec.last_branch() + 40.0 * std::sqrt(2.0 * alpha / spec.l2);
  const double h = upper / static_cast<double>(nodes - 1);
  double big_phi = 0.0, prev_phi = 0.0, total = 0.0;
  double prev_f = 0.0;  // s e^{...} at s = 0
  for (std::size_t i = 1; i < nodes; ++i) {
    const double s = h * static_cast<double>(i);
    const double p = phi_eval(spec, s);
    big_phi += 0.5 * h * (prev_phi + p);
    prev_phi = p;
    const double f = s * std::exp(big_phi / (2.0 * alpha));
    total += 0.5 * h * (prev_f + f);
    prev_f = f;
  }
  return total;
}

double dense_grid_delta1(double K, double c0, double lambda0, double t_hi, std::size_t points) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i <= points; ++i) {
    const double t = t_hi * static_cast<double>(i) / static_cast<double>(points);
    const double denom = 1.0 - c0 * std::exp(-lambda0 * t);
    if (denom <= 0.0) continue;
    best = std::min(best, std::sqrt((std::exp(2.0 * K * t) - 1.0) / K) / denom);
  }
  return 1.0 / (best * best);
}

double kolmogorov_q(double x) {
  if (x < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_two_sample_p(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double en = std::sqrt(na * nb / (na + nb));
  return kolmogorov_q((en + 0.12 + 0.11 / en) * d);
}

double chi_square_uniform_p(std::span<const std::size_t> counts) {
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  const double expected = total / static_cast<double>(counts.size());
  double stat = 0.0;
  for (auto c : counts) stat += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
  const double dof = static_cast<double>(counts.size() - 1);
  return boost::math::gamma_q(0.5 * dof, 0.5 * stat);
}

double example33_constant_closed_form() {
  // int_{-1}^{inf} (x+1) e^{-x^2} + int_{-inf}^{-1} -(x+1) e^{-x^2}
  //   = [e^{-1}/2 + (sqrt(pi)/2)(1 + erf 1)] + [e^{-1}/2 - (sqrt(pi)/2)(1 - erf 1)]
  return std::exp(-1.0) + std::sqrt(std::numbers::pi) * std::erf(1.0);
}

MeanSe mean_se(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  double m = 0.0;
  for (double x : v) m += x;
  m /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / (n - 1.0) / n)};
}

}  // namespace mkv::oracle
