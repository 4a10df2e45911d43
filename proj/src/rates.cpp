#include "mkv/rates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mkv/errors.hpp"

namespace mkv {

namespace {

using boost::math::quadrature::gauss_kronrod;

constexpr double kQuadTolerance = 1e-10;  // GK error estimates floor near 1e-12 relative on peaked integrands
constexpr double kRequiredRelError = 1e-8;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Adaptive GK over [a, b], split at the given interior points.
template <class F>
double integrate_pieces(F&& f, double a, double b, std::initializer_list<double> breaks) {
  // Break points within a relative 1e-9 of an end or of each other are dropped.
  const double min_width = 1e-9 * (b - a);
  std::vector<double> cuts{a};
  std::vector<double> inner(breaks);
  std::sort(inner.begin(), inner.end());
  for (double c : inner)
    if (c - cuts.back() > min_width && b - c > min_width) cuts.push_back(c);
  cuts.push_back(b);
  // Tolerances are relative to the L1 norm of the whole range. A sliver next to
  // a break point can otherwise never meet a per-piece relative tolerance,
  // since the error estimate has an absolute floor near machine epsilon.
  std::vector<double> rough_l1(cuts.size() - 1);
  double range_l1 = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    double err = 0.0;
    gauss_kronrod<double, 31>::integrate(f, cuts[k], cuts[k + 1], 0, 0.0, &err, &rough_l1[k]);
    range_l1 += rough_l1[k];
  }
  double total = 0.0, total_err = 0.0, total_l1 = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    double err = 0.0, l1 = 0.0;
    const double tol = rough_l1[k] > 0.0 ? kQuadTolerance * std::max(1.0, range_l1 / rough_l1[k]) : kQuadTolerance;
    total += gauss_kronrod<double, 31>::integrate(f, cuts[k], cuts[k + 1], 15, std::min(tol, 1e-3), &err, &l1);
    total_err += err;
    total_l1 += l1;
  }
  if (total_l1 > 0.0 && total_err > kRequiredRelError * total_l1) {
    fail(ErrorKind::precision, "quadrature error estimate " + std::to_string(total_err) + " exceeds 1e-8 of " + std::to_string(total_l1) + " on [" + std::to_string(a) + ", " + std::to_string(b) + "]");
  }
  return total;
}

}  // namespace

void PhiSpec::validate() const {
  if (kind == PhiKind::pure_dissipative) {
    require(l2 > 0.0, ErrorKind::parameter, "phi needs l2 > 0");
    return;
  }
  require(l1 > 0.0 && l2 > 0.0 && r0 > 0.0, ErrorKind::parameter, "phi needs l1, l2, r0 > 0");
}

double phi_eval(const PhiSpec& s, double v) {
  if (s.kind == PhiKind::pure_dissipative || v > 2.0 * s.r0) return -s.l2 * v;
  if (v <= s.r0) return s.l1 * v;
  return (-(s.l1 + s.l2) / s.r0 * (v - s.r0) + s.l1) * v;
}

double phi_integral(const PhiSpec& s, double v) {
  if (s.kind == PhiKind::pure_dissipative) return -0.5 * s.l2 * v * v;
  const double r0 = s.r0;
  if (v <= r0) return 0.5 * s.l1 * v * v;
  // Middle branch: phi(v) = (2 l1 + l2) v - c v^2 with c = (l1 + l2) / r0.
  const double c = (s.l1 + s.l2) / r0;
  const auto middle = [&](double w) {
    return 0.5 * s.l1 * r0 * r0 + 0.5 * (2.0 * s.l1 + s.l2) * (w * w - r0 * r0) - c * (w * w * w - r0 * r0 * r0) / 3.0;
  };
  if (v <= 2.0 * r0) return middle(v);
  return middle(2.0 * r0) - 0.5 * s.l2 * (v * v - 4.0 * r0 * r0);
}

namespace {

// Phi(s) - Phi(r) without cancellation when both points share a quadratic
// branch (the far tail is where the magnitudes get large).
double phi_integral_diff(const PhiSpec& spec, double s, double r) {
  if (spec.kind == PhiKind::pure_dissipative || (s >= 2.0 * spec.r0 && r >= 2.0 * spec.r0))
    return -0.5 * spec.l2 * (s - r) * (s + r);
  if (s <= spec.r0 && r <= spec.r0) return 0.5 * spec.l1 * (s - r) * (s + r);
  return phi_integral(spec, s) - phi_integral(spec, r);
}

}  // namespace

double psi_prime(const PhiSpec& spec, double alpha, double r) {
  spec.validate();
  require(alpha > 0.0, ErrorKind::parameter, "ellipticity alpha must be positive");
  require(r >= 0.0, ErrorKind::parameter, "psi needs r >= 0");
  const auto integrand = [&](double s) { return s * std::exp(phi_integral_diff(spec, s, r) / (2.0 * alpha)); };
  // Truncate where the (eventually Gaussian) integrand falls below 1e-16 of
  // its running maximum.
  const double tail_start = std::max(r, spec.last_branch());
  const double step = std::max(0.05, std::sqrt(2.0 * alpha / spec.l2) * 0.25);
  double running_max = integrand(r);
  double upper = r;
  double prev = running_max;
  for (int k = 0; k < 1000000; ++k) {
    upper += step;
    const double val = integrand(upper);
    running_max = std::max(running_max, val);
    if (upper > tail_start && val < prev && val < 1e-16 * running_max) break;
    prev = val;
  }
  return integrate_pieces(integrand, r, upper, {spec.r0, 2.0 * spec.r0});
}

double psi_eval(const PhiSpec& spec, double alpha, double r) {
  require(r >= 0.0, ErrorKind::parameter, "psi needs r >= 0");
  if (r == 0.0) return 0.0;
  const auto f = [&](double u) { return psi_prime(spec, alpha, u); };
  return integrate_pieces(f, 0.0, r, {spec.r0, 2.0 * spec.r0});
}

double psi_second(const PhiSpec& spec, double alpha, double r) {
  return -phi_eval(spec, r) * psi_prime(spec, alpha, r) / (2.0 * alpha) - r;
}

PsiTable::PsiTable(const PhiSpec& spec, double alpha, std::size_t nodes) {
  spec.validate();
  require(alpha > 0.0, ErrorKind::parameter, "ellipticity alpha must be positive");
  require(nodes >= 2, ErrorKind::parameter, "PsiTable needs at least two nodes");
  r_end_ = spec.kind == PhiKind::piecewise ? 2.0 * spec.r0 : 1.0;
  step_ = r_end_ / static_cast<double>(nodes - 1);
  value_.resize(nodes);
  slope_.resize(nodes);
  // Backward recursion from the end node:
  // psi'(a) = e^{(Phi(b) - Phi(a))/2a} psi'(b) + int_a^b s e^{(Phi(s) - Phi(a))/2a} ds.
  slope_.back() = psi_prime(spec, alpha, r_end_);
  for (std::size_t i = nodes - 1; i-- > 0;) {
    const double a = step_ * static_cast<double>(i), b = step_ * static_cast<double>(i + 1);
    const auto f = [&](double s) { return s * std::exp(phi_integral_diff(spec, s, a) / (2.0 * alpha)); };
    slope_[i] = std::exp(phi_integral_diff(spec, b, a) / (2.0 * alpha)) * slope_[i + 1] +
                gauss_kronrod<double, 15>::integrate(f, a, b, 0);
  }
  // psi on each cell from the cubic Hermite interpolant of psi', with
  // psi'' = -phi psi' / 2a - r at the nodes.
  const auto second = [&](std::size_t i) {
    const double r = step_ * static_cast<double>(i);
    return -phi_eval(spec, r) * slope_[i] / (2.0 * alpha) - r;
  };
  value_[0] = 0.0;
  for (std::size_t i = 1; i < nodes; ++i) {
    value_[i] = value_[i - 1] + 0.5 * step_ * (slope_[i - 1] + slope_[i]) +
                step_ * step_ * (second(i - 1) - second(i)) / 12.0;
  }
  tail_slope_ = slope_.back();
}

double PsiTable::operator()(double r) const {
  if (r <= 0.0) return 0.0;
  if (r >= r_end_) return value_.back() + tail_slope_ * (r - r_end_);
  const auto i = std::min(static_cast<std::size_t>(r / step_), value_.size() - 2);
  const double t = (r - step_ * static_cast<double>(i)) / step_;
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * value_[i] + h10 * step_ * slope_[i] + h01 * value_[i + 1] + h11 * step_ * slope_[i + 1];
}

Corollary34Constants corollary34_constants(const PhiSpec& spec, double alpha) {
  spec.validate();
  require(alpha > 0.0, ErrorKind::parameter, "ellipticity alpha must be positive");
  // C2 = int_0^inf s exp(Phi(s)/2a) ds = psi'(0).
  return {2.0 * alpha / spec.l2, psi_prime(spec, alpha, 0.0), spec.l1};
}

ContractionConstants lemma35_constants(double C1, double C2, double alpha) {
  require(C1 > 0.0 && alpha > 0.0, ErrorKind::parameter, "lemma35 constants need C1, alpha > 0");
  require(C1 <= C2, ErrorKind::inconsistency, "C1 > C2: psi cannot be sandwiched");
  return {C2 / C1, 2.0 * alpha / C2};
}

RateProfile make_rate_profile(const PhiSpec& spec, double alpha) {
  const auto c = corollary34_constants(spec, alpha);
  const auto l = lemma35_constants(c.C1, c.C2, alpha);
  return {alpha, c.C1, c.C2, c.K, l.c0, l.lambda0};
}

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::brownian_first_order: return "brownian_first_order";
    case Regime::brownian_kinetic: return "brownian_kinetic";
    case Regime::stable_first_order: return "stable_first_order";
    case Regime::stable_kinetic: return "stable_kinetic";
  }
  return "unknown";
}

Regime regime_from_string(std::string_view name) {
  for (auto r : {Regime::brownian_first_order, Regime::brownian_kinetic, Regime::stable_first_order,
                 Regime::stable_kinetic}) {
    if (to_string(r) == name) return r;
  }
  fail(ErrorKind::configuration, "unknown regime '" + std::string(name) + "'");
}

// ------------------------------------------------------------ threshold scan

namespace {

bool is_stable(Regime r) { return r == Regime::stable_first_order || r == Regime::stable_kinetic; }

// Growth constant entering the exponential: K1 for first-order stable noise,
// L_b + 2 for the stable second-order system.
double stable_growth(const ThresholdInputs& in) {
  return in.regime == Regime::stable_kinetic ? in.drift_constant + 2.0 : in.drift_constant;
}

// sqrt((1 - e^{-a t}) / a) + t^{1/alpha} E sqrt(S_1)
double stable_bracket(double a, double t, double alpha, double esq) {
  return std::sqrt(-std::expm1(-a * t) / a) + std::pow(t, 1.0 / alpha) * esq;
}

// G(t) / sqrt(kappa).
double unit_growth(const ThresholdInputs& in, double t) {
  const double c = in.drift_constant;
  switch (in.regime) {
    case Regime::brownian_first_order:
      return std::sqrt(std::expm1(2.0 * c * t) / c);
    case Regime::brownian_kinetic:
      return std::sqrt(2.0 * std::expm1((c + 2.0) * t) / (c + 2.0));
    case Regime::stable_first_order:
    case Regime::stable_kinetic: {
      const double k = stable_growth(in);
      return std::exp(0.5 * k * t) * stable_bracket(k, t, in.stable_alpha, stable_e_sqrt_s1(in.stable_alpha));
    }
  }
  return kInf;
}

// H(t) at interaction kappa; +inf where the stable side constraint fails.
double perturbation_bound(const ThresholdInputs& in, double kappa, double t) {
  const double c = in.drift_constant, c0 = in.c0, l0 = in.lambda0;
  switch (in.regime) {
    case Regime::brownian_first_order: {
      const double a = 4.0 * kappa + 2.0 * c;
      const double integral = (std::exp(a * t) - std::exp(-2.0 * l0 * t)) / (a + 2.0 * l0);
      return c0 * std::sqrt(4.0 * kappa * integral);
    }
    case Regime::brownian_kinetic: {
      const double a = c + 2.0 + 4.0 * kappa;
      return 2.0 * c0 * std::sqrt(kappa) * std::sqrt(std::expm1(a * t) / a);
    }
    case Regime::stable_first_order:
    case Regime::stable_kinetic: {
      const double k = stable_growth(in);
      const double esq = stable_e_sqrt_s1(in.stable_alpha);
      const double grow = std::exp(0.5 * k * t);
      const double h1 = std::sqrt(2.0 * c0) * grow *
                        (std::sqrt(-std::expm1(-(k + 2.0 * l0) * t) / k) + std::pow(t, 1.0 / in.stable_alpha) * esq);
      const double h2 = std::sqrt(2.0) * grow * stable_bracket(k, t, in.stable_alpha, esq);
      const double sk = std::sqrt(kappa);
      if (sk * h2 >= 1.0) return kInf;
      return sk * h1 / (1.0 - sk * h2);
    }
  }
  return kInf;
}

double t_min(const ThresholdInputs& in) { return std::log(in.c0) / in.lambda0; }
double t_cap(const ThresholdInputs& in) { return std::max(10.0 * t_min(in), 50.0 / in.lambda0); }

// Grid scan over (lo, hi] with points geometrically clustered at lo, then
// golden-section refinement around the best grid point.
template <class F>
WindowMinimum minimize_window(F&& f, double lo, double hi, std::size_t points) {
  const double span = hi - lo;
  std::vector<double> ts(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double frac = static_cast<double>(i) / static_cast<double>(points - 1);
    ts[i] = lo + span * std::pow(10.0, -8.0 * (1.0 - frac));
  }
  std::size_t best = 0;
  double best_val = kInf;
  for (std::size_t i = 0; i < points; ++i) {
    const double v = f(ts[i]);
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  if (!std::isfinite(best_val)) return {kInf, ts.back()};
  double a = best == 0 ? lo + 0.5 * (ts[0] - lo) : ts[best - 1];
  double b = best + 1 == points ? ts.back() : ts[best + 1];
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - invphi * (b - a), x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 300 && (b - a) > 1e-15 * std::max(1.0, std::abs(b)); ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }
  WindowMinimum out{best_val, ts[best]};
  if (f1 < out.value) out = {f1, x1};
  if (f2 < out.value) out = {f2, x2};
  return out;
}

void check_inputs(const ThresholdInputs& in) {
  require(in.c0 >= 1.0, ErrorKind::parameter, "threshold_scan needs c0 >= 1");
  require(in.lambda0 > 0.0, ErrorKind::parameter, "threshold_scan needs lambda0 > 0");
  require(in.drift_constant > 0.0, ErrorKind::parameter, "threshold_scan needs a positive drift constant");
  require(in.grid_points >= 16, ErrorKind::parameter, "threshold_scan grid too coarse");
  if (is_stable(in.regime)) StableParams{in.stable_alpha}.validate();
}

WindowMinimum delta1_window(const ThresholdInputs& in) {
  const double lo = t_min(in), hi = t_cap(in);
  return minimize_window(
      [&](double t) {
        const double denom = 1.0 - in.c0 * std::exp(-in.lambda0 * t);
        return denom > 0.0 ? unit_growth(in, t) / denom : kInf;
      },
      lo, hi, in.grid_points);
}

}  // namespace

double coupling_growth(const ThresholdInputs& in, double kappa, double t) {
  require(t >= 0.0 && kappa >= 0.0, ErrorKind::parameter, "coupling_growth needs t, kappa >= 0");
  if (t == 0.0) return 0.0;
  return std::sqrt(kappa) * unit_growth(in, t);
}

double gamma_contraction_factor(const ThresholdInputs& in, double kappa) {
  check_inputs(in);
  return std::sqrt(kappa) * delta1_window(in).value;
}

WindowMinimum stability_margin(const ThresholdInputs& in, double kappa) {
  check_inputs(in);
  return minimize_window([&](double t) { return perturbation_bound(in, kappa, t) + in.c0 * std::exp(-in.lambda0 * t); },
                         t_min(in), t_cap(in), in.grid_points);
}

ThresholdReport threshold_scan(const ThresholdInputs& in) {
  check_inputs(in);
  ThresholdReport rep;
  rep.regime = in.regime;
  rep.c0 = in.c0;
  rep.lambda0 = in.lambda0;
  rep.t_min = t_min(in);
  rep.t_cap = t_cap(in);
  rep.empirical = in.empirical_constants;
  require(in.c0 * std::exp(-in.lambda0 * rep.t_cap) < 1.0, ErrorKind::infeasible,
          "c0 exp(-lambda0 t) >= 1 on the whole search window");

  const auto w1 = delta1_window(in);
  require(std::isfinite(w1.value) && w1.value > 0.0, ErrorKind::infeasible, "delta1 infimum is not finite");
  rep.delta1 = 1.0 / (w1.value * w1.value);
  rep.t_star1 = w1.t;
  if (w1.t >= rep.t_cap * (1.0 - 1e-9)) rep.warnings.push_back("delta1 minimiser at the search cap");

  double lo = 0.0, hi = 10.0 * rep.delta1;
  if (stability_margin(in, hi).value < 1.0) {
    rep.delta2 = hi;
    rep.delta2_clipped = true;
    rep.t_star2 = stability_margin(in, hi).t;
    rep.warnings.push_back("delta2 bracket saturated at 10 * delta1");
  } else {
    for (int it = 0; it < in.bisection_iterations; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (stability_margin(in, mid).value < 1.0 ? lo : hi) = mid;
    }
    require(lo > 0.0, ErrorKind::infeasible, "delta2 bracket is degenerate");
    rep.delta2 = lo;
    rep.t_star2 = stability_margin(in, lo).t;
  }
  if (rep.t_star2 >= rep.t_cap * (1.0 - 1e-9)) rep.warnings.push_back("delta2 minimiser at the search cap");
  rep.delta0 = std::min(rep.delta1, rep.delta2);
  return rep;
}

nlohmann::json to_json(const ThresholdReport& r) {
  return {{"delta1", r.delta1},
          {"delta2", r.delta2},
          {"delta0", r.delta0},
          {"t_star1", r.t_star1},
          {"t_star2", r.t_star2},
          {"regime", std::string(to_string(r.regime))},
          {"c0", r.c0},
          {"lambda0", r.lambda0},
          {"t_min", r.t_min},
          {"t_cap", r.t_cap},
          {"empirical", r.empirical},
          {"delta2_clipped", r.delta2_clipped},
          {"warnings", r.warnings}};
}

bool kinetic_condition_check(double K1, double L_b, double gamma, Regime regime) {
  require(K1 > 0.0 && L_b > 0.0 && gamma > 0.0, ErrorKind::parameter, "kinetic condition needs positive inputs");
  switch (regime) {
    case Regime::brownian_kinetic:
      return (K1 + L_b) / (gamma * gamma) <= K1 / (2.0 * (K1 + L_b));
    case Regime::stable_kinetic:
      return L_b * L_b / (gamma * gamma) < 0.75 * K1;
    default:
      fail(ErrorKind::parameter, "kinetic condition is only defined for kinetic regimes");
  }
}

double stable_e_sqrt_s1(double alpha) {
  StableParams{alpha}.validate();
  return std::tgamma(1.0 - 1.0 / alpha) / std::sqrt(std::numbers::pi);
}

StableMoments stable_moments(const StableParams& params, std::size_t samples, std::uint64_t seed) {
  params.validate();
  require(samples >= 2, ErrorKind::parameter, "stable_moments needs at least two samples");
  RngStream stream(seed, 0);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double v = std::sqrt(positive_stable_increment(stream, params, 1.0));
    sum += v;
    sum2 += v * v;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = std::max(sum2 / n - mean * mean, 0.0) * n / (n - 1.0);
  return {stable_e_sqrt_s1(params.stable_alpha), mean, std::sqrt(var / n), samples};
}

}  // namespace mkv
