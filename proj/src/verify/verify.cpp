#include "mkv/verify/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "mkv/analysis.hpp"
#include "mkv/errors.hpp"
#include "mkv/kernels.hpp"
#include "mkv/rates.hpp"
#include "mkv/simulate.hpp"
#include "mkv/verify/oracles.hpp"

namespace mkv {

namespace {

using nlohmann::json;

std::string fmt(double v, int digits = 6) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

const PhiSpec kPhi{1.0, 1.0, 1.0};
constexpr double kAlpha = 1.0;

// ------------------------------------------------------------------ 1

CriterionResult ot_oracle(const VerifyOptions& o) {
  CriterionResult r;
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> coord(-3.0, 3.0);
  const PairCost cost = [](double d) { return d; };
  double worst_ot = 0.0, worst_1d = 0.0;
  int failures = 0;
  for (int k = 0; k < 500; ++k) {
    const std::size_t d = 1 + static_cast<std::size_t>(k % 3);
    const std::size_t n = 1 + static_cast<std::size_t>(rng() % 8);
    std::vector<double> a(n * d), b(n * d);
    for (auto& v : a) v = coord(rng);
    for (auto& v : b) v = coord(rng);
    const EmpiricalMeasure mu(d, a), nu(d, b);
    const double bf = oracle::brute_force_transport(mu, nu, cost);
    const double ot = ot_assignment(mu, nu, cost);
    worst_ot = std::max(worst_ot, std::abs(ot - bf));
    if (std::abs(ot - bf) > 1e-12) ++failures;
    if (d == 1) {
      const double w = w1_exact_1d(mu, nu);
      worst_1d = std::max(worst_1d, std::abs(w - bf));
      if (std::abs(w - bf) > 1e-12) ++failures;
    }
  }
  r.pass = failures == 0;
  r.summary = "500 instances, max |assignment - brute force| = " + fmt(worst_ot, 3) +
              ", max |sorted 1D - brute force| = " + fmt(worst_1d, 3);
  r.details = {{"instances", 500}, {"failures", failures}, {"max_err_assignment", worst_ot}, {"max_err_1d", worst_1d}};
  return r;
}

// ------------------------------------------------------------------ 2

CriterionResult psi_machinery(const VerifyOptions&) {
  CriterionResult r;
  const auto k = corollary34_constants(kPhi, kAlpha);
  const bool c1_exact = k.C1 == 2.0;
  double worst_sandwich = -1e300, worst_diff = -1e300, worst_linear = 0.0;
  const PhiSpec pure = PhiSpec::pure_dissipative(1.0);
  for (int i = 0; i < 200; ++i) {
    const double x = 100.0 * i / 199.0;
    const double psi = psi_eval(kPhi, kAlpha, x);
    // Quadrature carries relative error up to 1e-8.
    const double tol = 1e-8 * std::max(psi, 1e-300);
    worst_sandwich = std::max({worst_sandwich, k.C1 * x - psi - tol, psi - k.C2 * x - tol});
    const double lhs =
        2.0 * kAlpha * psi_second(kPhi, kAlpha, x) + phi_eval(kPhi, x) * psi_prime(kPhi, kAlpha, x);
    worst_diff = std::max(worst_diff, lhs + (2.0 * kAlpha / k.C2) * psi);
    if (x > 0.0) {
      const double exact = 2.0 * kAlpha / pure.l2 * x;
      worst_linear = std::max(worst_linear, std::abs(psi_eval(pure, kAlpha, x) - exact) / exact);
    }
  }
  const bool sandwich = worst_sandwich <= 0.0;
  const bool diff_ineq = worst_diff <= 1e-8;
  const bool linear = worst_linear <= 1e-8;
  r.pass = c1_exact && sandwich && diff_ineq && linear;
  r.summary = "C1 = " + fmt(k.C1, 17) + ", C2 = " + fmt(k.C2, 10) + "; sandwich " + (sandwich ? "ok" : "violated") +
              ", max differential-inequality excess " + fmt(worst_diff, 3) + ", pure-dissipative rel err " + fmt(worst_linear, 3);
  r.details = {{"C1", k.C1},
               {"C2", k.C2},
               {"max_sandwich_excess", worst_sandwich},
               {"max_differential_excess", worst_diff},
               {"max_linear_rel_err", worst_linear}};
  return r;
}

// ------------------------------------------------------------------ 3

CriterionResult reflection_contraction(const VerifyOptions& o) {
  CriterionResult r;
  SimConfig c;
  c.h = 1e-3;
  c.T = 8.0;
  c.N = 4000;
  c.seed = o.seed;
  c.record_dt = 0.05;
  ContractionInputs in;
  in.phi = kPhi;
  in.separation = 2.0;
  in.sd = 0.5;
  in.checkpoints = {1.0, 2.0, 4.0, 8.0};
  const ModelSpec model = make_corollary34({});
  const auto rep = contraction_report(model, c, in);
  bool ok = rep.checks.size() == 4 && rep.verdict == Verdict::pass;
  std::string s;
  for (const auto& ch : rep.checks) {
    ok = ok && ch.ok;
    s += "t=" + fmt(ch.t, 2) + ": " + fmt(ch.lhs, 4) + " <= " + fmt(ch.rhs, 4) + (ch.ok ? "" : " FAILED") + "; ";
  }
  r.pass = ok;
  r.summary = s + "lambda0 = " + fmt(rep.profile->lambda0, 4) + ", fitted " + fmt(rep.lambda0_hat, 4);
  r.details = rep.to_json();
  return r;
}

// ------------------------------------------------------------------ 4

CriterionResult synchronous_bound(const VerifyOptions& o) {
  CriterionResult r;
  const double kappa = 0.5;
  Corollary34Options opts;
  opts.kappa = kappa;
  const ModelSpec model = make_corollary34(opts);
  const std::size_t n = 4000;
  SimConfig c;
  c.h = 1e-3;
  c.T = 2.0;
  c.N = n;
  c.seed = o.seed + 4;
  c.record_dt = 0.05;
  SynchronousOptions so;
  so.frozen_a = sample_gaussian_cloud(n, 1, -1.0, 0.5, c.seed, 41);
  so.frozen_b = sample_gaussian_cloud(n, 1, 1.0, 0.5, c.seed, 42);
  const double w1 = w1_distance(*so.frozen_a, *so.frozen_b);
  const EmpiricalMeasure eta0 = sample_gaussian_cloud(n, 1, 0.0, 1.0, c.seed, 43);
  const RunResult run = synchronous_coupled_runs(model, model, eta0, c, so);
  const double K = corollary34_constants(kPhi, kAlpha).K;
  bool ok = !run.diverged;
  std::string s;
  json checks = json::array();
  for (double t : {0.5, 1.0, 2.0}) {
    const double lhs = run.value_at("mean_sq_dist", t), se = run.value_at("mean_sq_dist_se", t);
    const double rhs = kappa / K * std::expm1(2.0 * K * t) * w1 * w1;
    const bool pass = lhs <= rhs + 3.0 * se;
    ok = ok && pass;
    s += "t=" + fmt(t, 2) + ": " + fmt(lhs, 4) + " <= " + fmt(rhs, 4) + (pass ? "" : " FAILED") + "; ";
    checks.push_back({{"t", t}, {"lhs", lhs}, {"rhs", rhs}, {"se", se}, {"ok", pass}});
  }
  r.pass = ok;
  r.summary = s + "W1(mu1, mu2) = " + fmt(w1, 4);
  r.details = {{"kappa", kappa}, {"K", K}, {"w1", w1}, {"checks", checks}};
  return r;
}

// ------------------------------------------------------------------ 5

CriterionResult fixed_point(const VerifyOptions& o) {
  CriterionResult r;
  const auto prof = make_rate_profile(kPhi, kAlpha);
  ThresholdInputs ti;
  ti.drift_constant = prof.K;
  ti.c0 = prof.c0;
  ti.lambda0 = prof.lambda0;
  const auto thr = threshold_scan(ti);
  Corollary34Options opts;
  opts.kappa = thr.delta0 / 10.0;
  const ModelSpec model = make_corollary34(opts);

  SimConfig c;
  c.h = 1e-3;
  c.T = 10.0;
  c.N = 1000;
  c.burn_in = 6.0;
  c.window = 2.0;
  c.tol_stationary = 0.05;
  c.record_dt = 0.1;
  FixedPointOptions fo;
  fo.max_iter = 7;
  fo.gap_tolerance = 0.0;

  // ratio[k] = gap_{k+2} / gap_{k+1} for iterations 2..6; an exact zero gap
  // means Gamma-hat returned its argument bitwise, and later ratios count as 0.
  std::vector<std::vector<double>> ratios(5);
  json seeds = json::array();
  for (int s = 0; s < 5; ++s) {
    c.seed = o.seed + 50 + static_cast<std::uint64_t>(s);
    const EmpiricalMeasure mu0 = sample_gaussian_cloud(c.N, 1, 0.0, 1.0, c.seed, 51);
    const auto fp = gamma_fixed_point(model, mu0, c, fo);
    std::vector<double> g = fp.gaps;
    for (int k = 0; k < 5; ++k) {
      const std::size_t i = static_cast<std::size_t>(k) + 1;
      double ratio = 0.0;
      if (i < g.size() && g[i - 1] > 0.0) ratio = g[i] / g[i - 1];
      ratios[static_cast<std::size_t>(k)].push_back(ratio);
    }
    seeds.push_back({{"seed", c.seed}, {"gaps", g}, {"window_w1", fp.stationarity}, {"warnings", fp.warnings}});
  }
  bool ok = true;
  std::vector<double> medians;
  for (auto& v : ratios) {
    std::sort(v.begin(), v.end());
    medians.push_back(v[v.size() / 2]);
    ok = ok && medians.back() < 1.0;
  }

  // Control: a measure-independent model makes Gamma-hat constant.
  Corollary34Options off;
  off.kappa = 0.0;
  const ModelSpec control = make_corollary34(off);
  c.seed = o.seed + 59;
  FixedPointOptions fc;
  fc.max_iter = 2;
  fc.gap_tolerance = 0.0;
  const auto cf = gamma_fixed_point(control, sample_gaussian_cloud(c.N, 1, 0.0, 1.0, c.seed, 51), c, fc);
  const double control_gap2 = cf.gaps.size() > 1 ? cf.gaps[1] : 0.0;
  const bool control_ok = control_gap2 <= 1e-12;

  r.pass = ok && control_ok;
  std::string ms;
  for (double m : medians) ms += fmt(m, 3) + " ";
  r.summary = "kappa = delta0/10 = " + fmt(opts.kappa, 4) + "; median gap ratios (it 2-6): " + ms +
              "; control gap2 = " + fmt(control_gap2, 3);
  r.details = {{"delta0", thr.delta0},
               {"kappa", opts.kappa},
               {"median_ratios", medians},
               {"seeds", seeds},
               {"control_gaps", cf.gaps}};
  return r;
}

// ------------------------------------------------------------------ 6

CriterionResult phase_transition(const VerifyOptions& o) {
  CriterionResult r;
  const double c_quad = example33_constant();
  const double c_closed = oracle::example33_constant_closed_form();
  const bool const_ok = std::abs(c_quad - c_closed) <= 1e-8;
  // Independent values: epsilon* = sqrt(pi) / c and a* = 1 / (1 - eps c / sqrt(pi)) from the closed-form c.
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  const double eps_oracle = sqrt_pi / c_closed;
  const double a_oracle = 1.0 / (1.0 - 0.5 * c_closed / sqrt_pi);
  const auto closed = example33(0.5, Example33Mode::closed_form, SimConfig{});
  const double eps_star = closed.epsilon_star;
  // The quoted 0.9521 is epsilon* = 0.95215013 cut to four decimals.
  const bool star_ok = std::abs(eps_star - eps_oracle) <= 1e-8 && std::abs(eps_star - 0.9521) <= 1e-4 &&
                       closed.a_star && std::abs(*closed.a_star - a_oracle) <= 1e-8;
  SimConfig c;
  c.h = 1e-3;
  c.T = 20.0;
  c.N = 10000;
  c.seed = o.seed + 6;
  c.record_dt = 0.1;
  const auto sub = example33(0.5, Example33Mode::simulate, c);
  const auto sup = example33(1.2, Example33Mode::simulate, c);
  const bool sub_ok = std::abs(sub.m_hat_T - a_oracle) <= 0.05 * a_oracle;
  const bool sup_ok = sup.divergence_detected;
  r.pass = const_ok && star_ok && sub_ok && sup_ok;
  r.summary = "c = " + fmt(c_quad, 10) + " (closed form " + fmt(c_closed, 10) + "), eps* = " + fmt(eps_star, 8) + " (oracle " + fmt(eps_oracle, 8) + ")" +
              "; eps=0.5: m(T) = " + fmt(sub.m_hat_T, 5) + " vs a* = " + fmt(a_oracle, 5) +
              "; eps=1.2: E|X| ratio t=20/t=10 = " + fmt(sup.growth_ratio, 4);
  r.details = {{"c_quadrature", c_quad},
               {"c_closed_form", c_closed},
               {"epsilon_star", eps_star},
               {"epsilon_star_oracle", eps_oracle},
               {"a_star_oracle", a_oracle},
               {"subcritical", sub.to_json()},
               {"supercritical", sup.to_json()}};
  return r;
}

// ------------------------------------------------------------------ 7

CriterionResult stable_identities(const VerifyOptions& o) {
  CriterionResult r;
  const StableParams p{1.5};
  const std::size_t n = 1000000;
  std::vector<double> v(n);
  RngStream lap(o.seed + 7, 0);
  for (auto& x : v) x = std::exp(-positive_stable_increment(lap, p, 1.0));
  const auto lt = oracle::mean_se(v);
  const bool laplace_ok = std::abs(lt.mean - std::exp(-1.0)) <= 3.0 * lt.se;

  const double exact = stable_e_sqrt_s1(p.stable_alpha);
  std::vector<double> means;
  bool each_ok = true;
  json scaled = json::array();
  std::uint64_t stream_id = 1;
  for (double t : {0.5, 1.0, 2.0}) {
    RngStream s(o.seed + 7, stream_id++);
    const double scale = std::pow(t, 1.0 / p.stable_alpha);
    for (auto& x : v) x = std::sqrt(positive_stable_increment(s, p, t)) / scale;
    const auto ms = oracle::mean_se(v);
    means.push_back(ms.mean);
    const bool ok = std::abs(ms.mean - exact) <= 3.0 * ms.se;
    each_ok = each_ok && ok;
    scaled.push_back({{"t", t}, {"mean", ms.mean}, {"se", ms.se}, {"within_3se", ok}});
  }
  // Diagnostic only: sqrt(S_1) has infinite variance when alpha < 2, so its
  // standard error understates the spread. S_1^{1/4} has finite variance and
  // E S^p = Gamma(1 - p/beta) / Gamma(1 - p) checks the sampler itself.
  RngStream q(o.seed + 7, stream_id++);
  for (auto& x : v) x = std::pow(positive_stable_increment(q, p, 1.0), 0.25);
  const auto qm = oracle::mean_se(v);
  const double q_exact = std::tgamma(1.0 - 0.25 / p.beta()) / std::tgamma(0.75);

  const double lo = *std::min_element(means.begin(), means.end());
  const double hi = *std::max_element(means.begin(), means.end());
  const double avg = (means[0] + means[1] + means[2]) / 3.0;
  const double spread = (hi - lo) / avg;
  const bool flat = spread <= 0.02;
  r.pass = laplace_ok && flat && each_ok;
  r.summary = "E e^{-S_1} = " + fmt(lt.mean, 6) + " +- " + fmt(lt.se, 2) + " (e^-1 = " + fmt(std::exp(-1.0), 6) +
              "); E sqrt(S_t)/t^(1/a) = " + fmt(means[0], 5) + ", " + fmt(means[1], 5) + ", " + fmt(means[2], 5) +
              " vs " + fmt(exact, 5) + " (spread " + fmt(100 * spread, 3) + "%); diagnostic E S_1^(1/4) = " + fmt(qm.mean, 6) + " vs " +
              fmt(q_exact, 6) + " +- " + fmt(qm.se, 2);
  r.details = {{"laplace_mean", lt.mean},
               {"laplace_se", lt.se},
               {"E_sqrt_S1", exact},
               {"scaled", scaled},
               {"spread", spread},
               {"quarter_moment", {{"mean", qm.mean}, {"se", qm.se}, {"exact", q_exact}}},
               {"noise_normalization", describe(p.normalization)}};
  return r;
}

// ------------------------------------------------------------------ 8

CriterionResult lemma51(const VerifyOptions& o) {
  CriterionResult r;
  const StableParams p{1.5};
  const ModelSpec m1 = make_linear(1, 1.0, 1.0, NoiseKind::alpha_stable, p);
  const ModelSpec m2 = make_linear(1, 1.0, 1.5, NoiseKind::alpha_stable, p);
  const std::size_t n = 4000;
  int passes = 0;
  json seeds = json::array();
  double worst_ratio = 0.0;
  for (int s = 0; s < 20; ++s) {
    SimConfig c;
    c.h = 2e-3;
    c.T = 4.0;
    c.N = n;
    c.seed = o.seed + 800 + static_cast<std::uint64_t>(s);
    c.record_dt = 0.5;
    const EmpiricalMeasure eta = sample_gaussian_cloud(n, 1, 0.0, 1.0, c.seed, 81);
    const Lemma51Inputs in{eta, eta, eta, eta, {0.5, 1.0, 2.0, 4.0}};
    const auto rep = lemma51_check(m1, m2, in, c);
    if (rep.verdict == Verdict::pass) ++passes;
    for (const auto& ch : rep.checks) worst_ratio = std::max(worst_ratio, ch.lhs / ch.rhs);
    seeds.push_back(rep.to_json());
  }
  r.pass = passes >= 19;
  r.summary = std::to_string(passes) + "/20 seeds pass; max LHS/RHS = " + fmt(worst_ratio, 4);
  r.details = {{"passes", passes}, {"max_lhs_over_rhs", worst_ratio}, {"seeds", seeds}};
  return r;
}

// ------------------------------------------------------------------ 9

CriterionResult yosida(const VerifyOptions& o) {
  CriterionResult r;
  const MeasureSummary none;
  // Linear: b = -x, K = 0.5, so btilde = -1.25 x.
  const ModelSpec lin = make_linear(1, 1.0, 1.0);
  const double K_lin = 0.5, lambda = 1.0 + 0.5 * K_lin;
  double worst_lin = 0.0;
  for (int m : {1, 10, 100, 1000}) {
    for (int i = 0; i <= 100; ++i) {
      const double x = -5.0 + 0.1 * i;
      const double got = yosida_drift(lin, std::vector<double>{x}, none, m, K_lin)[0];
      worst_lin = std::max(worst_lin, std::abs(got - oracle::linear_yosida(lambda, m, x)));
    }
  }
  const bool lin_ok = worst_lin <= 1e-10;

  const ModelSpec cubic = make_cubic();
  bool bounded = true, monotone = true;
  for (int i = 0; i <= 80; ++i) {
    const double x = -2.0 + 0.05 * i;
    const double bt = -x * x * x;
    double prev_err = std::numeric_limits<double>::infinity();
    for (int m : {1, 10, 100, 1000}) {
      const double ym = yosida_drift(cubic, std::vector<double>{x}, none, m, 0.0)[0];
      bounded = bounded && std::abs(ym) <= std::abs(bt) + 1e-12;
      const double err = std::abs(ym - bt);
      monotone = monotone && err <= prev_err + 1e-12;
      prev_err = err;
    }
  }

  // One-sided bound for a measure-dependent drift satisfying the hypothesis.
  StableOptions so;
  so.kappa = 0.5;
  so.bump = 0.5;
  const ModelSpec st = make_stable(so);
  const double K = *st.assumptions.one_sided_K;
  std::mt19937_64 rng(o.seed + 9);
  std::uniform_real_distribution<double> u(-3.0, 3.0), w(-2.0, 2.0);
  const int ms[] = {1, 3, 10, 100};
  double worst_excess = -1e300;
  for (int k = 0; k < 10000; ++k) {
    std::vector<double> a(8), b(8);
    for (auto& v : a) v = w(rng);
    for (auto& v : b) v = w(rng);
    const EmpiricalMeasure mu1(1, a), mu2(1, b);
    const double x = u(rng), y = u(rng);
    const int m = ms[k % 4];
    const double bx = yosida_drift(st, std::vector<double>{x}, st.summarize(mu1), m, K)[0];
    const double by = yosida_drift(st, std::vector<double>{y}, st.summarize(mu2), m, K)[0];
    const double w1 = w1_exact_1d(mu1, mu2);
    worst_excess = std::max(worst_excess, 2.0 * (bx - by) * (x - y) - so.kappa * w1 * w1);
  }
  const bool one_sided = worst_excess <= 1e-9;
  r.pass = lin_ok && bounded && monotone && one_sided;
  r.summary = "linear closed form max err " + fmt(worst_lin, 3) + "; cubic bounded " + (bounded ? "yes" : "no") +
              ", monotone " + (monotone ? "yes" : "no") + "; max one-sided excess " + fmt(worst_excess, 3);
  r.details = {{"linear_max_err", worst_lin},
               {"cubic_bounded", bounded},
               {"cubic_monotone", monotone},
               {"one_sided_K", K},
               {"max_one_sided_excess", worst_excess}};
  return r;
}

// ------------------------------------------------------------------ 10

CriterionResult thresholds(const VerifyOptions&) {
  CriterionResult r;
  const auto prof = make_rate_profile(kPhi, kAlpha);
  struct Case {
    Regime regime;
    double drift;
    double c0;
    double lambda0;
    bool empirical;
  };
  const Case cases[] = {{Regime::brownian_first_order, prof.K, prof.c0, prof.lambda0, false},
                        {Regime::brownian_kinetic, 2.5, 2.5, 0.4, true},
                        {Regime::stable_first_order, 1.0, prof.c0, prof.lambda0, false},
                        {Regime::stable_kinetic, 2.5, 2.5, 0.4, true}};
  bool stable_ok = true, cert_ok = true;
  double worst_rel = 0.0;
  json rows = json::array();
  for (const auto& cs : cases) {
    ThresholdInputs in;
    in.regime = cs.regime;
    in.drift_constant = cs.drift;
    in.c0 = cs.c0;
    in.lambda0 = cs.lambda0;
    in.empirical_constants = cs.empirical;
    const auto a = threshold_scan(in);
    ThresholdInputs fine = in;
    fine.grid_points *= 2;
    fine.bisection_iterations *= 2;
    const auto b = threshold_scan(fine);
    for (auto [x, y] : {std::pair{a.delta1, b.delta1}, std::pair{a.delta2, b.delta2}, std::pair{a.delta0, b.delta0}}) {
      const double rel = std::abs(x - y) / std::abs(y);
      worst_rel = std::max(worst_rel, rel);
      stable_ok = stable_ok && rel <= 1e-6;
    }
    bool cert = true;
    if (!a.delta2_clipped) {
      cert = stability_margin(in, a.delta2 * (1.0 - 1e-3)).value < 1.0 &&
             stability_margin(in, a.delta2 * (1.0 + 1e-3)).value >= 1.0;
    }
    cert_ok = cert_ok && cert;
    rows.push_back({{"report", to_json(a)}, {"refined", to_json(b)}, {"certificate", cert}});
  }
  const bool k1 = kinetic_condition_check(1, 1, 4, Regime::brownian_kinetic) == true;
  const bool k2 = kinetic_condition_check(1, 1, 2, Regime::brownian_kinetic) == false;
  const bool k3 = kinetic_condition_check(1, 1, 2, Regime::stable_kinetic) == true;
  r.pass = stable_ok && cert_ok && k1 && k2 && k3;
  r.summary = "4 regimes: max relative change under doubled resolution " + fmt(worst_rel, 3) +
              "; delta2 certificates " + (cert_ok ? "hold" : "FAIL") + "; kinetic conditions " +
              (k1 && k2 && k3 ? "3/3" : "mismatch");
  r.details = {{"regimes", rows}, {"max_rel_change", worst_rel}, {"kinetic_cases", {k1, k2, k3}}};
  return r;
}

// ------------------------------------------------------------------ 11

bool same_run(const RunResult& a, const RunResult& b) {
  if (a.times != b.times || a.series != b.series || a.terminal.size() != b.terminal.size()) return false;
  for (std::size_t k = 0; k < a.terminal.size(); ++k)
    if (!(a.terminal[k] == b.terminal[k])) return false;
  return true;
}

CriterionResult determinism(const VerifyOptions& o) {
  CriterionResult r;
  const int saved = max_threads();
  Corollary34Options co;
  co.kappa = 0.1;
  const ModelSpec mv = make_corollary34(co);
  StableOptions so;
  so.kappa = 0.2;
  const ModelSpec st = make_stable(so);
  SimConfig c;
  c.h = 1e-3;
  c.T = 0.8;
  c.N = 2000;
  c.seed = o.seed + 11;
  c.record_dt = 0.1;
  const EmpiricalMeasure eta = sample_gaussian_cloud(c.N, 1, 0.0, 1.0, c.seed, 111);
  const EmpiricalMeasure eta2 = sample_gaussian_cloud(c.N, 1, 1.0, 1.0, c.seed, 112);

  auto runs = [&](int threads, Exec exec) {
    set_threads(threads);
    SimConfig cc = c;
    cc.exec = exec;
    std::vector<RunResult> out;
    out.push_back(run_mckean_vlasov(mv, eta, cc));
    out.push_back(run_mckean_vlasov(st, eta, cc));
    out.push_back(reflection_coupled_pairs(mv, eta, eta, eta2, cc));
    return out;
  };
  const auto one = runs(1, Exec::parallel);
  const auto many = runs(o.threads_high, Exec::parallel);
  const auto serial = runs(o.threads_high, Exec::serial);
  set_threads(saved);
  bool threads_ok = true;
  for (std::size_t k = 0; k < one.size(); ++k)
    threads_ok = threads_ok && same_run(one[k], many[k]) && same_run(one[k], serial[k]);

  // Split run: 0.5 then 0.3 continued from the terminal state.
  SimConfig first = c, second = c;
  first.T = 0.5;
  second.T = 0.3;
  bool split_ok = true;
  for (const ModelSpec* m : {&mv, &st}) {
    const RunResult whole = run_mckean_vlasov(*m, eta, c);
    const RunResult a = run_mckean_vlasov(*m, eta, first);
    second.start_step = a.end_step;
    const RunResult b = run_mckean_vlasov(*m, a.terminal.front(), second);
    split_ok = split_ok && b.terminal.front() == whole.terminal.front() && b.end_step == whole.end_step &&
               b.series.at("mean_abs").back() == whole.series.at("mean_abs").back();
  }
  r.pass = threads_ok && split_ok;
  r.summary = std::string("1 vs ") + std::to_string(o.threads_high) + " threads and serial kernels: " +
              (threads_ok ? "bitwise equal" : "DIFFER") + "; split run 0.5+0.3 vs 0.8: " +
              (split_ok ? "bitwise equal" : "DIFFER");
  r.details = {{"threads_equal", threads_ok}, {"split_equal", split_ok}, {"threads_high", o.threads_high}};
  return r;
}

using Runner = CriterionResult (*)(const VerifyOptions&);

struct Entry {
  CriterionInfo info;
  Runner run;
};

const std::vector<Entry>& entries() {
  static const std::vector<Entry> e = {
      {{1, "OT oracle equivalence", "measures"}, ot_oracle},
      {{2, "psi machinery", "rates"}, psi_machinery},
      {{3, "reflection-coupling contraction", "simulate"}, reflection_contraction},
      {{4, "synchronous-coupling bound", "simulate"}, synchronous_bound},
      {{5, "Gamma fixed point", "simulate"}, fixed_point},
      {{6, "phase transition", "analysis"}, phase_transition},
      {{7, "stable-noise identities", "noise"}, stable_identities},
      {{8, "time-change coupling bound", "analysis"}, lemma51},
      {{9, "Yosida regularization", "models"}, yosida},
      {{10, "threshold stability", "rates"}, thresholds},
      {{11, "determinism and semigroup", "simulate"}, determinism},
  };
  return e;
}

}  // namespace

const std::vector<CriterionInfo>& verify_criteria() {
  static const std::vector<CriterionInfo> infos = [] {
    std::vector<CriterionInfo> v;
    for (const auto& e : entries()) v.push_back(e.info);
    return v;
  }();
  return infos;
}

bool criterion_selected(const CriterionInfo& c, const std::string& only) {
  if (only.empty()) return true;
  std::stringstream ss(only);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == c.module || tok == std::to_string(c.id)) return true;
  }
  return false;
}

CriterionResult run_criterion(int id, const VerifyOptions& opts) {
  for (const auto& e : entries()) {
    if (e.info.id != id) continue;
    const auto start = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = e.run(opts);
    } catch (const std::exception& ex) {
      r.pass = false;
      r.summary = std::string("error: ") + ex.what();
    }
    r.id = e.info.id;
    r.name = e.info.name;
    r.module = e.info.module;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
  }
  fail(ErrorKind::configuration, "unknown criterion " + std::to_string(id));
}

std::vector<CriterionResult> verify_suite(const VerifyOptions& opts, std::ostream* log) {
  std::vector<CriterionResult> out;
  bool any = false;
  for (const auto& c : verify_criteria()) {
    if (!criterion_selected(c, opts.only)) continue;
    any = true;
    out.push_back(run_criterion(c.id, opts));
    if (log) {
      const auto& r = out.back();
      *log << "[" << (r.pass ? "PASS" : "FAIL") << "] " << r.id << ". " << r.name << " (" << fmt(r.seconds, 3)
           << " s): " << r.summary << std::endl;
    }
  }
  require(any, ErrorKind::configuration, "--only '" + opts.only + "' selects no criterion");
  return out;
}

json to_json(const std::vector<CriterionResult>& results) {
  json j = json::array();
  for (const auto& r : results) {
    j.push_back({{"id", r.id},
                 {"name", r.name},
                 {"module", r.module},
                 {"pass", r.pass},
                 {"seconds", r.seconds},
                 {"summary", r.summary},
                 {"details", r.details}});
  }
  return j;
}

std::string format_table(const std::vector<CriterionResult>& results) {
  std::ostringstream os;
  os << std::left << std::setw(4) << "id" << std::setw(34) << "criterion" << std::setw(10) << "module"
     << std::setw(8) << "result" << "seconds\n";
  for (const auto& r : results) {
    os << std::left << std::setw(4) << r.id << std::setw(34) << r.name << std::setw(10) << r.module << std::setw(8)
       << (r.pass ? "pass" : "FAIL") << std::fixed << std::setprecision(2) << r.seconds << "\n";
    os.unsetf(std::ios::fixed);
  }
  return os.str();
}

}  // namespace mkv
