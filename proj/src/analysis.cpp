#include "mkv/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mkv/errors.hpp"

namespace mkv {

namespace {

// Streams for initial clouds live far above any particle index.
constexpr std::uint64_t kCloudStreamBase = std::uint64_t{0xC10D} << 48;

std::string normalization_text(const ModelSpec& model) {
  if (model.noise == NoiseKind::alpha_stable) return std::string(describe(model.stable.normalization));
  return std::string(describe(StableNormalization::laplace_exponent_plain)) + " (not used: Brownian noise)";
}

Regime regime_of(const ModelSpec& m) {
  if (m.noise == NoiseKind::brownian)
    return m.kind == DynamicsKind::kinetic ? Regime::brownian_kinetic : Regime::brownian_first_order;
  return m.kind == DynamicsKind::kinetic ? Regime::stable_kinetic : Regime::stable_first_order;
}

// Shifted copy of a cloud (every coordinate moved by `shift`).
EmpiricalMeasure shifted(const EmpiricalMeasure& mu, double shift) {
  std::vector<double> c = mu.coords();
  for (double& v : c) v += shift;
  return EmpiricalMeasure(mu.dim(), std::move(c));
}

// Initial cloud for a model: positions from the Gaussian, velocities zero.
EmpiricalMeasure state_cloud(const ModelSpec& model, std::size_t n, double mean, double sd, std::uint64_t seed,
                             std::uint64_t tag) {
  EmpiricalMeasure pos = sample_gaussian_cloud(n, model.dim, mean, sd, seed, tag);
  if (model.kind != DynamicsKind::kinetic) return pos;
  std::vector<double> c(n * 2 * model.dim, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < model.dim; ++k) c[i * 2 * model.dim + k] = pos.point(i)[k];
  return EmpiricalMeasure(2 * model.dim, std::move(c));
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "pass";
    case Verdict::fail:
      return "fail";
    case Verdict::inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

EmpiricalMeasure sample_gaussian_cloud(std::size_t n, std::size_t dim, double mean, double sd, std::uint64_t seed,
                                       std::uint64_t tag) {
  require(n >= 1 && dim >= 1 && sd >= 0.0, ErrorKind::parameter, "invalid Gaussian cloud request");
  RngStream stream(seed, kCloudStreamBase + tag);
  std::vector<double> c(n * dim);
  stream.fill_normal(c, sd);
  for (double& v : c) v += mean;
  return EmpiricalMeasure(dim, std::move(c));
}

nlohmann::json to_json(const DecayFit& f) {
  return {{"lambda_hat", f.lambda_hat}, {"c_hat", f.c_hat},   {"r_squared", f.r_squared},
          {"window", {f.t_lo, f.t_hi}}, {"slope_se", f.slope_se}, {"points", f.points}};
}

DecayFit decay_fit(std::span<const double> t, std::span<const double> w,
                   std::optional<std::pair<double, double>> window) {
  require(t.size() == w.size(), ErrorKind::shape, "decay_fit: series lengths differ");
  require(!t.empty(), ErrorKind::degenerate_fit, "decay_fit: empty series");
  const double t0 = t.front(), t1 = t.back();
  const auto [lo, hi] = window.value_or(std::pair{t0 + 0.2 * (t1 - t0), t0 + 0.8 * (t1 - t0)});
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < lo - 1e-12 || t[i] > hi + 1e-12 || !(w[i] > 0.0)) continue;
    xs.push_back(t[i]);
    ys.push_back(std::log(w[i]));
  }
  require(xs.size() >= 5, ErrorKind::degenerate_fit,
          "decay_fit needs at least 5 positive points in the window (coupling may have completed)");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  require(sxx > 0.0, ErrorKind::degenerate_fit, "decay_fit: all window times coincide");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (intercept + slope * xs[i]);
    sse += e * e;
  }
  DecayFit f;
  f.lambda_hat = -slope;
  f.c_hat = std::exp(intercept);
  f.r_squared = syy > 0.0 ? std::clamp(1.0 - sse / syy, 0.0, 1.0) : 1.0;
  f.t_lo = lo;
  f.t_hi = hi;
  f.slope_se = std::sqrt(sse / std::max(n - 2.0, 1.0) / sxx);
  f.points = xs.size();
  return f;
}

nlohmann::json ContractionReport::to_json() const {
  nlohmann::json j;
  j["regime"] = std::string(mkv::to_string(regime));
  j["empirical"] = empirical;
  if (profile) {
    j["rate_profile"] = {{"ellipticity_alpha", profile->ellipticity_alpha},
                         {"C1", profile->C1},
                         {"C2", profile->C2},
                         {"K", profile->K},
                         {"c0", profile->c0},
                         {"lambda0", profile->lambda0}};
  }
  j["fit_available"] = fit_available;
  if (fit_available) j["fit"] = mkv::to_json(fit);
  j["c0_hat"] = c0_hat;
  j["lambda0_hat"] = lambda0_hat;
  j["coupled_fraction"] = coupled_fraction;
  auto& cj = j["psi_decay_checks"] = nlohmann::json::array();
  for (const auto& c : checks)
    cj.push_back({{"t", c.t}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"lhs_se", c.lhs_se}, {"ok", c.ok}});
  j["gamma_factors"] = gamma_factors;
  j["gamma_degenerate"] = gamma_degenerate;
  j["notes"] = notes;
  j["noise_normalization"] = noise_normalization;
  j["verdict"] = std::string(mkv::to_string(verdict));
  return j;
}

std::optional<double> gamma_factor(const ModelSpec& model, const EmpiricalMeasure& mu1, const EmpiricalMeasure& mu2,
                                   const EmpiricalMeasure& eta0, const SimConfig& config) {
  const double base = w1_distance(mu1, mu2);
  if (base == 0.0) return std::nullopt;
  const EmpiricalMeasure g1 = gamma_hat(model, mu1, eta0, config);
  const EmpiricalMeasure g2 = gamma_hat(model, mu2, eta0, config);
  return w1_distance(g1, g2) / base;
}

ContractionReport contraction_report(const ModelSpec& model, const SimConfig& config, const ContractionInputs& in,
                                     RunResult* run) {
  ContractionReport rep;
  rep.regime = regime_of(model);
  rep.noise_normalization = normalization_text(model);
  const std::size_t n = config.N;
  const EmpiricalMeasure eta1 = state_cloud(model, n, -in.separation, in.sd, config.seed, 1);
  const EmpiricalMeasure eta2 = state_cloud(model, n, +in.separation, in.sd, config.seed, 2);
  const double t0 = config.start_time();

  RunResult r;
  if (rep.regime == Regime::brownian_first_order) {
    require(in.phi.has_value(), ErrorKind::configuration,
            "Brownian first-order contraction report needs the certified phi");
    const double alpha = model.elliptic->ellipticity_alpha;
    rep.profile = make_rate_profile(*in.phi, alpha);
    rep.empirical = false;
    const PsiTable table(*in.phi, alpha);
    r = reflection_coupled_pairs(model, eta1, eta1, eta2, config, [&table](double d) { return table(d); });
    if (r.diverged) {
      rep.verdict = Verdict::fail;
      rep.notes.push_back("coupled run diverged");
      if (run) *run = std::move(r);
      return rep;
    }
    const double psi0 = r.series.at("mean_psi").front();
    for (double tc : in.checkpoints) {
      const double t = t0 + tc;
      if (t > r.times.back() + 1e-9) continue;
      const double lhs = r.value_at("mean_psi", t), se = r.value_at("mean_psi_se", t);
      const double rhs = std::exp(-rep.profile->lambda0 * tc) * psi0;
      rep.checks.push_back({tc, lhs, rhs, se, lhs <= rhs + 3.0 * se});
    }
  } else {
    // Synchronous coupling of the frozen flow; the law is frozen at eta1.
    SynchronousOptions so;
    so.frozen_a = eta1;
    so.frozen_b = eta1;
    so.eta_b = eta2;
    r = synchronous_coupled_runs(model, model, eta1, config, so);
    rep.notes.push_back("c0 and lambda0 estimated by synchronous coupling; flagged empirical");
    if (r.diverged) {
      rep.verdict = Verdict::fail;
      rep.notes.push_back("coupled run diverged");
      if (run) *run = std::move(r);
      return rep;
    }
  }
  rep.coupled_fraction = r.series.count("coupled_fraction") ? r.series.at("coupled_fraction").back() : 0.0;

  const auto& dist = r.series.at("mean_dist");
  try {
    rep.fit = decay_fit(r.times, dist);
    rep.fit_available = true;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::degenerate_fit) throw;
    try {
      rep.fit = decay_fit(r.times, dist, std::pair{r.times.front(), r.times.back()});
      rep.fit_available = true;
      rep.notes.push_back("default fit window degenerate; fitted over all positive points");
    } catch (const Error& e2) {
      if (e2.kind() != ErrorKind::degenerate_fit) throw;
      rep.notes.push_back("coupling completed before a decay fit was possible");
    }
  }
  if (rep.fit_available) {
    rep.lambda0_hat = rep.fit.lambda_hat;
    // W1(t) ~ c_hat exp(-lambda t) relative to the initial distance.
    rep.c0_hat = std::max(1.0, rep.fit.c_hat * std::exp(rep.fit.lambda_hat * t0) / dist.front());
  }

  if (in.gamma_pairs > 0) {
    const EmpiricalMeasure eta0 = state_cloud(model, in.gamma_config.N, 0.0, 1.0, in.gamma_config.seed, 3);
    for (std::size_t k = 0; k < in.gamma_pairs; ++k) {
      const EmpiricalMeasure a = state_cloud(model, in.gamma_config.N, 0.0, 0.5 + 0.1 * k, in.gamma_config.seed,
                                             10 + 2 * k);
      const EmpiricalMeasure b = shifted(a, 0.25 + 0.25 * static_cast<double>(k));
      const auto f = gamma_factor(model, a, b, eta0, in.gamma_config);
      if (!f) {
        rep.gamma_degenerate = true;
        continue;
      }
      rep.gamma_factors.push_back(*f);
    }
  }

  bool ok = true;
  for (const auto& c : rep.checks) ok = ok && c.ok;
  for (double g : rep.gamma_factors) ok = ok && g < 1.0;
  if (rep.regime == Regime::brownian_first_order) {
    if (rep.fit_available) {
      const bool rate_ok = rep.lambda0_hat >= rep.profile->lambda0 - 3.0 * rep.fit.slope_se;
      if (!rate_ok) rep.notes.push_back("fitted rate below the certified rate by more than 3 standard errors");
      ok = ok && rate_ok;
    }
    if (rep.coupled_fraction == 0.0) {
      rep.verdict = Verdict::inconclusive;
      rep.notes.push_back("no pair coupled within T");
    } else {
      rep.verdict = ok ? Verdict::pass : Verdict::fail;
    }
  } else {
    rep.verdict = !rep.fit_available ? Verdict::inconclusive
                  : (ok && rep.lambda0_hat > 0.0) ? Verdict::pass
                                                  : Verdict::fail;
  }
  if (run) *run = std::move(r);
  return rep;
}

double example33_constant() {
  using boost::math::quadrature::gauss_kronrod;
  auto f = [](double x) { return std::abs(x + 1.0) * std::exp(-x * x); };
  // exp(-x^2) is below 1e-300 beyond |x| = 27.
  double total = 0.0;
  for (auto [a, b] : {std::pair{-30.0, -1.0}, std::pair{-1.0, 0.0}, std::pair{0.0, 30.0}}) {
    double err = 0.0;
    total += gauss_kronrod<double, 31>::integrate(f, a, b, 30, 1e-15, &err);
    require(err <= 1e-10, ErrorKind::precision, "example33 quadrature did not converge");
  }
  return total;
}

nlohmann::json Example33Report::to_json() const {
  nlohmann::json j = {{"epsilon", epsilon},
                      {"c_const", c_const},
                      {"epsilon_star", epsilon_star},
                      {"regime", regime},
                      {"no_invariant_measure", no_invariant_measure},
                      {"verdict", std::string(mkv::to_string(verdict))},
                      {"noise_normalization", "brownian"}};
  if (a_star) j["a_star"] = *a_star;
  if (stationary_mean) {
    j["stationary_law"] = {{"family", "normal"}, {"mean", *stationary_mean}, {"variance", *stationary_variance}};
  }
  if (simulated) {
    j["simulation"] = {{"m_hat_T", m_hat_T},
                       {"mean_abs_half_T", mean_abs_half},
                       {"mean_abs_T", mean_abs_T},
                       {"growth_ratio", growth_ratio},
                       {"divergence_detected", divergence_detected}};
  }
  return j;
}

Example33Report example33(double epsilon, Example33Mode mode, const SimConfig& config, RunResult* run) {
  require(epsilon > 0.0, ErrorKind::parameter, "example33 needs epsilon > 0");
  Example33Report rep;
  rep.epsilon = epsilon;
  rep.c_const = example33_constant();
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  rep.epsilon_star = sqrt_pi / rep.c_const;
  const double rel = epsilon / rep.epsilon_star - 1.0;
  if (std::abs(rel) <= kExample33BoundaryBand) {
    rep.regime = "boundary";
  } else if (rel < 0.0) {
    rep.regime = "subcritical";
    const double a = 1.0 / (1.0 - epsilon * rep.c_const / sqrt_pi);
    rep.a_star = a;
    rep.stationary_mean = a * epsilon;
    rep.stationary_variance = 0.5 * a * a * epsilon * epsilon;
  } else {
    rep.regime = "supercritical";
    rep.no_invariant_measure = true;
  }
  rep.verdict = rep.regime == "boundary" ? Verdict::inconclusive : Verdict::pass;
  if (mode == Example33Mode::closed_form) return rep;

  const ModelSpec model = make_example33(epsilon);
  const EmpiricalMeasure eta0 = sample_gaussian_cloud(config.N, 1, 0.0, 1.0, config.seed, 0);
  RunResult r = run_mckean_vlasov(model, eta0, config);
  rep.simulated = true;
  const double t0 = config.start_time();
  if (r.diverged) {
    rep.divergence_detected = true;
    rep.growth_ratio = std::numeric_limits<double>::infinity();
  } else {
    rep.m_hat_T = r.series.at("feature0").back();
    rep.mean_abs_T = r.series.at("mean_abs").back();
    rep.mean_abs_half = r.value_at("mean_abs", t0 + 0.5 * config.T);
    rep.growth_ratio = rep.mean_abs_T / rep.mean_abs_half;
    rep.divergence_detected = rep.growth_ratio >= 2.0;
  }
  if (rep.regime == "subcritical") {
    const bool close = !r.diverged && std::abs(rep.m_hat_T - *rep.a_star) <= 0.05 * *rep.a_star;
    rep.verdict = close && !rep.divergence_detected ? Verdict::pass : Verdict::fail;
  } else if (rep.regime == "supercritical") {
    rep.verdict = rep.divergence_detected ? Verdict::pass : Verdict::fail;
  }
  if (run) *run = std::move(r);
  return rep;
}

nlohmann::json Lemma51Report::to_json() const {
  nlohmann::json j = {{"K", K},
                      {"kappa", kappa},
                      {"w1_frozen_laws", w1_mu},
                      {"verdict", std::string(mkv::to_string(verdict))},
                      {"noise_normalization", noise_normalization}};
  auto& cj = j["checks"] = nlohmann::json::array();
  for (const auto& c : checks)
    cj.push_back({{"t", c.t},
                  {"lhs", c.lhs},
                  {"rhs", c.rhs},
                  {"se", c.se},
                  {"initial_term", c.initial_term},
                  {"measure_term", c.measure_term},
                  {"noise_term", c.noise_term},
                  {"ok", c.ok}});
  return j;
}

Lemma51Report lemma51_check(const ModelSpec& m1, const ModelSpec& m2, const Lemma51Inputs& in,
                            const SimConfig& config, RunResult* run) {
  require(m1.assumptions.one_sided_K.has_value(), ErrorKind::configuration,
          "lemma51_check needs the one-sided constant K in the model assumptions");
  require(m1.kind == DynamicsKind::first_order && m2.kind == DynamicsKind::first_order, ErrorKind::unsupported_model,
          "lemma51_check needs first-order models");
  require(m1.scalar_sigma && m2.scalar_sigma, ErrorKind::unsupported_model,
          "lemma51_check needs constant-in-x diffusions");
  require(in.eta1.size() == in.eta2.size() && in.eta1.dim() == in.eta2.dim(), ErrorKind::shape,
          "initial clouds must match");
  Lemma51Report rep;
  rep.K = *m1.assumptions.one_sided_K;
  rep.kappa = std::max(m1.assumptions.kappa, m2.assumptions.kappa);
  rep.w1_mu = w1_distance(in.mu1, in.mu2);
  rep.noise_normalization = normalization_text(m1);

  SynchronousOptions so;
  so.frozen_a = in.mu1;
  so.frozen_b = in.mu2;
  so.eta_b = in.eta2;
  so.clock_K = rep.K;
  RunResult r = synchronous_coupled_runs(m1, m2, in.eta1, config, so);
  if (r.diverged) {
    rep.verdict = Verdict::fail;
    if (run) *run = std::move(r);
    return rep;
  }
  const double d0 = r.series.at("mean_dist").front();
  const double t0 = config.start_time();
  bool ok = true;
  for (double tc : in.checkpoints) {
    const double t = t0 + tc;
    if (t > r.times.back() + 1e-9) continue;
    Lemma51Check c{};
    c.t = tc;
    c.lhs = r.value_at("mean_dist", t);
    c.initial_term = std::exp(0.5 * rep.K * tc) * d0;
    const double growth = rep.K == 0.0 ? tc : std::expm1(rep.K * tc) / rep.K;
    c.measure_term = std::sqrt(rep.kappa * rep.w1_mu * rep.w1_mu * growth);
    c.noise_term = r.value_at("clock_sqrt", t);
    c.rhs = c.initial_term + c.measure_term + c.noise_term;
    c.se = std::hypot(r.value_at("mean_dist_se", t), r.value_at("clock_sqrt_se", t));
    c.ok = c.lhs <= c.rhs + 3.0 * c.se;
    ok = ok && c.ok;
    rep.checks.push_back(c);
  }
  rep.verdict = ok ? Verdict::pass : Verdict::fail;
  if (run) *run = std::move(r);
  return rep;
}

}  // namespace mkv
