#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mkv/analysis.hpp"
#include "mkv/errors.hpp"
#include "mkv/verify/oracles.hpp"

using namespace mkv;

TEST_CASE("decay_fit on exact exponentials") {
  std::vector<double> t, w;
  for (int i = 0; i <= 50; ++i) {
    t.push_back(0.1 * i);
    w.push_back(3.0 * std::exp(-2.0 * t.back()));
  }
  const auto f = decay_fit(t, w);
  CHECK(f.lambda_hat == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(f.c_hat == doctest::Approx(3.0).epsilon(1e-10));
  std::fill(w.begin(), w.end(), 0.7);
  CHECK(std::abs(decay_fit(t, w).lambda_hat) <= 1e-12);
  CHECK_THROWS_AS(decay_fit(std::vector<double>{0, 1}, std::vector<double>{1, 1}), Error);
}

TEST_CASE("decay_fit on noisy exponentials") {
  int within = 0;
  for (int s = 0; s < 50; ++s) {
    std::mt19937_64 rng(100 + s);
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    std::vector<double> t, w;
    for (int i = 0; i <= 100; ++i) {
      t.push_back(0.05 * i);
      w.push_back(std::exp(-0.8 * t.back()) * (1.0 + u(rng)));
    }
    within += std::abs(decay_fit(t, w).lambda_hat - 0.8) <= 0.08;
  }
  CHECK(within == 50);
}

TEST_CASE("contraction report: certified rate on the Brownian model") {
  SimConfig c;
  c.T = 4.0;
  c.N = 1000;
  c.seed = 3;
  c.record_dt = 0.05;
  ContractionInputs in;
  in.phi = PhiSpec{1.0, 1.0, 1.0};
  in.checkpoints = {1.0, 2.0, 4.0};
  const auto rep = contraction_report(make_corollary34(Corollary34Options{}), c, in);
  REQUIRE(rep.fit_available);
  CHECK(rep.lambda0_hat >= rep.profile->lambda0 - 3.0 * rep.fit.slope_se);
  CHECK(rep.verdict == Verdict::pass);
  CHECK_FALSE(rep.empirical);
  CHECK(rep.to_json().contains("noise_normalization"));
}

TEST_CASE("Gamma factor") {
  Corollary34Options o;
  const auto prof = make_rate_profile(PhiSpec{1.0, 1.0, 1.0}, 1.0);
  ThresholdInputs ti;
  ti.drift_constant = prof.K;
  ti.c0 = prof.c0;
  ti.lambda0 = prof.lambda0;
  o.kappa = threshold_scan(ti).delta0 / 10.0;
  const ModelSpec m = make_corollary34(o);
  SimConfig c;
  c.T = 4.0;
  c.N = 400;
  c.burn_in = 2.0;
  c.window = 1.0;
  c.tol_stationary = 0.2;
  const auto eta0 = sample_gaussian_cloud(400, 1, 0.0, 1.0, 1, 3);
  const auto a = sample_gaussian_cloud(400, 1, 0.0, 1.0, 1, 4);
  CHECK_FALSE(gamma_factor(m, a, a, eta0, c).has_value());
  for (int k = 0; k < 5; ++k) {
    const auto b = sample_gaussian_cloud(400, 1, 0.5 + 0.5 * k, 1.0, 1, 5 + k);
    const auto f = gamma_factor(m, a, b, eta0, c);
    REQUIRE(f.has_value());
    CHECK(*f < 1.0);
  }
}

TEST_CASE("example33 closed form") {
  CHECK(example33_constant() == doctest::Approx(oracle::example33_constant_closed_form()).epsilon(1e-12));
  const auto sub = example33(0.5, Example33Mode::closed_form, SimConfig{});
  CHECK(sub.epsilon_star == doctest::Approx(0.95215).epsilon(1e-5));
  CHECK(sub.regime == "subcritical");
  CHECK(*sub.a_star == doctest::Approx(2.1058).epsilon(1e-4));
  const auto sup = example33(1.2, Example33Mode::closed_form, SimConfig{});
  CHECK(sup.no_invariant_measure);
  const auto edge = example33(sub.epsilon_star * 1.005, Example33Mode::closed_form, SimConfig{});
  CHECK(edge.regime == "boundary");
  CHECK(edge.verdict == Verdict::inconclusive);
}

TEST_CASE("time-change bound: identical dynamics and the initial term") {
  const StableParams p{1.5};
  const ModelSpec m = make_linear(1, 1.0, 1.0, NoiseKind::alpha_stable, p);
  SimConfig c;
  c.T = 2.0;
  c.N = 1000;
  c.h = 2e-3;
  c.record_dt = 0.5;
  const auto eta = sample_gaussian_cloud(1000, 1, 0.0, 1.0, 2);
  const auto same = lemma51_check(m, m, Lemma51Inputs{eta, eta, eta, eta, {0.5, 1.0, 2.0}}, c);
  for (const auto& ch : same.checks) {
    CHECK(ch.lhs == 0.0);
    CHECK(ch.rhs == 0.0);
  }
  const auto eta2 = sample_gaussian_cloud(1000, 1, 1.0, 1.0, 2, 1);
  const auto shifted = lemma51_check(m, m, Lemma51Inputs{eta, eta, eta, eta2, {0.5, 1.0, 2.0}}, c);
  for (const auto& ch : shifted.checks) CHECK(ch.lhs <= ch.initial_term + 3.0 * ch.se);
  CHECK(shifted.verdict == Verdict::pass);
}

TEST_CASE("time-change bound needs the one-sided constant") {
  ModelSpec m = make_linear(1, 1.0, 1.0, NoiseKind::alpha_stable, StableParams{1.5});
  m.assumptions.one_sided_K.reset();
  const auto eta = sample_gaussian_cloud(10, 1, 0.0, 1.0, 2);
  SimConfig c;
  c.N = 10;
  CHECK_THROWS_AS(lemma51_check(m, m, Lemma51Inputs{eta, eta, eta, eta, {0.5}}, c), Error);
}

TEST_CASE("decay_fit is scale equivariant") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  std::vector<double> t, w;
  for (int i = 0; i <= 80; ++i) {
    t.push_back(0.05 * i);
    w.push_back(1.7 * std::exp(-0.6 * t.back()) * (1.0 + u(rng)));
  }
  const auto base = decay_fit(t, w);
  for (double s : {0.5, 4.0, 1024.0}) {
    std::vector<double> ws(w);
    for (auto& v : ws) v *= s;
    const auto f = decay_fit(t, ws);
    CHECK(f.lambda_hat == doctest::Approx(base.lambda_hat).epsilon(1e-12));
    CHECK(f.c_hat == doctest::Approx(s * base.c_hat).epsilon(1e-12));
  }
}

TEST_CASE("example33 a* increases and blows up towards epsilon*") {
  double prev = 0.0;
  for (int i = 1; i <= 9; ++i) {
    const auto rep = example33(0.1 * i, Example33Mode::closed_form, SimConfig{});
    REQUIRE(rep.a_star.has_value());
    CHECK(*rep.a_star > prev);
    prev = *rep.a_star;
  }
  const double eps_star = example33(0.5, Example33Mode::closed_form, SimConfig{}).epsilon_star;
  const auto near = example33(eps_star * (1.0 - 0.0101), Example33Mode::closed_form, SimConfig{});
  REQUIRE(near.a_star.has_value());
  CHECK(*near.a_star > 50.0);
}
