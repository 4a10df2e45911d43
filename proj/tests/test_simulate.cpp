#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "mkv/analysis.hpp"
#include "mkv/errors.hpp"
#include "mkv/simulate.hpp"
#include "mkv/verify/oracles.hpp"

using namespace mkv;

namespace {
SimConfig config(double T, std::size_t N, double h = 1e-3, std::uint64_t seed = 1) {
  SimConfig c;
  c.T = T;
  c.N = N;
  c.h = h;
  c.seed = seed;
  return c;
}
const EmpiricalMeasure kOrigin(1, {0.0});
}  // namespace

TEST_CASE("em_step deterministic cases") {
  RngStream s(1, 1);
  const std::vector<double> x{0.7};
  CHECK(em_step(make_linear(1, 0.0, 0.0), x, kOrigin, 0.01, s)[0] == 0.7);
  CHECK(em_step(make_linear(1, 1.0, 0.0), std::vector<double>{1.0}, kOrigin, 0.01, s)[0] == doctest::Approx(0.99));
  CHECK_THROWS_AS(em_step(make_linear(1, 1.0, 0.0), std::vector<double>{1.0, 2.0}, kOrigin, 0.01, s), Error);
  CHECK_THROWS_AS(em_step(make_linear(1, 1.0, 1.0), std::vector<double>{1e308}, kOrigin, 1e3, s), DivergenceError);
}

TEST_CASE("config validation") {
  SimConfig c;
  c.h = -1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = SimConfig{};
  c.N = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("OU stationary variance") {
  const ModelSpec ou = make_linear(1, 1.0, std::sqrt(2.0));
  SimConfig c = config(50.0, 10000);
  c.record_dt = 0.5;
  const RunResult r = run_frozen(ou, kOrigin, EmpiricalMeasure(1, std::vector<double>(10000, 0.0)), c);
  // Average the recorded second moments over the second half (correlation time 1/2).
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    if (r.times[i] < 25.0) continue;
    sum += r.at("second_moment")[i];
    ++n;
  }
  CHECK(std::abs(sum / n - 1.0) <= 0.03);
}

TEST_CASE("zero interaction: McKean-Vlasov equals the frozen flow bitwise") {
  const ModelSpec m = make_corollary34(Corollary34Options{});
  const auto eta = sample_gaussian_cloud(500, 1, 0.0, 1.0, 3);
  const auto c = config(0.5, 500);
  const RunResult mv = run_mckean_vlasov(m, eta, c);
  const RunResult fr = run_frozen(m, EmpiricalMeasure(1, {4.0, -9.0}), eta, c);
  CHECK(mv.terminal.front() == fr.terminal.front());
}

TEST_CASE("same seed twice gives identical results") {
  Corollary34Options o;
  o.kappa = 0.3;
  const ModelSpec m = make_corollary34(o);
  const auto eta = sample_gaussian_cloud(400, 1, 0.0, 1.0, 4);
  const auto c = config(0.3, 400);
  const RunResult a = run_mckean_vlasov(m, eta, c), b = run_mckean_vlasov(m, eta, c);
  CHECK(a.terminal.front() == b.terminal.front());
  CHECK(a.series == b.series);
  auto c2 = c;
  c2.seed = 5;
  CHECK_FALSE(run_mckean_vlasov(m, eta, c2).terminal.front() == a.terminal.front());
}

TEST_CASE("frozen OU law stays invariant") {
  const ModelSpec ou = make_linear(1, 1.0, std::sqrt(2.0));
  const auto eta = sample_gaussian_cloud(10000, 1, 0.0, 1.0, 6);
  const RunResult r = run_frozen(ou, eta, eta, config(2.0, 10000));
  CHECK(w1_distance(r.terminal.front(), eta) < 0.05);
}

TEST_CASE("zero diffusion follows the ODE to O(h)") {
  const double h = 1e-3;
  const RunResult r = run_frozen(make_linear(1, 1.0, 0.0), kOrigin, EmpiricalMeasure(1, {1.0}), config(1.0, 1, h));
  CHECK(std::abs(r.terminal.front().point(0)[0] - std::exp(-1.0)) <= h);
}

TEST_CASE("kinetic frozen run stays finite") {
  const ModelSpec k = make_kinetic(KineticOptions{});
  const auto eta = sample_gaussian_cloud(200, 2, 0.0, 1.0, 7);
  const RunResult r = run_frozen(k, eta, eta, config(10.0, 200));
  CHECK_FALSE(r.diverged);
  CHECK(std::isfinite(r.at("second_moment").back()));
}

TEST_CASE("reflection coupling from identical clouds is coupled at once") {
  const ModelSpec m = make_corollary34(Corollary34Options{});
  const auto eta = sample_gaussian_cloud(300, 1, 0.0, 1.0, 8);
  const RunResult r = reflection_coupled_pairs(m, eta, eta, eta, config(0.2, 300));
  for (double d : r.at("mean_dist")) CHECK(d == 0.0);
  CHECK(r.at("coupled_fraction").front() == 1.0);
}

TEST_CASE("reflected Brownian motions couple with the hitting-time law") {
  // X - Y = 2 + 2 B_t, so tau is the hitting time of -1 by B: P(tau <= t) = 2 (1 - Phi(1 / sqrt t)).
  const ModelSpec bm = make_linear(1, 0.0, 1.0);
  const std::size_t n = 2000;
  const double T = 4.0;
  SimConfig c = config(T, n, 2e-4, 9);
  c.record_dt = 0.5;
  const RunResult r = reflection_coupled_pairs(bm, kOrigin, EmpiricalMeasure(1, std::vector<double>(n, -1.0)),
                                               EmpiricalMeasure(1, std::vector<double>(n, 1.0)), c);
  auto cdf = [](double t) { return std::erfc(1.0 / std::sqrt(2.0 * t)); };
  std::vector<double> tau;
  for (double t : r.tau)
    if (!std::isnan(t)) tau.push_back(t);
  const double pT = cdf(T);
  CHECK(std::abs(static_cast<double>(tau.size()) / n - pT) <= 3.0 * std::sqrt(pT * (1 - pT) / n));
  // Conditional law given tau <= T.
  CHECK(oracle::ks_one_sample_p(tau, [&](double t) { return cdf(t) / pT; }) > 0.01);
}

TEST_CASE("synchronous coupling of a model with itself has zero distance") {
  const ModelSpec m = make_stable(StableOptions{});
  const auto eta = sample_gaussian_cloud(300, 1, 0.0, 1.0, 10);
  const RunResult r = synchronous_coupled_runs(m, m, eta, config(0.5, 300));
  for (double d : r.at("mean_dist")) CHECK(d == 0.0);
}

TEST_CASE("semigroup: a split run reproduces the single run") {
  Corollary34Options o;
  o.kappa = 0.2;
  const ModelSpec m = make_corollary34(o);
  const auto eta = sample_gaussian_cloud(256, 1, 0.0, 1.0, 11);
  const RunResult whole = run_mckean_vlasov(m, eta, config(0.4, 256));
  const RunResult a = run_mckean_vlasov(m, eta, config(0.25, 256));
  SimConfig second = config(0.15, 256);
  second.start_step = a.end_step;
  const RunResult b = run_mckean_vlasov(m, a.terminal.front(), second);
  CHECK(b.terminal.front() == whole.terminal.front());
  CHECK(b.times.back() == doctest::Approx(0.4));
}

TEST_CASE("serial and parallel kernels agree bitwise") {
  StableOptions so;
  so.kappa = 0.3;
  const ModelSpec m = make_stable(so);
  const auto eta = sample_gaussian_cloud(700, 1, 0.0, 1.0, 12);
  SimConfig c = config(0.2, 700);
  const RunResult p = run_mckean_vlasov(m, eta, c);
  c.exec = Exec::serial;
  const RunResult s = run_mckean_vlasov(m, eta, c);
  CHECK(p.terminal.front() == s.terminal.front());
  CHECK(p.series == s.series);
}

TEST_CASE("Gamma fixed point: measure-independent control") {
  const ModelSpec m = make_corollary34(Corollary34Options{});
  SimConfig c = config(6.0, 500);
  c.burn_in = 4.0;
  c.window = 1.0;
  c.tol_stationary = 0.15;
  FixedPointOptions fo;
  fo.max_iter = 3;
  fo.gap_tolerance = 0.0;
  const auto fp = gamma_fixed_point(m, sample_gaussian_cloud(500, 1, 2.0, 1.0, 13), c, fo);
  REQUIRE(fp.gaps.size() >= 2);
  CHECK(fp.gaps[0] > 0.1);
  CHECK(fp.gaps[1] <= 1e-12);
  CHECK(fp.converged);
}

TEST_CASE("Gamma fixed point: mean-field example reaches a*") {
  const double eps = 0.5;
  const ModelSpec m = make_example33(eps);
  SimConfig c = config(6.0, 2000);
  c.burn_in = 4.0;
  c.window = 1.0;
  c.tol_stationary = 0.1;
  FixedPointOptions fo;
  fo.max_iter = 8;
  fo.gap_tolerance = 0.02;
  const auto fp = gamma_fixed_point(m, sample_gaussian_cloud(2000, 1, 0.0, 1.0, 14), c, fo);
  const double c_const = oracle::example33_constant_closed_form();
  const double a_star = 1.0 / (1.0 - eps * c_const / std::sqrt(M_PI));
  const double mean_f = fp.mu_star.mean_of([](std::span<const double> x) { return std::abs(x[0]) + 1.0; });
  CHECK(std::abs(mean_f - a_star) <= 0.05 * a_star);
}

TEST_CASE("Gamma-hat needs a stationarity window") {
  const ModelSpec m = make_corollary34(Corollary34Options{});
  SimConfig c = config(1.0, 100);
  c.burn_in = 0.5;
  c.window = 0.5;
  const auto mu = sample_gaussian_cloud(100, 1, 0.0, 1.0, 15);
  CHECK_THROWS_AS(gamma_hat(m, mu, mu, c), Error);
}

TEST_CASE("series csv") {
  const auto path = (std::filesystem::temp_directory_path() / "mkv_series_test.csv").string();
  const RunResult r = run_frozen(make_linear(1, 1.0, 0.0), kOrigin, EmpiricalMeasure(1, {1.0}), config(0.2, 1));
  write_series_csv(path, r, "mean_abs");
  std::ifstream is(path);
  std::string header;
  std::getline(is, header);
  CHECK(header == "t,value");
  CHECK_THROWS_AS(write_series_csv(path, r, "nope"), Error);
}

TEST_CASE("coupled pairs stay together") {
  const ModelSpec m = make_corollary34(Corollary34Options{});
  const auto eta1 = sample_gaussian_cloud(1000, 1, -0.5, 0.5, 13);
  const auto eta2 = sample_gaussian_cloud(1000, 1, 0.5, 0.5, 14);
  SimConfig c = config(2.0, 1000, 1e-3, 15);
  c.record_dt = 0.01;
  const RunResult r = reflection_coupled_pairs(m, eta1, eta1, eta2, c);
  const auto& frac = r.at("coupled_fraction");
  CHECK(std::is_sorted(frac.begin(), frac.end()));
  std::size_t coupled = 0;
  bool equal = true;
  for (std::size_t i = 0; i < r.tau.size(); ++i) {
    if (std::isnan(r.tau[i])) continue;
    ++coupled;
    equal = equal && r.terminal[0].point(i)[0] == r.terminal[1].point(i)[0];
  }
  CHECK(coupled > 100);
  CHECK(equal);
}

TEST_CASE("synchronous pairing bounds W1 from above") {
  Corollary34Options a, b;
  a.kappa = 0.1;
  b.kappa = 0.5;
  const auto eta = sample_gaussian_cloud(500, 1, 0.0, 1.0, 16);
  SynchronousOptions o;
  o.eta_b = sample_gaussian_cloud(500, 1, 1.0, 1.0, 17);
  const RunResult r = synchronous_coupled_runs(make_corollary34(a), make_corollary34(b), eta, config(1.0, 500), o);
  CHECK(w1_exact_1d(r.terminal[0], r.terminal[1]) <= r.at("mean_dist").back() + 1e-12);
}

TEST_CASE("independent replicas get closer as N grows") {
  Corollary34Options o;
  o.kappa = 0.5;
  const ModelSpec m = make_corollary34(o);
  double prev = 1e300;
  for (std::size_t n : {1000u, 2000u, 4000u}) {
    std::vector<double> w;
    for (std::uint64_t rep = 0; rep < 20; ++rep) {
      const auto e1 = sample_gaussian_cloud(n, 1, 0.0, 1.0, 1, 1000 + rep);
      const auto e2 = sample_gaussian_cloud(n, 1, 0.0, 1.0, 1, 2000 + rep);
      const RunResult a = run_mckean_vlasov(m, e1, config(1.0, n, 1e-2, 3000 + rep));
      const RunResult b = run_mckean_vlasov(m, e2, config(1.0, n, 1e-2, 4000 + rep));
      w.push_back(w1_exact_1d(a.terminal.front(), b.terminal.front()));
    }
    std::nth_element(w.begin(), w.begin() + 10, w.end());
    INFO("N = " << n << ": median W1 = " << w[10]);
    CHECK(w[10] < prev);
    prev = w[10];
  }
}
