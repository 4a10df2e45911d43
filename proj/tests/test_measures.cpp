#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "mkv/errors.hpp"
#include "mkv/measures.hpp"
#include "mkv/rates.hpp"
#include "mkv/verify/oracles.hpp"

using namespace mkv;

namespace {
EmpiricalMeasure line(std::vector<double> v) { return EmpiricalMeasure(1, std::move(v)); }
const PairCost kDist = [](double r) { return r; };
}  // namespace

TEST_CASE("construction rejects bad input") {
  CHECK_THROWS_AS(EmpiricalMeasure(1, {}), Error);
  CHECK_THROWS_AS(EmpiricalMeasure(2, {1.0, 2.0, 3.0}), Error);
  CHECK_THROWS_AS(EmpiricalMeasure(1, {std::numeric_limits<double>::quiet_NaN()}), Error);
  CHECK_THROWS_AS(EmpiricalMeasure(1, {std::numeric_limits<double>::infinity()}), Error);
  CHECK_THROWS_AS(w1_exact_1d(line({0.0}), line({0.0, 1.0})), Error);
}

TEST_CASE("w1_exact_1d examples") {
  CHECK(w1_exact_1d(line({0.3, -1.2}), line({0.3, -1.2})) == 0.0);
  CHECK(w1_exact_1d(line({0.0}), line({1.0})) == 1.0);
  CHECK(w1_exact_1d(line({0.0, 2.0}), line({1.0, 3.0})) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(oracle::brute_force_transport(line({0.0, 2.0}), line({1.0, 3.0}), kDist) == doctest::Approx(1.0));
}

TEST_CASE("ot_assignment examples") {
  const auto mu = EmpiricalMeasure::from_points({{0.0, 0.0}, {1.0, 0.0}});
  const auto nu = EmpiricalMeasure::from_points({{0.0, 1.0}, {1.0, 1.0}});
  CHECK(ot_assignment(mu, nu, kDist) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ot_assignment(mu, mu, kDist) == 0.0);
  CHECK(ot_assignment(mu, mu, [](double r) { return r * r + std::sqrt(r); }) == 0.0);
}

TEST_CASE("ot_assignment matches sorting in 1D, N <= 16") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const std::size_t n = 1 + rng() % 16;
    std::vector<double> a(n), b(n);
    for (auto& v : a) v = g(rng);
    for (auto& v : b) v = 2.0 * g(rng) + 0.5;
    worst = std::max(worst, std::abs(ot_assignment(line(a), line(b), kDist) - w1_exact_1d(line(a), line(b))));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("assignment is a permutation and realises the cost") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> a(3 * 40), b(3 * 40);
  for (auto& v : a) v = u(rng);
  for (auto& v : b) v = u(rng);
  const EmpiricalMeasure mu(3, a), nu(3, b);
  const auto p = optimal_assignment(mu, nu, kDist);
  std::vector<int> seen(40, 0);
  double cost = 0.0;
  for (std::size_t i = 0; i < 40; ++i) {
    ++seen[p[i]];
    cost += euclidean_distance(mu.point(i), nu.point(p[i]));
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
  CHECK(cost / 40.0 == doctest::Approx(ot_assignment(mu, nu, kDist)).epsilon(1e-12));
  CHECK(w1_distance(mu, nu) == doctest::Approx(cost / 40.0).epsilon(1e-12));
}

TEST_CASE("assignment respects the size cap") {
  std::vector<double> a(20, 0.0);
  CHECK_THROWS_AS(ot_assignment(line(a), line(a), kDist, 10), Error);
}

TEST_CASE("csv round trip is exact") {
  const auto mu = EmpiricalMeasure::from_points({{0.1, -2.0 / 3.0}, {1e-300, 12345.678901234567}});
  std::stringstream ss;
  write_csv(ss, mu);
  CHECK(read_csv(ss) == mu);
}

TEST_CASE("pooled and strided subsample") {
  const EmpiricalMeasure a = line({1.0, 2.0}), b = line({3.0});
  const std::vector<EmpiricalMeasure> v{a, b};
  CHECK(pooled(v).size() == 3);
  std::vector<double> big(1000);
  for (std::size_t i = 0; i < big.size(); ++i) big[i] = static_cast<double>(i);
  const auto s = strided_subsample(line(big), 100);
  CHECK(s.size() == 100);
  CHECK(s.point(1)[0] == 10.0);
}

namespace {
EmpiricalMeasure random_cloud(std::mt19937_64& rng, std::size_t n, std::size_t d) {
  std::normal_distribution<double> g;
  const double shift = g(rng);
  std::vector<double> c(n * d);
  for (auto& v : c) v = shift + g(rng);
  return EmpiricalMeasure(d, c);
}
}  // namespace

TEST_CASE("W1 metric axioms on random instances") {
  std::mt19937_64 rng(21);
  double asym = 0.0, tri = -1e300, self = 0.0;
  for (int k = 0; k < 300; ++k) {
    const std::size_t d = 1 + k % 3, n = 1 + rng() % 7;
    const auto a = random_cloud(rng, n, d), b = random_cloud(rng, n, d), c = random_cloud(rng, n, d);
    const double ab = ot_assignment(a, b, kDist), ba = ot_assignment(b, a, kDist);
    asym = std::max(asym, std::abs(ab - ba));
    tri = std::max(tri, ab - ot_assignment(a, c, kDist) - ot_assignment(c, b, kDist));
    // Same multiset in a different order.
    std::vector<std::vector<double>> pts;
    for (std::size_t i = n; i-- > 0;) pts.emplace_back(a.point(i).begin(), a.point(i).end());
    self = std::max(self, ot_assignment(a, EmpiricalMeasure::from_points(pts), kDist));
    CHECK(ab > 0.0);
  }
  CHECK(asym <= 1e-12);
  CHECK(tri <= 1e-12);
  CHECK(self == 0.0);
}

TEST_CASE("W_psi is sandwiched by C1 W1 and C2 W1") {
  const PhiSpec phi{1.0, 1.0, 1.0};
  const auto k = corollary34_constants(phi, 1.0);
  const PsiTable psi(phi, 1.0);
  const PairCost cost = [&](double r) { return psi(r); };
  std::mt19937_64 rng(22);
  bool ok = true;
  for (int t = 0; t < 200; ++t) {
    const std::size_t d = 1 + t % 3, n = 2 + rng() % 10;
    const auto a = random_cloud(rng, n, d), b = random_cloud(rng, n, d);
    const double w1 = ot_assignment(a, b, kDist), wpsi = ot_assignment(a, b, cost);
    ok = ok && k.C1 * w1 <= wpsi * (1 + 1e-9) && wpsi <= k.C2 * w1 * (1 + 1e-9);
  }
  CHECK(ok);
}

TEST_CASE("any pairing bounds W1 from above") {
  std::mt19937_64 rng(23);
  bool ok = true;
  for (int t = 0; t < 200; ++t) {
    const std::size_t d = 1 + t % 3, n = 2 + rng() % 30;
    const auto a = random_cloud(rng, n, d), b = random_cloud(rng, n, d);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += euclidean_distance(a.point(i), b.point(perm[i]));
    ok = ok && w1_distance(a, b) <= mean / static_cast<double>(n) + 1e-12;
  }
  CHECK(ok);
}
