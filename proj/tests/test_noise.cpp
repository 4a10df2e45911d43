#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mkv/errors.hpp"
#include "mkv/noise.hpp"
#include "mkv/verify/oracles.hpp"

using namespace mkv;

TEST_CASE("philox known answer, counter = key = 0") {
  const auto out = philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(out[0] == 0x6627e8d5u);
  CHECK(out[1] == 0xe169c58du);
  CHECK(out[2] == 0xbc57ac4cu);
  CHECK(out[3] == 0x9b00dbd8u);
}

TEST_CASE("streams are pure functions of (seed, id, position)") {
  RngStream a(3, 9), b(3, 9), other(3, 10);
  std::vector<double> xa(101), xb(101), xo(101);
  a.fill_normal(xa);
  // Interleave another stream: no shared state.
  other.fill_normal(xo);
  b.fill_normal(xb);
  CHECK(xa == xb);
  CHECK(xa != xo);
  auto s1 = RngStream::for_step(3, 9, 7), s2 = RngStream::for_step(3, 9, 7);
  CHECK(s1.uniform() == s2.uniform());
}

TEST_CASE("gaussian increments") {
  RngStream s(1, 1), t(1, 1);
  CHECK(gaussian_increments(s, 10, 3, 0.5) == gaussian_increments(t, 10, 3, 0.5));
  CHECK_THROWS_AS(gaussian_increments(s, 1, 1, 0.0), Error);

  RngStream m(2, 1);
  const auto z = gaussian_increments(m, 1000000, 1, 1.0);
  const auto ms = oracle::mean_se(z);
  CHECK(std::abs(ms.mean) <= 3.0 / std::sqrt(1e6));

  RngStream v(2, 2);
  const auto w = gaussian_increments(v, 1000000, 1, 1e-8);
  std::vector<double> sq(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) sq[i] = w[i] * w[i];
  const auto var = oracle::mean_se(sq);
  CHECK(std::abs(var.mean - 1e-8) <= 3.0 * var.se);
}

TEST_CASE("stable increments: positivity and Laplace transform") {
  const StableParams p{1.5};
  RngStream s(4, 1);
  std::vector<double> lt(1000000);
  bool positive = true;
  for (auto& x : lt) {
    const double S = positive_stable_increment(s, p, 1.0);
    positive = positive && S > 0.0;
    x = std::exp(-S);
  }
  CHECK(positive);
  const auto ms = oracle::mean_se(lt);
  CHECK(std::abs(ms.mean - std::exp(-1.0)) <= 3.0 * ms.se);
  CHECK_THROWS_AS(positive_stable_increment(s, StableParams{2.0}, 1.0), Error);
  CHECK_THROWS_AS(positive_stable_increment(s, p, -1.0), Error);
}

TEST_CASE("stable increments: self-similarity S_h ~ h^(1/beta) S_1") {
  const StableParams p{1.5};
  const double h = 0.01;
  RngStream a(5, 1), b(5, 2);
  std::vector<double> small(100000), scaled(100000);
  for (auto& x : small) x = positive_stable_increment(a, p, h);
  for (auto& x : scaled) x = std::pow(h, 1.0 / p.beta()) * positive_stable_increment(b, p, 1.0);
  CHECK(oracle::ks_two_sample_p(small, scaled) > 0.01);
}

TEST_CASE("subordinated gaussian: moments, isotropy, determinism") {
  RngStream s(6, 1);
  std::vector<double> x(200000), x2(200000), x4(200000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = subordinated_gaussian(s, 1.0, 1)[0];
    x2[i] = x[i] * x[i];
    x4[i] = x2[i] * x2[i];
  }
  const auto m1 = oracle::mean_se(x), m2 = oracle::mean_se(x2), m4 = oracle::mean_se(x4);
  CHECK(std::abs(m1.mean) <= 3.0 * m1.se);
  CHECK(std::abs(m2.mean - 1.0) <= 3.0 * m2.se);
  CHECK(std::abs(m4.mean - 3.0) <= 3.0 * m4.se);

  RngStream r(6, 2);
  std::vector<std::size_t> counts(16, 0);
  for (int i = 0; i < 100000; ++i) {
    const auto v = subordinated_gaussian(r, 0.7, 2);
    const double ang = std::atan2(v[1], v[0]) + std::numbers::pi;
    ++counts[std::min<std::size_t>(15, static_cast<std::size_t>(ang / (2.0 * std::numbers::pi) * 16.0))];
  }
  CHECK(oracle::chi_square_uniform_p(counts) > 0.01);

  RngStream a(6, 3), b(6, 3);
  CHECK(subordinated_gaussian(a, 2.0, 3) == subordinated_gaussian(b, 2.0, 3));
}

TEST_CASE("reflection") {
  const std::vector<double> e1{1.0, 0.0}, e2{0.0, 1.0};
  CHECK(reflect(e1, e1) == std::vector<double>{-1.0, 0.0});
  CHECK(reflect(e2, e1) == std::vector<double>{0.0, 1.0});
  RngStream s(7, 1);
  for (int k = 0; k < 100; ++k) {
    auto v = subordinated_gaussian(s, 1.0, 3), u = subordinated_gaussian(s, 1.0, 3);
    const double nu = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
    for (auto& c : u) c /= nu;
    const auto w = reflect(v, u);
    CHECK(std::hypot(w[0], w[1], w[2]) == doctest::Approx(std::hypot(v[0], v[1], v[2])).epsilon(1e-14));
  }
  CHECK_THROWS_AS(reflect(e1, std::vector<double>{2.0, 0.0}), Error);
}

TEST_CASE("normalization is described") {
  CHECK(describe(StableNormalization::laplace_exponent_plain).find("exp(-t lambda^(alpha/2))") !=
        std::string_view::npos);
}

TEST_CASE("reflection is an involution") {
  RngStream s(8, 1);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const auto v = subordinated_gaussian(s, 1.0, 4);
    auto u = subordinated_gaussian(s, 1.0, 4);
    double nu = 0.0;
    for (double c : u) nu += c * c;
    for (auto& c : u) c /= std::sqrt(nu);
    const auto back = reflect(reflect(v, u), u);
    for (std::size_t i = 0; i < v.size(); ++i) worst = std::max(worst, std::abs(back[i] - v[i]));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("subordinator increments over disjoint intervals are uncorrelated") {
  // Correlation of exp(-S) over consecutive steps of one stream; exp(-S) has
  // all moments, so the sample correlation has an honest standard error.
  const StableParams p{1.5};
  const std::size_t n = 200000;
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream s(9, i);
    a[i] = std::exp(-positive_stable_increment(s, p, 0.5));
    b[i] = std::exp(-positive_stable_increment(s, p, 0.5));
  }
  const auto ma = oracle::mean_se(a), mb = oracle::mean_se(b);
  std::vector<double> prod(n);
  for (std::size_t i = 0; i < n; ++i) prod[i] = (a[i] - ma.mean) * (b[i] - mb.mean);
  const auto cov = oracle::mean_se(prod);
  CHECK(std::abs(cov.mean) <= 3.0 * cov.se);
}

TEST_CASE("subordinated increments have the stable characteristic function") {
  const StableParams p{1.5};
  const double h = 0.7;
  const std::size_t n = 1000000;
  std::vector<double> x(n);
  RngStream s(10, 1);
  for (auto& v : x) v = subordinated_gaussian(s, positive_stable_increment(s, p, h), 1)[0];
  for (double xi : {0.5, 1.0, 2.0}) {
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = std::cos(xi * x[i]);
    const auto ms = oracle::mean_se(c);
    const double exact = std::exp(-h * std::pow(xi * xi / 2.0, p.stable_alpha / 2.0));
    INFO("xi = " << xi << ": " << ms.mean << " vs " << exact << " (se " << ms.se << ")");
    CHECK(std::abs(ms.mean - exact) <= 3.0 * ms.se);
  }
}
