#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include <Eigen/Dense>

#include "mkv/errors.hpp"
#include "mkv/kernels.hpp"
#include "mkv/measures.hpp"
#include "mkv/models.hpp"
#include "mkv/rates.hpp"
#include "mkv/verify/oracles.hpp"

using namespace mkv;

namespace {
std::vector<double> vec(double x) { return {x}; }
}  // namespace

TEST_CASE("eval_coefficients examples") {
  const ModelSpec ex = make_example33(0.5);
  const auto c = eval_coefficients(ex, vec(0.0), EmpiricalMeasure(1, {0.0}));
  CHECK(c.drift[0] == doctest::Approx(0.5));
  CHECK(c.diffusion[0] == doctest::Approx(0.5));

  const ModelSpec lin = make_linear(1, 1.0, 1.0);
  CHECK(eval_coefficients(lin, vec(3.0), EmpiricalMeasure(1, {0.0})).drift[0] == -3.0);
}

TEST_CASE("zero interaction weight leaves the confinement drift") {
  Corollary34Options o;
  o.interaction_weight_override = 0.0;
  const ModelSpec with = make_corollary34(o);
  const EmpiricalMeasure far(1, {5.0, 7.0, -3.0});
  const EmpiricalMeasure origin(1, {0.0});
  for (int i = -20; i <= 20; ++i) {
    const double x = 0.25 * i;
    CHECK(eval_coefficients(with, vec(x), far).drift[0] == eval_coefficients(with, vec(x), origin).drift[0]);
  }
}

TEST_CASE("elliptic_decompose") {
  const double a = 0.7;
  const std::vector<double> iso{a, 0.0, 0.0, a};
  for (double v : elliptic_decompose(iso, 2, a)) CHECK(std::abs(v) <= 1e-15);
  const std::vector<double> diag{a + 1.0, 0.0, 0.0, a};
  const auto r = elliptic_decompose(diag, 2, a);
  CHECK(r[0] == doctest::Approx(1.0));
  CHECK(std::abs(r[1]) + std::abs(r[2]) + std::abs(r[3]) <= 1e-15);
  CHECK_THROWS_AS(elliptic_decompose(std::vector<double>{0.5 * a}, 1, a), Error);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int k = 0; k < 20; ++k) {
    const int d = 3;
    Eigen::MatrixXd b(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) b(i, j) = g(rng);
    const Eigen::MatrixXd A = b * b.transpose() + a * Eigen::MatrixXd::Identity(d, d);
    std::vector<double> flat(A.data(), A.data() + d * d);
    const auto s = elliptic_decompose(flat, d, a);
    const Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>> S(s.data());
    const Eigen::MatrixXd back = a * Eigen::MatrixXd::Identity(d, d) + S * S.transpose();
    CHECK((back - A).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("kinetic_rescale") {
  KineticOptions o;
  o.bump = 0.0;
  ModelSpec k = make_kinetic(o);
  const EmpiricalMeasure mu(2, {0.3, -0.1, 1.0, 0.5});

  ModelSpec unit = k;
  unit.scalar_sigma = [](const MeasureSummary&) { return 1.0; };
  const ModelSpec same = kinetic_rescale(unit, mu);
  CHECK(same.name == unit.name);

  ModelSpec scaled = k;
  scaled.scalar_sigma = [](const MeasureSummary&) { return 2.5; };
  const ModelSpec r = kinetic_rescale(scaled, mu);
  const MeasureSummary m = r.summarize(mu);
  std::vector<double> out(1), ref(1);
  for (double x : {-3.0, -0.5, 0.0, 1.5, 4.0}) {
    r.drift(vec(x), m, out);
    k.drift(vec(x), m, ref);
    CHECK(out[0] == doctest::Approx(ref[0]).epsilon(1e-14));
  }
}

TEST_CASE("kinetic_rescale keeps far-field dissipativity") {
  const ModelSpec k = make_kinetic(KineticOptions{});
  const EmpiricalMeasure mu(2, {0.3, -0.1, 1.0, 0.5, -2.0, 0.0});
  const ModelSpec r = kinetic_rescale(k, mu);
  const MeasureSummary m = r.summarize(mu);
  const double K1 = r.assumptions.K1, R = r.assumptions.R;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  std::vector<double> bx(1), by(1);
  int tested = 0;
  for (int i = 0; i < 20000; ++i) {
    const double x = u(rng), y = u(rng);
    if (std::abs(x - y) < R) continue;
    ++tested;
    r.drift(vec(x), m, bx);
    r.drift(vec(y), m, by);
    CHECK((bx[0] - by[0]) * (x - y) <= -K1 * (x - y) * (x - y) + 1e-12);
  }
  CHECK(tested > 1000);
}

TEST_CASE("Yosida approximation") {
  const ModelSpec lin = make_linear(1, 2.0, 1.0);
  const MeasureSummary none;
  // btilde = -2x - (K/2)x with K = 1.
  for (int m : {1, 5, 50}) {
    for (double x : {-2.0, 0.3, 4.0}) {
      CHECK(yosida_drift(lin, vec(x), none, m, 1.0)[0] ==
            doctest::Approx(oracle::linear_yosida(2.5, m, x)).epsilon(1e-12));
    }
  }
  const ModelSpec cubic = make_cubic();
  double prev = 1e300;
  for (int m : {1, 10, 100, 1000}) {
    const double y = yosida_drift(cubic, vec(0.5), none, m, 0.0)[0];
    CHECK(std::abs(y) <= 0.125);
    const double err = std::abs(y + 0.125);
    CHECK(err < prev);
    prev = err;
  }
  const ModelSpec reg = yosida_regularize(cubic, 10, 0.0);
  std::vector<double> out(1);
  reg.drift(vec(0.5), none, out);
  CHECK(out[0] == doctest::Approx(yosida_drift(cubic, vec(0.5), none, 10, 0.0)[0]));
}

TEST_CASE("catalog") {
  for (const auto& name : catalog_names()) CHECK_NOTHROW(make_model(name, {}));
  CHECK_THROWS_AS(make_model("nope", {}), Error);
  CHECK_THROWS_AS(make_model("linear", {{"thetta", 1.0}}), Error);
  const ModelSpec k = make_model("corollary34", {{"kappa", 0.2}});
  CHECK(k.assumptions.kappa == 0.2);
}

TEST_CASE("corollary34 model satisfies the structural bound with the certified phi") {
  // <b(x,mu1) - b(y,mu2), x-y> + |sigma_hat(x,mu1) - sigma_hat(y,mu2)|_HS^2 / 2
  //   <= phi(|x-y|) |x-y| + kappa W1(mu1,mu2)^2
  const PhiSpec phi{1.0, 1.0, 1.0};
  std::mt19937_64 gen(34);
  std::uniform_real_distribution<double> pos(-4.0, 4.0);
  std::uniform_real_distribution<double> shift(-2.0, 2.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t d : {1u, 2u}) {
    for (double kappa : {0.0, 0.1, 0.5}) {
      const ModelSpec m = make_model("corollary34", {{"kappa", kappa}, {"dim", double(d)}});
      const std::size_t n = 6;
      double worst = -1e300;
      for (int trial = 0; trial < 2000; ++trial) {
        std::vector<double> c1(n * d), c2(n * d), x(d), y(d);
        const double s1 = shift(gen), s2 = shift(gen);
        for (auto& v : c1) v = s1 + gauss(gen);
        for (auto& v : c2) v = s2 + gauss(gen);
        for (auto& v : x) v = pos(gen);
        // Include near-diagonal pairs, where phi is positive.
        const double scale = trial % 2 == 0 ? 1.0 : 0.2;
        for (std::size_t k = 0; k < d; ++k) y[k] = x[k] + scale * pos(gen);
        const EmpiricalMeasure mu1(d, c1), mu2(d, c2);
        const MeasureSummary m1 = m.summarize(mu1), m2 = m.summarize(mu2);
        std::vector<double> bx(d), by(d), sx(d * d), sy(d * d);
        m.drift(x, m1, bx);
        m.drift(y, m2, by);
        m.elliptic->sigma_hat(x, m1, sx);
        m.elliptic->sigma_hat(y, m2, sy);
        double inner = 0.0, r2 = 0.0, hs = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          inner += (bx[k] - by[k]) * (x[k] - y[k]);
          r2 += (x[k] - y[k]) * (x[k] - y[k]);
        }
        for (std::size_t k = 0; k < d * d; ++k) hs += (sx[k] - sy[k]) * (sx[k] - sy[k]);
        const double r = std::sqrt(r2);
        const double w1 = w1_distance(mu1, mu2);
        const double lhs = inner + 0.5 * hs;
        const double rhs = phi_eval(phi, r) * r + kappa * w1 * w1;
        worst = std::max(worst, lhs - rhs);
      }
      INFO("d = " << d << ", kappa = " << kappa);
      CHECK(worst <= 1e-9);
    }
  }
}

TEST_CASE("kinetic_rescale trajectories scale back to the direct ones") {
  KineticOptions o;
  o.kappa = 0.3;
  const ModelSpec k = make_kinetic(o);
  const EmpiricalMeasure mu(2, {0.3, -0.1, 1.0, 0.5, -2.0, 0.4});
  const MeasureSummary m = k.summarize(mu);
  const double s = k.scalar_sigma(m);
  REQUIRE(s != 1.0);
  const ModelSpec r = kinetic_rescale(k, mu);
  std::vector<double> x{0.7, -0.2}, y{0.7 / s, -0.2 / s};
  StepNoise noise(1);
  StepScratch scratch(1);
  RngStream stream(12, 1);
  double worst = 0.0;
  for (int step = 0; step < 500; ++step) {
    draw_noise(k, stream, 1e-2, noise);
    apply_step(k, x, m, 1e-2, noise, scratch);
    apply_step(r, y, m, 1e-2, noise, scratch);
    for (std::size_t c = 0; c < 2; ++c) worst = std::max(worst, std::abs(s * y[c] - x[c]) / (step + 1));
  }
  CHECK(worst <= 1e-10);
}
