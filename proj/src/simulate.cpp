#include "mkv/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "mkv/errors.hpp"

#ifndef MKV_VERSION
#define MKV_VERSION "dev"
#endif

namespace mkv {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct MeanSe {
  double mean;
  double se;
};

MeanSe mean_se(std::span<const double> v, Exec exec) {
  const double n = static_cast<double>(v.size());
  const double mean = blocked_sum(v, exec) / n;
  std::vector<double> dev(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) dev[i] = (v[i] - mean) * (v[i] - mean);
  const double var = v.size() > 1 ? blocked_sum(dev, exec) / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

double position_norm(std::span<const double> x, std::size_t d) {
  if (d == 1) return std::abs(x[0]);
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) s += x[k] * x[k];
  return std::sqrt(s);
}

nlohmann::json base_manifest(const std::string& kind, const ModelSpec& model, const SimConfig& c) {
  return {{"run", kind},
          {"model", model.name},
          {"parameters", model.parameters},
          {"config", to_json(c)},
          {"seed", c.seed},
          {"code_version", MKV_VERSION},
          {"noise_normalization",
           model.noise == NoiseKind::alpha_stable ? std::string(describe(model.stable.normalization))
                                                  : std::string("brownian")}};
}

class Recorder {
 public:
  Recorder(RunResult& r, const SimConfig& c) : r_(r), c_(c), every_(c.record_every()) {}

  bool due(std::uint64_t k, std::uint64_t steps) const { return k % every_ == 0 || k == steps; }
  double time(std::uint64_t k) const { return static_cast<double>(c_.start_step + k) * c_.h; }

  void add(const std::string& name, double v) { r_.series[name].push_back(v); }
  void stamp(double t) { r_.times.push_back(t); }

 private:
  RunResult& r_;
  const SimConfig& c_;
  std::uint64_t every_;
};

void record_single(Recorder& rec, RunResult& r, const ModelSpec& model, const std::vector<double>& coords,
                   std::size_t n, double t, const SimConfig& c) {
  const std::size_t sd = model.state_dim(), d = model.dim;
  std::vector<double> a(n), s(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = position_norm(std::span<const double>(coords).subspan(i * sd, sd), d);
    s[i] = a[i] * a[i];
  }
  const MeanSe ma = mean_se(a, c.exec);
  rec.stamp(t);
  rec.add("mean_abs", ma.mean);
  rec.add("mean_abs_se", ma.se);
  rec.add("second_moment", blocked_sum(s, c.exec) / static_cast<double>(n));
  for (std::size_t k = 0; k < d; ++k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) a[i] = coords[i * sd + k];
    sum = blocked_sum(a, c.exec);
    rec.add("mean_x" + std::to_string(k), sum / static_cast<double>(n));
  }
  if (model.measure_dependent()) {
    const MeasureSummary m = feature_means(model, coords, n, c.exec);
    for (std::size_t k = 0; k < m.values.size(); ++k) rec.add("feature" + std::to_string(k), m.values[k]);
  }
  if (t >= c.keep_clouds_after - 0.5 * c.h) {
    r.cloud_times.push_back(t);
    r.clouds.emplace_back(sd, coords);
  }
}

enum class LawMode { own, frozen };

RunResult run_single(const ModelSpec& model, LawMode mode, const EmpiricalMeasure* mu, const EmpiricalMeasure& eta0,
                     const SimConfig& c, const std::string& kind) {
  c.validate();
  model.validate();
  require(eta0.dim() == model.state_dim(), ErrorKind::shape, "initial cloud dimension does not match the model");
  require(eta0.size() == c.N, ErrorKind::shape,
          "initial cloud has " + std::to_string(eta0.size()) + " particles, config.N = " + std::to_string(c.N));
  RunResult r;
  r.manifest = base_manifest(kind, model, c);
  const std::size_t n = c.N;
  std::vector<double> coords = eta0.coords();
  MeasureSummary frozen;
  if (mode == LawMode::frozen) frozen = model.summarize(*mu);
  Recorder rec(r, c);
  const std::uint64_t steps = c.steps();
  for (std::uint64_t k = 0;; ++k) {
    if (rec.due(k, steps)) record_single(rec, r, model, coords, n, rec.time(k), c);
    if (k == steps) break;
    const MeasureSummary m = mode == LawMode::own ? feature_means(model, coords, n, c.exec) : frozen;
    if (!advance_particles(model, coords, n, m, c.h, c.seed, c.start_step + k, c.exec)) {
      r.diverged = true;
      r.blowup_time = rec.time(k + 1);
      r.steps_taken = k + 1;
      r.end_step = c.start_step + k + 1;
      r.manifest["diverged"] = true;
      r.manifest["blowup_time"] = r.blowup_time;
      return r;
    }
  }
  r.steps_taken = steps;
  r.end_step = c.start_step + steps;
  r.terminal.emplace_back(model.state_dim(), std::move(coords));
  return r;
}

bool finite_all(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace

void SimConfig::validate() const {
  require(h > 0.0 && std::isfinite(h), ErrorKind::configuration, "h must be positive");
  require(T > 0.0 && h <= T, ErrorKind::configuration, "need 0 < h <= T");
  require(N >= 1, ErrorKind::configuration, "N must be positive");
  require(couple_threshold <= 0.0 || couple_threshold >= 1e-3 * std::sqrt(h), ErrorKind::configuration,
          "couple_threshold must be at least 1e-3 sqrt(h)");
  require(burn_in >= 0.0 && window > 0.0 && tol_stationary > 0.0, ErrorKind::configuration,
          "burn_in >= 0, window > 0 and tol_stationary > 0 are required");
  require(record_dt >= 0.0, ErrorKind::configuration, "record_dt must be nonnegative");
}

std::uint64_t SimConfig::steps() const { return static_cast<std::uint64_t>(std::llround(T / h)); }

std::uint64_t SimConfig::record_every() const {
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(record_dt / h)));
}

nlohmann::json to_json(const SimConfig& c) {
  nlohmann::json j = {{"h", c.h},
                      {"T", c.T},
                      {"N", c.N},
                      {"seed", c.seed},
                      {"couple_threshold", c.couple_threshold},
                      {"burn_in", c.burn_in},
                      {"window", c.window},
                      {"tol_stationary", c.tol_stationary},
                      {"record_dt", c.record_dt},
                      {"start_step", c.start_step}};
  return j;
}

const std::vector<double>& RunResult::at(const std::string& name) const {
  const auto it = series.find(name);
  require(it != series.end(), ErrorKind::configuration, "run has no series '" + name + "'");
  return it->second;
}

double RunResult::value_at(const std::string& name, double t) const {
  const auto& s = at(name);
  require(!times.empty(), ErrorKind::shape, "run recorded no times");
  std::size_t best = 0;
  for (std::size_t i = 1; i < times.size(); ++i)
    if (std::abs(times[i] - t) < std::abs(times[best] - t)) best = i;
  return s[best];
}

std::vector<double> em_step(const ModelSpec& model, std::span<const double> x, const EmpiricalMeasure& mu, double h,
                            RngStream& stream, double t) {
  require(h > 0.0, ErrorKind::parameter, "em_step needs h > 0");
  require(x.size() == model.state_dim(), ErrorKind::shape, "state has wrong dimension for model");
  const MeasureSummary m = model.summarize(mu);
  StepNoise noise(model.dim);
  StepScratch scratch(model.dim);
  draw_noise(model, stream, h, noise);
  std::vector<double> out(x.begin(), x.end());
  apply_step(model, out, m, h, noise, scratch);
  if (!finite_all(out)) throw DivergenceError(t + h, "state became non-finite at t = " + std::to_string(t + h));
  return out;
}

RunResult run_mckean_vlasov(const ModelSpec& model, const EmpiricalMeasure& eta0, const SimConfig& config) {
  return run_single(model, LawMode::own, nullptr, eta0, config, "mckean_vlasov");
}

RunResult run_frozen(const ModelSpec& model, const EmpiricalMeasure& mu, const EmpiricalMeasure& eta0,
                     const SimConfig& config) {
  return run_single(model, LawMode::frozen, &mu, eta0, config, "frozen");
}

RunResult reflection_coupled_pairs(const ModelSpec& model, const EmpiricalMeasure& mu_frozen,
                                   const EmpiricalMeasure& eta1, const EmpiricalMeasure& eta2,
                                   const SimConfig& c, const PairCost& psi) {
  c.validate();
  model.validate();
  require(model.kind == DynamicsKind::first_order && model.noise == NoiseKind::brownian && model.elliptic,
          ErrorKind::unsupported_model, "reflection coupling needs a first-order Brownian model with an elliptic split");
  require(eta1.size() == c.N && eta2.size() == c.N, ErrorKind::shape, "coupled clouds must have config.N particles");
  require(eta1.dim() == model.dim && eta2.dim() == model.dim, ErrorKind::shape,
          "coupled clouds do not match the model dimension");
  const std::size_t n = c.N, d = model.dim;
  const double alpha = model.elliptic->ellipticity_alpha;
  const double thr = c.couple_threshold > 0.0 ? c.couple_threshold : 0.5 * std::sqrt(alpha * c.h);
  const MeasureSummary m = model.summarize(mu_frozen);

  std::vector<double> x = eta1.coords(), y(n * d);
  const auto perm = w1_optimal_pairing(eta1, eta2);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = eta2.point(perm[i]);
    std::copy(p.begin(), p.end(), y.begin() + static_cast<std::ptrdiff_t>(i * d));
  }

  RunResult r;
  r.manifest = base_manifest("reflection_coupling", model, c);
  r.manifest["couple_threshold"] = thr;
  r.tau.assign(n, kNaN);
  std::vector<unsigned char> coupled(n, 0);
  const double t0 = c.start_time();
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x.data() + i * d;
    double* yi = y.data() + i * d;
    if (euclidean_distance({xi, d}, {yi, d}) <= thr) {
      std::copy(xi, xi + d, yi);
      coupled[i] = 1;
      r.tau[i] = t0;
    }
  }

  Recorder rec(r, c);
  std::vector<double> dist(n), sq(n), ps(n);
  auto record = [&](double t) {
    std::size_t merged = 0;
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = euclidean_distance({x.data() + i * d, d}, {y.data() + i * d, d});
      sq[i] = dist[i] * dist[i];
      if (psi) ps[i] = psi(dist[i]);
      merged += coupled[i];
    }
    rec.stamp(t);
    const MeanSe md = mean_se(dist, c.exec);
    rec.add("mean_dist", md.mean);
    rec.add("mean_dist_se", md.se);
    rec.add("mean_sq_dist", blocked_sum(sq, c.exec) / static_cast<double>(n));
    if (psi) {
      const MeanSe mp = mean_se(ps, c.exec);
      rec.add("mean_psi", mp.mean);
      rec.add("mean_psi_se", mp.se);
    }
    rec.add("coupled_fraction", static_cast<double>(merged) / static_cast<double>(n));
    if (t >= c.keep_clouds_after - 0.5 * c.h) {
      r.cloud_times.push_back(t);
      r.clouds.emplace_back(d, x);
    }
  };

  const std::uint64_t steps = c.steps();
  for (std::uint64_t k = 0;; ++k) {
    if (rec.due(k, steps)) record(rec.time(k));
    if (k == steps) break;
    const std::uint64_t step = c.start_step + k;
    const double t_next = rec.time(k + 1);
    int bad = 0;
#pragma omp parallel if (c.exec == Exec::parallel) reduction(| : bad)
    {
      StepNoise noise(d), mirrored(d);
      StepScratch scratch(d);
      std::vector<double> u(d);
#pragma omp for schedule(static)
      for (std::size_t i = 0; i < n; ++i) {
        std::span<double> xi(x.data() + i * d, d), yi(y.data() + i * d, d);
        auto stream = RngStream::for_step(c.seed, i, step);
        draw_noise(model, stream, c.h, noise);
        if (coupled[i]) {
          apply_step(model, xi, m, c.h, noise, scratch);
          std::copy(xi.begin(), xi.end(), yi.begin());
        } else {
          const double r0 = euclidean_distance(xi, yi);
          for (std::size_t k2 = 0; k2 < d; ++k2) u[k2] = (xi[k2] - yi[k2]) / r0;
          mirrored = noise;
          reflect_in_place(mirrored.b1, u);
          apply_step(model, xi, m, c.h, noise, scratch);
          apply_step(model, yi, m, c.h, mirrored, scratch);
          if (euclidean_distance(xi, yi) <= thr) {
            std::copy(xi.begin(), xi.end(), yi.begin());
            coupled[i] = 1;
            r.tau[i] = t_next;
          }
        }
        if (!finite_all(xi) || !finite_all(yi)) bad = 1;
      }
    }
    if (bad) {
      r.diverged = true;
      r.blowup_time = t_next;
      r.steps_taken = k + 1;
      r.end_step = step + 1;
      return r;
    }
  }
  r.steps_taken = steps;
  r.end_step = c.start_step + steps;
  r.terminal.emplace_back(d, std::move(x));
  r.terminal.emplace_back(d, std::move(y));
  return r;
}

RunResult synchronous_coupled_runs(const ModelSpec& a, const ModelSpec& b, const EmpiricalMeasure& eta0,
                                   const SimConfig& c, const SynchronousOptions& opts) {
  c.validate();
  a.validate();
  b.validate();
  require(a.noise == b.noise && a.kind == b.kind, ErrorKind::configuration,
          "synchronous coupling needs models with the same noise and dynamics kind");
  require(a.noise != NoiseKind::alpha_stable || a.stable.stable_alpha == b.stable.stable_alpha,
          ErrorKind::configuration, "synchronous coupling needs a shared stable index");
  require(a.state_dim() == b.state_dim(), ErrorKind::shape, "coupled models differ in state dimension");
  const EmpiricalMeasure& eta_b = opts.eta_b ? *opts.eta_b : eta0;
  require(eta0.size() == c.N && eta_b.size() == c.N, ErrorKind::shape, "initial clouds must have config.N particles");
  require(eta0.dim() == a.state_dim() && eta_b.dim() == a.state_dim(), ErrorKind::shape,
          "initial cloud does not match the model state dimension");
  if (opts.clock_K)
    require(a.scalar_sigma && b.scalar_sigma, ErrorKind::configuration,
            "clock tracking needs measure-only scalar diffusions");
  const std::size_t n = c.N, sd = a.state_dim(), d = a.dim;
  std::vector<double> x = eta0.coords(), y = eta_b.coords();
  std::vector<double> clock(opts.clock_K ? n : 0, 0.0);
  const double decay = opts.clock_K ? std::exp(*opts.clock_K * c.h) : 1.0;
  MeasureSummary fa, fb;
  if (opts.frozen_a) fa = a.summarize(*opts.frozen_a);
  if (opts.frozen_b) fb = b.summarize(*opts.frozen_b);

  RunResult r;
  r.manifest = base_manifest("synchronous_coupling", a, c);
  r.manifest["model_b"] = b.name;
  r.manifest["parameters_b"] = b.parameters;
  Recorder rec(r, c);
  std::vector<double> dist(n), sq(n), root(n);
  auto record = [&](double t) {
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = euclidean_distance({x.data() + i * sd, sd}, {y.data() + i * sd, sd});
      sq[i] = dist[i] * dist[i];
    }
    rec.stamp(t);
    const MeanSe md = mean_se(dist, c.exec), ms = mean_se(sq, c.exec);
    rec.add("mean_dist", md.mean);
    rec.add("mean_dist_se", md.se);
    rec.add("mean_sq_dist", ms.mean);
    rec.add("mean_sq_dist_se", ms.se);
    if (opts.clock_K) {
      for (std::size_t i = 0; i < n; ++i) root[i] = std::sqrt(clock[i]);
      const MeanSe mc = mean_se(root, c.exec);
      rec.add("clock_sqrt", mc.mean);
      rec.add("clock_sqrt_se", mc.se);
    }
    if (t >= c.keep_clouds_after - 0.5 * c.h) {
      r.cloud_times.push_back(t);
      r.clouds.emplace_back(sd, x);
    }
  };

  const std::uint64_t steps = c.steps();
  for (std::uint64_t k = 0;; ++k) {
    if (rec.due(k, steps)) record(rec.time(k));
    if (k == steps) break;
    const std::uint64_t step = c.start_step + k;
    const MeasureSummary ma = opts.frozen_a ? fa : feature_means(a, x, n, c.exec);
    const MeasureSummary mb = opts.frozen_b ? fb : feature_means(b, y, n, c.exec);
    double hs2 = 0.0;
    if (opts.clock_K) {
      const double ds = a.scalar_sigma(ma) - b.scalar_sigma(mb);
      hs2 = static_cast<double>(d) * ds * ds;
    }
    int bad = 0;
#pragma omp parallel if (c.exec == Exec::parallel) reduction(| : bad)
    {
      StepNoise noise(d);
      StepScratch scratch(d);
#pragma omp for schedule(static)
      for (std::size_t i = 0; i < n; ++i) {
        std::span<double> xi(x.data() + i * sd, sd), yi(y.data() + i * sd, sd);
        auto stream = RngStream::for_step(c.seed, i, step);
        draw_noise(a, stream, c.h, noise);
        apply_step(a, xi, ma, c.h, noise, scratch);
        apply_step(b, yi, mb, c.h, noise, scratch);
        if (!clock.empty()) clock[i] = decay * clock[i] + hs2 * noise.clock;
        if (!finite_all(xi) || !finite_all(yi)) bad = 1;
      }
    }
    if (bad) {
      r.diverged = true;
      r.blowup_time = rec.time(k + 1);
      r.steps_taken = k + 1;
      r.end_step = step + 1;
      return r;
    }
  }
  r.steps_taken = steps;
  r.end_step = c.start_step + steps;
  r.terminal.emplace_back(sd, std::move(x));
  r.terminal.emplace_back(sd, std::move(y));
  return r;
}

EmpiricalMeasure gamma_hat(const ModelSpec& model, const EmpiricalMeasure& mu, const EmpiricalMeasure& eta0,
                           const SimConfig& config, double* window_gap) {
  require(config.burn_in + 2.0 * config.window <= config.T + 1e-12, ErrorKind::configuration,
          "gamma_hat needs burn_in + 2 window <= T");
  SimConfig c = config;
  const double t_end = c.start_time() + c.T;
  c.keep_clouds_after = t_end - 2.0 * c.window;
  RunResult r = run_frozen(model, mu, eta0, c);
  if (r.diverged) throw DivergenceError(r.blowup_time, "frozen run diverged inside gamma_hat");
  std::vector<EmpiricalMeasure> first, second;
  const double split = t_end - c.window;
  for (std::size_t k = 0; k < r.clouds.size(); ++k) {
    // The first window is (t_end - 2w, t_end - w], the second (t_end - w, t_end].
    if (r.cloud_times[k] <= c.keep_clouds_after + 0.5 * c.h) continue;
    (r.cloud_times[k] <= split + 0.5 * c.h ? first : second).push_back(std::move(r.clouds[k]));
  }
  const std::size_t count = std::min(first.size(), second.size());
  require(count > 0, ErrorKind::configuration, "stationarity windows hold no snapshots; reduce record_dt");
  first.erase(first.begin() + static_cast<std::ptrdiff_t>(count), first.end());
  second.erase(second.begin() + static_cast<std::ptrdiff_t>(count), second.end());
  EmpiricalMeasure p1 = pooled(first), p2 = pooled(second);
  if (p1.dim() > 1) {
    p1 = strided_subsample(p1, 512);
    p2 = strided_subsample(p2, 512);
  }
  const double gap = w1_distance(p1, p2);
  if (window_gap) *window_gap = gap;
  if (gap > c.tol_stationary) {
    fail(ErrorKind::nonstationarity, "frozen run not stationary: window W1 " + std::to_string(gap) +
                                         " exceeds tol_stationary " + std::to_string(c.tol_stationary));
  }
  return std::move(r.terminal.front());
}

FixedPointResult gamma_fixed_point(const ModelSpec& model, const EmpiricalMeasure& mu0, const SimConfig& config,
                                   const FixedPointOptions& opts) {
  require(opts.max_iter >= 1, ErrorKind::configuration, "max_iter must be positive");
  const double tol = opts.gap_tolerance >= 0.0 ? opts.gap_tolerance : config.tol_stationary;
  FixedPointResult out{mu0, {}, {}, {}, false};
  int rising = 0;
  bool warned = false;
  for (int k = 0; k < opts.max_iter; ++k) {
    double wg = 0.0;
    EmpiricalMeasure next = gamma_hat(model, out.mu_star, mu0, config, &wg);
    const double gap = w1_distance(next, out.mu_star);
    out.stationarity.push_back(wg);
    if (!out.gaps.empty() && gap > out.gaps.back()) {
      ++rising;
    } else {
      rising = 0;
    }
    out.gaps.push_back(gap);
    out.mu_star = std::move(next);
    if (rising >= 3 && !warned) {
      out.warnings.push_back("gap sequence increased for 3 consecutive iterations; possible phase transition");
      warned = true;
    }
    if (gap < tol || gap == 0.0) {
      out.converged = true;
      break;
    }
  }
  return out;
}

void write_series_csv(const std::string& path, const RunResult& r, const std::string& name) {
  const auto& s = r.at(name);
  std::ofstream os(path);
  require(static_cast<bool>(os), ErrorKind::io, "cannot write " + path);
  os << "t,value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < r.times.size(); ++i) os << r.times[i] << ',' << s[i] << '\n';
  require(static_cast<bool>(os), ErrorKind::io, "write failed for " + path);
}

}  // namespace mkv
