#include "mkv/kernels.hpp"

#include <algorithm>
#include <cmath>

#include <omp.h>

namespace mkv {

void draw_noise(const ModelSpec& model, RngStream& stream, double h, StepNoise& noise) {
  const std::size_t d = model.dim;
  if (model.noise == NoiseKind::alpha_stable) {
    noise.clock = positive_stable_increment(stream, model.stable, h);
    stream.fill_normal(noise.b1, std::sqrt(noise.clock));
    return;
  }
  noise.clock = h;
  const double sh = std::sqrt(h);
  if (model.kind == DynamicsKind::kinetic) {
    stream.fill_normal(noise.b1, sh);
    return;
  }
  // 2d normals in one pass: b1 first, then b2.
  for (std::size_t k = 0; k < 2 * d; k += 2) {
    const auto [z0, z1] = stream.normal_pair();
    (k < d ? noise.b1[k] : noise.b2[k - d]) = sh * z0;
    if (k + 1 < 2 * d) (k + 1 < d ? noise.b1[k + 1] : noise.b2[k + 1 - d]) = sh * z1;
  }
}

double step_sigma(const ModelSpec& model, const MeasureSummary& m) { return model.scalar_sigma(m); }

void apply_step(const ModelSpec& model, std::span<double> x, const MeasureSummary& m, double h,
                const StepNoise& noise, StepScratch& scratch) {
  const std::size_t d = model.dim;
  if (model.kind == DynamicsKind::kinetic) {
    model.drift(x.first(d), m, scratch.drift);
    const double s = model.scalar_sigma(m);
    for (std::size_t k = 0; k < d; ++k) {
      const double v = x[d + k];
      x[k] += v * h;
      x[d + k] = v + (-model.gamma * v + scratch.drift[k]) * h + s * noise.b1[k];
    }
    return;
  }
  model.drift(x, m, scratch.drift);
  if (model.noise == NoiseKind::alpha_stable) {
    const double s = model.scalar_sigma(m);
    for (std::size_t k = 0; k < d; ++k) x[k] += scratch.drift[k] * h + s * noise.b1[k];
    return;
  }
  const double sa = std::sqrt(model.elliptic->ellipticity_alpha);
  model.elliptic->sigma_hat(x, m, scratch.sigma_hat);
  // Drift and both noise terms use the pre-step state.
  for (std::size_t k = 0; k < d; ++k) {
    double inc = scratch.drift[k] * h + sa * noise.b1[k];
    for (std::size_t j = 0; j < d; ++j) inc += scratch.sigma_hat[k * d + j] * noise.b2[j];
    scratch.drift[k] = inc;
  }
  for (std::size_t k = 0; k < d; ++k) x[k] += scratch.drift[k];
}

MeasureSummary feature_means(const ModelSpec& model, std::span<const double> coords, std::size_t n, Exec exec) {
  const std::size_t w = model.feature_width;
  MeasureSummary s{std::vector<double>(w, 0.0)};
  if (w == 0 || n == 0) return s;
  const std::size_t sd = model.state_dim();
  const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<double> partial(blocks * w, 0.0);
#pragma omp parallel if (exec == Exec::parallel)
  {
    std::vector<double> buf(w);
#pragma omp for schedule(static)
    for (std::size_t b = 0; b < blocks; ++b) {
      const std::size_t lo = b * kReductionBlock, hi = std::min(n, lo + kReductionBlock);
      double* acc = partial.data() + b * w;
      for (std::size_t i = lo; i < hi; ++i) {
        model.features(coords.subspan(i * sd, sd), buf);
        for (std::size_t k = 0; k < w; ++k) acc[k] += buf[k];
      }
    }
  }
  for (std::size_t b = 0; b < blocks; ++b)
    for (std::size_t k = 0; k < w; ++k) s.values[k] += partial[b * w + k];
  for (auto& v : s.values) v /= static_cast<double>(n);
  return s;
}

double blocked_sum(std::span<const double> v, Exec exec) {
  const std::size_t n = v.size();
  const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<double> partial(blocks, 0.0);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t lo = b * kReductionBlock, hi = std::min(n, lo + kReductionBlock);
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += v[i];
    partial[b] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

bool advance_particles(const ModelSpec& model, std::span<double> coords, std::size_t n, const MeasureSummary& m,
                       double h, std::uint64_t seed, std::uint64_t step, Exec exec, std::uint64_t stream_offset) {
  const std::size_t sd = model.state_dim();
  const std::size_t d = model.dim;
  int bad = 0;
#pragma omp parallel if (exec == Exec::parallel) reduction(| : bad)
  {
    StepNoise noise(d);
    StepScratch scratch(d);
#pragma omp for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
      auto stream = RngStream::for_step(seed, stream_offset + i, step);
      draw_noise(model, stream, h, noise);
      auto x = coords.subspan(i * sd, sd);
      apply_step(model, x, m, h, noise, scratch);
      for (double c : x)
        if (!std::isfinite(c)) bad = 1;
    }
  }
  return bad == 0;
}

int max_threads() { return omp_get_max_threads(); }
void set_threads(int n) { omp_set_num_threads(n); }

}  // namespace mkv
