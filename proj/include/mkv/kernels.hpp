#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mkv/models.hpp"
#include "mkv/noise.hpp"

namespace mkv {

enum class Exec { serial, parallel };

// Particles summed per block in feature reductions. Block sums are formed in
// index order and then added in block order, so the result does not depend on
// how blocks are spread over threads.
inline constexpr std::size_t kReductionBlock = 256;

// Noise drawn for one particle over one step.
//   first order Brownian: b1 = dB^1, b2 = dB^2 (each N(0, h I_d)), clock = h
//   stable: b1 = W_{S+dS} - W_S ~ N(0, dS I_d), b2 unused, clock = dS
//   kinetic Brownian: b1 = dB ~ N(0, h I_d), clock = h
struct StepNoise {
  std::vector<double> b1;
  std::vector<double> b2;
  double clock = 0.0;

  explicit StepNoise(std::size_t d = 1) : b1(d), b2(d) {}
};

void draw_noise(const ModelSpec& model, RngStream& stream, double h, StepNoise& noise);

// Per-thread scratch for apply_step.
struct StepScratch {
  std::vector<double> drift;
  std::vector<double> sigma_hat;
  explicit StepScratch(std::size_t d = 1) : drift(d), sigma_hat(d * d) {}
};

// One explicit Euler-Maruyama step of a single particle, in place. The elliptic
// split is stepped as b h + sqrt(alpha) dB^1 + sigma_hat dB^2, which has the
// law of b h + sigma dB for any sigma with sigma sigma^* = alpha I + sigma_hat sigma_hat^*.
void apply_step(const ModelSpec& model, std::span<double> x, const MeasureSummary& m, double h,
                const StepNoise& noise, StepScratch& scratch);

// Scalar diffusion of measure-only models (stable and kinetic), evaluated once
// per step.
double step_sigma(const ModelSpec& model, const MeasureSummary& m);

// Feature means over n particles with blocked, order-fixed summation.
MeasureSummary feature_means(const ModelSpec& model, std::span<const double> coords, std::size_t n, Exec exec);

// Advances n particles by one step. Particle i draws from stream
// (seed, stream_offset + i) at block range `step`. Returns false if any
// coordinate became non-finite.
bool advance_particles(const ModelSpec& model, std::span<double> coords, std::size_t n, const MeasureSummary& m,
                       double h, std::uint64_t seed, std::uint64_t step, Exec exec,
                       std::uint64_t stream_offset = 0);

// Fixed-order blocked sum of v[i]; same grouping as feature_means.
double blocked_sum(std::span<const double> v, Exec exec);

int max_threads();
void set_threads(int n);

}  // namespace mkv
