#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace mkv {

// Philox4x32-10 block cipher (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

// Counter-based stream keyed by (seed, stream_id). The position is the index
// of the next Philox block; every draw is a pure function of
// (seed, stream_id, position), so streams can be advanced on any thread in
// any order.
class RngStream {
 public:
  // Blocks reserved for one time step of one stream.
  static constexpr std::uint64_t kBlocksPerStep = std::uint64_t{1} << 16;

  RngStream(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t position = 0) noexcept
      : seed_(seed), stream_id_(stream_id), position_(position) {}

  // Stream positioned at the start of the block range owned by `step`.
  static RngStream for_step(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t step) noexcept {
    return RngStream(seed, stream_id, step * kBlocksPerStep);
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t position() const noexcept { return position_; }

  std::array<std::uint32_t, 4> next_block() noexcept;

  // Two uniforms in the open interval (0, 1) from one block.
  std::pair<double, double> uniform_pair() noexcept;
  double uniform() noexcept { return uniform_pair().first; }

  // Two independent standard normals from one block (Box-Muller).
  std::pair<double, double> normal_pair() noexcept;

  // out[k] = scale * Z_k, Z_k i.i.d. N(0,1).
  void fill_normal(std::span<double> out, double scale = 1.0) noexcept;

  double exponential() noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t position_;
};

enum class StableNormalization { laplace_exponent_plain };

// Human-readable statement of the subordinator normalization, embedded in
// every emitted report.
std::string_view describe(StableNormalization norm);

// alpha/2-stable subordinator parameters: E exp(-lambda S_t) = exp(-t lambda^(alpha/2)).
struct StableParams {
  double stable_alpha = 1.5;
  StableNormalization normalization = StableNormalization::laplace_exponent_plain;

  double beta() const noexcept { return 0.5 * stable_alpha; }
  void validate() const;
};

// n x d row-major array of i.i.d. N(0, h) entries.
std::vector<double> gaussian_increments(RngStream& stream, std::size_t n, std::size_t d, double h);

// One increment S_{t+h} - S_t of the alpha/2-stable subordinator
// (Kanter / Chambers-Mallows-Stuck representation).
double positive_stable_increment(RngStream& stream, const StableParams& params, double h);

// N(0, delta_S I_d): the Brownian increment over subordinated time delta_S.
std::vector<double> subordinated_gaussian(RngStream& stream, double delta_S, std::size_t d);

// (I - 2 u u^T) v; u must be a unit vector.
std::vector<double> reflect(std::span<const double> increment, std::span<const double> u);

// In-place variant without the unit check, for hot loops.
void reflect_in_place(std::span<double> increment, std::span<const double> u) noexcept;

}  // namespace mkv
