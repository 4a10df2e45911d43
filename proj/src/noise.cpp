#include "mkv/noise.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mkv/errors.hpp"

namespace mkv {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// 53 random bits mapped to the open interval (0, 1).
inline double to_open_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

std::array<std::uint32_t, 4> RngStream::next_block() noexcept {
  const std::array<std::uint32_t, 4> ctr{
      static_cast<std::uint32_t>(position_), static_cast<std::uint32_t>(position_ >> 32),
      static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
  const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(seed_),
                                         static_cast<std::uint32_t>(seed_ >> 32)};
  ++position_;
  return philox4x32(ctr, key);
}

std::pair<double, double> RngStream::uniform_pair() noexcept {
  const auto b = next_block();
  const std::uint64_t a = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
  const std::uint64_t c = (static_cast<std::uint64_t>(b[2]) << 32) | b[3];
  return {to_open_unit(a), to_open_unit(c)};
}

std::pair<double, double> RngStream::normal_pair() noexcept {
  const auto [u1, u2] = uniform_pair();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

void RngStream::fill_normal(std::span<double> out, double scale) noexcept {
  std::size_t k = 0;
  for (; k + 1 < out.size(); k += 2) {
    const auto [z0, z1] = normal_pair();
    out[k] = scale * z0;
    out[k + 1] = scale * z1;
  }
  if (k < out.size()) out[k] = scale * normal_pair().first;
}

double RngStream::exponential() noexcept { return -std::log(uniform()); }

std::string_view describe(StableNormalization norm) {
  switch (norm) {
    case StableNormalization::laplace_exponent_plain:
      return "laplace_exponent_plain: E exp(-lambda S_t) = exp(-t lambda^(alpha/2)); "
             "E exp(i xi . W_{S_t}) = exp(-t (|xi|^2/2)^(alpha/2)), i.e. the symbol of "
             "-(-Delta)^(alpha/2) scaled by 2^(-alpha/2)";
  }
  return "unknown";
}

void StableParams::validate() const {
  if (!(stable_alpha > 1.0 && stable_alpha < 2.0))
    fail(ErrorKind::parameter, "stable_alpha must lie in (1, 2), got " + std::to_string(stable_alpha));
}

std::vector<double> gaussian_increments(RngStream& stream, std::size_t n, std::size_t d, double h) {
  require(h > 0.0, ErrorKind::parameter, "gaussian_increments needs h > 0");
  std::vector<double> out(n * d);
  stream.fill_normal(out, std::sqrt(h));
  return out;
}

double positive_stable_increment(RngStream& stream, const StableParams& params, double h) {
  require(h > 0.0, ErrorKind::parameter, "positive_stable_increment needs h > 0");
  params.validate();
  const double beta = params.beta();
  const auto [v, w] = stream.uniform_pair();
  const double u = std::numbers::pi * v;
  const double e = -std::log(w);
  // Kanter: S_1 = (A(U)/E)^((1-beta)/beta),
  // A(u) = (sin(beta u)/sin u)^(1/(1-beta)) sin((1-beta)u)/sin(beta u).
  const double log_a = std::log(std::sin(beta * u) / std::sin(u)) / (1.0 - beta) +
                       std::log(std::sin((1.0 - beta) * u) / std::sin(beta * u));
  const double log_s1 = (1.0 - beta) / beta * (log_a - std::log(e));
  return std::exp(log_s1 + std::log(h) / beta);
}

std::vector<double> subordinated_gaussian(RngStream& stream, double delta_S, std::size_t d) {
  require(delta_S > 0.0, ErrorKind::parameter, "subordinated_gaussian needs delta_S > 0");
  std::vector<double> out(d);
  stream.fill_normal(out, std::sqrt(delta_S));
  return out;
}

std::vector<double> reflect(std::span<const double> increment, std::span<const double> u) {
  require(increment.size() == u.size(), ErrorKind::shape, "reflect: size mismatch");
  double norm2 = 0.0;
  for (double c : u) norm2 += c * c;
  require(std::abs(std::sqrt(norm2) - 1.0) <= 1e-12, ErrorKind::normalization,
          "reflect needs a unit vector");
  std::vector<double> out(increment.begin(), increment.end());
  reflect_in_place(out, u);
  return out;
}

void reflect_in_place(std::span<double> v, std::span<const double> u) noexcept {
  double dot = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) dot += u[k] * v[k];
  for (std::size_t k = 0; k < v.size(); ++k) v[k] -= 2.0 * dot * u[k];
}

}  // namespace mkv
