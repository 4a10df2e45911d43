#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace mkv {

// Equal-weight atomic measure (1/N) sum_i delta_{x_i} on R^dim. Points are
// stored row-major in one flat buffer.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure(std::size_t dim, std::vector<double> coords);

  static EmpiricalMeasure from_points(const std::vector<std::vector<double>>& points);
  static EmpiricalMeasure dirac(std::span<const double> point, std::size_t copies = 1);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return coords_.size() / dim_; }
  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  const std::vector<double>& coords() const noexcept { return coords_; }
  std::vector<double> release() && { return std::move(coords_); }

  // Mean of g(x_i) over the cloud.
  double mean_of(const std::function<double(std::span<const double>)>& g) const;

  friend bool operator==(const EmpiricalMeasure&, const EmpiricalMeasure&) = default;

 private:
  std::size_t dim_;
  std::vector<double> coords_;
};

using PairCost = std::function<double(double)>;

inline constexpr std::size_t kDefaultAssignmentCap = 2048;

double euclidean_distance(std::span<const double> a, std::span<const double> b);

// Exact W1 on the line by monotone (sorted) pairing.
double w1_exact_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu);

// Minimising permutation of (1/N) sum cost(|x_i - y_pi(i)|); result[i] = pi(i).
std::vector<std::size_t> optimal_assignment(const EmpiricalMeasure& mu,
                                            const EmpiricalMeasure& nu,
                                            const PairCost& cost,
                                            std::size_t cap = kDefaultAssignmentCap);

// Exact transport cost W_cost(mu, nu) over permutations (Hungarian solve).
double ot_assignment(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                     const PairCost& cost,
                     std::size_t cap = kDefaultAssignmentCap);

// W1 by the exact route for the dimension: sorting in 1D, assignment otherwise.
double w1_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                   std::size_t cap = kDefaultAssignmentCap);

// Pairing realising W1: sorted order in 1D, assignment in higher dimension.
std::vector<std::size_t> w1_optimal_pairing(const EmpiricalMeasure& mu,
                                            const EmpiricalMeasure& nu,
                                            std::size_t cap = kDefaultAssignmentCap);

// Diagnostic only: average 1D W1 over fixed pseudo-random projections.
double sliced_w1(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                 std::size_t directions = 64);

// Union of clouds (all must share dim).
EmpiricalMeasure pooled(std::span<const EmpiricalMeasure> clouds);

// Deterministic evenly strided subsample of at most n points.
EmpiricalMeasure strided_subsample(const EmpiricalMeasure& mu, std::size_t n);

void write_csv(std::ostream& os, const EmpiricalMeasure& mu);
void write_csv(const std::string& path, const EmpiricalMeasure& mu);
EmpiricalMeasure read_csv(std::istream& is);
EmpiricalMeasure read_csv(const std::string& path);

}  // namespace mkv
