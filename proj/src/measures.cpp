#include "mkv/measures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "mkv/errors.hpp"

namespace mkv {

EmpiricalMeasure::EmpiricalMeasure(std::size_t dim, std::vector<double> coords)
    : dim_(dim), coords_(std::move(coords)) {
  require(dim_ >= 1, ErrorKind::dimension, "measure dimension must be positive");
  require(!coords_.empty(), ErrorKind::shape, "measure needs at least one point");
  require(coords_.size() % dim_ == 0, ErrorKind::shape,
          "coordinate count is not a multiple of the dimension");
  for (double c : coords_) {
    require(std::isfinite(c), ErrorKind::parameter, "measure has a non-finite coordinate");
  }
}

EmpiricalMeasure EmpiricalMeasure::from_points(const std::vector<std::vector<double>>& points) {
  require(!points.empty(), ErrorKind::shape, "measure needs at least one point");
  const std::size_t dim = points.front().size();
  std::vector<double> coords;
  coords.reserve(points.size() * dim);
  for (const auto& p : points) {
    require(p.size() == dim, ErrorKind::shape, "points have inconsistent lengths");
    coords.insert(coords.end(), p.begin(), p.end());
  }
  return EmpiricalMeasure(dim, std::move(coords));
}

EmpiricalMeasure EmpiricalMeasure::dirac(std::span<const double> point, std::size_t copies) {
  std::vector<double> coords;
  coords.reserve(point.size() * copies);
  for (std::size_t i = 0; i < copies; ++i) coords.insert(coords.end(), point.begin(), point.end());
  return EmpiricalMeasure(point.size(), std::move(coords));
}

double EmpiricalMeasure::mean_of(const std::function<double(std::span<const double>)>& g) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < size(); ++i) sum += g(point(i));
  return sum / static_cast<double>(size());
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() == 1) return std::abs(a[0] - b[0]);
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

namespace {

void check_same_shape(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  require(mu.dim() == nu.dim(), ErrorKind::shape, "measures have different dimensions");
  require(mu.size() == nu.size(), ErrorKind::shape,
          "unequal particle counts are not supported");
}

std::vector<std::size_t> sorted_order(const EmpiricalMeasure& mu) {
  std::vector<std::size_t> idx(mu.size());
  std::iota(idx.begin(), idx.end(), 0);
  const auto& c = mu.coords();
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return c[a] < c[b]; });
  return idx;
}

// Shortest augmenting path Hungarian method with potentials, O(n^3).
std::vector<std::size_t> hungarian(std::size_t n, const std::vector<double>& cost) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

double assignment_cost(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                       const std::vector<std::size_t>& perm, const PairCost& cost) {
  double total = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) total += cost(euclidean_distance(mu.point(i), nu.point(perm[i])));
  return total / static_cast<double>(mu.size());
}

}  // namespace

double w1_exact_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  require(mu.dim() == 1 && nu.dim() == 1, ErrorKind::dimension, "w1_exact_1d needs 1D measures");
  require(mu.size() == nu.size(), ErrorKind::shape, "unequal particle counts are not supported");
  std::vector<double> a = mu.coords(), b = nu.coords();
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
  return total / static_cast<double>(a.size());
}

std::vector<std::size_t> optimal_assignment(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                            const PairCost& cost, std::size_t cap) {
  check_same_shape(mu, nu);
  const std::size_t n = mu.size();
  require(n <= cap, ErrorKind::capacity,
          "assignment size " + std::to_string(n) + " exceeds cap " + std::to_string(cap));
  std::vector<double> c(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] = cost(euclidean_distance(mu.point(i), nu.point(j)));
  return hungarian(n, c);
}

double ot_assignment(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, const PairCost& cost,
                     std::size_t cap) {
  const auto perm = optimal_assignment(mu, nu, cost, cap);
  return assignment_cost(mu, nu, perm, cost);
}

double w1_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, std::size_t cap) {
  check_same_shape(mu, nu);
  if (mu.dim() == 1) return w1_exact_1d(mu, nu);
  return ot_assignment(mu, nu, [](double r) { return r; }, cap);
}

std::vector<std::size_t> w1_optimal_pairing(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                                            std::size_t cap) {
  check_same_shape(mu, nu);
  if (mu.dim() == 1) {
    const auto a = sorted_order(mu), b = sorted_order(nu);
    std::vector<std::size_t> perm(mu.size());
    for (std::size_t k = 0; k < a.size(); ++k) perm[a[k]] = b[k];
    return perm;
  }
  return optimal_assignment(mu, nu, [](double r) { return r; }, cap);
}

double sliced_w1(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, std::size_t directions) {
  check_same_shape(mu, nu);
  const std::size_t d = mu.dim(), n = mu.size();
  std::mt19937_64 gen(0x5eed5eedULL);
  std::normal_distribution<double> normal;
  std::vector<double> dir(d), a(n), b(n);
  double total = 0.0;
  for (std::size_t k = 0; k < directions; ++k) {
    double norm = 0.0;
    for (auto& c : dir) {
      c = normal(gen);
      norm += c * c;
    }
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < n; ++i) {
      double pa = 0.0, pb = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        pa += mu.point(i)[j] * dir[j] / norm;
        pb += nu.point(i)[j] * dir[j] / norm;
      }
      a[i] = pa;
      b[i] = pb;
    }
    total += w1_exact_1d(EmpiricalMeasure(1, a), EmpiricalMeasure(1, b));
  }
  return total / static_cast<double>(directions);
}

EmpiricalMeasure pooled(std::span<const EmpiricalMeasure> clouds) {
  require(!clouds.empty(), ErrorKind::shape, "nothing to pool");
  std::vector<double> coords;
  for (const auto& c : clouds) {
    require(c.dim() == clouds.front().dim(), ErrorKind::shape, "pooled clouds differ in dimension");
    coords.insert(coords.end(), c.coords().begin(), c.coords().end());
  }
  return EmpiricalMeasure(clouds.front().dim(), std::move(coords));
}

EmpiricalMeasure strided_subsample(const EmpiricalMeasure& mu, std::size_t n) {
  if (n == 0 || mu.size() <= n) return mu;
  std::vector<double> coords;
  coords.reserve(n * mu.dim());
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = k * mu.size() / n;
    const auto p = mu.point(i);
    coords.insert(coords.end(), p.begin(), p.end());
  }
  return EmpiricalMeasure(mu.dim(), std::move(coords));
}

void write_csv(std::ostream& os, const EmpiricalMeasure& mu) {
  for (std::size_t j = 0; j < mu.dim(); ++j) os << (j ? "," : "") << 'x' << j;
  os << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto p = mu.point(i);
    for (std::size_t j = 0; j < p.size(); ++j) os << (j ? "," : "") << p[j];
    os << '\n';
  }
}

void write_csv(const std::string& path, const EmpiricalMeasure& mu) {
  std::ofstream os(path);
  require(static_cast<bool>(os), ErrorKind::io, "cannot write " + path);
  write_csv(os, mu);
}

EmpiricalMeasure read_csv(std::istream& is) {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), ErrorKind::io, "empty cloud CSV");
  std::size_t dim = 0;
  {
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) {
      require(cell == "x" + std::to_string(dim), ErrorKind::io, "unexpected CSV header cell '" + cell + "'");
      ++dim;
    }
  }
  std::vector<double> coords;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t cols = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        coords.push_back(std::stod(cell));
      } catch (const std::exception&) {
        fail(ErrorKind::io, "bad number on CSV row " + std::to_string(row));
      }
      ++cols;
    }
    if (cols != dim) fail(ErrorKind::io, "CSV row " + std::to_string(row) + " has wrong column count");
  }
  return EmpiricalMeasure(dim, std::move(coords));
}

EmpiricalMeasure read_csv(const std::string& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorKind::io, "cannot read " + path);
  return read_csv(is);
}

}  // namespace mkv
