#include "mkv/models.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Dense>

#include "mkv/errors.hpp"

namespace mkv {

void AssumptionParams::validate() const {
  require(delta_bound >= 1.0, ErrorKind::parameter, "delta_bound must be >= 1");
  for (double v : {kappa, K0, K0_tilde, L_b, K1, K2, R}) {
    require(v >= 0.0, ErrorKind::parameter, "assumption constants must be nonnegative");
  }
}

MeasureSummary ModelSpec::summarize(std::span<const double> coords, std::size_t n) const {
  MeasureSummary s{std::vector<double>(feature_width, 0.0)};
  if (feature_width == 0) return s;
  const std::size_t sd = state_dim();
  std::vector<double> buf(feature_width);
  for (std::size_t i = 0; i < n; ++i) {
    features(coords.subspan(i * sd, sd), buf);
    for (std::size_t k = 0; k < feature_width; ++k) s.values[k] += buf[k];
  }
  for (auto& v : s.values) v /= static_cast<double>(n);
  return s;
}

MeasureSummary ModelSpec::summarize(const EmpiricalMeasure& mu) const {
  require(mu.dim() == state_dim(), ErrorKind::shape,
          "measure dimension " + std::to_string(mu.dim()) + " does not match model state dimension " +
              std::to_string(state_dim()));
  return summarize(mu.coords(), mu.size());
}

void ModelSpec::validate() const {
  require(dim >= 1, ErrorKind::dimension, "model dimension must be positive");
  require(static_cast<bool>(drift), ErrorKind::configuration, "model has no drift");
  require(feature_width == 0 || static_cast<bool>(features), ErrorKind::configuration,
          "model declares features without a feature map");
  if (kind == DynamicsKind::kinetic) {
    require(gamma > 0.0, ErrorKind::parameter, "kinetic models need gamma > 0");
    require(static_cast<bool>(scalar_sigma), ErrorKind::configuration, "kinetic models use a scalar diffusion");
  } else if (noise == NoiseKind::brownian) {
    require(elliptic.has_value(), ErrorKind::configuration, "first-order Brownian models carry an elliptic split");
    require(elliptic->ellipticity_alpha >= 0.0, ErrorKind::parameter, "ellipticity must be nonnegative");
  } else {
    require(static_cast<bool>(scalar_sigma), ErrorKind::configuration,
            "first-order stable models carry a measure-only diffusion");
  }
  if (noise == NoiseKind::alpha_stable) stable.validate();
  assumptions.validate();
}

std::vector<double> symmetric_sqrt(std::span<const double> matrix, std::size_t dim) {
  require(matrix.size() == dim * dim, ErrorKind::shape, "matrix size mismatch");
  Eigen::MatrixXd a = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      matrix.data(), static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  a = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  Eigen::VectorXd ev = es.eigenvalues();
  require(ev.minCoeff() >= -1e-10, ErrorKind::ellipticity_violation,
          "matrix is not positive semidefinite (smallest eigenvalue " + std::to_string(ev.minCoeff()) + ")");
  ev = ev.cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd root = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  std::vector<double> out(dim * dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) out[i * dim + j] = root(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

std::vector<double> elliptic_decompose(std::span<const double> sigma_product, std::size_t dim,
                                       double ellipticity_alpha) {
  require(ellipticity_alpha > 0.0, ErrorKind::parameter, "ellipticity alpha must be positive");
  require(sigma_product.size() == dim * dim, ErrorKind::shape, "matrix size mismatch");
  std::vector<double> shifted(sigma_product.begin(), sigma_product.end());
  for (std::size_t i = 0; i < dim; ++i) shifted[i * dim + i] -= ellipticity_alpha;
  return symmetric_sqrt(shifted, dim);
}

Coefficients eval_coefficients(const ModelSpec& model, std::span<const double> x, const EmpiricalMeasure& mu) {
  require(x.size() == model.state_dim(), ErrorKind::shape, "state has wrong dimension for model");
  const MeasureSummary m = model.summarize(mu);
  const std::size_t d = model.dim;
  Coefficients c;
  c.drift.assign(d, 0.0);
  model.drift(x.first(d), m, c.drift);
  if (model.elliptic && model.kind == DynamicsKind::first_order) {
    std::vector<double> sh(d * d);
    model.elliptic->sigma_hat(x, m, sh);
    std::vector<double> prod(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        double s = (i == j) ? model.elliptic->ellipticity_alpha : 0.0;
        for (std::size_t k = 0; k < d; ++k) s += sh[i * d + k] * sh[j * d + k];
        prod[i * d + j] = s;
      }
    c.diffusion = symmetric_sqrt(prod, d);
  } else {
    const double s = model.scalar_sigma(m);
    c.scalar = s;
    c.diffusion.assign(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) c.diffusion[i * d + i] = s;
  }
  for (double v : c.drift) require(std::isfinite(v), ErrorKind::model_evaluation, "non-finite drift");
  for (double v : c.diffusion) require(std::isfinite(v), ErrorKind::model_evaluation, "non-finite diffusion");
  return c;
}

double kinetic_sigma(const ModelSpec& model, const EmpiricalMeasure& mu) {
  require(model.kind == DynamicsKind::kinetic && static_cast<bool>(model.scalar_sigma),
          ErrorKind::unsupported_model, "kinetic_rescale needs a kinetic model with scalar diffusion");
  return model.scalar_sigma(model.summarize(mu));
}

ModelSpec kinetic_rescale(const ModelSpec& model, const EmpiricalMeasure& mu) {
  const double s = kinetic_sigma(model, mu);
  require(s != 0.0 && std::isfinite(s), ErrorKind::degeneracy, "sigma(mu) = 0 cannot be rescaled");
  if (s == 1.0) return model;
  ModelSpec out = model;
  out.name = model.name + "_rescaled";
  const std::size_t d = model.dim;
  out.drift = [orig = model.drift, s, d](std::span<const double> x, const MeasureSummary& m, std::span<double> o) {
    double scaled[16];
    std::vector<double> heap;
    std::span<double> sx;
    if (d <= 16) {
      sx = std::span<double>(scaled, d);
    } else {
      heap.resize(d);
      sx = heap;
    }
    for (std::size_t k = 0; k < d; ++k) sx[k] = s * x[k];
    orig(sx, m, o);
    for (std::size_t k = 0; k < d; ++k) o[k] /= s;
  };
  out.scalar_sigma = [](const MeasureSummary&) { return 1.0; };
  out.assumptions.R = model.assumptions.R * std::sqrt(model.assumptions.delta_bound);
  out.parameters["rescaled_by"] = s;
  return out;
}

// ------------------------------------------------------------------ Yosida

namespace {

void tilde_drift(const ModelSpec& model, std::span<const double> z, const MeasureSummary& m, double K,
                 std::span<double> out) {
  model.drift(z, m, out);
  for (std::size_t k = 0; k < z.size(); ++k) out[k] -= 0.5 * K * z[k];
}

double resolvent_residual(const ModelSpec& model, std::span<const double> z, std::span<const double> x,
                          const MeasureSummary& m, double inv_m, double K, std::span<double> r) {
  tilde_drift(model, z, m, K, r);
  double norm2 = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    r[k] = z[k] - inv_m * r[k] - x[k];
    norm2 += r[k] * r[k];
  }
  return std::sqrt(norm2);
}

}  // namespace

std::vector<double> solve_resolvent(const ModelSpec& model, std::span<const double> x, const MeasureSummary& m,
                                    int m_index, double K, const ResolventOptions& opts) {
  require(m_index >= 1, ErrorKind::parameter, "Yosida index m must be >= 1");
  require(model.kind == DynamicsKind::first_order, ErrorKind::unsupported_model,
          "Yosida regularization is defined for first-order models");
  const std::size_t d = x.size();
  const double inv_m = 1.0 / m_index;
  std::vector<double> z(x.begin(), x.end()), r(d), trial(d), rt(d);

  if (d == 1) {
    auto res = [&](double v) {
      double one[1] = {v};
      double out[1];
      resolvent_residual(model, std::span<const double>(one, 1), x, m, inv_m, K, std::span<double>(out, 1));
      return out[0];
    };
    double lo = x[0], hi = x[0];
    double step = 1.0;
    int expand = 0;
    while (res(lo) > 0.0) {
      lo -= step;
      step *= 2.0;
      require(++expand < 200, ErrorKind::nonconvergence, "resolvent bracket not found");
    }
    step = 1.0;
    while (res(hi) < 0.0) {
      hi += step;
      step *= 2.0;
      require(++expand < 400, ErrorKind::nonconvergence, "resolvent bracket not found");
    }
    for (int it = 0; it < opts.max_iterations && hi - lo > 0.0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (res(mid) > 0.0 ? hi : lo) = mid;
    }
    const double rl = std::abs(res(lo)), rh = std::abs(res(hi));
    z[0] = rl <= rh ? lo : hi;
    require(std::min(rl, rh) <= opts.tolerance, ErrorKind::nonconvergence,
            "resolvent residual " + std::to_string(std::min(rl, rh)) + " above tolerance");
    return z;
  }

  double norm = resolvent_residual(model, z, x, m, inv_m, K, r);
  double theta = 1.0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    if (norm <= opts.tolerance) return z;
    for (std::size_t k = 0; k < d; ++k) trial[k] = z[k] - theta * r[k];
    const double tn = resolvent_residual(model, trial, x, m, inv_m, K, rt);
    if (tn < norm) {
      z.swap(trial);
      r.swap(rt);
      norm = tn;
      theta = std::min(1.0, 2.0 * theta);
    } else {
      theta *= 0.5;
      require(theta > 1e-12, ErrorKind::nonconvergence, "resolvent step size collapsed");
    }
  }
  fail(ErrorKind::nonconvergence, "resolvent iteration did not converge");
}

std::vector<double> yosida_drift(const ModelSpec& model, std::span<const double> x, const MeasureSummary& m,
                                 int m_index, double K, const ResolventOptions& opts) {
  const auto z = solve_resolvent(model, x, m, m_index, K, opts);
  std::vector<double> out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = m_index * (z[k] - x[k]);
  return out;
}

ModelSpec yosida_regularize(const ModelSpec& model, int m, double K, const ResolventOptions& opts) {
  require(m >= 1, ErrorKind::parameter, "Yosida index m must be >= 1");
  ModelSpec out = model;
  out.name = model.name + "_yosida" + std::to_string(m);
  out.drift = [base = model, m, K, opts](std::span<const double> x, const MeasureSummary& s, std::span<double> o) {
    const auto bt = yosida_drift(base, x, s, m, K, opts);
    for (std::size_t k = 0; k < x.size(); ++k) o[k] = bt[k] + 0.5 * K * x[k];
  };
  out.parameters["yosida_m"] = m;
  out.parameters["yosida_K"] = K;
  return out;
}

// ----------------------------------------------------------------- catalog

namespace {

// s tanh(|x|/s) x/|x|: 1-Lipschitz, bounded by s.
void radial_bump(std::span<const double> x, double width, double amplitude, std::span<double> out) {
  if (x.size() == 1) {
    out[0] += amplitude * width * std::tanh(x[0] / width);
    return;
  }
  double r2 = 0.0;
  for (double c : x) r2 += c * c;
  const double r = std::sqrt(r2);
  if (r == 0.0) return;
  const double scale = amplitude * width * std::tanh(r / width) / r;
  for (std::size_t k = 0; k < x.size(); ++k) out[k] += scale * x[k];
}

double euclid_norm(std::span<const double> x) {
  if (x.size() == 1) return std::abs(x[0]);
  double s = 0.0;
  for (double c : x) s += c * c;
  return std::sqrt(s);
}

// Features: tanh of each position coordinate, then tanh of the first one.
FeatureFn tanh_features(std::size_t dim) {
  return [dim](std::span<const double> state, std::span<double> out) {
    for (std::size_t k = 0; k < dim; ++k) out[k] = std::tanh(state[k]);
    out[dim] = std::tanh(state[0]);
  };
}

double clamp_sigma(double v, double delta) {
  return std::clamp(v, 1.0 / std::sqrt(delta), std::sqrt(delta));
}

}  // namespace

ModelSpec make_corollary34(const Corollary34Options& o) {
  require(o.dim >= 1 && o.ellipticity_alpha > 0.0 && o.kappa >= 0.0, ErrorKind::parameter,
          "invalid corollary34 options");
  const std::size_t d = o.dim;
  const double w = o.interaction_weight_override >= 0.0 ? o.interaction_weight_override
                                                        : std::sqrt(2.0 * o.slack * o.kappa);
  const double v = std::sqrt(0.5 * o.kappa);
  ModelSpec m;
  m.name = "corollary34";
  m.dim = d;
  m.feature_width = d + 1;
  m.features = tanh_features(d);
  m.drift = [o, w, d](std::span<const double> x, const MeasureSummary& s, std::span<double> out) {
    for (std::size_t k = 0; k < d; ++k) out[k] = -o.confinement * x[k];
    radial_bump(x, o.bump_width, o.bump, out);
    if (w != 0.0)
      for (std::size_t k = 0; k < d; ++k) out[k] += w * s.values[k];
  };
  m.elliptic = EllipticSplit{
      o.ellipticity_alpha,
      [o, v, d](std::span<const double> x, const MeasureSummary& s, std::span<double> out) {
        double diag = o.K0 * o.sigma_width * std::sin(euclid_norm(x.first(d)) / o.sigma_width);
        if (v != 0.0) diag += v * s.values[d];
        diag /= std::sqrt(static_cast<double>(d));
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t k = 0; k < d; ++k) out[k * d + k] = diag;
      }};
  m.assumptions.kappa = o.kappa;
  m.assumptions.K0 = std::max(o.K0, v);
  m.assumptions.K0_tilde = w * std::sqrt(static_cast<double>(d)) + o.K0 * o.sigma_width;
  m.assumptions.K1 = 1.0;
  m.parameters = {{"dim", d},
                  {"ellipticity_alpha", o.ellipticity_alpha},
                  {"kappa", o.kappa},
                  {"confinement", o.confinement},
                  {"bump", o.bump},
                  {"bump_width", o.bump_width},
                  {"K0", o.K0},
                  {"sigma_width", o.sigma_width},
                  {"interaction_weight", w},
                  {"sigma_measure_weight", v},
                  {"certified_phi", {{"l1", 1.0}, {"l2", 1.0}, {"r0", 1.0}}}};
  return m;
}

ModelSpec make_example33(double epsilon) {
  require(epsilon > 0.0, ErrorKind::parameter, "example33 needs epsilon > 0");
  ModelSpec m;
  m.name = "example33";
  m.dim = 1;
  m.feature_width = 1;
  m.features = [](std::span<const double> x, std::span<double> out) { out[0] = std::abs(x[0]) + 1.0; };
  m.drift = [epsilon](std::span<const double> x, const MeasureSummary& s, std::span<double> out) {
    out[0] = -x[0] + epsilon * s.values[0];
  };
  // sigma = eps * a with a = E f >= 1, so sigma^2 = eps^2 + eps^2 (a^2 - 1).
  m.elliptic = EllipticSplit{epsilon * epsilon,
                             [epsilon](std::span<const double>, const MeasureSummary& s, std::span<double> out) {
                               const double a = s.values[0];
                               out[0] = epsilon * std::sqrt(std::max(a * a - 1.0, 0.0));
                             }};
  m.parameters = {{"epsilon", epsilon}};
  return m;
}

ModelSpec make_kinetic(const KineticOptions& o) {
  require(o.dim >= 1 && o.gamma > 0.0 && o.kappa >= 0.0 && o.delta_bound >= 1.0, ErrorKind::parameter,
          "invalid kinetic options");
  const std::size_t d = o.dim;
  const double sk = std::sqrt(o.kappa);
  const double sigma_weight = std::sqrt(o.kappa / static_cast<double>(d));
  ModelSpec m;
  m.name = o.noise == NoiseKind::alpha_stable ? "kinetic_stable" : "kinetic";
  m.dim = d;
  m.kind = DynamicsKind::kinetic;
  m.noise = o.noise;
  m.stable = o.stable;
  m.gamma = o.gamma;
  m.feature_width = d + 1;
  m.features = tanh_features(d);
  m.drift = [o, sk, d](std::span<const double> x, const MeasureSummary& s, std::span<double> out) {
    for (std::size_t k = 0; k < d; ++k) out[k] = -o.confinement * x[k];
    radial_bump(x, o.bump_width, o.bump, out);
    if (sk != 0.0)
      for (std::size_t k = 0; k < d; ++k) out[k] += sk * s.values[k];
  };
  m.scalar_sigma = [o, sigma_weight, d](const MeasureSummary& s) {
    return clamp_sigma(1.0 + sigma_weight * s.values[d], o.delta_bound);
  };
  m.assumptions.kappa = o.kappa;
  m.assumptions.L_b = o.confinement + o.bump;
  m.assumptions.K1 = 0.5 * o.confinement;
  m.assumptions.R = 4.0 * o.bump * o.bump_width / o.confinement;
  m.assumptions.delta_bound = o.delta_bound;
  m.parameters = {{"dim", d},         {"kappa", o.kappa}, {"confinement", o.confinement},
                  {"bump", o.bump},   {"bump_width", o.bump_width}, {"gamma", o.gamma},
                  {"delta_bound", o.delta_bound}};
  if (o.noise == NoiseKind::alpha_stable) m.parameters["stable_alpha"] = o.stable.stable_alpha;
  return m;
}

ModelSpec make_stable(const StableOptions& o) {
  require(o.dim >= 1 && o.kappa >= 0.0 && o.delta_bound >= 1.0, ErrorKind::parameter, "invalid stable options");
  o.stable.validate();
  const std::size_t d = o.dim;
  const double sk = std::sqrt(o.kappa);
  const double sigma_weight = std::sqrt(o.kappa / static_cast<double>(d));
  ModelSpec m;
  m.name = "stable";
  m.dim = d;
  m.noise = NoiseKind::alpha_stable;
  m.stable = o.stable;
  m.feature_width = d + 1;
  m.features = tanh_features(d);
  m.drift = [o, sk, d](std::span<const double> x, const MeasureSummary& s, std::span<double> out) {
    for (std::size_t k = 0; k < d; ++k) out[k] = -o.confinement * x[k];
    if (o.bump != 0.0) radial_bump(x, o.bump_width, o.bump, out);
    if (sk != 0.0)
      for (std::size_t k = 0; k < d; ++k) out[k] += sk * s.values[k];
  };
  m.scalar_sigma = [o, sigma_weight, d](const MeasureSummary& s) {
    return clamp_sigma(o.sigma0 + sigma_weight * s.values[d], o.delta_bound);
  };
  // 2<db, dx> <= -2c r^2 + 2p min(r, 2s) r + 2 sqrt(kappa) W r.
  const double K_h = 2.0 * (o.bump - o.confinement) + (o.kappa > 0.0 ? 1.0 : 0.0);
  m.assumptions.kappa = o.kappa;
  m.assumptions.one_sided_K = K_h;
  m.assumptions.K1 = 2.0 * o.bump + (o.kappa > 0.0 ? 1.0 : 0.0) + 1e-12;
  m.assumptions.K2 = std::max(2.0 * o.confinement - 1.0, 0.0);
  m.assumptions.L_b = o.confinement + o.bump;
  m.assumptions.delta_bound = o.delta_bound;
  m.parameters = {{"dim", d},         {"kappa", o.kappa},   {"confinement", o.confinement},
                  {"bump", o.bump},   {"bump_width", o.bump_width}, {"sigma0", o.sigma0},
                  {"delta_bound", o.delta_bound}, {"stable_alpha", o.stable.stable_alpha}};
  return m;
}

ModelSpec make_linear(std::size_t dim, double theta, double sigma, NoiseKind noise, StableParams stable) {
  require(dim >= 1 && sigma >= 0.0, ErrorKind::parameter, "invalid linear model options");
  ModelSpec m;
  m.name = "linear";
  m.dim = dim;
  m.noise = noise;
  m.stable = stable;
  m.drift = [theta](std::span<const double> x, const MeasureSummary&, std::span<double> out) {
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = -theta * x[k];
  };
  if (noise == NoiseKind::brownian) {
    m.elliptic = EllipticSplit{sigma * sigma, [](std::span<const double>, const MeasureSummary&, std::span<double> out) {
                                 std::fill(out.begin(), out.end(), 0.0);
                               }};
  } else {
    m.scalar_sigma = [sigma](const MeasureSummary&) { return sigma; };
  }
  m.assumptions.one_sided_K = -2.0 * theta;
  m.assumptions.K1 = std::max(-theta, 0.0) + 1e-12;
  m.assumptions.L_b = std::abs(theta);
  m.parameters = {{"dim", dim}, {"theta", theta}, {"sigma", sigma}};
  return m;
}

ModelSpec make_cubic() {
  ModelSpec m;
  m.name = "cubic";
  m.dim = 1;
  m.drift = [](std::span<const double> x, const MeasureSummary&, std::span<double> out) {
    out[0] = -x[0] * x[0] * x[0];
  };
  m.elliptic = EllipticSplit{1.0, [](std::span<const double>, const MeasureSummary&, std::span<double> out) {
                               out[0] = 0.0;
                             }};
  m.assumptions.one_sided_K = 0.0;
  return m;
}

std::vector<std::string> catalog_names() {
  return {"corollary34", "example33", "kinetic", "kinetic_stable", "stable", "linear", "cubic"};
}

namespace {

class ParamReader {
 public:
  ParamReader(const std::string& model, const std::map<std::string, double>& p) : model_(model), p_(p) {}

  double get(const std::string& key, double fallback) {
    seen_.insert(key);
    const auto it = p_.find(key);
    return it == p_.end() ? fallback : it->second;
  }
  std::size_t get_dim(double fallback) {
    const double v = get("dim", fallback);
    require(v >= 1.0 && v == std::floor(v), ErrorKind::configuration, "dim must be a positive integer");
    return static_cast<std::size_t>(v);
  }
  void finish() const {
    for (const auto& [k, v] : p_) {
      require(seen_.count(k) > 0, ErrorKind::configuration,
              "unknown parameter '" + k + "' for model '" + model_ + "'");
    }
  }

 private:
  std::string model_;
  const std::map<std::string, double>& p_;
  std::set<std::string> seen_;
};

}  // namespace

ModelSpec make_model(const std::string& name, const std::map<std::string, double>& params) {
  ParamReader r(name, params);
  ModelSpec m;
  if (name == "corollary34") {
    Corollary34Options o;
    o.dim = r.get_dim(1);
    o.ellipticity_alpha = r.get("ellipticity_alpha", o.ellipticity_alpha);
    o.kappa = r.get("kappa", o.kappa);
    o.confinement = r.get("confinement", o.confinement);
    o.bump = r.get("bump", o.bump);
    o.bump_width = r.get("bump_width", o.bump_width);
    o.K0 = r.get("K0", o.K0);
    o.sigma_width = r.get("sigma_width", o.sigma_width);
    o.interaction_weight_override = r.get("interaction_weight", -1.0);
    m = make_corollary34(o);
  } else if (name == "example33") {
    m = make_example33(r.get("epsilon", 0.5));
  } else if (name == "kinetic" || name == "kinetic_stable") {
    KineticOptions o;
    o.dim = r.get_dim(1);
    o.kappa = r.get("kappa", o.kappa);
    o.confinement = r.get("confinement", o.confinement);
    o.bump = r.get("bump", o.bump);
    o.bump_width = r.get("bump_width", o.bump_width);
    o.gamma = r.get("gamma", o.gamma);
    o.delta_bound = r.get("delta_bound", o.delta_bound);
    if (name == "kinetic_stable") {
      o.noise = NoiseKind::alpha_stable;
      o.stable.stable_alpha = r.get("stable_alpha", 1.5);
    }
    m = make_kinetic(o);
  } else if (name == "stable") {
    StableOptions o;
    o.dim = r.get_dim(1);
    o.kappa = r.get("kappa", o.kappa);
    o.confinement = r.get("confinement", o.confinement);
    o.bump = r.get("bump", o.bump);
    o.bump_width = r.get("bump_width", o.bump_width);
    o.sigma0 = r.get("sigma0", o.sigma0);
    o.delta_bound = r.get("delta_bound", o.delta_bound);
    o.stable.stable_alpha = r.get("stable_alpha", 1.5);
    m = make_stable(o);
  } else if (name == "linear") {
    const std::size_t dim = r.get_dim(1);
    const double theta = r.get("theta", 1.0);
    const double sigma = r.get("sigma", std::sqrt(2.0));
    const double alpha = r.get("stable_alpha", 0.0);
    if (alpha > 0.0) {
      m = make_linear(dim, theta, sigma, NoiseKind::alpha_stable, StableParams{alpha});
    } else {
      m = make_linear(dim, theta, sigma);
    }
  } else if (name == "cubic") {
    m = make_cubic();
  } else {
    fail(ErrorKind::configuration, "unknown model '" + name + "'");
  }
  r.finish();
  m.validate();
  return m;
}

}  // namespace mkv
