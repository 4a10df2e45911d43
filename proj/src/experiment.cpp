#include "mkv/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <ostream>
#include <set>
#include <sstream>

#include "mkv/errors.hpp"
#include "mkv/kernels.hpp"
#include "mkv/models.hpp"
#include "mkv/verify/verify.hpp"

#ifndef MKV_VERSION
#define MKV_VERSION "dev"
#endif

namespace mkv {

namespace fs = std::filesystem;
using nlohmann::json;

std::string code_version() { return MKV_VERSION; }

std::string FlatConfig::where(const std::string& key) const {
  const auto it = lines.find(key);
  if (it == lines.end()) return source + ": key '" + key + "'";
  return source + ":" + std::to_string(it->second) + ": key '" + key + "'";
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool valid_key(const std::string& k) {
  if (k.empty() || k.front() == '.' || k.back() == '.' || k.find("..") != std::string::npos) return false;
  return std::all_of(k.begin(), k.end(),
                     [](unsigned char c) { return std::isalnum(c) || c == '_' || c == '.' || c == '-'; });
}

[[noreturn]] void config_error(const std::string& where, const std::string& what) {
  fail(ErrorKind::configuration, where + ": " + what);
}

void flatten(const json& j, const std::string& prefix, FlatConfig& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    return;
  }
  std::string value;
  if (j.is_string()) {
    value = j.get<std::string>();
  } else if (j.is_array()) {
    for (const auto& e : j) {
      if (!e.is_number()) config_error(out.source, "key '" + prefix + "': arrays may only hold numbers");
      if (!value.empty()) value += ",";
      value += e.dump();
    }
  } else if (j.is_null()) {
    config_error(out.source, "key '" + prefix + "' is null");
  } else {
    value = j.dump();
  }
  if (!valid_key(prefix)) config_error(out.source, "invalid key '" + prefix + "'");
  out.values[prefix] = value;
}

// Typed access with a record of consumed keys, so leftovers can be reported.
class Reader {
 public:
  explicit Reader(const FlatConfig& f) : f_(f) {}

  bool has(const std::string& k) const { return f_.values.count(k) > 0; }

  std::optional<std::string> str(const std::string& k) {
    const auto it = f_.values.find(k);
    if (it == f_.values.end()) return std::nullopt;
    used_.insert(k);
    return it->second;
  }

  double num(const std::string& k, double fallback) {
    const auto s = str(k);
    if (!s) return fallback;
    return parse_double(k, *s);
  }

  std::uint64_t count(const std::string& k, std::uint64_t fallback) {
    const auto s = str(k);
    if (!s) return fallback;
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
    if (ec != std::errc() || p != s->data() + s->size())
      config_error(f_.where(k), "expected a non-negative integer, got '" + *s + "'");
    return v;
  }

  bool flag(const std::string& k, bool fallback) {
    const auto s = str(k);
    if (!s) return fallback;
    if (*s == "true" || *s == "1") return true;
    if (*s == "false" || *s == "0") return false;
    config_error(f_.where(k), "expected true or false, got '" + *s + "'");
  }

  std::vector<double> list(const std::string& k, std::vector<double> fallback) {
    const auto s = str(k);
    if (!s) return fallback;
    std::vector<double> out;
    std::stringstream ss(*s);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(parse_double(k, trim(tok)));
    if (out.empty()) config_error(f_.where(k), "empty list");
    return out;
  }

  std::map<std::string, double> prefixed(const std::string& prefix) {
    std::map<std::string, double> out;
    for (const auto& [k, v] : f_.values) {
      if (k.rfind(prefix, 0) != 0) continue;
      used_.insert(k);
      out[k.substr(prefix.size())] = parse_double(k, v);
    }
    return out;
  }

  void finish() const {
    for (const auto& [k, v] : f_.values)
      if (!used_.count(k)) config_error(f_.where(k), "unknown key");
  }

  const FlatConfig& flat() const { return f_; }

 private:
  double parse_double(const std::string& k, const std::string& s) const {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
      config_error(f_.where(k), "expected a number, got '" + s + "'");
    return v;
  }

  const FlatConfig& f_;
  std::set<std::string> used_;
};

}  // namespace

FlatConfig parse_config_text(const std::string& text, const std::string& source) {
  FlatConfig out;
  out.source = source;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string at = source + ":" + std::to_string(lineno);
    std::string body = line;
    if (const auto hash = body.find('#'); hash != std::string::npos) body.resize(hash);
    body = trim(body);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) config_error(at, "expected 'key = value', got '" + trim(line) + "'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (!valid_key(key)) config_error(at, "invalid key '" + key + "'");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (value.empty()) config_error(at, "key '" + key + "' has no value");
    if (out.values.count(key))
      config_error(at, "duplicate key '" + key + "' (first set on line " + std::to_string(out.lines[key]) + ")");
    out.values[key] = value;
    out.lines[key] = lineno;
  }
  return out;
}

FlatConfig parse_config_json(const std::string& text, const std::string& source) {
  FlatConfig out;
  out.source = source;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    config_error(source, e.what());
  }
  if (!j.is_object()) config_error(source, "top level must be an object");
  // A run manifest carries the resolved configuration under "config".
  if (j.contains("config") && j.contains("files") && j["config"].is_object()) j = j["config"];
  flatten(j, "", out);
  return out;
}

FlatConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorKind::configuration, path + ": cannot open config file");
  const std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') return parse_config_json(text, path);
  return parse_config_text(text, path);
}

std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::rates: return "rates";
    case Experiment::simulate: return "simulate";
    case Experiment::couple: return "couple";
    case Experiment::fixed_point: return "fixed_point";
    case Experiment::phase: return "phase";
    case Experiment::verify: return "verify";
  }
  return "?";
}

Experiment experiment_from_string(const std::string& name) {
  std::string n = name;
  std::replace(n.begin(), n.end(), '-', '_');
  for (auto e : {Experiment::rates, Experiment::simulate, Experiment::couple, Experiment::fixed_point,
                 Experiment::phase, Experiment::verify})
    if (to_string(e) == n) return e;
  fail(ErrorKind::configuration, "unknown experiment '" + name + "'");
}

ExperimentConfig make_experiment(const FlatConfig& flat, const CliOverrides& cli) {
  Reader r(flat);
  ExperimentConfig c;
  c.resolved = flat.values;

  if (const auto e = r.str("experiment")) {
    Experiment from_file;
    try {
      from_file = experiment_from_string(*e);
    } catch (const Error& err) {
      config_error(flat.where("experiment"), err.what());
    }
    if (cli.experiment && *cli.experiment != from_file)
      config_error(flat.where("experiment"), "config is for '" + *e + "' but the subcommand is '" +
                                                 std::string(to_string(*cli.experiment)) + "'");
    c.experiment = from_file;
  }
  if (cli.experiment) c.experiment = *cli.experiment;
  c.resolved["experiment"] = std::string(to_string(c.experiment));

  if (const auto m = r.str("model")) c.model = *m;
  c.model_params = r.prefixed("model.");
  c.model2_params = r.prefixed("model2.");

  const std::uint64_t default_seed = c.experiment == Experiment::verify ? VerifyOptions{}.seed : 1;
  c.seed = r.count("seed", default_seed);
  if (cli.seed) c.seed = *cli.seed;
  c.resolved["seed"] = std::to_string(c.seed);

  c.output_dir = r.str("output_dir").value_or(c.output_dir);
  if (cli.output_dir) c.output_dir = *cli.output_dir;
  c.resolved["output_dir"] = c.output_dir;

  SimConfig& s = c.sim;
  s.h = r.num("sim.h", s.h);
  s.T = r.num("sim.T", s.T);
  s.N = r.count("sim.N", s.N);
  s.couple_threshold = r.num("sim.couple_threshold", s.couple_threshold);
  s.burn_in = r.num("sim.burn_in", s.burn_in);
  s.window = r.num("sim.window", s.window);
  s.tol_stationary = r.num("sim.tol_stationary", s.tol_stationary);
  s.record_dt = r.num("sim.record_dt", s.record_dt);
  s.start_step = r.count("sim.start_step", s.start_step);
  if (const auto e = r.str("sim.exec")) {
    if (*e == "serial") {
      s.exec = Exec::serial;
    } else if (*e != "parallel") {
      config_error(flat.where("sim.exec"), "expected serial or parallel");
    }
  }
  if (const auto th = r.count("sim.threads", 0); th > 0) set_threads(static_cast<int>(th));
  s.seed = c.seed;
  try {
    s.validate();
  } catch (const Error& e) {
    config_error(flat.source, e.what());
  }

  c.init_mean = r.num("init.mean", c.init_mean);
  c.init_sd = r.num("init.sd", c.init_sd);
  c.init_file = r.str("init.file").value_or("");

  const std::string phi_kind = r.str("rates.phi").value_or("piecewise");
  if (phi_kind == "pure_dissipative") {
    c.phi = PhiSpec::pure_dissipative(r.num("rates.l2", 1.0));
  } else if (phi_kind == "piecewise") {
    c.phi.l1 = r.num("rates.l1", c.phi.l1);
    c.phi.l2 = r.num("rates.l2", c.phi.l2);
    c.phi.r0 = r.num("rates.r0", c.phi.r0);
  } else {
    config_error(flat.where("rates.phi"), "expected piecewise or pure_dissipative");
  }
  c.ellipticity_alpha = r.num("rates.alpha", c.ellipticity_alpha);
  ThresholdInputs& t = c.thresholds;
  if (const auto g = r.str("rates.regime")) {
    try {
      t.regime = regime_from_string(*g);
    } catch (const Error& e) {
      config_error(flat.where("rates.regime"), e.what());
    }
  }
  c.thresholds_from_phi = t.regime == Regime::brownian_first_order && !r.has("rates.drift_constant") &&
                          !r.has("rates.c0") && !r.has("rates.lambda0");
  t.drift_constant = r.num("rates.drift_constant", t.drift_constant);
  t.c0 = r.num("rates.c0", t.c0);
  t.lambda0 = r.num("rates.lambda0", t.lambda0);
  t.stable_alpha = r.num("rates.stable_alpha", t.stable_alpha);
  t.empirical_constants = r.flag("rates.empirical", t.empirical_constants);
  t.grid_points = r.count("rates.grid_points", t.grid_points);
  t.bisection_iterations = static_cast<int>(r.count("rates.bisection_iterations", t.bisection_iterations));

  c.couple_kind = r.str("couple.kind").value_or(c.couple_kind);
  if (c.couple_kind != "contraction" && c.couple_kind != "time_change")
    config_error(flat.where("couple.kind"), "expected contraction or time_change");
  c.contraction.separation = r.num("couple.separation", c.contraction.separation);
  c.contraction.sd = r.num("couple.sd", c.contraction.sd);
  c.contraction.checkpoints = r.list("couple.checkpoints", c.contraction.checkpoints);
  c.contraction.gamma_pairs = r.count("couple.gamma_pairs", 0);
  c.time_change_checkpoints = r.list("couple.time_change_checkpoints", c.time_change_checkpoints);

  c.fixed_point.max_iter = static_cast<int>(r.count("fixed_point.max_iter", c.fixed_point.max_iter));
  c.fixed_point.gap_tolerance = r.num("fixed_point.gap_tolerance", c.fixed_point.gap_tolerance);

  c.epsilon = r.num("phase.epsilon", c.epsilon);
  if (const auto m = r.str("phase.mode")) {
    if (*m == "closed_form") {
      c.phase_mode = Example33Mode::closed_form;
    } else if (*m != "simulate") {
      config_error(flat.where("phase.mode"), "expected simulate or closed_form");
    }
  }

  c.only = r.str("verify.only").value_or("");
  if (cli.only) {
    c.only = *cli.only;
    c.resolved["verify.only"] = c.only;
  }
  c.threads_high = static_cast<int>(r.count("verify.threads_high", 8));

  r.finish();
  return c;
}

namespace {

class Outputs {
 public:
  explicit Outputs(const std::string& dir) : dir_(dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    const fs::path probe = dir_ / ".mkv_write_probe";
    std::ofstream test(probe);
    if (ec || !test) fail(ErrorKind::configuration, "output_dir '" + dir + "' is not writable");
    test.close();
    fs::remove(probe, ec);
  }

  std::string path(const std::string& name) {
    files_.push_back(name);
    return (dir_ / name).string();
  }

  void json_file(const std::string& name, const json& j) {
    std::ofstream os(path(name));
    require(static_cast<bool>(os), ErrorKind::io, "cannot write " + name);
    os << j.dump(2) << "\n";
  }

  void series(const RunResult& r, const std::string& prefix = "series_") {
    for (const auto& [name, values] : r.series) write_series_csv(path(prefix + name + ".csv"), r, name);
  }

  const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

EmpiricalMeasure initial_cloud(const ExperimentConfig& c, const ModelSpec& m) {
  if (!c.init_file.empty()) {
    EmpiricalMeasure mu = read_csv(c.init_file);
    require(mu.dim() == m.state_dim(), ErrorKind::configuration,
            "init.file has dimension " + std::to_string(mu.dim()) + ", model state needs " +
                std::to_string(m.state_dim()));
    return mu;
  }
  return sample_gaussian_cloud(c.sim.N, m.state_dim(), c.init_mean, c.init_sd, c.seed, 7);
}

std::string normalization_for(const ModelSpec& m) {
  return std::string(describe(m.stable.normalization));
}

bool brownian_first_order(const ModelSpec& m) {
  return m.kind == DynamicsKind::first_order && m.noise == NoiseKind::brownian && m.elliptic.has_value();
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& c, std::ostream& out) {
  ExperimentOutcome res;
  Outputs files(c.output_dir);
  json manifest = {{"experiment", std::string(to_string(c.experiment))},
                   {"code_version", code_version()},
                   {"seed", c.seed},
                   {"noise_normalization", std::string(describe(StableNormalization::laplace_exponent_plain))},
                   {"config", c.resolved}};

  auto model_block = [&](const ModelSpec& m) {
    manifest["model"] = m.name;
    manifest["parameters"] = m.parameters;
    manifest["sim"] = to_json(c.sim);
    manifest["noise_normalization"] = normalization_for(m);
  };

  switch (c.experiment) {
    case Experiment::rates: {
      json j;
      ThresholdInputs in = c.thresholds;
      if (c.thresholds_from_phi) {
        const auto p = make_rate_profile(c.phi, c.ellipticity_alpha);
        j = {{"C1", p.C1}, {"C2", p.C2}, {"K", p.K}, {"c0", p.c0}, {"lambda0", p.lambda0},
             {"ellipticity_alpha", p.ellipticity_alpha}};
        in.drift_constant = p.K;
        in.c0 = p.c0;
        in.lambda0 = p.lambda0;
      }
      const json scan = to_json(threshold_scan(in));
      for (const auto& [k, v] : scan.items()) j[k] = v;
      res.report = j;
      out << j.dump(2) << "\n";
      break;
    }
    case Experiment::simulate: {
      const ModelSpec m = make_model(c.model, c.model_params);
      model_block(m);
      const RunResult r = run_mckean_vlasov(m, initial_cloud(c, m), c.sim);
      files.series(r);
      write_csv(files.path("terminal.csv"), r.terminal.front());
      json last = json::object();
      for (const auto& [name, v] : r.series)
        if (!v.empty()) last[name] = v.back();
      res.report = {{"diverged", r.diverged},
                    {"steps_taken", r.steps_taken},
                    {"end_step", r.end_step},
                    {"final", last},
                    {"run", r.manifest}};
      if (r.diverged) {
        res.report["blowup_time"] = r.blowup_time;
        res.verdict = Verdict::inconclusive;
        out << "diverged at t = " << r.blowup_time << "\n";
      } else {
        out << "completed " << r.steps_taken << " steps; E|X_T| = " << last.value("mean_abs", 0.0) << "\n";
      }
      break;
    }
    case Experiment::couple: {
      const ModelSpec m = make_model(c.model, c.model_params);
      model_block(m);
      RunResult run;
      if (c.couple_kind == "contraction") {
        ContractionInputs in = c.contraction;
        if (brownian_first_order(m)) in.phi = c.phi;
        if (in.gamma_pairs > 0) in.gamma_config = c.sim;
        const auto rep = contraction_report(m, c.sim, in, &run);
        res.report = rep.to_json();
        res.verdict = rep.verdict;
        for (const auto& ch : rep.checks)
          out << "t = " << ch.t << ": " << ch.lhs << " <= " << ch.rhs << (ch.ok ? "" : "  FAILED") << "\n";
        out << "fitted rate " << rep.lambda0_hat << "\n";
      } else {
        auto p2 = c.model_params;
        for (const auto& [k, v] : c.model2_params) p2[k] = v;
        const ModelSpec m2 = make_model(c.model, p2);
        manifest["parameters_b"] = m2.parameters;
        const EmpiricalMeasure eta = initial_cloud(c, m);
        const Lemma51Inputs in{eta, eta, eta, eta, c.time_change_checkpoints};
        const auto rep = lemma51_check(m, m2, in, c.sim, &run);
        res.report = rep.to_json();
        res.verdict = rep.verdict;
        for (const auto& ch : rep.checks)
          out << "t = " << ch.t << ": " << ch.lhs << " <= " << ch.rhs << (ch.ok ? "" : "  FAILED") << "\n";
      }
      files.series(run);
      out << "verdict: " << to_string(res.verdict) << "\n";
      break;
    }
    case Experiment::fixed_point: {
      const ModelSpec m = make_model(c.model, c.model_params);
      model_block(m);
      const auto fp = gamma_fixed_point(m, initial_cloud(c, m), c.sim, c.fixed_point);
      {
        std::ofstream os(files.path("gaps.csv"));
        os << "iteration,gap,window_w1\n" << std::setprecision(17);
        for (std::size_t k = 0; k < fp.gaps.size(); ++k)
          os << k + 1 << ',' << fp.gaps[k] << ',' << (k < fp.stationarity.size() ? fp.stationarity[k] : 0.0) << '\n';
      }
      write_csv(files.path("mu_star.csv"), fp.mu_star);
      res.report = {{"gaps", fp.gaps},
                    {"window_w1", fp.stationarity},
                    {"warnings", fp.warnings},
                    {"converged", fp.converged}};
      res.verdict = fp.converged ? Verdict::pass : Verdict::fail;
      for (std::size_t k = 0; k < fp.gaps.size(); ++k) out << "iteration " << k + 1 << ": gap " << fp.gaps[k] << "\n";
      for (const auto& w : fp.warnings) out << "warning: " << w << "\n";
      out << (fp.converged ? "converged" : "not converged") << "\n";
      break;
    }
    case Experiment::phase: {
      manifest["model"] = "example33";
      manifest["parameters"] = {{"epsilon", c.epsilon}};
      manifest["sim"] = to_json(c.sim);
      RunResult run;
      const auto rep = example33(c.epsilon, c.phase_mode, c.sim, &run);
      if (rep.simulated) files.series(run);
      res.report = rep.to_json();
      res.verdict = rep.verdict;
      out << "epsilon = " << c.epsilon << " (epsilon* = " << rep.epsilon_star << "): " << rep.regime << "\n";
      if (rep.no_invariant_measure) out << "no invariant measure\n";
      if (rep.simulated)
        out << "m(T) = " << rep.m_hat_T << ", E|X| growth T/2 -> T: " << rep.growth_ratio
            << (rep.divergence_detected ? " (divergence)" : "") << "\n";
      break;
    }
    case Experiment::verify: {
      VerifyOptions o;
      o.seed = c.seed;
      o.only = c.only;
      o.threads_high = c.threads_high;
      const auto results = verify_suite(o, &out);
      out << "\n" << format_table(results);
      res.report = to_json(results);
      bool all = true;
      for (const auto& r : results) all = all && r.pass;
      res.verdict = all ? Verdict::pass : Verdict::fail;
      break;
    }
  }

  files.json_file("report.json", res.report);
  res.exit_code = res.verdict == Verdict::fail ? exit_fail : exit_ok;
  manifest["verdict"] = std::string(to_string(res.verdict));
  manifest["exit_code"] = res.exit_code;
  auto listed = files.files();
  listed.push_back("manifest.json");
  manifest["files"] = listed;
  files.json_file("manifest.json", manifest);
  res.files = files.files();
  return res;
}

}  // namespace mkv
