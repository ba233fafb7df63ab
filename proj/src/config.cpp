#include "fbsde/config.hpp"

#include <cctype>
#include <climits>
#include <cmath>
#include <fstream>
#include <type_traits>
#include <variant>

#include "fbsde/io.hpp"

namespace fbsde {

namespace {

// One table drives the key list, assignment, and the provenance echo.
using Field =
    std::variant<std::string RunConfig::*, double RunConfig::*,
                 int RunConfig::*, std::uint64_t RunConfig::*,
                 std::vector<double> RunConfig::*>;

struct Entry {
  const char* key;
  Field field;
  bool echoed;  // false: omitted from config_items
};

const std::vector<Entry>& entries() {
  static const std::vector<Entry> t = {
      {"fbsde.run.experiment", &RunConfig::experiment, true},
      {"fbsde.run.seed", &RunConfig::seed, true},
      {"fbsde.run.threads", &RunConfig::threads, false},
      {"fbsde.run.out", &RunConfig::out, false},
      {"fbsde.model.preset", &RunConfig::preset, true},
      {"fbsde.model.manifold", &RunConfig::manifold, true},
      {"fbsde.model.mass", &RunConfig::mass, true},
      {"fbsde.model.kbt", &RunConfig::kbt, true},
      {"fbsde.model.gamma0", &RunConfig::gamma0, true},
      {"fbsde.model.gamma_mod", &RunConfig::gamma_mod, true},
      {"fbsde.model.sigma0", &RunConfig::sigma0, true},
      {"fbsde.model.sigma_mod", &RunConfig::sigma_mod, true},
      {"fbsde.model.drag_rot", &RunConfig::drag_rot, true},
      {"fbsde.model.drag_grad", &RunConfig::drag_grad, true},
      {"fbsde.model.noise_grad", &RunConfig::noise_grad, true},
      {"fbsde.model.force_scale", &RunConfig::force_scale, true},
      {"fbsde.ensemble.t_final", &RunConfig::t_final, true},
      {"fbsde.ensemble.n_paths", &RunConfig::n_paths, true},
      {"fbsde.ensemble.masses", &RunConfig::masses, true},
      {"fbsde.ensemble.moment_p", &RunConfig::moment_p, true},
      {"fbsde.ensemble.moment_q", &RunConfig::moment_q, true},
      {"fbsde.ensemble.thin", &RunConfig::thin, true},
      {"fbsde.ensemble.drift_horizon", &RunConfig::drift_horizon, true},
      {"fbsde.ensemble.x0", &RunConfig::x0, true},
      {"fbsde.ensemble.v0", &RunConfig::v0, true},
      {"fbsde.ensemble.chart", &RunConfig::chart, true},
      {"fbsde.ensemble.weight", &RunConfig::weight, true},
      {"fbsde.ensemble.control_scale", &RunConfig::control_scale, true},
      {"fbsde.ensemble.bias_paths", &RunConfig::bias_paths, true},
      {"fbsde.integrator.scheme", &RunConfig::scheme, true},
      {"fbsde.integrator.dt", &RunConfig::dt, true},
      {"fbsde.integrator.n_steps", &RunConfig::n_steps, true},
      {"fbsde.integrator.reortho_every", &RunConfig::reortho_every, true},
      {"fbsde.integrator.sv_scale", &RunConfig::sv_scale, true},
      {"fbsde.integrator.store_stride", &RunConfig::store_stride, true},
  };
  return t;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* want, const std::string& where) {
  throw ConfigError(key + ": expected " + want + ", got '" + value + "' (" +
                    where + ")");
}

double parse_double(const std::string& key, const std::string& value,
                    const std::string& where) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(value, &pos);
    if (trim(value.substr(pos)).empty() && std::isfinite(x)) return x;
  } catch (const std::exception&) {
  }
  bad_value(key, value, "a number", where);
}

long long parse_ll(const std::string& key, const std::string& value,
                   const std::string& where, const char* want) {
  try {
    std::size_t pos = 0;
    const long long x = std::stoll(value, &pos);
    if (trim(value.substr(pos)).empty()) return x;
  } catch (const std::exception&) {
  }
  bad_value(key, value, want, where);
}

int parse_int(const std::string& key, const std::string& value,
              const std::string& where) {
  const long long x = parse_ll(key, value, where, "an integer");
  if (x < INT_MIN || x > INT_MAX) bad_value(key, value, "an integer", where);
  return static_cast<int>(x);
}

std::uint64_t parse_uint(const std::string& key, const std::string& value,
                         const std::string& where) {
  const long long x =
      parse_ll(key, value, where, "a non-negative integer");
  if (x < 0) bad_value(key, value, "a non-negative integer", where);
  return static_cast<std::uint64_t>(x);
}

std::vector<double> parse_list(const std::string& key,
                               const std::string& value,
                               const std::string& where) {
  std::vector<double> out;
  std::size_t start = 0;
  if (trim(value).empty()) return out;
  while (true) {
    const std::size_t comma = value.find(',', start);
    const std::string item = trim(value.substr(start, comma - start));
    out.push_back(parse_double(key, item, where));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string format_list(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0) out += ",";
    out += format_double(xs[i]);
  }
  return out;
}

bool known_name(const std::vector<std::string>& names, const std::string& s) {
  for (const auto& n : names)
    if (n == s) return true;
  return false;
}

std::string joined(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) out += ", ";
    out += names[i];
  }
  return out;
}

const std::vector<std::string>& weight_names() {
  static const std::vector<std::string> names = {"zero", "one", "sin1",
                                                 "height"};
  return names;
}

const std::vector<std::string>& scheme_names() {
  static const std::vector<std::string> names = {"auto", "em", "exp_ou",
                                                 "limit"};
  return names;
}

// Name checks applied after a generic assignment succeeds.
void check_names(const RunConfig& cfg, const std::string& key,
                 const std::string& where) {
  if (key == "fbsde.run.experiment" &&
      !known_name(experiment_names(), cfg.experiment))
    throw ConfigError(key + ": unknown experiment '" + cfg.experiment +
                      "' (" + where + "); known: " +
                      joined(experiment_names()));
  if (key == "fbsde.integrator.scheme" && !cfg.scheme.empty() &&
      !known_name(scheme_names(), cfg.scheme))
    throw ConfigError(key + ": unknown scheme '" + cfg.scheme + "' (" +
                      where + "); known: " + joined(scheme_names()));
  if (key == "fbsde.ensemble.weight" &&
      !known_name(weight_names(), cfg.weight))
    throw ConfigError(key + ": unknown weight '" + cfg.weight + "' (" +
                      where + "); known: " + joined(weight_names()));
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {
      "simulate",  "momentum", "momentum-pointwise",
      "quad-check", "converge", "drift",
      "bm-check",  "vertical-check", "validate"};
  return names;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const Entry& e : entries()) out.push_back(e.key);
    return out;
  }();
  return keys;
}

void apply_assignment(RunConfig& cfg, const std::string& key,
                      const std::string& value, const std::string& where) {
  for (const Entry& e : entries()) {
    if (key != e.key) continue;
    std::visit(
        [&](auto member) {
          using T = std::remove_cvref_t<decltype(cfg.*member)>;
          if constexpr (std::is_same_v<T, std::string>) {
            cfg.*member = (value == "auto" &&
                           key == std::string("fbsde.integrator.scheme"))
                              ? std::string()
                              : trim(value);
          } else if constexpr (std::is_same_v<T, double>) {
            cfg.*member = parse_double(key, value, where);
          } else if constexpr (std::is_same_v<T, int>) {
            cfg.*member = parse_int(key, value, where);
          } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            cfg.*member = parse_uint(key, value, where);
          } else {
            cfg.*member = parse_list(key, value, where);
          }
        },
        e.field);
    check_names(cfg, key, where);
    return;
  }
  throw ConfigError("unknown key '" + key + "' (" + where +
                    "); known keys: " + joined(config_keys()));
}

void load_config_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const std::size_t eq = line.find('=');
    const std::string where = path + ":" + std::to_string(lineno);
    if (eq == std::string::npos)
      throw ConfigError("expected 'key = value' (" + where + ")");
    apply_assignment(cfg, trim(line.substr(0, eq)),
                     trim(line.substr(eq + 1)), where);
  }
}

std::vector<std::pair<std::string, std::string>> config_items(
    const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Entry& e : entries()) {
    if (!e.echoed) continue;
    std::string value = std::visit(
        [&](auto member) -> std::string {
          using T = std::remove_cvref_t<decltype(cfg.*member)>;
          if constexpr (std::is_same_v<T, std::string>) {
            return cfg.*member;
          } else if constexpr (std::is_same_v<T, double>) {
            return format_double(cfg.*member);
          } else if constexpr (std::is_same_v<T, std::vector<double>>) {
            return format_list(cfg.*member);
          } else {
            return std::to_string(cfg.*member);
          }
        },
        e.field);
    if (e.key == std::string("fbsde.integrator.scheme") && value.empty())
      value = "auto";
    out.emplace_back(e.key, std::move(value));
  }
  return out;
}

ScalarField weight_by_name(const std::string& name, const ManifoldModel& m) {
  if (name == "zero")
    return [](int, const Vec&) { return 0.0; };
  if (name == "one")
    return [](int, const Vec&) { return 1.0; };
  if (name == "sin1")
    return [&m](int chart, const Vec& x) {
      return std::sin(m.embed(chart, x)[0]);
    };
  if (name == "height")
    return [&m](int chart, const Vec& x) {
      return m.height(chart, x, nullptr, nullptr);
    };
  throw ConfigError("unknown weight '" + name +
                    "'; known: " + joined(weight_names()));
}

Scheme resolved_scheme(const RunConfig& cfg) {
  if (!cfg.scheme.empty()) return scheme_by_name(cfg.scheme);
  const std::string& e = cfg.experiment;
  if (e == "momentum" || e == "momentum-pointwise" || e == "quad-check")
    return Scheme::exp_ou;
  return Scheme::heun_limit;
}

ResolvedRun resolve_run(const RunConfig& cfg) {
  ResolvedRun run;
  try {
    run.manifold = &manifold_by_name(cfg.manifold);
  } catch (const std::invalid_argument& err) {
    throw ConfigError(std::string("fbsde.model.manifold: ") + err.what());
  }
  const int n = run.manifold->dim();

  PresetParams params;
  params.gamma0 = cfg.gamma0;
  params.gamma_mod = cfg.gamma_mod;
  params.sigma0 = cfg.sigma0;
  params.sigma_mod = cfg.sigma_mod;
  params.drag_rot = cfg.drag_rot;
  params.drag_grad = cfg.drag_grad;
  params.noise_grad = cfg.noise_grad;
  params.force_scale = cfg.force_scale;
  params.kbt = cfg.kbt;
  try {
    run.model = make_preset(cfg.preset, *run.manifold, params);
  } catch (const std::invalid_argument& err) {
    throw ConfigError(std::string("fbsde.model.preset: ") + err.what());
  }
  if (cfg.mass <= 0.0)
    throw ConfigError("fbsde.model.mass: must be positive");
  run.model.mass = cfg.mass;
  validate_model(run.model);

  const bool moment_sweep = cfg.experiment == "momentum" ||
                            cfg.experiment == "momentum-pointwise" ||
                            cfg.experiment == "quad-check";
  Scheme scheme = Scheme::heun_limit;
  try {
    scheme = resolved_scheme(cfg);
  } catch (const std::invalid_argument& err) {
    throw ConfigError(std::string("fbsde.integrator.scheme: ") + err.what());
  }
  if (moment_sweep && scheme == Scheme::heun_limit)
    throw ConfigError(
        "fbsde.integrator.scheme: moment sweeps integrate mass systems; "
        "use em or exp_ou");

  EnsembleSpec ens;
  if (!cfg.masses.empty()) ens.masses = cfg.masses;
  ens.t_final = cfg.t_final;
  ens.n_paths = cfg.n_paths;
  ens.master_seed = cfg.seed;
  ens.moment_p = cfg.moment_p;
  ens.moment_q = cfg.moment_q;
  ens.thin = cfg.thin;
  ens.mass_scheme = scheme == Scheme::heun_limit ? Scheme::exp_ou : scheme;
  ens.dt_limit = cfg.dt;
  ens.drift_horizon = cfg.drift_horizon;
  ens.n_threads = cfg.threads;
  ens.chart0 = cfg.chart;
  if (cfg.chart < 0 || cfg.chart >= run.manifold->chart_count())
    throw ConfigError("fbsde.ensemble.chart: " + run.manifold->name() +
                      " has charts 0.." +
                      std::to_string(run.manifold->chart_count() - 1));
  if (!cfg.x0.empty()) {
    if (static_cast<int>(cfg.x0.size()) != n)
      throw ConfigError("fbsde.ensemble.x0: expected " + std::to_string(n) +
                        " coordinates");
    ens.x0 = Eigen::Map<const Vec>(cfg.x0.data(), n);
  }
  if (!cfg.v0.empty()) {
    if (static_cast<int>(cfg.v0.size()) != n)
      throw ConfigError("fbsde.ensemble.v0: expected " + std::to_string(n) +
                        " components");
    ens.v0 = Eigen::Map<const Vec>(cfg.v0.data(), n);
  }
  if (cfg.bias_paths < 0)
    throw ConfigError("fbsde.ensemble.bias_paths: must be non-negative");
  if (cfg.control_scale <= 0.0)
    throw ConfigError("fbsde.ensemble.control_scale: must be positive");
  try {
    validate_ensemble(ens);
  } catch (const std::invalid_argument& err) {
    throw ConfigError(std::string("fbsde.ensemble: ") + err.what());
  }
  run.ens = ens;

  if (cfg.n_steps < 0)
    throw ConfigError("fbsde.integrator.n_steps: must be non-negative");
  if (cfg.reortho_every < 0)
    throw ConfigError("fbsde.integrator.reortho_every: must be non-negative");
  if (cfg.store_stride < 1)
    throw ConfigError("fbsde.integrator.store_stride: must be at least 1");
  run.sim = {scheme, cfg.reortho_every, cfg.sv_scale};
  run.weight = weight_by_name(cfg.weight, *run.manifold);
  return run;
}

}  // namespace fbsde
