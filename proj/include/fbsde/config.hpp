#pragma once
// Run configuration: a flat "fbsde.section.key = value" model shared by
// config files and command-line overrides, resolved into the manifold,
// model, ensemble, and integrator structures the experiments consume.
//
// Precedence, lowest to highest: built-in defaults, config file, the
// FBSDE_THREADS environment variable, --set assignments, dedicated flags.
// Resolved runs echo every setting except the thread count and output
// directory, so written results are independent of where and how wide a
// run executed.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fbsde/engine.hpp"
#include "fbsde/experiments.hpp"
#include "fbsde/fields.hpp"
#include "fbsde/manifold.hpp"

namespace fbsde {

// Raised for malformed files, unknown keys, and invalid values; the CLI
// reports the message and exits with status 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raw settings under their file keys ("fbsde.model.gamma0"); config_keys()
// lists every recognized key.  Empty strings and vectors mean "use the
// built-in default for the resolved run".
struct RunConfig {
  // fbsde.run
  std::string experiment;  // filled from the subcommand when absent
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out = "out";
  // fbsde.model
  std::string preset = "bm";
  std::string manifold = "torus2";
  double mass = 1e-2;
  double kbt = 1.0;
  double gamma0 = 1.0;
  double gamma_mod = 0.0;
  double sigma0 = 1.0;
  double sigma_mod = 0.0;
  double drag_rot = 0.0;
  double drag_grad = 0.0;
  double noise_grad = 0.0;
  double force_scale = 0.0;
  // fbsde.ensemble
  double t_final = 1.0;
  int n_paths = 2000;
  std::vector<double> masses;  // empty: the default five-point sweep
  int moment_p = 2;
  int moment_q = 2;
  double thin = 0.1;
  double drift_horizon = 0.05;
  std::vector<double> x0;  // empty: manifold-specific default start
  std::vector<double> v0;  // empty: zero
  int chart = 0;
  std::string weight = "one";
  double control_scale = 10.0;
  int bias_paths = 200;
  // fbsde.integrator
  std::string scheme;  // empty: per-experiment default
  double dt = 1e-3;
  int n_steps = 1000;
  int reortho_every = 1;
  double sv_scale = 1.0;
  int store_stride = 1;
};

// Experiment names accepted by fbsde.run.experiment, in CLI order.
const std::vector<std::string>& experiment_names();

// Every recognized key, grouped by section.
const std::vector<std::string>& config_keys();

// Applies one "key = value" assignment.  `where` names the source for
// error messages ("--set", "run.ini:12").  Throws ConfigError for unknown
// keys and unparsable values.
void apply_assignment(RunConfig& cfg, const std::string& key,
                      const std::string& value, const std::string& where);

// Reads a "key = value" file; '#' starts a comment, blank lines are
// skipped.  Throws ConfigError with the offending line number.
void load_config_file(RunConfig& cfg, const std::string& path);

// Key-value echo of a configuration in config_keys() order, for output
// headers.  fbsde.run.threads and fbsde.run.out are omitted; unset fields
// print their resolved defaults (the scheme prints "auto").
std::vector<std::pair<std::string, std::string>> config_items(
    const RunConfig& cfg);

// Scalar weight fields for the quadratic momentum integral: "zero", "one",
// "sin1" (sine of the first embedding coordinate), "height".
ScalarField weight_by_name(const std::string& name, const ManifoldModel& m);

// The integrator scheme a configuration selects: the explicit setting when
// present, else the experiment's default (moment sweeps integrate the mass
// systems with the exact velocity update, everything else runs the limit).
Scheme resolved_scheme(const RunConfig& cfg);

// A configuration resolved against the registries and validated.
struct ResolvedRun {
  const ManifoldModel* manifold = nullptr;
  ModelSpec model;
  EnsembleSpec ens;
  SimOptions sim;
  ScalarField weight;
};

// Builds the run a configuration describes.  Unknown names, dimension
// mismatches, and invalid ensemble settings raise ConfigError; a model
// whose drag violates its declared bound raises std::domain_error from
// model validation.
ResolvedRun resolve_run(const RunConfig& cfg);

}  // namespace fbsde
