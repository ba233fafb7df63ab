// Command-line driver: resolves a run configuration from file, environment,
// and flags, sizes the work against a fixed step budget, runs the selected
// experiment, and writes its report under the output directory.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fbsde/config.hpp"
#include "fbsde/io.hpp"

namespace {

using namespace fbsde;

// Total integrator steps allowed per invocation; larger runs are refused
// up front so a mistyped sweep fails in milliseconds, not hours.
constexpr double kStepBudget = 1e8;

struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string approx(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double sweep_steps(const ResolvedRun& run) {
  const EnsembleSpec& ens = run.ens;
  double total = 0.0;
  for (double mass : ens.masses) {
    const double dt = mass_system_dt(ens.mass_scheme, mass, run.model.gamma1,
                                     ens.dt_limit, ens.t_final);
    total += ens.n_paths * std::round(ens.t_final / dt);
  }
  return total;
}

double coupled_steps_per_path(const ResolvedRun& run, double dt_limit) {
  const CoupledPlan plan =
      plan_coupled(run.model, run.ens.masses, run.ens.t_final, dt_limit);
  double per_path = plan.n_fine / plan.stride_limit;
  for (int stride : plan.mass_strides) per_path += plan.n_fine / stride;
  return per_path;
}

// Upfront estimate of the integrator steps an experiment will take.
double estimate_steps(const RunConfig& cfg, const ResolvedRun& run) {
  const std::string& e = cfg.experiment;
  const EnsembleSpec& ens = run.ens;
  if (e == "momentum" || e == "momentum-pointwise" || e == "quad-check")
    return sweep_steps(run);
  if (e == "converge")
    return ens.n_paths * coupled_steps_per_path(run, ens.dt_limit) +
           std::min(cfg.bias_paths, ens.n_paths) *
               coupled_steps_per_path(run, ens.dt_limit / 2.0);
  if (e == "bm-check") {
    // Runs the isotropic model (unit drag bound): one limit arm plus one
    // small-mass arm at the smallest ensemble mass.
    const double m_min =
        *std::min_element(ens.masses.begin(), ens.masses.end());
    const double dt_lim = mass_system_dt(Scheme::heun_limit, 1.0, 1.0,
                                         ens.dt_limit, ens.drift_horizon);
    const double dt_em = mass_system_dt(Scheme::em, m_min, 1.0, ens.dt_limit,
                                        ens.drift_horizon);
    return ens.n_paths * (std::round(ens.drift_horizon / dt_lim) +
                          std::round(ens.drift_horizon / dt_em));
  }
  if (e == "vertical-check") {
    const double dt = mass_system_dt(Scheme::heun_limit, 1.0, run.model.gamma1,
                                     ens.dt_limit, ens.t_final);
    return 3.0 * ens.n_paths * std::round(ens.t_final / dt);
  }
  if (e == "simulate") return cfg.n_steps;
  return 0.0;  // drift, validate
}

std::string report_path(const RunConfig& cfg, const std::string& ext) {
  std::string name = cfg.experiment;
  std::replace(name.begin(), name.end(), '-', '_');
  return cfg.out + "/" + name + ext;
}

void print_fit(const std::string& what, const RateFit& fit, int n_points,
               const std::string& path) {
  if (fit.valid)
    std::cout << what << ": slope " << approx(fit.slope) << " +- "
              << approx(fit.slope_se) << " over " << n_points << " masses ("
              << fit.excluded << " excluded) -> " << path << "\n";
  else
    std::cout << what << ": fit invalid (" << fit.excluded
              << " excluded) -> " << path << "\n";
}

int run_experiment(const RunConfig& cfg) {
  ResolvedRun run = resolve_run(cfg);
  if (cfg.threads < 1)
    throw ConfigError("fbsde.run.threads: must be at least 1");

  const double required = estimate_steps(cfg, run);
  if (required > kStepBudget)
    throw BudgetError(cfg.experiment + ": estimated " + approx(required) +
                      " integrator steps exceeds the budget of " +
                      approx(kStepBudget) +
                      "; reduce n_paths or t_final, or raise dt");

  const std::string& e = cfg.experiment;
  const ConfigItems items = config_items(cfg);
  const ReportTag tag{cfg.experiment, cfg.preset, cfg.seed};
  if (e != "validate") std::filesystem::create_directories(cfg.out);

  if (e == "validate") {
    const double bound = validate_drag_bound(*run.manifold, *run.model.fields);
    std::cout << "validate: ok\n";
    for (const auto& [key, value] : items)
      std::cout << "  " << key << " = " << value << "\n";
    std::cout << "  min symmetric drag eigenvalue " << approx(bound)
              << " (declared bound " << approx(run.model.gamma1) << ")\n";
    return 0;
  }

  if (e == "simulate") {
    const State init = resolve_initial(*run.manifold, run.ens);
    const int k = run.model.fields->noise_count();
    const WienerGrid grid =
        sample_wiener(cfg.seed, 0, cfg.dt, cfg.n_steps, k);
    const Trajectory traj =
        simulate_trajectory(run.model, run.sim, init, grid, cfg.store_stride);
    const std::string path = cfg.out + "/trajectory.csv";
    write_trajectory_csv(path, items, traj,
                         run.sim.scheme != Scheme::heun_limit);
    std::cout << "simulate: " << traj.states.size() << " states over t = ["
              << 0 << ", " << format_double(traj.states.back().t) << "] -> "
              << path << "\n";
    return 0;
  }

  if (e == "momentum" || e == "momentum-pointwise") {
    const MomentCurve curve = e == "momentum"
                                  ? momentum_sup_moment(run.model, run.ens)
                                  : momentum_pointwise_moment(run.model,
                                                              run.ens);
    const RateFit fit = fit_loglog_slope(curve);
    const std::string path = report_path(cfg, ".jsonl");
    write_moment_jsonl(path, items, tag, curve, fit);
    print_fit(e, fit, static_cast<int>(curve.points.size()), path);
    return 0;
  }

  if (e == "quad-check") {
    const MomentCurve curve =
        quad_integral_check(run.model, run.ens, run.weight);
    const RateFit fit = fit_loglog_slope(curve);
    const std::string path = report_path(cfg, ".jsonl");
    write_moment_jsonl(path, items, tag, curve, fit);
    print_fit(e, fit, static_cast<int>(curve.points.size()), path);
    return 0;
  }

  if (e == "converge") {
    const PathwiseResult res =
        pathwise_convergence(run.model, run.ens, cfg.bias_paths);
    const RateFit fit = fit_loglog_slope(res.curve);
    const std::string path = report_path(cfg, ".jsonl");
    write_pathwise_jsonl(path, items, tag, res, fit);
    print_fit(e, fit, static_cast<int>(res.curve.points.size()), path);
    const double worst_bias =
        res.bias_rel.empty()
            ? 0.0
            : *std::max_element(res.bias_rel.begin(), res.bias_rel.end());
    std::cout << "  monotone fraction " << approx(res.monotone_fraction)
              << ", worst step-halving bias " << approx(worst_bias) << " on "
              << res.bias_paths << " paths\n";
    return 0;
  }

  if (e == "drift") {
    const State init = resolve_initial(*run.manifold, run.ens);
    const DriftReport rep =
        limiting_coefficients(*run.manifold, *run.model.fields, init.u);
    const std::string path = cfg.out + "/drift.json";
    write_drift_json(path, items, init, rep);
    std::cout << "drift: |lift| " << approx(rep.lift_coeff.norm())
              << ", |horizontal noise drift| " << approx(rep.sh_coeff.norm())
              << ", |vertical noise drift| " << approx(rep.sv.dh.norm())
              << " -> " << path << "\n";
    return 0;
  }

  if (e == "bm-check") {
    const std::vector<CheckLine> lines = bm_drift_check(*run.manifold, run.ens);
    const std::string path = report_path(cfg, ".jsonl");
    write_checks_jsonl(path, items, tag, lines);
    std::cout << "bm-check -> " << path << "\n";
    for (const CheckLine& line : lines)
      std::cout << "  " << line.name << ": " << approx(line.estimate)
                << " +- " << approx(line.se) << " (target "
                << approx(line.target) << ")\n";
    return 0;
  }

  // vertical-check
  const VerticalReport rep =
      vertical_drift_position_test(run.model, run.ens, cfg.control_scale);
  const std::string path = report_path(cfg, ".jsonl");
  write_vertical_jsonl(path, items, tag, rep);
  std::cout << "vertical-check -> " << path << "\n";
  for (const KsLine& line : rep.position)
    std::cout << "  " << line.name << ": d " << approx(line.ks.d) << ", p "
              << approx(line.ks.p_value) << "\n";
  std::cout << "  " << rep.frame_control.name << " (x"
            << approx(cfg.control_scale) << "): d "
            << approx(rep.frame_control.ks.d) << ", p "
            << approx(rep.frame_control.ks.p_value) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Inertial Langevin dynamics on compact manifolds, its small-mass "
      "limit, and the experiments comparing the two"};
  app.fallthrough();
  app.require_subcommand(0, 1);

  std::string config_file;
  app.add_option("--config", config_file, "Configuration file (key = value)");
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Master seed");
  std::string out;
  auto* out_opt = app.add_option("--out", out, "Output directory");
  int threads = 0;
  auto* threads_opt =
      app.add_option("--threads", threads, "Worker thread count");
  std::vector<std::string> sets;
  app.add_option("--set", sets, "Override one fbsde.section.key=value")
      ->type_size(1);

  for (const std::string& name : experiment_names())
    app.add_subcommand(name, "")->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg;
    if (!config_file.empty()) load_config_file(cfg, config_file);
    if (const char* env = std::getenv("FBSDE_THREADS"))
      apply_assignment(cfg, "fbsde.run.threads", env, "FBSDE_THREADS");
    for (const std::string& s : sets) {
      const std::size_t eq = s.find('=');
      if (eq == std::string::npos)
        throw ConfigError("--set expects key=value, got '" + s + "'");
      apply_assignment(cfg, trimmed(s.substr(0, eq)),
                       trimmed(s.substr(eq + 1)), "--set");
    }
    if (seed_opt->count() > 0) cfg.seed = seed;
    if (out_opt->count() > 0) cfg.out = out;
    if (threads_opt->count() > 0) cfg.threads = threads;
    for (const std::string& name : experiment_names())
      if (app.got_subcommand(name)) cfg.experiment = name;
    if (cfg.experiment.empty())
      throw ConfigError(
          "no experiment selected: give a subcommand or set "
          "fbsde.run.experiment");
    return run_experiment(cfg);
  } catch (const BudgetError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  } catch (const ConfigError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const std::domain_error& err) {
    std::cerr << "model validation failed: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
}
