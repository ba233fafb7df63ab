#pragma once
// Monte-Carlo experiments over ensembles of paths: momentum-decay moments,
// quadratic momentum integrals, pathwise small-mass convergence against the
// coupled limit path, coordinate-drift checks for isotropic diffusion, and a
// two-sample law comparison isolating the vertical drift.
//
// Every estimate carries a standard error.  Paths are seeded by
// (master_seed, path_index) only, and reductions run in fixed path order, so
// results are bit-identical for any thread count.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fbsde/engine.hpp"
#include "fbsde/fields.hpp"
#include "fbsde/manifold.hpp"
#include "fbsde/types.hpp"

namespace fbsde {

// Ensemble-level knobs shared by the experiments.  Masses are the sweep
// variable; moment_p weights sup-of-path statistics, moment_q pointwise
// ones.  thin is the sampling interval (time units) for statistics that
// would otherwise degenerate on the full step grid.
struct EnsembleSpec {
  std::vector<double> masses = {1e-1, 3.1622776601683794e-2, 1e-2,
                                3.1622776601683794e-3, 1e-3};
  double t_final = 1.0;
  int n_paths = 2000;
  std::uint64_t master_seed = 1;
  int moment_p = 2;
  int moment_q = 2;
  double thin = 0.1;
  Scheme mass_scheme = Scheme::exp_ou;
  double dt_limit = 1e-3;
  double drift_horizon = 0.05;
  int n_threads = 1;
  // Initial data; empty fields fall back to a manifold-specific default
  // start with the identity frame and zero velocity.
  int chart0 = 0;
  Vec x0;
  Mat h0;
  Vec v0;
};

// Throws std::invalid_argument when masses are non-positive or repeated,
// n_paths < 2, or t_final/dt_limit/thin are non-positive.
void validate_ensemble(const EnsembleSpec& ens);

// Initial state resolved against the manifold (defaults filled in).
State resolve_initial(const ManifoldModel& m, const EnsembleSpec& ens);

// Mass-system step size under the scheme's policy: em caps the step at the
// stability bound, the others use dt_limit.  The returned value divides
// t_final exactly.
double mass_system_dt(Scheme scheme, double mass, double gamma1,
                      double dt_limit, double t_final);

// Runs fn(path_index) for all indices in [0, n_paths) on up to n_threads
// workers.  fn must only write to per-path storage.
void parallel_paths(int n_paths, int n_threads,
                    const std::function<void(int)>& fn);

// One mass point of an estimated moment curve.
struct MomentPoint {
  double mass = 0.0;
  double estimate = 0.0;
  double se = 0.0;
  int n_paths = 0;
  double dt = 0.0;
};

struct MomentCurve {
  std::vector<MomentPoint> points;
};

// Ordinary least squares of log(estimate) on log(mass).  Points with
// non-positive estimates are excluded and counted; the fit is valid only
// when at least three points remain.
struct RateFit {
  bool valid = false;
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double residual = 0.0;
  int excluded = 0;
};

RateFit fit_loglog_slope(const MomentCurve& curve);

// Mean and standard error of per-path statistics in slot order.
MomentPoint reduce_moment(double mass, double dt,
                          const std::vector<double>& slots);

// E[ sup_{t <= T} |p_t|^p ] per mass, p = m v, sup over the thinned time
// grid (t = 0 and the final time included).
MomentCurve momentum_sup_moment(const ModelSpec& model,
                                const EnsembleSpec& ens);

// sup over sampled times of E[ |p_t|^q ] per mass; the standard error is
// the one attached to the maximizing time.
MomentCurve momentum_pointwise_moment(const ModelSpec& model,
                                      const EnsembleSpec& ens);

// Scalar weight evaluated along the path, by chart and coordinates.
using ScalarField = std::function<double(int chart, const Vec& x)>;

// E[ sup_k || sum_{j<k} f(x_j) (P_{j+1} - P_j) ||_F^p ] per mass, where
// P = p p^T is the momentum dyad and the sum runs over the integration
// grid (left-point weights).
MomentCurve quad_integral_check(const ModelSpec& model,
                                const EnsembleSpec& ens,
                                const ScalarField& f);

// Pathwise small-mass convergence: per mass, E[ sup_t d(u^m_t, u_t)^q ]
// with the limit path driven by the same Brownian increments, distances
// sampled on the shared coarse grid.
struct PathwiseResult {
  MomentCurve curve;
  // Fraction of (seed, mass-decade pair) events where the sup distance
  // shrank when the mass dropped by 10x.
  double monotone_fraction = 0.0;
  // Relative change of each mass's estimate when every step size is
  // halved, measured on the first bias_paths paths.
  std::vector<double> bias_rel;
  int bias_paths = 0;
};

PathwiseResult pathwise_convergence(const ModelSpec& model,
                                    const EnsembleSpec& ens,
                                    int bias_paths = 200);

// One named estimate with its target, reported as estimate +- se.
struct CheckLine {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  double target = 0.0;
};

// Short-time coordinate drift of isotropic diffusion: the limit scheme on
// the given manifold against closed-form targets (polar-angle drift on the
// sphere, zero drift in flat and stereographic coordinates), plus one
// small-mass arm at the smallest ensemble mass.
std::vector<CheckLine> bm_drift_check(const ManifoldModel& m,
                                      const EnsembleSpec& ens);

// Two-sample Kolmogorov-Smirnov distance and asymptotic p-value.
struct KsResult {
  double d = 0.0;
  double p_value = 1.0;
};

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

// Law comparison isolating the vertical drift: two independently seeded
// ensembles with the vertical term on and off, compared at t = T through
// position functionals (height, first embedding coordinate, distance from
// the start).  The frame functional pairs the on-arm against a third arm
// with the vertical term scaled by control_scale; it is the power control,
// since position laws are insensitive to any purely vertical change.
struct KsLine {
  std::string name;
  KsResult ks;
};

struct VerticalReport {
  std::vector<KsLine> position;
  KsLine frame_control;
};

VerticalReport vertical_drift_position_test(const ModelSpec& model,
                                            const EnsembleSpec& ens,
                                            double control_scale = 10.0);

}  // namespace fbsde
