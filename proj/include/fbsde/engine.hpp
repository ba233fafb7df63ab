#pragma once
// Path simulation on the orthonormal frame bundle.
//
// Schemes:
//  - em:      Euler-Maruyama on the inertial pair (u, v), v in frame
//             components,  v' = v + (dt/m)(F - gamma v) + (1/m) sigma dW,
//             base and frame transported one RK4 step along the horizontal
//             lift of (v + v')/2.  Requires dt <= kCflFraction * m / gamma1.
//  - exp_ou:  exact Ornstein-Uhlenbeck update of v with coefficients frozen
//             at the step start,
//               v' = E v + (I - E) gamma^{-1} F + sym_sqrt(C) z,
//               E = exp(-gamma dt / m),  C = (J - E J E^T)/m,
//             z the step's Wiener increment rescaled to unit variance;
//             transport as in em.  The one-step law of v is exact for
//             constant coefficients; the coupling to the driving path is
//             distributional, not pathwise.
//  - heun_limit: Stratonovich Heun for the zero-mass limit
//               du = (lift + S^h + S^v) dt + H(gamma^{-1} sigma dW)(u),
//             full-tangent predictor, averaged corrector.
//
// After every accepted step coordinates are wrapped to their canonical
// range, the frame is reorthonormalized every reortho_every steps, and the
// chart is switched when the manifold requests it.

#include <cstdint>
#include <functional>
#include <vector>

#include "fbsde/drift.hpp"
#include "fbsde/fields.hpp"
#include "fbsde/manifold.hpp"
#include "fbsde/types.hpp"

namespace fbsde {

enum class Scheme { em, exp_ou, heun_limit };

// "em" | "exp_ou" | "limit"; throws std::invalid_argument otherwise.
Scheme scheme_by_name(const std::string& name);
std::string scheme_name(Scheme s);

// Largest stable em step for an inertial model.
inline constexpr double kCflFraction = 0.05;
double max_em_step(double mass, double gamma1);

// Wiener increments of one path on a uniform grid: increments is row-major
// (step, component) with entries distributed N(0, dt), addressed by
// (master_seed, path_index) on stream 0 so grids are reproducible and
// distinct paths independent.
struct WienerGrid {
  double dt = 0.0;
  int n_steps = 0;
  int k = 0;
  std::uint64_t master_seed = 0;
  std::uint64_t path_index = 0;
  std::vector<double> increments;

  Vec increment(int step) const;
  // Sum of the `stride` rows starting at coarse_step * stride.
  Vec summed(int coarse_step, int stride) const;
};

WienerGrid sample_wiener(std::uint64_t master_seed, std::uint64_t path_index,
                         double dt, int n_steps, int k);

// The same Brownian path on a grid coarsened by an integer stride
// (n_steps must be a multiple of stride).
WienerGrid coarsen(const WienerGrid& grid, int stride);

struct SimOptions {
  Scheme scheme = Scheme::em;
  // Frame reorthonormalization period in steps; 0 disables it.
  int reortho_every = 1;
  // Multiplier on the vertical noise-induced drift (heun_limit only);
  // 1 is the true limit dynamics.
  double sv_scale = 1.0;
};

// Simulation state.  v holds frame velocity components for the inertial
// schemes and is carried unchanged by heun_limit.
struct State {
  double t = 0.0;
  FrameBundlePoint u;
  Vec v;
};

// Runs grid.n_steps steps of the chosen scheme from `init`.  The visitor,
// when given, is called with (step, state) for step = 0 (the initial state)
// through grid.n_steps.  Returns the final state.
// Throws std::invalid_argument for a noise-dimension mismatch or an em step
// size above max_em_step.
State simulate_path(const ModelSpec& spec, const SimOptions& opt, const State& init,
                    const WienerGrid& grid,
                    const std::function<void(int, const State&)>& visit = {});

struct Trajectory {
  std::vector<State> states;
};

// Convenience wrapper storing every store_stride-th state (always including
// the initial and final states).
Trajectory simulate_trajectory(const ModelSpec& spec, const SimOptions& opt,
                               const State& init, const WienerGrid& grid,
                               int store_stride = 1);

// One Brownian path driving an inertial path per mass plus the limit path,
// all on power-of-two coarsenings of a shared fine grid.  States are
// recorded at the limit-grid times (n_fine / stride_limit + 1 entries each,
// including t = 0).
struct CoupledFamily {
  double dt_fine = 0.0;
  int n_fine = 0;
  int stride_limit = 1;
  std::vector<int> mass_strides;
  std::vector<std::vector<FrameBundlePoint>> mass_paths;
  std::vector<FrameBundlePoint> limit_path;
};

// Grid plan for a coupled family, computed without simulating.  n_fine is
// kept as a double so infeasible step budgets can be detected before any
// allocation is attempted.
struct CoupledPlan {
  double dt_fine = 0.0;
  double n_fine = 0.0;
  int stride_limit = 1;
  std::vector<int> mass_strides;
};

CoupledPlan plan_coupled(const ModelSpec& spec, const std::vector<double>& masses,
                         double t_final, double dt_limit);

// dt_limit is the largest acceptable limit-scheme step; every em arm runs at
// the largest power-of-two multiple of the fine step compatible with its
// own stability bound, never coarser than the limit arm.  Throws
// std::invalid_argument when the plan calls for more than 1e9 fine steps.
CoupledFamily simulate_coupled(const ModelSpec& spec, const std::vector<double>& masses,
                               double t_final, double dt_limit, std::uint64_t master_seed,
                               std::uint64_t path_index, const FrameBundlePoint& u0,
                               const Vec& v0);

}  // namespace fbsde
