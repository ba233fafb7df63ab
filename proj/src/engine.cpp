#include "fbsde/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fbsde/linalg.hpp"
#include "fbsde/rng.hpp"

namespace fbsde {

Scheme scheme_by_name(const std::string& name) {
  if (name == "em") return Scheme::em;
  if (name == "exp_ou") return Scheme::exp_ou;
  if (name == "limit") return Scheme::heun_limit;
  throw std::invalid_argument("scheme_by_name: unknown scheme '" + name +
                              "' (expected em, exp_ou, or limit)");
}

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::em: return "em";
    case Scheme::exp_ou: return "exp_ou";
    case Scheme::heun_limit: return "limit";
  }
  return "unknown";
}

double max_em_step(double mass, double gamma1) {
  return kCflFraction * mass / gamma1;
}

Vec WienerGrid::increment(int step) const {
  if (step < 0 || step >= n_steps)
    throw std::out_of_range("WienerGrid::increment: step out of range");
  Vec dw(k);
  const double* row = increments.data() + static_cast<std::size_t>(step) * k;
  for (int j = 0; j < k; ++j) dw(j) = row[j];
  return dw;
}

Vec WienerGrid::summed(int coarse_step, int stride) const {
  if (stride < 1 || coarse_step < 0 || (coarse_step + 1) * stride > n_steps)
    throw std::out_of_range("WienerGrid::summed: block out of range");
  Vec dw = Vec::Zero(k);
  for (int s = 0; s < stride; ++s) {
    const double* row =
        increments.data() + static_cast<std::size_t>(coarse_step * stride + s) * k;
    for (int j = 0; j < k; ++j) dw(j) += row[j];
  }
  return dw;
}

WienerGrid sample_wiener(std::uint64_t master_seed, std::uint64_t path_index,
                         double dt, int n_steps, int k) {
  if (dt <= 0.0 || n_steps < 0 || k < 1)
    throw std::invalid_argument("sample_wiener: need dt > 0, n_steps >= 0, k >= 1");
  WienerGrid g;
  g.dt = dt;
  g.n_steps = n_steps;
  g.k = k;
  g.master_seed = master_seed;
  g.path_index = path_index;
  g.increments.resize(static_cast<std::size_t>(n_steps) * k);
  fill_normals(master_seed, 0, path_index, g.increments.data(), g.increments.size());
  const double root = std::sqrt(dt);
  for (double& w : g.increments) w *= root;
  return g;
}

WienerGrid coarsen(const WienerGrid& grid, int stride) {
  if (stride < 1 || grid.n_steps % stride != 0)
    throw std::invalid_argument("coarsen: stride must divide n_steps");
  WienerGrid g;
  g.dt = grid.dt * stride;
  g.n_steps = grid.n_steps / stride;
  g.k = grid.k;
  g.master_seed = grid.master_seed;
  g.path_index = grid.path_index;
  g.increments.assign(static_cast<std::size_t>(g.n_steps) * g.k, 0.0);
  for (int step = 0; step < g.n_steps; ++step) {
    const Vec dw = grid.summed(step, stride);
    for (int j = 0; j < g.k; ++j) g.increments[static_cast<std::size_t>(step) * g.k + j] = dw(j);
  }
  return g;
}

namespace {

// Coordinate wrap, periodic reorthonormalization, and chart switching after
// an accepted step.
void canonicalize(const ManifoldModel& m, FrameBundlePoint* u, int step, int reortho_every) {
  u->base.x = m.canonical_coords(u->base.chart, u->base.x);
  if (reortho_every > 0 && step % reortho_every == 0) *u = orthonormalize_frame(*u);
  if (m.wants_chart_switch(u->base.chart, u->base.x) &&
      m.in_overlap(u->base.chart, u->base.x))
    *u = chart_transition(m, *u, m.transition_target(u->base.chart));
}

// One RK4 step of du/dt = H(w)(u) with frozen frame components w.
FrameBundlePoint rk4_transport(const ManifoldModel& m, const FrameBundlePoint& u,
                               const Vec& w, double dt) {
  const FrameTangent k1 = horizontal_field(m, u, w);
  const FrameTangent k2 = horizontal_field(m, advance(u, k1, 0.5 * dt), w);
  const FrameTangent k3 = horizontal_field(m, advance(u, k2, 0.5 * dt), w);
  const FrameTangent k4 = horizontal_field(m, advance(u, k3, dt), w);
  const FrameTangent total = k1 + 2.0 * k2 + 2.0 * k3 + k4;
  return advance(u, total, dt / 6.0);
}

void em_step(const ModelSpec& spec, const Vec& dw, double dt, State* s) {
  const ManifoldModel& m = *spec.manifold;
  const ModelFields& f = *spec.fields;
  const Vec force = force_frame_components(m, f, s->u);
  const Mat gamma = drag_frame_components(m, f, s->u);
  const Mat sigma = noise_frame_components(m, f, s->u);
  const Vec vnew =
      s->v + (dt / spec.mass) * (force - gamma * s->v) + (1.0 / spec.mass) * (sigma * dw);
  s->u = rk4_transport(m, s->u, 0.5 * (s->v + vnew), dt);
  s->v = vnew;
}

struct OuMatrices {
  Mat e;      // exp(-gamma dt / m)
  Vec drive;  // (I - E) gamma^{-1} F
  Mat root;   // sym_sqrt((J - E J E^T)/m)
};

OuMatrices ou_matrices(const ModelSpec& spec, const FrameBundlePoint& u, double dt) {
  const ManifoldModel& m = *spec.manifold;
  const ModelFields& f = *spec.fields;
  const int n = m.dim();
  const Vec force = force_frame_components(m, f, u);
  const Mat gamma = drag_frame_components(m, f, u);
  const Mat sigma = noise_frame_components(m, f, u);
  const Mat j = lyapunov_solve(gamma, sigma * sigma.transpose());
  OuMatrices out;
  out.e = matrix_exp(Mat(-(dt / spec.mass) * gamma));
  out.drive = (Mat::Identity(n, n) - out.e) * (gamma.inverse() * force);
  out.root = sym_sqrt(Mat((j - out.e * j * out.e.transpose()) / spec.mass));
  return out;
}

void exp_ou_step(const OuMatrices& ou, const Vec& dw, double dt, State* s,
                 const ManifoldModel& m) {
  const Vec z = dw / std::sqrt(dt);
  const Vec vnew = ou.e * s->v + ou.drive + ou.root * z;
  s->u = rk4_transport(m, s->u, 0.5 * (s->v + vnew), dt);
  s->v = vnew;
}

void heun_step(const ModelSpec& spec, const SimOptions& opt, const Vec& dw, double dt,
               State* s) {
  const ManifoldModel& m = *spec.manifold;
  const ModelFields& f = *spec.fields;
  auto tangent = [&](const FrameBundlePoint& u) {
    const DriftReport r = limiting_coefficients(m, f, u);
    FrameTangent a = dt * r.lift + dt * r.sh + (dt * opt.sv_scale) * r.sv;
    a += horizontal_field(m, u, Vec(r.diffusion * dw));
    return a;
  };
  const FrameTangent a0 = tangent(s->u);
  const FrameTangent a1 = tangent(advance(s->u, a0, 1.0));
  s->u = advance(s->u, 0.5 * (a0 + a1), 1.0);
}

}  // namespace

State simulate_path(const ModelSpec& spec, const SimOptions& opt, const State& init,
                    const WienerGrid& grid,
                    const std::function<void(int, const State&)>& visit) {
  if (!spec.manifold || !spec.fields)
    throw std::invalid_argument("simulate_path: incomplete model spec");
  const ManifoldModel& m = *spec.manifold;
  const int n = m.dim();
  if (grid.k != spec.fields->noise_count())
    throw std::invalid_argument("simulate_path: grid noise dimension mismatch");
  if (opt.scheme == Scheme::em &&
      grid.dt > max_em_step(spec.mass, spec.gamma1) * (1.0 + 1e-12))
    throw std::invalid_argument("simulate_path: em step above the stability bound "
                                "dt <= 0.05 m / gamma1");

  State s = init;
  if (s.v.size() == 0) s.v = Vec::Zero(n);
  if (static_cast<int>(s.v.size()) != n)
    throw std::invalid_argument("simulate_path: initial velocity has wrong dimension");
  if (visit) visit(0, s);

  const bool cache_ou = opt.scheme == Scheme::exp_ou &&
                        spec.fields->constant_coefficients() && m.flat_chart();
  OuMatrices cached;
  if (cache_ou) cached = ou_matrices(spec, s.u, grid.dt);

  for (int step = 1; step <= grid.n_steps; ++step) {
    const Vec dw = grid.increment(step - 1);
    switch (opt.scheme) {
      case Scheme::em:
        em_step(spec, dw, grid.dt, &s);
        break;
      case Scheme::exp_ou:
        if (cache_ou)
          exp_ou_step(cached, dw, grid.dt, &s, m);
        else
          exp_ou_step(ou_matrices(spec, s.u, grid.dt), dw, grid.dt, &s, m);
        break;
      case Scheme::heun_limit:
        heun_step(spec, opt, dw, grid.dt, &s);
        break;
    }
    s.t = init.t + step * grid.dt;
    canonicalize(m, &s.u, step, opt.reortho_every);
    if (visit) visit(step, s);
  }
  return s;
}

Trajectory simulate_trajectory(const ModelSpec& spec, const SimOptions& opt,
                               const State& init, const WienerGrid& grid,
                               int store_stride) {
  if (store_stride < 1)
    throw std::invalid_argument("simulate_trajectory: store_stride must be >= 1");
  Trajectory out;
  out.states.reserve(static_cast<std::size_t>(grid.n_steps / store_stride) + 2);
  simulate_path(spec, opt, init, grid, [&](int step, const State& s) {
    if (step == 0 || step == grid.n_steps || step % store_stride == 0)
      out.states.push_back(s);
  });
  return out;
}

CoupledPlan plan_coupled(const ModelSpec& spec, const std::vector<double>& masses,
                         double t_final, double dt_limit) {
  if (masses.empty()) throw std::invalid_argument("simulate_coupled: no masses");
  for (double m : masses)
    if (m <= 0.0) throw std::invalid_argument("simulate_coupled: masses must be positive");
  if (t_final <= 0.0 || dt_limit <= 0.0)
    throw std::invalid_argument("simulate_coupled: t_final and dt_limit must be positive");

  const double m_min = *std::min_element(masses.begin(), masses.end());
  const double dt_req = std::min(max_em_step(m_min, spec.gamma1), dt_limit);
  constexpr int kBlock = 1024;
  CoupledPlan plan;
  plan.n_fine = std::ceil(std::ceil(t_final / dt_req) / kBlock) * kBlock;
  plan.dt_fine = t_final / plan.n_fine;
  plan.stride_limit = 1;
  while (plan.stride_limit * 2 <= kBlock &&
         (plan.stride_limit * 2) * plan.dt_fine <= dt_limit)
    plan.stride_limit *= 2;
  for (double mass : masses) {
    int stride = 1;
    const double cap = max_em_step(mass, spec.gamma1);
    while (stride * 2 <= plan.stride_limit && (stride * 2) * plan.dt_fine <= cap)
      stride *= 2;
    plan.mass_strides.push_back(stride);
  }
  return plan;
}

CoupledFamily simulate_coupled(const ModelSpec& spec, const std::vector<double>& masses,
                               double t_final, double dt_limit, std::uint64_t master_seed,
                               std::uint64_t path_index, const FrameBundlePoint& u0,
                               const Vec& v0) {
  const CoupledPlan plan = plan_coupled(spec, masses, t_final, dt_limit);
  if (plan.n_fine > 1e9)
    throw std::invalid_argument("simulate_coupled: fine grid exceeds 1e9 steps");
  CoupledFamily fam;
  fam.n_fine = static_cast<int>(plan.n_fine);
  fam.dt_fine = plan.dt_fine;
  fam.stride_limit = plan.stride_limit;

  const int k = spec.fields->noise_count();
  const WienerGrid fine = sample_wiener(master_seed, path_index, fam.dt_fine, fam.n_fine, k);

  for (std::size_t mi = 0; mi < masses.size(); ++mi) {
    const double mass = masses[mi];
    const int stride = plan.mass_strides[mi];
    fam.mass_strides.push_back(stride);

    ModelSpec arm = spec;
    arm.mass = mass;
    const WienerGrid grid = coarsen(fine, stride);
    const int record = fam.stride_limit / stride;
    std::vector<FrameBundlePoint> path;
    path.reserve(static_cast<std::size_t>(grid.n_steps / record) + 1);
    simulate_path(arm, {Scheme::em, 1, 1.0}, {0.0, u0, v0}, grid,
                  [&](int step, const State& s) {
                    if (step % record == 0) path.push_back(s.u);
                  });
    fam.mass_paths.push_back(std::move(path));
  }

  const WienerGrid limit_grid = coarsen(fine, fam.stride_limit);
  fam.limit_path.reserve(static_cast<std::size_t>(limit_grid.n_steps) + 1);
  simulate_path(spec, {Scheme::heun_limit, 1, 1.0}, {0.0, u0, Vec::Zero(spec.manifold->dim())},
                limit_grid, [&](int step, const State& s) {
                  (void)step;
                  fam.limit_path.push_back(s.u);
                });
  return fam;
}

}  // namespace fbsde
