#include "fbsde/fields.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fbsde/linalg.hpp"

namespace fbsde {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// --- finite-difference defaults ----------------------------------------------

double fd_step(const Vec& x) { return 1e-5 * (1.0 + x.norm()); }

// --- preset machinery ---------------------------------------------------------

// Orthonormal-frame tensor data at one point: value and coordinate derivatives.
struct TensorJet {
  Mat val;
  Mat d[kMaxManifoldDim];
};

struct VectorJet {
  Vec val;
  Vec d[kMaxManifoldDim];
};

// Geometry pieces shared by all preset fields at one (chart, x).
struct GeomJet {
  int n = 0;
  Mat lam, lam_inv;
  Mat dlam[kMaxManifoldDim], dlam_inv[kMaxManifoldDim];
  double phi = 0.0;  // height
  Vec dphi;          // coordinate gradient of height
  Mat hphi;          // coordinate Hessian of height
  Vec w;             // frame components of grad(height): Lambda^{-T} dphi
  Vec dw[kMaxManifoldDim];
};

GeomJet geom_jet(const ManifoldModel& m, int chart, const Vec& x) {
  GeomJet g;
  g.n = m.dim();
  g.lam = m.frame_coeff(chart, x);
  g.lam_inv = m.frame_coeff_inv(chart, x);
  m.frame_coeff_deriv(chart, x, g.dlam, g.dlam_inv);
  g.phi = m.height(chart, x, &g.dphi, &g.hphi);
  g.w = Vec(g.lam_inv.transpose() * g.dphi);
  for (int k = 0; k < g.n; ++k)
    g.dw[k] = Vec(g.dlam_inv[k].transpose() * g.dphi + g.lam_inv.transpose() * g.hphi.col(k));
  return g;
}

// Conjugates an orthonormal-frame tensor jet into coordinate components:
// T_coords = Lambda^{-1} T Lambda, with the matching product-rule derivative.
TensorJet conj_to_coords(const GeomJet& g, const TensorJet& t) {
  TensorJet r;
  r.val = Mat(g.lam_inv * t.val * g.lam);
  for (int k = 0; k < g.n; ++k)
    r.d[k] = Mat(g.dlam_inv[k] * t.val * g.lam + g.lam_inv * t.d[k] * g.lam +
                 g.lam_inv * t.val * g.dlam[k]);
  return r;
}

// Scalar multiple of the identity: (a + b * height) I.
TensorJet scalar_tensor(const GeomJet& g, double a, double b) {
  TensorJet t;
  t.val = Mat((a + b * g.phi) * Mat::Identity(g.n, g.n));
  for (int k = 0; k < g.n; ++k) t.d[k] = Mat(b * g.dphi(k) * Mat::Identity(g.n, g.n));
  return t;
}

// Rank-one tensor along the height gradient: w w^T (orthonormal frame).
TensorJet grad_tensor(const GeomJet& g) {
  TensorJet t;
  t.val = Mat(g.w * g.w.transpose());
  for (int k = 0; k < g.n; ++k)
    t.d[k] = Mat(g.dw[k] * g.w.transpose() + g.w * g.dw[k].transpose());
  return t;
}

// Rotation generator in the oriented orthonormal frame (n = 2 only).
TensorJet rot_tensor(const GeomJet& g, double orientation) {
  TensorJet t;
  t.val = Mat::Zero(g.n, g.n);
  if (g.n == 2) {
    t.val(0, 1) = -orientation;
    t.val(1, 0) = orientation;
  }
  for (int k = 0; k < g.n; ++k) t.d[k] = Mat::Zero(g.n, g.n);
  return t;
}

TensorJet add(TensorJet a, const TensorJet& b, double scale, int n) {
  a.val += scale * b.val;
  for (int k = 0; k < n; ++k) a.d[k] += scale * b.d[k];
  return a;
}

TensorJet square_over(const TensorJet& s, double denom, int n) {
  TensorJet t;
  t.val = Mat(s.val * s.val / denom);
  for (int k = 0; k < n; ++k) t.d[k] = Mat((s.d[k] * s.val + s.val * s.d[k]) / denom);
  return t;
}

// Named presets, all assembled from globally defined tensors so that frame
// components are chart-independent:
//   bm                  gamma = I, sigma = I, F = 0
//   scalar_drag_noise   gamma = (g0 + g1 h) I, sigma = (s0 + s1 h) I
//   fd_particle         sigma = s0 I + s_g w w^T, gamma = sigma^2 / (2 kbt)
//   anisotropic_drag    gamma = g0 I + d_g w w^T + d_r Rot, sigma = s0 I + s_g w w^T
// with h the height observable and w its orthonormal-frame gradient.
class PresetFields final : public ModelFields {
 public:
  PresetFields(std::string name, const ManifoldModel& m, const PresetParams& p, bool fd_pair)
      : name_(std::move(name)), m_(&m), p_(p), fd_pair_(fd_pair) {
    if (fd_pair_ && p_.kbt <= 0.0)
      throw std::invalid_argument("fd_particle: kbt must be positive");
  }

  std::string preset() const override { return name_; }
  NoiseForm noise_form() const override { return NoiseForm::tensor; }
  int noise_count() const override { return m_->dim(); }

  Vec force(int chart, const Vec& x) const override {
    const GeomJet g = geom_jet(*m_, chart, x);
    return Vec(p_.force_scale * g.lam_inv * g.w);
  }
  Mat force_deriv(int chart, const Vec& x) const override {
    const GeomJet g = geom_jet(*m_, chart, x);
    Mat jac(g.n, g.n);
    for (int k = 0; k < g.n; ++k)
      jac.col(k) = p_.force_scale * (g.dlam_inv[k] * g.w + g.lam_inv * g.dw[k]);
    return jac;
  }

  Mat drag(int chart, const Vec& x) const override {
    return drag_jet(chart, x).val;
  }
  void drag_deriv(int chart, const Vec& x, Mat* d) const override {
    const TensorJet t = drag_jet(chart, x);
    for (int k = 0; k < m_->dim(); ++k) d[k] = t.d[k];
  }

  Mat noise(int chart, const Vec& x) const override {
    const GeomJet g = geom_jet(*m_, chart, x);
    return conj_to_coords(g, noise_frame_jet(g)).val;
  }
  void noise_deriv(int chart, const Vec& x, Mat* d) const override {
    const GeomJet g = geom_jet(*m_, chart, x);
    const TensorJet t = conj_to_coords(g, noise_frame_jet(g));
    for (int k = 0; k < g.n; ++k) d[k] = t.d[k];
  }

  bool constant_coefficients() const override {
    return p_.gamma_mod == 0.0 && p_.sigma_mod == 0.0 && p_.drag_grad == 0.0 &&
           p_.noise_grad == 0.0 && p_.force_scale == 0.0;
  }

 private:
  TensorJet noise_frame_jet(const GeomJet& g) const {
    TensorJet s = scalar_tensor(g, p_.sigma0, p_.sigma_mod);
    if (p_.noise_grad != 0.0) s = add(s, grad_tensor(g), p_.noise_grad, g.n);
    return s;
  }
  TensorJet drag_frame_jet(const GeomJet& g, int chart) const {
    if (fd_pair_) return square_over(noise_frame_jet(g), 2.0 * p_.kbt, g.n);
    TensorJet t = scalar_tensor(g, p_.gamma0, p_.gamma_mod);
    if (p_.drag_grad != 0.0) t = add(t, grad_tensor(g), p_.drag_grad, g.n);
    if (p_.drag_rot != 0.0 && g.n == 2)
      t = add(t, rot_tensor(g, m_->chart_orientation(chart)), p_.drag_rot, g.n);
    return t;
  }
  TensorJet drag_jet(int chart, const Vec& x) const {
    const GeomJet g = geom_jet(*m_, chart, x);
    return conj_to_coords(g, drag_frame_jet(g, chart));
  }

  std::string name_;
  const ManifoldModel* m_;
  PresetParams p_;
  bool fd_pair_;
};

// Explicit constant matrices in coordinate components.
class ConstantFields final : public ModelFields {
 public:
  ConstantFields(const ManifoldModel& m, Vec force, Mat gamma, Mat sigma, NoiseForm form)
      : m_(&m), force_(std::move(force)), gamma_(std::move(gamma)), sigma_(std::move(sigma)),
        form_(form) {
    if (gamma_.rows() != m.dim() || gamma_.cols() != m.dim() || force_.size() != m.dim() ||
        sigma_.rows() != m.dim())
      throw std::invalid_argument("constant fields: dimension mismatch");
  }

  std::string preset() const override { return "constant"; }
  NoiseForm noise_form() const override { return form_; }
  int noise_count() const override { return static_cast<int>(sigma_.cols()); }

  Vec force(int, const Vec&) const override { return force_; }
  Mat drag(int, const Vec&) const override { return gamma_; }
  Mat noise(int, const Vec&) const override { return sigma_; }
  Mat force_deriv(int, const Vec&) const override { return Mat::Zero(m_->dim(), m_->dim()); }
  void drag_deriv(int, const Vec&, Mat* d) const override {
    for (int k = 0; k < m_->dim(); ++k) d[k] = Mat::Zero(m_->dim(), m_->dim());
  }
  void noise_deriv(int, const Vec&, Mat* d) const override {
    for (int k = 0; k < m_->dim(); ++k) d[k] = Mat::Zero(sigma_.rows(), sigma_.cols());
  }
  bool constant_coefficients() const override { return true; }

 private:
  const ManifoldModel* m_;
  Vec force_;
  Mat gamma_;
  Mat sigma_;
  NoiseForm form_;
};

// --- low-discrepancy sampling ---------------------------------------------------

double halton(uint32_t index, uint32_t base) {
  double f = 1.0, r = 0.0;
  for (uint32_t i = index + 1; i > 0; i /= base) {
    f /= base;
    r += f * (i % base);
  }
  return r;
}

Vec chart_sample(const ManifoldModel& m, int chart, int i) {
  Vec x(m.dim());
  if (m.dim() == 1) {
    x(0) = kTwoPi * halton(i, 2);
    return x;
  }
  if (m.chart_count() == 1) {  // torus square
    x(0) = kTwoPi * halton(i, 2);
    x(1) = kTwoPi * halton(i, 3);
    return x;
  }
  // Stereographic disc |z| < 3, area-uniform.
  (void)chart;
  const double r = 3.0 * std::sqrt(halton(i, 2));
  const double a = kTwoPi * halton(i, 3);
  x(0) = r * std::cos(a);
  x(1) = r * std::sin(a);
  return x;
}

}  // namespace

// --- ModelFields finite-difference defaults -------------------------------------

Mat ModelFields::force_deriv(int chart, const Vec& x) const {
  const int n = static_cast<int>(x.size());
  const double step = fd_step(x);
  Mat jac(n, n);
  for (int k = 0; k < n; ++k) {
    Vec xp = x, xm = x;
    xp(k) += step;
    xm(k) -= step;
    jac.col(k) = (force(chart, xp) - force(chart, xm)) / (2.0 * step);
  }
  return jac;
}

void ModelFields::drag_deriv(int chart, const Vec& x, Mat* d) const {
  const int n = static_cast<int>(x.size());
  const double step = fd_step(x);
  for (int k = 0; k < n; ++k) {
    Vec xp = x, xm = x;
    xp(k) += step;
    xm(k) -= step;
    d[k] = (drag(chart, xp) - drag(chart, xm)) / (2.0 * step);
  }
}

void ModelFields::noise_deriv(int chart, const Vec& x, Mat* d) const {
  const int n = static_cast<int>(x.size());
  const double step = fd_step(x);
  for (int k = 0; k < n; ++k) {
    Vec xp = x, xm = x;
    xp(k) += step;
    xm(k) -= step;
    d[k] = (noise(chart, xp) - noise(chart, xm)) / (2.0 * step);
  }
}

// --- preset construction ----------------------------------------------------------

ModelSpec make_preset(const std::string& name, const ManifoldModel& manifold,
                      const PresetParams& params) {
  ModelSpec spec;
  spec.manifold = &manifold;

  if (name == "bm") {
    PresetParams p;  // gamma = sigma = 1, no force
    spec.fields = std::make_shared<PresetFields>(name, manifold, p, false);
    spec.gamma1 = 1.0;
  } else if (name == "scalar_drag_noise") {
    PresetParams p = params;
    p.drag_rot = p.drag_grad = p.noise_grad = 0.0;
    spec.fields = std::make_shared<PresetFields>(name, manifold, p, false);
    spec.gamma1 = p.gamma0 - std::abs(p.gamma_mod);  // height ranges over [-1, 1]
  } else if (name == "fd_particle") {
    PresetParams p = params;
    p.gamma_mod = p.drag_rot = p.drag_grad = 0.0;
    spec.fields = std::make_shared<PresetFields>(name, manifold, p, true);
    // |w|^2 <= 1 on the catalogue, so the smallest noise eigenvalue is
    // sigma0 + min(0, noise_grad).
    const double smin = p.sigma0 + std::min(0.0, p.noise_grad);
    spec.gamma1 = smin * smin / (2.0 * p.kbt);
    spec.kbt = p.kbt;
  } else if (name == "anisotropic_drag") {
    PresetParams p = params;
    p.gamma_mod = p.sigma_mod = 0.0;
    spec.fields = std::make_shared<PresetFields>(name, manifold, p, false);
    spec.gamma1 = p.gamma0 + std::min(0.0, p.drag_grad);
  } else {
    throw std::invalid_argument("unknown preset '" + name +
                                "' (known: bm, scalar_drag_noise, fd_particle, anisotropic_drag)");
  }

  if (spec.gamma1 <= 0.0)
    throw std::invalid_argument("preset '" + name + "': drag lower bound must be positive");
  return spec;
}

ModelSpec make_constant_model(const ManifoldModel& manifold, const Vec& force, const Mat& gamma,
                              const Mat& sigma, NoiseForm form) {
  ModelSpec spec;
  spec.manifold = &manifold;
  spec.fields = std::make_shared<ConstantFields>(manifold, force, gamma, sigma, form);
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (gamma + gamma.transpose())));
  spec.gamma1 = es.eigenvalues().minCoeff();
  if (spec.gamma1 <= 0.0)
    throw std::invalid_argument("constant model: symmetric drag part must be positive definite");
  return spec;
}

// --- frame components ---------------------------------------------------------------

Vec force_frame_components(const ManifoldModel& m, const ModelFields& f,
                           const FrameBundlePoint& u) {
  return Vec(u.h.inverse() * m.frame_coeff(u.base.chart, u.base.x) *
             f.force(u.base.chart, u.base.x));
}

Mat drag_frame_components(const ManifoldModel& m, const ModelFields& f,
                          const FrameBundlePoint& u) {
  const Mat lam = m.frame_coeff(u.base.chart, u.base.x);
  const Mat lam_inv = m.frame_coeff_inv(u.base.chart, u.base.x);
  return Mat(u.h.inverse() * lam * f.drag(u.base.chart, u.base.x) * lam_inv * u.h);
}

Mat noise_frame_components(const ManifoldModel& m, const ModelFields& f,
                           const FrameBundlePoint& u) {
  const Mat lam = m.frame_coeff(u.base.chart, u.base.x);
  const Mat s = f.noise(u.base.chart, u.base.x);
  if (f.noise_form() == NoiseForm::tensor)
    return Mat(u.h.inverse() * lam * s * m.frame_coeff_inv(u.base.chart, u.base.x) * u.h);
  return Mat(u.h.inverse() * lam * s);
}

Mat noise_covariance_frame(const ManifoldModel& m, const ModelFields& f,
                           const FrameBundlePoint& u) {
  const Mat s = noise_frame_components(m, f, u);
  return Mat(s * s.transpose());
}

// --- validation -----------------------------------------------------------------------

double validate_drag_bound(const ManifoldModel& m, const ModelFields& f, int points_per_chart) {
  double bound = std::numeric_limits<double>::infinity();
  for (int chart = 0; chart < m.chart_count(); ++chart) {
    for (int i = 0; i < points_per_chart; ++i) {
      FrameBundlePoint u{{chart, chart_sample(m, chart, i)}, Mat::Identity(m.dim(), m.dim())};
      const Mat g = drag_frame_components(m, f, u);
      Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (g + g.transpose())));
      bound = std::min(bound, es.eigenvalues().minCoeff());
    }
  }
  return bound;
}

void validate_model(const ModelSpec& spec, int points_per_chart) {
  const double measured = validate_drag_bound(*spec.manifold, *spec.fields, points_per_chart);
  if (!(measured > 0.0) || measured + 1e-9 < spec.gamma1)
    throw std::domain_error("drag bound violated: measured " + std::to_string(measured) +
                            " against declared " + std::to_string(spec.gamma1));
}

Mat fd_noise_from_drag(const Mat& gamma_frame, double kbt) {
  if ((gamma_frame - gamma_frame.transpose()).norm() > 1e-10 * (1.0 + gamma_frame.norm()))
    throw std::domain_error("fd_noise_from_drag: drag is not symmetric");
  if (kbt <= 0.0) throw std::domain_error("fd_noise_from_drag: kbt must be positive");
  return sym_sqrt(Mat(2.0 * kbt * gamma_frame));
}

}  // namespace fbsde
