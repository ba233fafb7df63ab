#include "fbsde/drift.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fbsde/linalg.hpp"

namespace fbsde {
namespace {

// Chart geometry shared by the assembly routines.
struct Geom {
  int n = 0;
  Mat lam, lam_inv;
  Mat dlam[kMaxManifoldDim], dlam_inv[kMaxManifoldDim];
  ConnCoeffs conn;
};

Geom geom_at(const ManifoldModel& m, const ChartPoint& p) {
  Geom g;
  g.n = m.dim();
  g.lam = m.frame_coeff(p.chart, p.x);
  g.lam_inv = m.frame_coeff_inv(p.chart, p.x);
  m.frame_coeff_deriv(p.chart, p.x, g.dlam, g.dlam_inv);
  g.conn = m.connection(p.chart, p.x);
  return g;
}

}  // namespace

FieldJet field_jet(const ManifoldModel& m, const ModelFields& f,
                   const FrameBundlePoint& u) {
  const int n = m.dim();
  const int chart = u.base.chart;
  const Vec& x = u.base.x;
  const Geom g = geom_at(m, u.base);
  const Mat hinv = u.h.inverse();
  const Mat b = g.lam_inv * u.h;  // B^k_xi

  const Vec fc = f.force(chart, x);
  const Mat fjac = f.force_deriv(chart, x);  // (i, k) = d_k F^i
  const Mat gc = f.drag(chart, x);
  Mat dgc[kMaxManifoldDim];
  f.drag_deriv(chart, x, dgc);
  const Mat sc = f.noise(chart, x);
  Mat dsc[kMaxManifoldDim];
  f.noise_deriv(chart, x, dsc);

  const bool tensor = f.noise_form() == NoiseForm::tensor;
  FieldJet jet;
  jet.n = n;
  jet.k = f.noise_count();
  jet.force = hinv * (g.lam * fc);
  jet.force_h = Mat(n, n);
  const Mat gamma_e = g.lam * gc * g.lam_inv;
  jet.drag = hinv * gamma_e * u.h;
  const Mat sigma_e = tensor ? Mat(g.lam * sc * g.lam_inv) : Mat(g.lam * sc);
  jet.noise = tensor ? Mat(hinv * sigma_e * u.h) : Mat(hinv * sigma_e);

  for (int xi = 0; xi < n; ++xi) {
    const Mat s_xi = -g.conn.direction_matrix(n, u.h.col(xi));
    Mat dgamma_e = Mat::Zero(n, n);
    Mat dsigma_e = tensor ? Mat(Mat::Zero(n, n)) : Mat(Mat::Zero(n, jet.k));
    Vec dforce_e = Vec::Zero(n);
    for (int k = 0; k < n; ++k) {
      const double bk = b(k, xi);
      dgamma_e += bk * (g.dlam[k] * gc * g.lam_inv + g.lam * dgc[k] * g.lam_inv +
                        g.lam * gc * g.dlam_inv[k]);
      if (tensor)
        dsigma_e += bk * (g.dlam[k] * sc * g.lam_inv + g.lam * dsc[k] * g.lam_inv +
                          g.lam * sc * g.dlam_inv[k]);
      else
        dsigma_e += bk * (g.dlam[k] * sc + g.lam * dsc[k]);
      dforce_e += bk * (g.dlam[k] * fc + g.lam * fjac.col(k));
    }
    jet.drag_h[xi] = hinv * (dgamma_e + gamma_e * s_xi - s_xi * gamma_e) * u.h;
    if (tensor)
      jet.noise_h[xi] = hinv * (dsigma_e + sigma_e * s_xi - s_xi * sigma_e) * u.h;
    else
      jet.noise_h[xi] = hinv * (dsigma_e - s_xi * sigma_e);
    jet.force_h.col(xi) = hinv * (dforce_e - s_xi * (g.lam * fc));
  }
  return jet;
}

FrameTangent h_bracket(const ManifoldModel& m, const FrameBundlePoint& u,
                       int eta, int xi) {
  const int n = m.dim();
  const Geom g = geom_at(m, u.base);
  const ConnCoeffsDeriv dconn = m.connection_deriv(u.base.chart, u.base.x);
  const Mat b = g.lam_inv * u.h;
  const Mat s_eta = -g.conn.direction_matrix(n, u.h.col(eta));
  const Mat s_xi = -g.conn.direction_matrix(n, u.h.col(xi));

  FrameTangent out = FrameTangent::zero(n);
  // Base part: B^k_eta (d_k Lambda^{-1} h)^j_xi + (Lambda^{-1} S_eta h)^j_xi
  // minus the same with eta and xi exchanged.
  Mat dlh[kMaxManifoldDim];
  for (int k = 0; k < n; ++k) dlh[k] = g.dlam_inv[k] * u.h;
  const Mat lc_eta = g.lam_inv * (s_eta * u.h);
  const Mat lc_xi = g.lam_inv * (s_xi * u.h);
  for (int j = 0; j < n; ++j) {
    double acc = lc_eta(j, xi) - lc_xi(j, eta);
    for (int k = 0; k < n; ++k)
      acc += b(k, eta) * dlh[k](j, xi) - b(k, xi) * dlh[k](j, eta);
    out.dx(j) = acc;
  }
  // Frame part H_eta[C_xi] - H_xi[C_eta] with C_xi = S_xi h, entries
  // C^alpha_beta = -A^alpha_{delta rho} h^delta_xi h^rho_beta.
  auto h_of_c = [&](int a, int bcol, const Mat& s_a) {
    Mat res(n, n);
    const Mat sh = s_a * u.h;
    for (int alpha = 0; alpha < n; ++alpha)
      for (int beta = 0; beta < n; ++beta) {
        double acc = 0.0;
        for (int delta = 0; delta < n; ++delta)
          for (int rho = 0; rho < n; ++rho) {
            double da = 0.0;
            for (int k = 0; k < n; ++k) da += dconn(k, alpha, delta, rho) * b(k, a);
            acc -= da * u.h(delta, bcol) * u.h(rho, beta);
            acc -= g.conn(alpha, delta, rho) *
                   (sh(delta, bcol) * u.h(rho, beta) + u.h(delta, bcol) * sh(rho, beta));
          }
        res(alpha, beta) = acc;
      }
    return res;
  };
  out.dh = h_of_c(eta, xi, s_eta) - h_of_c(xi, eta, s_xi);
  return out;
}

DriftReport limiting_coefficients(const ManifoldModel& m, const ModelFields& f,
                                  const FrameBundlePoint& u) {
  const int n = m.dim();
  const FieldJet jet = field_jet(m, f, u);
  const Mat gamma_inv = jet.drag.inverse();

  DriftReport r;
  r.j = lyapunov_solve(jet.drag, jet.noise * jet.noise.transpose());
  const Mat lj_t = (l_matrix(jet.drag, r.j) - r.j).transpose();
  r.diffusion = gamma_inv * jet.noise;
  r.lift_coeff = gamma_inv * jet.force;

  r.sh_coeff = Vec::Zero(n);
  const Mat qt = r.diffusion.transpose();  // (gamma^{-1} sigma)^T
  for (int eta = 0; eta < n; ++eta) {
    const Mat t1 = gamma_inv * jet.noise_h[eta] * qt;
    const Mat t2 = -gamma_inv * jet.drag_h[eta] * gamma_inv * lj_t;
    for (int xi = 0; xi < n; ++xi) r.sh_coeff(xi) -= 0.5 * (t1(xi, eta) + t2(xi, eta));
  }

  r.lift = horizontal_field(m, u, r.lift_coeff);
  r.sh = horizontal_field(m, u, r.sh_coeff);
  r.sv = FrameTangent::zero(n);
  const Mat a = r.j * gamma_inv.transpose();
  for (int eta = 0; eta < n; ++eta)
    for (int xi = 0; xi < n; ++xi) {
      if (eta == xi) continue;
      r.sv += (-0.5 * a(xi, eta)) * h_bracket(m, u, eta, xi);
    }
  r.drift = r.lift + r.sh + r.sv;
  return r;
}

namespace {

class CoordinateObservable final : public ScalarObservable {
 public:
  explicit CoordinateObservable(int index) : index_(index) {}
  double value(int chart, const Vec& x, Vec* grad, Mat* hess) const override {
    (void)chart;
    const int n = static_cast<int>(x.size());
    if (index_ < 0 || index_ >= n)
      throw std::invalid_argument("coordinate_observable: index out of range");
    if (grad) {
      *grad = Vec::Zero(n);
      (*grad)(index_) = 1.0;
    }
    if (hess) *hess = Mat::Zero(n, n);
    return x(index_);
  }

 private:
  int index_;
};

class HeightObservable final : public ScalarObservable {
 public:
  explicit HeightObservable(const ManifoldModel& m) : m_(m) {}
  double value(int chart, const Vec& x, Vec* grad, Mat* hess) const override {
    return m_.height(chart, x, grad, hess);
  }

 private:
  const ManifoldModel& m_;
};

class PolarAngleObservable final : public ScalarObservable {
 public:
  explicit PolarAngleObservable(const ManifoldModel& m) : m_(m) {}
  double value(int chart, const Vec& x, Vec* grad, Mat* hess) const override {
    const int n = static_cast<int>(x.size());
    Vec hg(n);
    Mat hh(n, n);
    const bool want = grad || hess;
    const double c = m_.height(chart, x, want ? &hg : nullptr, hess ? &hh : nullptr);
    if (want) {
      const double w = 1.0 - c * c;
      if (w < 1e-12)
        throw std::domain_error("polar_angle_observable: derivative undefined at a pole");
      const double d1 = -1.0 / std::sqrt(w);
      const double d2 = -c / (w * std::sqrt(w));
      if (grad) *grad = d1 * hg;
      if (hess) *hess = d2 * (hg * hg.transpose()) + d1 * hh;
    }
    return std::acos(std::clamp(c, -1.0, 1.0));
  }

 private:
  const ManifoldModel& m_;
};

}  // namespace

std::unique_ptr<ScalarObservable> coordinate_observable(int index) {
  return std::make_unique<CoordinateObservable>(index);
}

std::unique_ptr<ScalarObservable> height_observable(const ManifoldModel& m) {
  return std::make_unique<HeightObservable>(m);
}

std::unique_ptr<ScalarObservable> polar_angle_observable(const ManifoldModel& m) {
  return std::make_unique<PolarAngleObservable>(m);
}

void scalar_h_derivs(const ManifoldModel& m, const ScalarObservable& obs,
                     const FrameBundlePoint& u, Vec* hf, Mat* hhf) {
  const int n = m.dim();
  const Geom g = geom_at(m, u.base);
  Vec grad(n);
  Mat hess(n, n);
  obs.value(u.base.chart, u.base.x, &grad, hhf ? &hess : nullptr);
  const Mat b = g.lam_inv * u.h;
  if (hf) *hf = b.transpose() * grad;
  if (!hhf) return;
  *hhf = b.transpose() * hess * b;
  for (int xi = 0; xi < n; ++xi) {
    Mat w = -g.lam_inv * g.conn.direction_matrix(n, u.h.col(xi)) * u.h;
    for (int k = 0; k < n; ++k) w += b(k, xi) * (g.dlam_inv[k] * u.h);
    hhf->row(xi) += (w.transpose() * grad).transpose();
  }
}

double ito_generator_apply(const ManifoldModel& m, const ModelFields& f,
                           const FrameBundlePoint& u, const ScalarObservable& obs) {
  const int n = m.dim();
  const FieldJet jet = field_jet(m, f, u);
  const Mat gamma_inv = jet.drag.inverse();
  const Mat j = lyapunov_solve(jet.drag, jet.noise * jet.noise.transpose());
  Vec hf(n);
  Mat hhf(n, n);
  scalar_h_derivs(m, obs, u, &hf, &hhf);

  double acc = (gamma_inv * jet.force).dot(hf);
  for (int xi = 0; xi < n; ++xi) {
    const Mat hginv = -gamma_inv * jet.drag_h[xi] * gamma_inv;
    for (int nu = 0; nu < n; ++nu) {
      double kf = 0.0;
      for (int mu = 0; mu < n; ++mu)
        kf += hginv(mu, nu) * hf(mu) + gamma_inv(mu, nu) * hhf(xi, mu);
      acc += j(nu, xi) * kf;
    }
  }
  return acc;
}

}  // namespace fbsde
