#include "fbsde/manifold.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "fbsde/linalg.hpp"

namespace fbsde {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_2pi(double x) { return x - kTwoPi * std::floor(x / kTwoPi); }

}  // namespace

// --- base-class helpers -----------------------------------------------------

void ManifoldModel::frame_coeff_deriv(int chart, const Vec& x, Mat* dlam,
                                      Mat* dlam_inv) const {
  const int n = dim();
  const double step = 1e-5 * (1.0 + x.norm());
  for (int k = 0; k < n; ++k) {
    Vec xp = x, xm = x;
    xp(k) += step;
    xm(k) -= step;
    if (dlam) dlam[k] = (frame_coeff(chart, xp) - frame_coeff(chart, xm)) / (2.0 * step);
    if (dlam_inv)
      dlam_inv[k] = (frame_coeff_inv(chart, xp) - frame_coeff_inv(chart, xm)) / (2.0 * step);
  }
}

ConnCoeffsDeriv ManifoldModel::connection_deriv(int chart, const Vec& x) const {
  const int n = dim();
  const double step = 1e-5 * (1.0 + x.norm());
  ConnCoeffsDeriv d;
  for (int k = 0; k < n; ++k) {
    Vec xp = x, xm = x;
    xp(k) += step;
    xm(k) -= step;
    const ConnCoeffs ap = connection(chart, xp);
    const ConnCoeffs am = connection(chart, xm);
    for (int alpha = 0; alpha < n; ++alpha)
      for (int beta = 0; beta < n; ++beta)
        for (int eta = 0; eta < n; ++eta)
          d(k, alpha, beta, eta) = (ap(alpha, beta, eta) - am(alpha, beta, eta)) / (2.0 * step);
  }
  return d;
}

Christoffel ManifoldModel::christoffel(int chart, const Vec& x) const {
  const int n = dim();
  const Mat lam = frame_coeff(chart, x);
  const Mat lam_inv = frame_coeff_inv(chart, x);
  Mat dlam[kMaxManifoldDim];
  frame_coeff_deriv(chart, x, dlam, nullptr);
  const ConnCoeffs a = connection(chart, x);

  Christoffel c;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double acc = 0.0;
        for (int alpha = 0; alpha < n; ++alpha) {
          double inner = dlam[j](alpha, k);
          for (int beta = 0; beta < n; ++beta)
            for (int eta = 0; eta < n; ++eta)
              inner += lam(eta, k) * lam(beta, j) * a(alpha, beta, eta);
          acc += lam_inv(i, alpha) * inner;
        }
        c(i, j, k) = acc;
      }
  return c;
}

int ManifoldModel::transition_target(int chart) const {
  if (chart_count() < 2) throw std::domain_error(name() + ": single-chart atlas has no transition");
  return 1 - chart;
}

Vec ManifoldModel::transition_coords(int, const Vec&) const {
  throw std::domain_error(name() + ": no chart transition defined");
}

Mat ManifoldModel::transition_frame_change(int, const Vec&) const {
  throw std::domain_error(name() + ": no chart transition defined");
}

// --- circle ------------------------------------------------------------------

namespace {

// Unit circle, angle coordinate on [0, 2pi), arc-length metric, embedded in
// R^2 as (cos x, sin x).
class CircleModel final : public ManifoldModel {
 public:
  std::string name() const override { return "circle"; }
  int dim() const override { return 1; }
  int chart_count() const override { return 1; }
  int embed_dim() const override { return 2; }

  bool in_domain(int chart, const Vec&) const override { return chart == 0; }
  Vec canonical_coords(int, const Vec& x) const override {
    Vec y = x;
    y(0) = wrap_2pi(y(0));
    return y;
  }

  Mat metric(int, const Vec&) const override { return Mat::Identity(1, 1); }
  Mat metric_inv(int, const Vec&) const override { return Mat::Identity(1, 1); }
  Mat frame_coeff(int, const Vec&) const override { return Mat::Identity(1, 1); }
  Mat frame_coeff_inv(int, const Vec&) const override { return Mat::Identity(1, 1); }
  void frame_coeff_deriv(int, const Vec&, Mat* dlam, Mat* dlam_inv) const override {
    if (dlam) dlam[0] = Mat::Zero(1, 1);
    if (dlam_inv) dlam_inv[0] = Mat::Zero(1, 1);
  }
  ConnCoeffs connection(int, const Vec&) const override { return {}; }
  ConnCoeffsDeriv connection_deriv(int, const Vec&) const override { return {}; }

  bool in_overlap(int, const Vec&) const override { return false; }
  bool flat_chart() const override { return true; }

  EmbedVec embed(int, const Vec& x) const override {
    EmbedVec p(2);
    p << std::cos(x(0)), std::sin(x(0));
    return p;
  }
  EmbedMat embed_diff(int, const Vec& x) const override {
    EmbedMat d(2, 1);
    d << -std::sin(x(0)), std::cos(x(0));
    return d;
  }

  double geodesic_distance(const ChartPoint& a, const ChartPoint& b) const override {
    const double d = wrap_2pi(a.x(0) - b.x(0));
    return std::min(d, kTwoPi - d);
  }

  double height(int, const Vec& x, Vec* grad, Mat* hess) const override {
    if (grad) {
      grad->resize(1);
      (*grad)(0) = std::cos(x(0));
    }
    if (hess) {
      hess->resize(1, 1);
      (*hess)(0, 0) = -std::sin(x(0));
    }
    return std::sin(x(0));
  }
};

// --- flat 2-torus -------------------------------------------------------------

// Flat square torus, coordinates on [0, 2pi)^2, embedded isometrically in R^4
// as (cos x1, sin x1, cos x2, sin x2).
class TorusModel final : public ManifoldModel {
 public:
  std::string name() const override { return "torus2"; }
  int dim() const override { return 2; }
  int chart_count() const override { return 1; }
  int embed_dim() const override { return 4; }

  bool in_domain(int chart, const Vec&) const override { return chart == 0; }
  Vec canonical_coords(int, const Vec& x) const override {
    Vec y = x;
    y(0) = wrap_2pi(y(0));
    y(1) = wrap_2pi(y(1));
    return y;
  }

  Mat metric(int, const Vec&) const override { return Mat::Identity(2, 2); }
  Mat metric_inv(int, const Vec&) const override { return Mat::Identity(2, 2); }
  Mat frame_coeff(int, const Vec&) const override { return Mat::Identity(2, 2); }
  Mat frame_coeff_inv(int, const Vec&) const override { return Mat::Identity(2, 2); }
  void frame_coeff_deriv(int, const Vec&, Mat* dlam, Mat* dlam_inv) const override {
    for (int k = 0; k < 2; ++k) {
      if (dlam) dlam[k] = Mat::Zero(2, 2);
      if (dlam_inv) dlam_inv[k] = Mat::Zero(2, 2);
    }
  }
  ConnCoeffs connection(int, const Vec&) const override { return {}; }
  ConnCoeffsDeriv connection_deriv(int, const Vec&) const override { return {}; }

  bool in_overlap(int, const Vec&) const override { return false; }
  bool flat_chart() const override { return true; }

  EmbedVec embed(int, const Vec& x) const override {
    EmbedVec p(4);
    p << std::cos(x(0)), std::sin(x(0)), std::cos(x(1)), std::sin(x(1));
    return p;
  }
  EmbedMat embed_diff(int, const Vec& x) const override {
    EmbedMat d = EmbedMat::Zero(4, 2);
    d(0, 0) = -std::sin(x(0));
    d(1, 0) = std::cos(x(0));
    d(2, 1) = -std::sin(x(1));
    d(3, 1) = std::cos(x(1));
    return d;
  }

  double geodesic_distance(const ChartPoint& a, const ChartPoint& b) const override {
    // Flat metric: minimum over the nine lattice shifts of the coordinate gap.
    double best = std::numeric_limits<double>::infinity();
    for (int s1 = -1; s1 <= 1; ++s1)
      for (int s2 = -1; s2 <= 1; ++s2) {
        const double d1 = wrap_2pi(a.x(0)) - wrap_2pi(b.x(0)) + kTwoPi * s1;
        const double d2 = wrap_2pi(a.x(1)) - wrap_2pi(b.x(1)) + kTwoPi * s2;
        best = std::min(best, std::hypot(d1, d2));
      }
    return best;
  }

  double height(int, const Vec& x, Vec* grad, Mat* hess) const override {
    if (grad) {
      grad->resize(2);
      (*grad) << std::cos(x(0)), 0.0;
    }
    if (hess) {
      *hess = Mat::Zero(2, 2);
      (*hess)(0, 0) = -std::sin(x(0));
    }
    return std::sin(x(0));
  }
};

// --- round 2-sphere -----------------------------------------------------------

// Unit sphere with two stereographic charts.  Chart 0 projects from the north
// pole (south pole at the origin), chart 1 from the south pole.  Both carry
// the conformal metric g = lambda(z)^2 I with lambda = 2 / (1 + |z|^2) and the
// reference frame E_alpha = lambda^{-1} d_alpha.  Chart domains are |z| < 3,
// the overlap is 1/3 < |z| < 3, and the transition is the inversion
// z' = z / |z|^2 with orthogonal frame change T = I - 2 zhat zhat^T.
class SphereModel final : public ManifoldModel {
 public:
  std::string name() const override { return "sphere2"; }
  int dim() const override { return 2; }
  int chart_count() const override { return 2; }
  int embed_dim() const override { return 3; }

  bool in_domain(int chart, const Vec& x) const override {
    return (chart == 0 || chart == 1) && x.norm() < 3.0;
  }

  Mat metric(int, const Vec& x) const override {
    const double lam = 2.0 / (1.0 + x.squaredNorm());
    return Mat(lam * lam * Mat::Identity(2, 2));
  }
  Mat metric_inv(int, const Vec& x) const override {
    const double lam = 2.0 / (1.0 + x.squaredNorm());
    return Mat(Mat::Identity(2, 2) / (lam * lam));
  }
  Mat frame_coeff(int, const Vec& x) const override {
    return Mat((2.0 / (1.0 + x.squaredNorm())) * Mat::Identity(2, 2));
  }
  Mat frame_coeff_inv(int, const Vec& x) const override {
    return Mat(0.5 * (1.0 + x.squaredNorm()) * Mat::Identity(2, 2));
  }
  void frame_coeff_deriv(int, const Vec& x, Mat* dlam, Mat* dlam_inv) const override {
    const double s = 1.0 + x.squaredNorm();
    for (int k = 0; k < 2; ++k) {
      if (dlam) dlam[k] = Mat(-(4.0 * x(k) / (s * s)) * Mat::Identity(2, 2));
      if (dlam_inv) dlam_inv[k] = Mat(x(k) * Mat::Identity(2, 2));
    }
  }

  // A^alpha_{beta eta} = z_alpha delta_{beta eta} - z_eta delta_{alpha beta}.
  ConnCoeffs connection(int, const Vec& x) const override {
    ConnCoeffs a;
    for (int alpha = 0; alpha < 2; ++alpha)
      for (int beta = 0; beta < 2; ++beta)
        for (int eta = 0; eta < 2; ++eta)
          a(alpha, beta, eta) =
              x(alpha) * (beta == eta ? 1.0 : 0.0) - x(eta) * (alpha == beta ? 1.0 : 0.0);
    return a;
  }
  ConnCoeffsDeriv connection_deriv(int, const Vec&) const override {
    ConnCoeffsDeriv d;
    for (int k = 0; k < 2; ++k)
      for (int alpha = 0; alpha < 2; ++alpha)
        for (int beta = 0; beta < 2; ++beta)
          for (int eta = 0; eta < 2; ++eta)
            d(k, alpha, beta, eta) = (alpha == k && beta == eta ? 1.0 : 0.0) -
                                     (eta == k && alpha == beta ? 1.0 : 0.0);
    return d;
  }

  bool in_overlap(int chart, const Vec& x) const override {
    const double r = x.norm();
    return in_domain(chart, x) && r > 1.0 / 3.0 && r < 3.0;
  }
  Vec transition_coords(int, const Vec& x) const override {
    return Vec(x / x.squaredNorm());
  }
  Mat transition_frame_change(int, const Vec& x) const override {
    const Vec zhat = x.normalized();
    return Mat(Mat::Identity(2, 2) - 2.0 * zhat * zhat.transpose());
  }
  bool wants_chart_switch(int, const Vec& x) const override { return x.norm() > 2.0; }

  double chart_orientation(int chart) const override { return chart == 0 ? 1.0 : -1.0; }

  EmbedVec embed(int chart, const Vec& x) const override {
    const double s = 1.0 + x.squaredNorm();
    EmbedVec p(3);
    const double sign = chart == 0 ? 1.0 : -1.0;
    p << 2.0 * x(0) / s, 2.0 * x(1) / s, sign * (x.squaredNorm() - 1.0) / s;
    return p;
  }
  EmbedMat embed_diff(int chart, const Vec& x) const override {
    const double s = 1.0 + x.squaredNorm();
    const double sign = chart == 0 ? 1.0 : -1.0;
    EmbedMat d(3, 2);
    for (int j = 0; j < 2; ++j) {
      for (int i = 0; i < 2; ++i)
        d(i, j) = 2.0 * ((i == j ? 1.0 : 0.0) / s - 2.0 * x(i) * x(j) / (s * s));
      d(2, j) = sign * 4.0 * x(j) / (s * s);
    }
    return d;
  }

  double geodesic_distance(const ChartPoint& a, const ChartPoint& b) const override {
    const EmbedVec pa = embed(a.chart, a.x);
    const EmbedVec pb = embed(b.chart, b.x);
    const Eigen::Vector3d va(pa(0), pa(1), pa(2)), vb(pb(0), pb(1), pb(2));
    return std::atan2(va.cross(vb).norm(), va.dot(vb));
  }

  // Height = third embedding coordinate.
  double height(int chart, const Vec& x, Vec* grad, Mat* hess) const override {
    const double s = 1.0 + x.squaredNorm();
    const double sign = chart == 0 ? 1.0 : -1.0;
    if (grad) {
      grad->resize(2);
      for (int j = 0; j < 2; ++j) (*grad)(j) = sign * 4.0 * x(j) / (s * s);
    }
    if (hess) {
      hess->resize(2, 2);
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
          (*hess)(j, k) =
              sign * (4.0 * (j == k ? 1.0 : 0.0) / (s * s) - 16.0 * x(j) * x(k) / (s * s * s));
    }
    return sign * (x.squaredNorm() - 1.0) / s;
  }
};

const CircleModel g_circle;
const TorusModel g_torus;
const SphereModel g_sphere;

}  // namespace

const ManifoldModel& manifold_by_name(const std::string& id) {
  if (id == "circle") return g_circle;
  if (id == "torus2") return g_torus;
  if (id == "sphere2") return g_sphere;
  throw std::invalid_argument("unknown manifold id '" + id +
                              "' (known: circle, torus2, sphere2)");
}

// --- frame bundle operations ---------------------------------------------------

FrameTangent horizontal_field(const ManifoldModel& m, const FrameBundlePoint& u, const Vec& v) {
  const int n = m.dim();
  const Vec w = Vec(u.h * v);  // direction in the reference frame
  FrameTangent t;
  t.dx = Vec(m.frame_coeff_inv(u.base.chart, u.base.x) * w);
  t.dh = Mat(-m.connection(u.base.chart, u.base.x).direction_matrix(n, w) * u.h);
  return t;
}

FrameBundlePoint chart_transition(const ManifoldModel& m, const FrameBundlePoint& u, int target) {
  const int chart = u.base.chart;
  if (target != m.transition_target(chart))
    throw std::invalid_argument(m.name() + ": invalid transition target chart");
  if (!m.in_overlap(chart, u.base.x))
    throw std::domain_error(m.name() + ": point outside the chart overlap");
  if (orthogonality_defect(u.h) > 1e-10)
    throw std::domain_error(m.name() + ": frame not orthogonal to 1e-10");

  FrameBundlePoint r;
  r.base.chart = target;
  r.base.x = m.canonical_coords(target, m.transition_coords(chart, u.base.x));
  r.h = Mat(m.transition_frame_change(chart, u.base.x) * u.h);
  return r;
}

FrameBundlePoint orthonormalize_frame(const FrameBundlePoint& u) {
  return {u.base, polar_orthonormalize(u.h)};
}

double geodesic_distance(const ManifoldModel& m, const ChartPoint& a, const ChartPoint& b) {
  return m.geodesic_distance(a, b);
}

double frame_distance(const ManifoldModel& m, const FrameBundlePoint& a, const FrameBundlePoint& b) {
  const EmbedVec pa = m.embed(a.base.chart, a.base.x);
  const EmbedVec pb = m.embed(b.base.chart, b.base.x);
  const EmbedMat fa =
      m.embed_diff(a.base.chart, a.base.x) * m.frame_coeff_inv(a.base.chart, a.base.x) * a.h;
  const EmbedMat fb =
      m.embed_diff(b.base.chart, b.base.x) * m.frame_coeff_inv(b.base.chart, b.base.x) * b.h;
  return std::sqrt((pa - pb).squaredNorm() + (fa - fb).squaredNorm());
}

FrameBundlePoint advance(const FrameBundlePoint& u, const FrameTangent& t, double scale) {
  FrameBundlePoint r = u;
  r.base.x += scale * t.dx;
  r.h += scale * t.dh;
  return r;
}

}  // namespace fbsde
