#pragma once
// Chart-based models of compact Riemannian manifolds and their orthonormal
// frame bundles.
//
// Conventions used throughout:
//  - Each chart carries a reference orthonormal frame {E_alpha} related to the
//    coordinate basis by  d_i = Lambda^alpha_i E_alpha,  so Lambda^T Lambda = g
//    (the metric in coordinates) and v_frame = Lambda v_coords.
//  - Connection coefficients A^alpha_{beta eta} are defined by
//    nabla_{E_beta} E_eta = A^alpha_{beta eta} E_alpha and are antisymmetric
//    in (alpha, eta).  For a direction w (frame components) the matrix
//    [A(w)]^alpha_eta = A^alpha_{beta eta} w^beta is antisymmetric.
//  - A frame is a matrix h with columns h(:, alpha) = components of the
//    alpha-th frame vector in the reference frame; h lies in O(n).
//  - The horizontal lift of frame components v at u = (x, h) moves the base by
//    dx = Lambda^{-1} h v and the frame by dh = -A(h v) h, which preserves
//    h^T h exactly along the continuous flow.

#include <memory>
#include <string>

#include "fbsde/types.hpp"

namespace fbsde {

// Base-manifold point: chart index plus chart coordinates.
struct ChartPoint {
  int chart = 0;
  Vec x;
};

// Frame bundle point.
struct FrameBundlePoint {
  ChartPoint base;
  Mat h;
};

// Tangent vector at a frame bundle point.  Vertical tangents have dx = 0;
// tangents along O(n) satisfy dh h^T + h dh^T = 0.
struct FrameTangent {
  Vec dx;
  Mat dh;

  static FrameTangent zero(int n) {
    return {Vec::Zero(n), Mat::Zero(n, n)};
  }
  FrameTangent& operator+=(const FrameTangent& o) {
    dx += o.dx;
    dh += o.dh;
    return *this;
  }
  FrameTangent& operator-=(const FrameTangent& o) {
    dx -= o.dx;
    dh -= o.dh;
    return *this;
  }
  FrameTangent& operator*=(double c) {
    dx *= c;
    dh *= c;
    return *this;
  }
  friend FrameTangent operator+(FrameTangent a, const FrameTangent& b) { return a += b; }
  friend FrameTangent operator-(FrameTangent a, const FrameTangent& b) { return a -= b; }
  friend FrameTangent operator*(double c, FrameTangent a) { return a *= c; }
  double norm() const { return std::sqrt(dx.squaredNorm() + dh.squaredNorm()); }
};

// Connection coefficients A^alpha_{beta eta}, indices [alpha][beta][eta], and
// their coordinate derivatives d_k A^alpha_{beta eta}, indices
// [k][alpha][beta][eta].  Manifold dimension is at most 2 in the catalogue.
inline constexpr int kMaxManifoldDim = 2;

struct ConnCoeffs {
  double a[kMaxManifoldDim][kMaxManifoldDim][kMaxManifoldDim] = {};
  double operator()(int alpha, int beta, int eta) const { return a[alpha][beta][eta]; }
  double& operator()(int alpha, int beta, int eta) { return a[alpha][beta][eta]; }
  // [A(w)]^alpha_eta = A^alpha_{beta eta} w^beta for frame components w.
  Mat direction_matrix(int n, const Vec& w) const {
    Mat m(n, n);
    for (int alpha = 0; alpha < n; ++alpha)
      for (int eta = 0; eta < n; ++eta) {
        double acc = 0.0;
        for (int beta = 0; beta < n; ++beta) acc += a[alpha][beta][eta] * w(beta);
        m(alpha, eta) = acc;
      }
    return m;
  }
};

struct ConnCoeffsDeriv {
  double a[kMaxManifoldDim][kMaxManifoldDim][kMaxManifoldDim][kMaxManifoldDim] = {};
  double operator()(int k, int alpha, int beta, int eta) const { return a[k][alpha][beta][eta]; }
  double& operator()(int k, int alpha, int beta, int eta) { return a[k][alpha][beta][eta]; }
};

// Christoffel symbols Gamma^i_{jk}, indices [i][j][k].
struct Christoffel {
  double g[kMaxManifoldDim][kMaxManifoldDim][kMaxManifoldDim] = {};
  double operator()(int i, int j, int k) const { return g[i][j][k]; }
  double& operator()(int i, int j, int k) { return g[i][j][k]; }
};

class ManifoldModel {
 public:
  virtual ~ManifoldModel() = default;

  virtual std::string name() const = 0;
  virtual int dim() const = 0;
  virtual int chart_count() const = 0;
  virtual int embed_dim() const = 0;

  virtual bool in_domain(int chart, const Vec& x) const = 0;
  // Wraps periodic coordinates into their canonical range; identity elsewhere.
  virtual Vec canonical_coords(int chart, const Vec& x) const { (void)chart; return x; }

  virtual Mat metric(int chart, const Vec& x) const = 0;
  virtual Mat metric_inv(int chart, const Vec& x) const = 0;
  virtual Mat frame_coeff(int chart, const Vec& x) const = 0;      // Lambda
  virtual Mat frame_coeff_inv(int chart, const Vec& x) const = 0;  // Lambda^{-1}

  // d_k Lambda and d_k Lambda^{-1}, k = 0..n-1.  The base implementation is a
  // central finite difference with step 1e-5 (1 + |x|); catalogue manifolds
  // override it with analytic expressions.
  virtual void frame_coeff_deriv(int chart, const Vec& x, Mat* dlam, Mat* dlam_inv) const;

  virtual ConnCoeffs connection(int chart, const Vec& x) const = 0;
  // Base implementation: central finite difference of connection(); catalogue
  // manifolds override with analytic expressions.
  virtual ConnCoeffsDeriv connection_deriv(int chart, const Vec& x) const;

  // Gamma^i_{jk} assembled from Lambda, its derivative, and A through
  // Gamma^i_{jk} = (Lambda^{-1})^i_alpha (d_j Lambda^alpha_k
  //                + Lambda^eta_k Lambda^beta_j A^alpha_{beta eta}).
  Christoffel christoffel(int chart, const Vec& x) const;

  // Chart atlas.  Charts come in overlapping pairs; transition_target names
  // the chart a point can be rewritten into.
  virtual bool in_overlap(int chart, const Vec& x) const = 0;
  virtual int transition_target(int chart) const;
  virtual Vec transition_coords(int chart, const Vec& x) const;
  // Orthogonal frame-change matrix T with h_new = T h_old.
  virtual Mat transition_frame_change(int chart, const Vec& x) const;
  // Hysteresis policy: true once the point has left the chart's comfort zone.
  virtual bool wants_chart_switch(int chart, const Vec& x) const { (void)chart; (void)x; return false; }

  // Orientation of the chart's reference frame relative to the manifold's
  // chosen global orientation (+1 or -1).
  virtual double chart_orientation(int chart) const { (void)chart; return 1.0; }

  // True when every chart has Lambda == I and vanishing connection
  // coefficients, so frames are constant along horizontal transport.
  virtual bool flat_chart() const { return false; }

  virtual EmbedVec embed(int chart, const Vec& x) const = 0;
  virtual EmbedMat embed_diff(int chart, const Vec& x) const = 0;

  virtual double geodesic_distance(const ChartPoint& a, const ChartPoint& b) const = 0;

  // Height observable (the embedding coordinate used to build smooth global
  // scalar fields): value, gradient and Hessian in chart coordinates.
  virtual double height(int chart, const Vec& x, Vec* grad, Mat* hess) const = 0;
};

// Catalogue lookup by id: "circle", "torus2", "sphere2".
// Throws std::invalid_argument for unknown ids.
const ManifoldModel& manifold_by_name(const std::string& id);

// --- frame bundle operations ---

// Horizontal lift at u of the frame components v.
FrameTangent horizontal_field(const ManifoldModel& m, const FrameBundlePoint& u, const Vec& v);

// Rewrites u in the target chart.  The embedded image of the base point and of
// every frame vector is unchanged; requires the base point to lie in the
// overlap and the frame to be orthogonal to 1e-10.
FrameBundlePoint chart_transition(const ManifoldModel& m, const FrameBundlePoint& u, int target);

// Replaces h by its polar factor (nearest orthogonal matrix).
FrameBundlePoint orthonormalize_frame(const FrameBundlePoint& u);

double geodesic_distance(const ManifoldModel& m, const ChartPoint& a, const ChartPoint& b);

// Chordal distance on the frame bundle through the embedding: base-point
// displacement plus the Frobenius mismatch of the embedded frame vectors.
double frame_distance(const ManifoldModel& m, const FrameBundlePoint& a, const FrameBundlePoint& b);

// u + scale * t applied to coordinates and frame entries (no projection).
FrameBundlePoint advance(const FrameBundlePoint& u, const FrameTangent& t, double scale);

}  // namespace fbsde
