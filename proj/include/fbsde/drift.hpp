#pragma once
// Coefficients of the small-mass limit of the inertial dynamics on the
// orthonormal frame bundle.  In Stratonovich form the limit reads
//   du = H(gamma^{-1} F)(u) dt + S^h(u) dt + S^v(u) dt
//        + sum_eta H((gamma^{-1} sigma) e_eta)(u) o dW^eta,
// where all coefficient matrices are frame components at u = (x, h), H(v)
// is the horizontal lift of the frame components v, and with
//   J the solution of      gamma J + J gamma^T = sigma sigma^T,
//   L = gamma^{-1} J gamma^T,
// the noise-induced drift splits into a horizontal part S^h = H(s) with
//   s^xi = -(1/2) sum_eta ( [gamma^{-1} H_eta[sigma] (gamma^{-1} sigma)^T]^{xi eta}
//                          + [H_eta[gamma^{-1}] (L - J)^T]^xi{}_eta )
// and a vertical part
//   S^v = -(1/2) sum_{eta,xi} (J gamma^{-T})^{xi eta} [H_eta, H_xi].
// H_eta denotes the standard horizontal field H(e_eta); only the part of
// J gamma^{-T} antisymmetric in (xi, eta) contributes to S^v, so S^v
// vanishes whenever the drag is a scalar multiple of the identity.

#include <array>
#include <memory>

#include "fbsde/fields.hpp"
#include "fbsde/manifold.hpp"
#include "fbsde/types.hpp"

namespace fbsde {

// Frame components of the model fields at a frame bundle point together with
// their first derivatives along the standard horizontal fields.
struct FieldJet {
  int n = 0;  // manifold dimension
  int k = 0;  // number of noise columns
  Vec force;                                      // F^mu
  Mat force_h;                                    // (mu, xi) = H_xi[F^mu]
  Mat drag;                                       // gamma^mu_nu
  std::array<Mat, kMaxManifoldDim> drag_h;        // drag_h[xi] = H_xi[gamma]
  Mat noise;                                      // n x k
  std::array<Mat, kMaxManifoldDim> noise_h;       // noise_h[xi] = H_xi[sigma]
};

FieldJet field_jet(const ManifoldModel& m, const ModelFields& f,
                   const FrameBundlePoint& u);

// Lie bracket [H_eta, H_xi] of two standard horizontal fields at u.  The
// base part dx vanishes identically for the metric connection and is
// returned as computed so callers can confirm verticality to roundoff.
FrameTangent h_bracket(const ManifoldModel& m, const FrameBundlePoint& u,
                       int eta, int xi);

// Assembled Stratonovich coefficients of the limit at u.
struct DriftReport {
  Vec lift_coeff;    // gamma^{-1} F, frame components
  Vec sh_coeff;      // s, frame components of the horizontal noise drift
  FrameTangent lift; // H(lift_coeff)
  FrameTangent sh;   // H(sh_coeff)
  FrameTangent sv;   // vertical noise drift (dx == 0 up to roundoff)
  FrameTangent drift;// lift + sh + sv
  Mat j;             // Lyapunov solution in the frame
  Mat diffusion;     // gamma^{-1} sigma (n x k), Stratonovich columns
};

DriftReport limiting_coefficients(const ManifoldModel& m, const ModelFields& f,
                                  const FrameBundlePoint& u);

// A chart-smooth scalar observable on the base manifold: value with optional
// gradient and Hessian in chart coordinates.
class ScalarObservable {
 public:
  virtual ~ScalarObservable() = default;
  virtual double value(int chart, const Vec& x, Vec* grad = nullptr,
                       Mat* hess = nullptr) const = 0;
};

// f(x) = x^index in the chart of evaluation (chart-dependent on atlases with
// more than one chart).
std::unique_ptr<ScalarObservable> coordinate_observable(int index);
// f = height from the manifold catalogue (globally smooth).
std::unique_ptr<ScalarObservable> height_observable(const ManifoldModel& m);
// f = arccos(height); derivatives are undefined at the poles (|height| = 1)
// and requesting them there throws std::domain_error.
std::unique_ptr<ScalarObservable> polar_angle_observable(const ManifoldModel& m);

// First and second derivatives of a scalar observable along the standard
// horizontal fields: hf(mu) = H_mu[f], hhf(xi, mu) = H_xi[H_mu[f]].
// Either output may be null.
void scalar_h_derivs(const ManifoldModel& m, const ScalarObservable& obs,
                     const FrameBundlePoint& u, Vec* hf, Mat* hhf);

// Action of the generator of the limit on a scalar observable,
//   A f = H_{gamma^{-1} F}[f] + J^{nu xi} K^f_{nu xi},
//   K^f_{nu xi} = H_xi[(gamma^{-1})^mu_nu] H_mu[f]
//                 + (gamma^{-1})^mu_nu H_xi[H_mu[f]].
// The value is independent of the frame part of u.
double ito_generator_apply(const ManifoldModel& m, const ModelFields& f,
                           const FrameBundlePoint& u, const ScalarObservable& obs);

}  // namespace fbsde
