#pragma once
// Model fields: force, drag, and noise coefficients attached to a manifold,
// given per chart in coordinate components, plus their expression in the
// moving frame of a frame-bundle point:
//   force:  F(u) = h^-1 Lambda F_coords           (column, length n)
//   drag:   gamma(u) = h^-1 Lambda gamma_coords Lambda^-1 h   (n x n)
//   noise:  tensor form   sigma(u) = h^-1 Lambda sigma_coords Lambda^-1 h,
//           vector list   columns  h^-1 Lambda sigma_alpha    (n x k)
// All catalogue presets are built from globally defined tensors, so frame
// components are chart-independent and O(n)-equivariant.

#include <memory>
#include <string>

#include "fbsde/manifold.hpp"
#include "fbsde/types.hpp"

namespace fbsde {

enum class NoiseForm { tensor, vector_list };

// Position-dependent coefficient fields in chart coordinates.  Derivative
// methods have central-finite-difference defaults (step 1e-5 (1 + |x|));
// presets override them with analytic expressions.
class ModelFields {
 public:
  virtual ~ModelFields() = default;

  virtual std::string preset() const = 0;
  virtual NoiseForm noise_form() const = 0;
  virtual int noise_count() const = 0;  // number of driving Wiener components k

  virtual Vec force(int chart, const Vec& x) const = 0;   // F^i
  virtual Mat drag(int chart, const Vec& x) const = 0;    // gamma^i_j
  virtual Mat noise(int chart, const Vec& x) const = 0;   // sigma^i_j or columns sigma^i_alpha

  // jac(i, k) = d_k F^i.
  virtual Mat force_deriv(int chart, const Vec& x) const;
  // d[k] = d_k gamma (respectively d_k sigma), k = 0..n-1.
  virtual void drag_deriv(int chart, const Vec& x, Mat* d) const;
  virtual void noise_deriv(int chart, const Vec& x, Mat* d) const;

  // True when all coefficient fields are position-independent; integrators
  // may then cache per-step matrix factorizations.
  virtual bool constant_coefficients() const { return false; }
};

// A manifold + fields + scalar parameters, ready for simulation.
struct ModelSpec {
  const ManifoldModel* manifold = nullptr;
  std::shared_ptr<const ModelFields> fields;
  double mass = 1.0;
  // Declared uniform lower bound on the eigenvalues of the symmetric part of
  // the drag in the orthonormal frame.
  double gamma1 = 1.0;
  // Temperature parameter; NaN when the model is not a fluctuation-
  // dissipation pair.
  double kbt = std::numeric_limits<double>::quiet_NaN();
};

// Tunable preset parameters (unused knobs are ignored by a given preset).
struct PresetParams {
  double gamma0 = 1.0;      // isotropic drag level
  double gamma_mod = 0.0;   // scalar drag modulation: gamma0 + gamma_mod * height(x)
  double sigma0 = 1.0;      // isotropic noise level
  double sigma_mod = 0.0;   // scalar noise modulation: sigma0 + sigma_mod * height(x)
  double drag_rot = 0.0;    // rotational (antisymmetric) drag, n = 2 only
  double drag_grad = 0.0;   // rank-one symmetric drag along grad(height)
  double noise_grad = 0.0;  // rank-one symmetric noise along grad(height)
  double force_scale = 0.0; // force = force_scale * grad(height)
  double kbt = 1.0;         // temperature for the fluctuation-dissipation preset
};

// Named presets: "bm", "scalar_drag_noise", "fd_particle", "anisotropic_drag".
// Returns a fully populated ModelSpec (mass = 1; callers override).
// Throws std::invalid_argument for unknown names or inconsistent parameters.
ModelSpec make_preset(const std::string& name, const ManifoldModel& manifold,
                      const PresetParams& params = {});

// Constant-coefficient fields with explicit matrices (flat-chart models and
// test rigs).  gamma/sigma are interpreted in coordinate components.
ModelSpec make_constant_model(const ManifoldModel& manifold, const Vec& force,
                              const Mat& gamma, const Mat& sigma,
                              NoiseForm form = NoiseForm::tensor);

// --- frame components --------------------------------------------------------

Vec force_frame_components(const ManifoldModel& m, const ModelFields& f,
                           const FrameBundlePoint& u);
Mat drag_frame_components(const ManifoldModel& m, const ModelFields& f,
                          const FrameBundlePoint& u);
Mat noise_frame_components(const ManifoldModel& m, const ModelFields& f,
                           const FrameBundlePoint& u);

// Noise covariance in the moving frame, Sigma = S S^T with S the noise frame
// components (valid for both noise forms).
Mat noise_covariance_frame(const ManifoldModel& m, const ModelFields& f,
                           const FrameBundlePoint& u);

// Minimum eigenvalue of the symmetric part of the drag (orthonormal frame)
// over a low-discrepancy sample of every chart.  ModelSpec validation
// compares this against the declared gamma1.
double validate_drag_bound(const ManifoldModel& m, const ModelFields& f,
                           int points_per_chart = 1000);

// Throws std::domain_error if the measured drag bound over the sample falls
// below spec.gamma1 (with a 1e-9 slack) or is not strictly positive.
void validate_model(const ModelSpec& spec, int points_per_chart = 1000);

// Noise frame components of a fluctuation-dissipation pair reconstructed from
// the drag: sigma_E = sym_sqrt(2 kbt gamma_E).  Throws std::domain_error when
// gamma_E is not symmetric (no fluctuation-dissipation structure).
Mat fd_noise_from_drag(const Mat& gamma_frame, double kbt);

}  // namespace fbsde
