// Tests for model fields: frame-component conventions, equivariance, chart
// independence, drag-bound validation, and the fluctuation-dissipation
// round trip.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fbsde/fields.hpp"
#include "fbsde/linalg.hpp"

using namespace fbsde;

namespace {

constexpr double kPi = std::numbers::pi;
std::mt19937_64 g_rng(8675309);

double uniform(double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(g_rng);
}

Mat random_o2() {
  const double a = uniform(0.0, 2.0 * kPi);
  Mat r(2, 2);
  r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  if (g_rng() & 1) r.col(1) *= -1.0;
  return r;
}

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Vec random_sphere_point() {
  const double r = std::exp(uniform(std::log(0.35), std::log(2.5)));
  const double a = uniform(0.0, 2.0 * kPi);
  return vec2(r * std::cos(a), r * std::sin(a));
}

std::vector<ModelSpec> all_presets(const ManifoldModel& m) {
  PresetParams scalar;
  scalar.gamma0 = 1.2;
  scalar.gamma_mod = 0.3;
  scalar.sigma0 = 1.0;
  scalar.sigma_mod = 0.5;
  scalar.force_scale = 0.7;
  PresetParams fd;
  fd.sigma0 = 1.0;
  fd.noise_grad = 0.5;
  fd.kbt = 0.8;
  fd.force_scale = 0.4;
  PresetParams aniso;
  aniso.gamma0 = 1.0;
  aniso.drag_rot = 1.0;
  aniso.drag_grad = 0.4;
  aniso.sigma0 = 1.0;
  aniso.noise_grad = 0.3;
  return {make_preset("bm", m), make_preset("scalar_drag_noise", m, scalar),
          make_preset("fd_particle", m, fd), make_preset("anisotropic_drag", m, aniso)};
}

}  // namespace

TEST_CASE("frame components at the identity frame on the flat torus") {
  const auto& t = manifold_by_name("torus2");
  Vec f0 = vec2(0.4, -0.2);
  Mat gamma(2, 2), sigma(2, 2);
  gamma << 2.0, 1.0, 0.0, 2.0;
  sigma << 1.0, 0.5, 0.0, 1.5;
  const ModelSpec spec = make_constant_model(t, f0, gamma, sigma);

  FrameBundlePoint u{{0, vec2(1.0, 2.0)}, Mat::Identity(2, 2)};
  CHECK((force_frame_components(t, *spec.fields, u) - f0).norm() < 1e-15);
  CHECK((drag_frame_components(t, *spec.fields, u) - gamma).norm() < 1e-15);
  CHECK((noise_frame_components(t, *spec.fields, u) - sigma).norm() < 1e-15);
}

TEST_CASE("drag frame components: similarity invariants across frames") {
  const auto& s = manifold_by_name("sphere2");
  const ModelSpec spec = all_presets(s)[3];  // anisotropic_drag
  for (int trial = 0; trial < 50; ++trial) {
    FrameBundlePoint u{{trial % 2, random_sphere_point()}, Mat::Identity(2, 2)};
    const Mat g0 = drag_frame_components(s, *spec.fields, u);
    u.h = random_o2();
    const Mat g1 = drag_frame_components(s, *spec.fields, u);
    CHECK(g0.trace() == doctest::Approx(g1.trace()).epsilon(1e-12));
    CHECK(g0.determinant() == doctest::Approx(g1.determinant()).epsilon(1e-12));

    // Orthogonal conjugation preserves the symmetric-part spectrum.
    Eigen::SelfAdjointEigenSolver<Mat> e0(Mat(0.5 * (g0 + g0.transpose())));
    Eigen::SelfAdjointEigenSolver<Mat> e1(Mat(0.5 * (g1 + g1.transpose())));
    CHECK((e0.eigenvalues() - e1.eigenvalues()).norm() < 1e-12);
    CHECK(e0.eigenvalues().minCoeff() >= spec.gamma1 - 1e-12);
  }
}

TEST_CASE("frame components are O(n)-equivariant") {
  const auto& s = manifold_by_name("sphere2");
  for (const ModelSpec& spec : all_presets(s)) {
    for (int trial = 0; trial < 25; ++trial) {
      FrameBundlePoint u{{trial % 2, random_sphere_point()}, random_o2()};
      const Mat g = random_o2();
      FrameBundlePoint ug = u;
      ug.h = Mat(u.h * g);

      const Vec f = force_frame_components(s, *spec.fields, u);
      CHECK((force_frame_components(s, *spec.fields, ug) - Vec(g.transpose() * f)).norm() <
            1e-12);
      const Mat dg = drag_frame_components(s, *spec.fields, u);
      CHECK((drag_frame_components(s, *spec.fields, ug) - Mat(g.transpose() * dg * g)).norm() <
            1e-12);
      const Mat ns = noise_frame_components(s, *spec.fields, u);
      CHECK((noise_frame_components(s, *spec.fields, ug) - Mat(g.transpose() * ns * g)).norm() <
            1e-12);
    }
  }

  // Vector-list noise transforms one-sidedly: columns map to g^T columns.
  const auto& t = manifold_by_name("torus2");
  Mat cols(2, 3);
  cols << 1.0, 0.2, -0.3, 0.0, 1.1, 0.7;
  const ModelSpec vl = make_constant_model(t, Vec(Vec::Zero(2)), Mat(Mat::Identity(2, 2)), cols,
                                           NoiseForm::vector_list);
  FrameBundlePoint u{{0, vec2(0.5, 0.5)}, random_o2()};
  const Mat g = random_o2();
  FrameBundlePoint ug = u;
  ug.h = Mat(u.h * g);
  const Mat s0 = noise_frame_components(t, *vl.fields, u);
  CHECK((noise_frame_components(t, *vl.fields, ug) - Mat(g.transpose() * s0)).norm() < 1e-12);
  CHECK((noise_covariance_frame(t, *vl.fields, ug) -
         Mat(g.transpose() * noise_covariance_frame(t, *vl.fields, u) * g)).norm() < 1e-12);
}

TEST_CASE("frame components are chart-independent") {
  const auto& s = manifold_by_name("sphere2");
  for (const ModelSpec& spec : all_presets(s)) {
    for (int trial = 0; trial < 25; ++trial) {
      FrameBundlePoint u{{0, random_sphere_point()}, random_o2()};
      const FrameBundlePoint w = chart_transition(s, u, 1);
      CHECK((force_frame_components(s, *spec.fields, u) -
             force_frame_components(s, *spec.fields, w)).norm() < 1e-8);
      CHECK((drag_frame_components(s, *spec.fields, u) -
             drag_frame_components(s, *spec.fields, w)).norm() < 1e-8);
      CHECK((noise_frame_components(s, *spec.fields, u) -
             noise_frame_components(s, *spec.fields, w)).norm() < 1e-8);
    }
  }
}

TEST_CASE("validate_drag_bound: frozen example and preset bounds") {
  const auto& t = manifold_by_name("torus2");
  Mat gamma(2, 2);
  gamma << 2.0, 1.0, 0.0, 2.0;
  const ModelSpec spec =
      make_constant_model(t, Vec(Vec::Zero(2)), gamma, Mat(Mat::Identity(2, 2)));
  // Symmetric part [[2, .5], [.5, 2]] has eigenvalues {1.5, 2.5}.
  CHECK(validate_drag_bound(t, *spec.fields, 100) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(spec.gamma1 == doctest::Approx(1.5).epsilon(1e-12));
  CHECK_NOTHROW(validate_model(spec, 100));

  // Scalar modulated drag on the circle: min over x of 1 + 0.5 sin x = 0.5.
  PresetParams p;
  p.gamma0 = 1.0;
  p.gamma_mod = 0.5;
  const auto& c = manifold_by_name("circle");
  ModelSpec sc = make_preset("scalar_drag_noise", c, p);
  CHECK(sc.gamma1 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(validate_drag_bound(c, *sc.fields, 2000) == doctest::Approx(0.5).epsilon(1e-5));
  CHECK_NOTHROW(validate_model(sc));

  // A tampered declared bound is rejected.
  sc.gamma1 = 0.9;
  CHECK_THROWS_AS(validate_model(sc), std::domain_error);

  // Non-positive drag is rejected at construction.
  Mat bad(2, 2);
  bad << 1.0, 3.0, 3.0, 1.0;  // eigenvalues {4, -2}
  CHECK_THROWS_AS((void)make_constant_model(t, Vec(Vec::Zero(2)), bad, Mat(Mat::Identity(2, 2))),
                  std::invalid_argument);
}

TEST_CASE("fluctuation-dissipation round trip") {
  const auto& s = manifold_by_name("sphere2");
  PresetParams fd;
  fd.sigma0 = 1.0;
  fd.noise_grad = 0.5;
  fd.kbt = 0.8;
  const ModelSpec spec = make_preset("fd_particle", s, fd);
  CHECK(spec.kbt == doctest::Approx(0.8));

  for (int trial = 0; trial < 25; ++trial) {
    FrameBundlePoint u{{trial % 2, random_sphere_point()}, random_o2()};
    const Mat sig = noise_frame_components(s, *spec.fields, u);
    const Mat gam = drag_frame_components(s, *spec.fields, u);
    // gamma = sigma sigma^T / (2 kbt) by construction.
    CHECK((gam - Mat(sig * sig.transpose() / (2.0 * 0.8))).norm() < 1e-12);
    // Reconstructing the noise from the drag returns the same (symmetric PD) root.
    CHECK((fd_noise_from_drag(gam, 0.8) - sig).norm() < 1e-10);
  }

  // Drag with a rotational part has no fluctuation-dissipation root.
  PresetParams aniso;
  aniso.drag_rot = 1.0;
  const ModelSpec rot = make_preset("anisotropic_drag", s, aniso);
  FrameBundlePoint u{{0, vec2(1.0, 0.2)}, Mat::Identity(2, 2)};
  CHECK_THROWS_AS((void)fd_noise_from_drag(drag_frame_components(s, *rot.fields, u), 1.0),
                  std::domain_error);
}

TEST_CASE("analytic coefficient derivatives match finite differences") {
  for (const char* id : {"circle", "torus2", "sphere2"}) {
    const auto& m = manifold_by_name(id);
    for (const ModelSpec& spec : all_presets(m)) {
      const ModelFields& f = *spec.fields;
      for (int chart = 0; chart < m.chart_count(); ++chart) {
        for (int trial = 0; trial < 10; ++trial) {
          Vec x(m.dim());
          for (int i = 0; i < m.dim(); ++i) x(i) = uniform(0.3, 1.8);
          const double step = 1e-6 * (1.0 + x.norm());

          const Mat fj = f.force_deriv(chart, x);
          Mat dgamma[2], dsigma[2];
          f.drag_deriv(chart, x, dgamma);
          f.noise_deriv(chart, x, dsigma);
          for (int k = 0; k < m.dim(); ++k) {
            Vec xp = x, xm = x;
            xp(k) += step;
            xm(k) -= step;
            CHECK((Vec(fj.col(k)) - Vec((f.force(chart, xp) - f.force(chart, xm)) / (2 * step)))
                      .norm() < 1e-6);
            CHECK((dgamma[k] - Mat((f.drag(chart, xp) - f.drag(chart, xm)) / (2 * step))).norm() <
                  1e-6);
            CHECK((dsigma[k] - Mat((f.noise(chart, xp) - f.noise(chart, xm)) / (2 * step)))
                      .norm() < 1e-6);
          }
        }
      }
    }
  }
}

TEST_CASE("constant-coefficient detection") {
  const auto& t = manifold_by_name("torus2");
  CHECK(make_preset("bm", t).fields->constant_coefficients());
  PresetParams p;
  p.sigma_mod = 0.5;
  CHECK(!make_preset("scalar_drag_noise", t, p).fields->constant_coefficients());
  CHECK_THROWS_AS((void)make_preset("nonesuch", t), std::invalid_argument);
}
