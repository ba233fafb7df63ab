// Tests for the manifold catalogue and frame-bundle operations.  Oracles are
// closed-form geometry: conformal-chart Christoffel symbols, great circles,
// latitude-loop parallel transport (rotation by 2 pi cos theta0), and exact
// chart-transition identities of the stereographic atlas.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fbsde/linalg.hpp"
#include "fbsde/manifold.hpp"

using namespace fbsde;

namespace {

constexpr double kPi = std::numbers::pi;

std::mt19937_64 g_rng(20260817);

double uniform(double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(g_rng);
}

Mat random_o2(bool allow_reflection = true) {
  const double a = uniform(0.0, 2.0 * kPi);
  Mat r(2, 2);
  r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  if (allow_reflection && (g_rng() & 1)) {
    r.col(1) *= -1.0;
  }
  return r;
}

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// One classical RK4 step of the horizontal flow with frozen frame components v.
FrameBundlePoint rk4_horizontal(const ManifoldModel& m, const FrameBundlePoint& u,
                                const Vec& v, double dt) {
  const FrameTangent k1 = horizontal_field(m, u, v);
  const FrameTangent k2 = horizontal_field(m, advance(u, k1, 0.5 * dt), v);
  const FrameTangent k3 = horizontal_field(m, advance(u, k2, 0.5 * dt), v);
  const FrameTangent k4 = horizontal_field(m, advance(u, k3, dt), v);
  FrameTangent sum = k1;
  sum += 2.0 * k2;
  sum += 2.0 * k3;
  sum += k4;
  return advance(u, sum, dt / 6.0);
}

Vec random_sphere_point(double rmin, double rmax) {
  const double r = std::exp(uniform(std::log(rmin), std::log(rmax)));
  const double a = uniform(0.0, 2.0 * kPi);
  return vec2(r * std::cos(a), r * std::sin(a));
}

}  // namespace

TEST_CASE("catalogue: ids, dimensions, domains") {
  const auto& c = manifold_by_name("circle");
  const auto& t = manifold_by_name("torus2");
  const auto& s = manifold_by_name("sphere2");
  CHECK(c.dim() == 1);
  CHECK(t.dim() == 2);
  CHECK(s.dim() == 2);
  CHECK(c.chart_count() == 1);
  CHECK(t.chart_count() == 1);
  CHECK(s.chart_count() == 2);
  CHECK(c.embed_dim() == 2);
  CHECK(t.embed_dim() == 4);
  CHECK(s.embed_dim() == 3);
  CHECK_THROWS_AS((void)manifold_by_name("klein"), std::invalid_argument);

  CHECK(s.in_domain(0, vec2(2.9, 0.0)));
  CHECK(!s.in_domain(0, vec2(3.1, 0.0)));
  CHECK(s.in_overlap(0, vec2(0.5, 0.0)));
  CHECK(!s.in_overlap(0, vec2(0.3, 0.0)));
  CHECK(s.wants_chart_switch(0, vec2(2.1, 0.0)));
  CHECK(!s.wants_chart_switch(0, vec2(1.9, 0.0)));
}

TEST_CASE("metric and frame coefficients are consistent") {
  for (const char* id : {"circle", "torus2", "sphere2"}) {
    const auto& m = manifold_by_name(id);
    for (int chart = 0; chart < m.chart_count(); ++chart) {
      for (int trial = 0; trial < 50; ++trial) {
        Vec x(m.dim());
        for (int i = 0; i < m.dim(); ++i) x(i) = uniform(0.05, 2.5);
        const Mat lam = m.frame_coeff(chart, x);
        const Mat g = m.metric(chart, x);
        CHECK((lam.transpose() * lam - g).norm() < 1e-12 * (1.0 + g.norm()));
        CHECK((lam * m.frame_coeff_inv(chart, x) - Mat::Identity(m.dim(), m.dim())).norm() <
              1e-12);
        CHECK((g * m.metric_inv(chart, x) - Mat::Identity(m.dim(), m.dim())).norm() < 1e-12);
      }
    }
  }
}

TEST_CASE("sphere connection coefficients: antisymmetry and analytic derivatives") {
  const auto& s = manifold_by_name("sphere2");
  for (int trial = 0; trial < 100; ++trial) {
    const Vec x = random_sphere_point(0.05, 2.8);
    const ConnCoeffs a = s.connection(0, x);
    for (int alpha = 0; alpha < 2; ++alpha)
      for (int beta = 0; beta < 2; ++beta)
        for (int eta = 0; eta < 2; ++eta)
          CHECK(a(alpha, beta, eta) == doctest::Approx(-a(eta, beta, alpha)).epsilon(1e-14));

    // Analytic derivative vs central finite difference of connection().
    const ConnCoeffsDeriv da = s.connection_deriv(0, x);
    const double step = 1e-5 * (1.0 + x.norm());
    for (int k = 0; k < 2; ++k) {
      Vec xp = x, xm = x;
      xp(k) += step;
      xm(k) -= step;
      const ConnCoeffs ap = s.connection(0, xp);
      const ConnCoeffs am = s.connection(0, xm);
      for (int alpha = 0; alpha < 2; ++alpha)
        for (int beta = 0; beta < 2; ++beta)
          for (int eta = 0; eta < 2; ++eta) {
            const double fd = (ap(alpha, beta, eta) - am(alpha, beta, eta)) / (2.0 * step);
            CHECK(std::abs(da(k, alpha, beta, eta) - fd) < 1e-9);
          }
    }

    // Analytic frame-coefficient derivatives vs finite differences.
    Mat dlam[2], dlam_inv[2];
    s.frame_coeff_deriv(0, x, dlam, dlam_inv);
    for (int k = 0; k < 2; ++k) {
      Vec xp = x, xm = x;
      xp(k) += step;
      xm(k) -= step;
      const Mat fd_lam = (s.frame_coeff(0, xp) - s.frame_coeff(0, xm)) / (2.0 * step);
      const Mat fd_lam_inv =
          (s.frame_coeff_inv(0, xp) - s.frame_coeff_inv(0, xm)) / (2.0 * step);
      CHECK((dlam[k] - fd_lam).norm() < 1e-8);
      CHECK((dlam_inv[k] - fd_lam_inv).norm() < 1e-8);
    }
  }
}

TEST_CASE("sphere Christoffel symbols match the conformal closed form") {
  const auto& s = manifold_by_name("sphere2");
  for (int trial = 0; trial < 50; ++trial) {
    const Vec x = random_sphere_point(0.05, 2.8);
    const Christoffel c = s.christoffel(0, x);
    // For g = e^{2 phi} I:  Gamma^i_{jk} = d_k phi delta^i_j + d_j phi delta^i_k
    //                                      - d_i phi delta_{jk},
    // with phi = log(2 / (1 + |z|^2)), d_k phi = -2 z_k / (1 + |z|^2).
    const double sfac = 1.0 + x.squaredNorm();
    Vec dphi = vec2(-2.0 * x(0) / sfac, -2.0 * x(1) / sfac);
    double gsum[2] = {0.0, 0.0};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k) {
          const double want = dphi(k) * (i == j ? 1.0 : 0.0) + dphi(j) * (i == k ? 1.0 : 0.0) -
                              dphi(i) * (j == k ? 1.0 : 0.0);
          CHECK(c(i, j, k) == doctest::Approx(want).epsilon(5e-9));
          if (j == k) gsum[i] += c(i, j, k);  // g^{jk} Gamma^i_{jk} up to the conformal factor
        }
    // Conformal 2-D metric: g^{jk} Gamma^i_{jk} = 0.
    CHECK(std::abs(gsum[0]) < 1e-8);
    CHECK(std::abs(gsum[1]) < 1e-8);
  }
}

TEST_CASE("horizontal_field: flat cases and algebraic invariants") {
  const auto& t = manifold_by_name("torus2");
  FrameBundlePoint u{{0, vec2(0.7, 1.9)}, random_o2()};
  const Vec v = vec2(0.3, -1.1);
  const FrameTangent ht = horizontal_field(t, u, v);
  CHECK((ht.dx - Vec(u.h * v)).norm() < 1e-15);  // Lambda = I on the flat torus
  CHECK(ht.dh.norm() == 0.0);

  const auto& s = manifold_by_name("sphere2");
  for (int trial = 0; trial < 100; ++trial) {
    FrameBundlePoint us{{trial % 2, random_sphere_point(0.05, 2.8)}, random_o2()};
    const Vec vv = vec2(uniform(-2, 2), uniform(-2, 2));
    const FrameTangent hs = horizontal_field(s, us, vv);
    CHECK((hs.dx - Vec(s.frame_coeff_inv(us.base.chart, us.base.x) * us.h * vv)).norm() < 1e-14);
    // dh h^T + h dh^T = 0 (tangent to the orthogonal group).
    CHECK((hs.dh * us.h.transpose() + us.h * hs.dh.transpose()).norm() < 1e-13);
  }
}

TEST_CASE("horizontal_field: right equivariance") {
  const auto& s = manifold_by_name("sphere2");
  for (int trial = 0; trial < 100; ++trial) {
    FrameBundlePoint u{{trial % 2, random_sphere_point(0.05, 2.8)}, random_o2()};
    const Mat g = random_o2();
    const Vec v = vec2(uniform(-2, 2), uniform(-2, 2));

    const FrameTangent base = horizontal_field(s, u, v);
    FrameBundlePoint ug = u;
    ug.h = Mat(u.h * g);
    const FrameTangent translated = horizontal_field(s, ug, Vec(g.transpose() * v));
    CHECK((translated.dx - base.dx).norm() < 1e-10);
    CHECK((translated.dh - Mat(base.dh * g)).norm() < 1e-10);
  }
}

TEST_CASE("geodesics: great circles to 1e-6 over unit time") {
  const auto& s = manifold_by_name("sphere2");
  // Two runs from the equator point (1,0,0): one along the equator, one
  // through the poles (exercises the chart switch).
  for (int dir = 0; dir < 2; ++dir) {
    FrameBundlePoint u{{0, vec2(1.0, 0.0)}, Mat::Identity(2, 2)};
    Vec v = dir == 0 ? vec2(0.0, 1.0) : vec2(1.0, 0.0);

    const EmbedVec p0 = s.embed(u.base.chart, u.base.x);
    const EmbedVec q0 =
        s.embed_diff(u.base.chart, u.base.x) * s.frame_coeff_inv(u.base.chart, u.base.x) * u.h * v;
    CHECK(std::abs(q0.norm() - 1.0) < 1e-12);  // unit speed

    const double dt = 1e-4;
    const int n_steps = 10000;
    double max_err = 0.0, max_defect = 0.0, max_speed_err = 0.0;
    int switches = 0;
    for (int k = 0; k < n_steps; ++k) {
      u = rk4_horizontal(s, u, v, dt);
      if (s.wants_chart_switch(u.base.chart, u.base.x)) {
        u = chart_transition(s, u, s.transition_target(u.base.chart));
        ++switches;
      }
      const double time = (k + 1) * dt;
      const EmbedVec want = std::cos(time) * p0 + std::sin(time) * q0;
      max_err = std::max(max_err, (s.embed(u.base.chart, u.base.x) - want).norm());
      max_defect = std::max(max_defect, orthogonality_defect(u.h));
      // g-norm of the moving tangent u(t)v stays 1.
      const Vec w = Vec(u.h * v);
      max_speed_err = std::max(max_speed_err, std::abs(w.norm() - 1.0));
    }
    CHECK(max_err < 1e-6);
    CHECK(max_defect < 1e-8);
    CHECK(max_speed_err < 1e-8);
    if (dir == 1) CHECK(switches >= 1);  // polar route must change charts
  }
}

TEST_CASE("parallel transport around a latitude loop") {
  const auto& s = manifold_by_name("sphere2");
  // Latitude circle at polar angle theta0 (from the north pole): in chart 1
  // (north pole at the origin) the loop is z(t) = r0 (cos t, sin t) with
  // r0 = tan(theta0 / 2).  One loop rotates the frame by 2 pi cos(theta0);
  // the angle folded into [0, pi] equals 2 pi (1 - cos theta0) there.
  struct Case {
    double theta0, want;
  };
  for (const Case c : {Case{kPi / 6, 0.8417872144769325}, Case{kPi / 3, kPi}}) {
    const double r0 = std::tan(0.5 * c.theta0);
    Mat h = Mat::Identity(2, 2);
    const int n_steps = 20000;
    const double dt = 2.0 * kPi / n_steps;
    // Transport: dh = -A(Lambda xdot) h along the prescribed base curve.
    auto slope = [&](double time, const Mat& hcur) {
      const Vec z = vec2(r0 * std::cos(time), r0 * std::sin(time));
      const Vec xdot = vec2(-r0 * std::sin(time), r0 * std::cos(time));
      const Vec w = Vec(s.frame_coeff(1, z) * xdot);
      return Mat(-s.connection(1, z).direction_matrix(2, w) * hcur);
    };
    for (int k = 0; k < n_steps; ++k) {
      const double t0 = k * dt;
      const Mat k1 = slope(t0, h);
      const Mat k2 = slope(t0 + 0.5 * dt, Mat(h + 0.5 * dt * k1));
      const Mat k3 = slope(t0 + 0.5 * dt, Mat(h + 0.5 * dt * k2));
      const Mat k4 = slope(t0 + dt, Mat(h + dt * k3));
      h += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    CHECK(orthogonality_defect(h) < 1e-10);
    const double alpha = std::atan2(h(1, 0), h(0, 0));
    CHECK(std::abs(std::abs(alpha) - c.want) < 1e-6);
  }
}

TEST_CASE("chart transitions: exact round trips and preserved images") {
  const auto& s = manifold_by_name("sphere2");
  for (int trial = 0; trial < 1000; ++trial) {
    const int chart = trial % 2;
    FrameBundlePoint u{{chart, random_sphere_point(0.34, 2.95)}, random_o2()};
    const FrameBundlePoint w = chart_transition(s, u, 1 - chart);

    CHECK(orthogonality_defect(w.h) < 1e-10);
    CHECK(w.base.chart == 1 - chart);

    // Same embedded base point and same embedded frame vectors.
    CHECK((s.embed(u.base.chart, u.base.x) - s.embed(w.base.chart, w.base.x)).norm() < 1e-12);
    CHECK(frame_distance(s, u, w) < 1e-12);

    // Round trip is the identity to 1e-12.
    const FrameBundlePoint b = chart_transition(s, w, chart);
    CHECK((b.base.x - u.base.x).norm() < 1e-12);
    CHECK((b.h - u.h).norm() < 1e-12);
  }

  // Out-of-overlap and bad-frame inputs are rejected.
  FrameBundlePoint inner{{0, vec2(0.2, 0.0)}, Mat::Identity(2, 2)};
  CHECK_THROWS_AS((void)chart_transition(s, inner, 1), std::domain_error);
  FrameBundlePoint skewed{{0, vec2(1.0, 0.0)}, Mat::Identity(2, 2)};
  skewed.h(0, 1) = 1e-6;
  CHECK_THROWS_AS((void)chart_transition(s, skewed, 1), std::domain_error);

  const auto& t = manifold_by_name("torus2");
  FrameBundlePoint tu{{0, vec2(1.0, 1.0)}, Mat::Identity(2, 2)};
  CHECK_THROWS_AS((void)chart_transition(t, tu, 1), std::domain_error);
}

TEST_CASE("chart transitions: horizontal field is chart-independent") {
  const auto& s = manifold_by_name("sphere2");
  for (int trial = 0; trial < 100; ++trial) {
    FrameBundlePoint u{{0, random_sphere_point(0.4, 2.5)}, random_o2()};
    const Vec v = vec2(uniform(-2, 2), uniform(-2, 2));
    const FrameBundlePoint w = chart_transition(s, u, 1);

    const FrameTangent t0 = horizontal_field(s, u, v);
    const FrameTangent t1 = horizontal_field(s, w, v);

    // Base parts are related by the transition Jacobian (finite difference).
    const double step = 1e-6;
    Mat jac(2, 2);
    for (int k = 0; k < 2; ++k) {
      Vec xp = u.base.x, xm = u.base.x;
      xp(k) += step;
      xm(k) -= step;
      jac.col(k) = (s.transition_coords(0, xp) - s.transition_coords(0, xm)) / (2.0 * step);
    }
    CHECK((t1.dx - Vec(jac * t0.dx)).norm() < 1e-6);

    // Frame parts satisfy dh' = (dT . dx) h + T dh with T the frame change.
    Mat dT_dx = Mat::Zero(2, 2);
    for (int k = 0; k < 2; ++k) {
      Vec xp = u.base.x, xm = u.base.x;
      xp(k) += step;
      xm(k) -= step;
      dT_dx += (s.transition_frame_change(0, xp) - s.transition_frame_change(0, xm)) /
               (2.0 * step) * t0.dx(k);
    }
    const Mat want = Mat(dT_dx * u.h + s.transition_frame_change(0, u.base.x) * t0.dh);
    CHECK((t1.dh - want).norm() < 1e-6);
  }
}

TEST_CASE("distances: frozen examples") {
  const auto& t = manifold_by_name("torus2");
  ChartPoint a{0, vec2(0.1, 0.0)}, b{0, vec2(6.2, 0.0)};
  CHECK(geodesic_distance(t, a, b) == doctest::Approx(2.0 * kPi - 6.1).epsilon(1e-12));
  CHECK(geodesic_distance(t, a, b) == doctest::Approx(0.18319).epsilon(1e-4));

  const auto& c = manifold_by_name("circle");
  ChartPoint ca{0, Vec(Vec::Constant(1, 0.1))}, cb{0, Vec(Vec::Constant(1, 6.2))};
  CHECK(geodesic_distance(c, ca, cb) == doctest::Approx(2.0 * kPi - 6.1).epsilon(1e-12));

  // Antipodal points on the sphere: the two chart origins.
  const auto& s = manifold_by_name("sphere2");
  ChartPoint south{0, vec2(0.0, 0.0)}, north{1, vec2(0.0, 0.0)};
  CHECK(geodesic_distance(s, south, north) == doctest::Approx(kPi).epsilon(1e-9));

  // Flat-torus frame distance: same base point, frames differing by R(pi).
  FrameBundlePoint u1{{0, vec2(0.3, 1.2)}, Mat::Identity(2, 2)};
  FrameBundlePoint u2 = u1;
  u2.h = Mat(-Mat::Identity(2, 2));
  CHECK(frame_distance(t, u1, u2) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("orthonormalize_frame and canonical coordinates") {
  const auto& t = manifold_by_name("torus2");
  FrameBundlePoint u{{0, vec2(7.0, -1.0)}, Mat::Identity(2, 2)};
  u.h(0, 1) += 1e-4;
  const FrameBundlePoint w = orthonormalize_frame(u);
  CHECK(orthogonality_defect(w.h) < 1e-14);
  CHECK((w.h - u.h).norm() < 2e-4);

  const Vec wrapped = t.canonical_coords(0, u.base.x);
  CHECK(wrapped(0) == doctest::Approx(7.0 - 2.0 * kPi).epsilon(1e-14));
  CHECK(wrapped(1) == doctest::Approx(2.0 * kPi - 1.0).epsilon(1e-14));
}

TEST_CASE("height observable: analytic derivatives match finite differences") {
  for (const char* id : {"circle", "torus2", "sphere2"}) {
    const auto& m = manifold_by_name(id);
    for (int chart = 0; chart < m.chart_count(); ++chart) {
      for (int trial = 0; trial < 30; ++trial) {
        Vec x(m.dim());
        for (int i = 0; i < m.dim(); ++i) x(i) = uniform(0.1, 2.0);
        Vec grad;
        Mat hess;
        const double val = m.height(chart, x, &grad, &hess);
        if (id == std::string("sphere2"))
          CHECK(val == doctest::Approx(m.embed(chart, x)(2)).epsilon(1e-14));

        const double step = 1e-6;
        for (int k = 0; k < m.dim(); ++k) {
          Vec xp = x, xm = x;
          xp(k) += step;
          xm(k) -= step;
          const double fd =
              (m.height(chart, xp, nullptr, nullptr) - m.height(chart, xm, nullptr, nullptr)) /
              (2.0 * step);
          CHECK(std::abs(grad(k) - fd) < 1e-8);
          Vec gp, gm;
          m.height(chart, xp, &gp, nullptr);
          m.height(chart, xm, &gm, nullptr);
          for (int j = 0; j < m.dim(); ++j)
            CHECK(std::abs(hess(j, k) - (gp(j) - gm(j)) / (2.0 * step)) < 1e-7);
        }
      }
    }
  }
}
