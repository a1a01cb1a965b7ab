#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qdef/rolling.h"
#include "util.h"

using namespace qdef;

namespace {

GridSpec make_grid(const ConfocalFamily& f, int n) {
  GridSpec g;
  g.nu = g.nv = n;
  if (f.central()) {
    g.u_lo = 1.2;
    g.u_hi = 2.2;
  } else {
    g.u_lo = 0.5;
    g.u_hi = 1.5;
  }
  g.v_lo = -1.0;
  g.v_hi = 0.0;
  return g;
}

double phi_profile(double v) { return 0.3 + 0.2 * std::sin(v); }

// Interior max deviation of the recovered components from (0, 0, phi).
double component_error(const ConfocalFamily& f, int n) {
  auto seed = ruled_seed(f, phi_profile, make_grid(f, n));
  auto form = connection_from_shapes(seed);
  double worst = 0;
  for (int i = 1; i + 1 < n; ++i)
    for (int j = 1; j + 1 < n; ++j) {
      worst = std::max(worst, std::abs(form.o_uu(i, j)));
      worst = std::max(worst, std::abs(form.o_uv(i, j)));
      worst = std::max(worst,
                       std::abs(form.o_vu(i, j) - phi_profile(form.grid.v(j))));
    }
  return worst;
}

double max_flatness(const ConfocalFamily& f, int n) {
  auto seed = ruled_seed(f, phi_profile, make_grid(f, n));
  return flatness_residual(connection_from_shapes(seed)).maxCoeff();
}

Mat3 rot_exp(const Vec3& w) {
  double a = w.norm();
  if (a < 1e-300) return Mat3::Identity();
  return Eigen::AngleAxisd(a, w / a).toRotationMatrix();
}

}  // namespace

TEST_CASE("ruling direction closed form and u-independence on a grid") {
  auto f = make_family(FamilyKind::Central, 4, -1, 1);
  for (double v : {-1.0, -0.4, 0.3, 1.1}) {
    Vec3 want(2 * (v * v - 1), -(1 + v * v), -2 * v);
    CHECK((ruling_u_dir(f, 0, v) - want).norm() < 1e-12);
    for (double u : {1.5, 2.0, 3.0, 4.5}) {
      Vec3 scaled = f.B_factor(u, v) * point_du(f, 0, u, v);
      CHECK((scaled - want).norm() < 1e-12 * want.norm());
    }
  }
}

TEST_CASE("undeformed seed gives the zero form, exactly") {
  for (auto kind : {FamilyKind::Central, FamilyKind::Paraboloid}) {
    auto f = kind == FamilyKind::Central
                 ? make_family(kind, 4, -1, 1)
                 : make_family(kind, 1, -1);
    auto seed = ruled_seed(f, [](double) { return 0.0; }, make_grid(f, 9));
    for (const auto& m : seed.motion) {
      CHECK((m.R - Mat3::Identity()).norm() < 1e-12);
      CHECK(m.t.norm() < 1e-12);
    }
    auto form = connection_from_shapes(seed);
    CHECK(form.o_uu.abs().maxCoeff() == 0.0);
    CHECK(form.o_uv.abs().maxCoeff() == 0.0);
    CHECK(form.o_vu.abs().maxCoeff() == 0.0);
    CHECK(flatness_residual(form).abs().maxCoeff() == 0.0);
  }

  GridSpec tiny;
  tiny.nu = 2;
  tiny.nv = 5;
  tiny.u_lo = 0.5;
  tiny.u_hi = 1.0;
  tiny.v_lo = -1;
  tiny.v_hi = 0;
  auto f = make_family(FamilyKind::Paraboloid, 1, -1);
  Seed s = ruled_seed(f, [](double) { return 0.0; }, tiny);
  CHECK_THROWS_AS((void)connection_from_shapes(s), GridTooCoarse);
}

TEST_CASE("ruled seed: exact node motions, metric and rolling at O(h^2)") {
  for (auto kind : {FamilyKind::Central, FamilyKind::Paraboloid}) {
    auto f = kind == FamilyKind::Central ? make_family(kind, 4, -1, 1)
                                         : make_family(kind, 1.5, -0.8);
    double err[2] = {0, 0};
    for (int lev = 0; lev < 2; ++lev) {
      int n = lev ? 33 : 17;
      GridSpec g = make_grid(f, n);
      auto seed = ruled_seed(f, phi_profile, g);

      double worst_metric = 0, worst_roll_v = 0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          Vec3 x0 = evaluate(f, 0, g.u(i), g.v(j));
          CHECK((seed.motion[g.index(i, j)](x0) - seed.x[g.index(i, j)]).norm() <
                1e-12);
          if (i == 0 || j == 0 || i + 1 == n || j + 1 == n) continue;

          auto X = [&](int di, int dj) { return seed.x[g.index(i + di, j + dj)]; };
          Vec3 Xu = (X(1, 0) - X(-1, 0)) / (2 * g.du());
          Vec3 Xv = (X(0, 1) - X(0, -1)) / (2 * g.dv());
          Vec3 xu = point_du(f, 0, g.u(i), g.v(j));
          Vec3 xv = point_dv(f, 0, g.u(i), g.v(j));
          worst_metric = std::max(
              {worst_metric, std::abs(Xu.dot(Xu) - xu.dot(xu)),
               std::abs(Xu.dot(Xv) - xu.dot(xv)), std::abs(Xv.dot(Xv) - xv.dot(xv))});

          // Rolling: finite-difference dx equals R dx0; exact along u
          // (the frame is constant there), O(h^2) along v.
          const Mat3& R = seed.motion[g.index(i, j)].R;
          Vec3 x0u = (evaluate(f, 0, g.u(i + 1), g.v(j)) -
                      evaluate(f, 0, g.u(i - 1), g.v(j))) /
                     (2 * g.du());
          Vec3 x0v = (evaluate(f, 0, g.u(i), g.v(j + 1)) -
                      evaluate(f, 0, g.u(i), g.v(j - 1))) /
                     (2 * g.dv());
          CHECK((Xu - R * x0u).norm() < 1e-11);
          worst_roll_v = std::max(worst_roll_v, (Xv - R * x0v).norm());

          // Kinematic conjugacy: the rotation axis phi*d kills x_{0u}.
          Vec3 axis = phi_profile(g.v(j)) * ruling_u_dir(f, 0, g.v(j));
          CHECK((R * axis.cross(x0u)).norm() < 1e-9);
        }
      err[lev] = std::max(worst_metric, worst_roll_v);
    }
    double ratio = err[0] / err[1];
    CHECK(ratio > 3.0);
    CHECK(ratio < 5.5);
  }
}

TEST_CASE("connection components converge to (0, 0, phi) at second order") {
  for (auto kind : {FamilyKind::Central, FamilyKind::Paraboloid}) {
    auto f = kind == FamilyKind::Central ? make_family(kind, 4, -1, 1)
                                         : make_family(kind, 1, -1);
    double e1 = component_error(f, 17), e2 = component_error(f, 33);
    CHECK(e1 < 0.05);
    CHECK(e2 < e1);
    double ratio = e1 / e2;
    CHECK(ratio > 2.8);
    CHECK(ratio < 5.5);
  }
}

TEST_CASE("flatness residual: O(h^2) for reconstructions, large when violated") {
  for (auto kind : {FamilyKind::Central, FamilyKind::Paraboloid}) {
    auto f = kind == FamilyKind::Central ? make_family(kind, 4, -1, 1)
                                         : make_family(kind, 1, -1);
    double r1 = max_flatness(f, 17), r2 = max_flatness(f, 33);
    double ratio = r1 / r2;
    CHECK(ratio > 3.0);
    CHECK(ratio < 5.5);

    // A u-dependent coefficient on the dv leg cannot come from any rolling.
    GridSpec g = make_grid(f, 17);
    ConnectionForm bad;
    bad.fam = f;
    bad.grid = g;
    bad.o_uu = Eigen::ArrayXXd::Zero(g.nu, g.nv);
    bad.o_uv = Eigen::ArrayXXd::Zero(g.nu, g.nv);
    bad.o_vu = Eigen::ArrayXXd::Zero(g.nu, g.nv);
    for (int i = 0; i < g.nu; ++i)
      for (int j = 0; j < g.nv; ++j) bad.o_vu(i, j) = std::sin(g.u(i));
    CHECK(flatness_residual(bad).maxCoeff() > 0.1);
  }
}

TEST_CASE("frame integration: constants, anchor independence, drift guard") {
  auto f = make_family(FamilyKind::Central, 4, -1, 1);

  Omega zero = [](double, double) {
    return std::make_pair(Vec3(Vec3::Zero()), Vec3(Vec3::Zero()));
  };
  std::vector<Vec2> path;
  for (int j = 0; j <= 40; ++j) path.push_back(Vec2(1.3 - 0.01 * j, -1.0 + 0.025 * j));
  RigidMotion init{rot_exp(Vec3(0.1, 0.2, 0.3)), Vec3(1, 2, 3)};
  for (const auto& m : integrate_frame(f, zero, path, init)) {
    CHECK((m.R - init.R).norm() < 1e-12);
    CHECK((m.t - init.t).norm() < 1e-12);
  }

  // For a ruled form the frames do not depend on which ruling point anchors
  // the path: shifting u along rulings changes nothing.
  auto om = ruled_omega(f, phi_profile);
  std::vector<Vec2> pa, pb;
  for (int j = 0; j <= 80; ++j) {
    double v = -1.0 + j / 80.0;
    pa.push_back(Vec2(v + 1.0, v));
    pb.push_back(Vec2(v + 2.5, v));
  }
  auto fa = integrate_frame(f, om, pa, RigidMotion::identity());
  auto fb = integrate_frame(f, om, pb, RigidMotion::identity());
  for (size_t k = 0; k < fa.size(); ++k) {
    CHECK((fa[k].R - fb[k].R).norm() < 1e-9);
    CHECK((fa[k].t - fb[k].t).norm() < 1e-9);
    CHECK(fa[k].orthogonality_defect() < 1e-9);
  }

  auto wild = ruled_omega(f, [](double) { return 3000.0; });
  std::vector<Vec2> two{Vec2(0.0, -1.0), Vec2(1.0, 0.3)};
  CHECK_THROWS_AS((void)integrate_frame(f, wild, two, RigidMotion::identity()),
                  StepTooLarge);
}

TEST_CASE("loop holonomy: ~0 for an exact flat form, O(h^2) when sampled") {
  // Manufactured rolling R(u,v) = exp(psi(u,v) a) exp(v b) gives a flat form
  // with genuine variation along every loop leg.
  Vec3 a(0.3, -0.2, 0.5), b(-0.1, 0.4, 0.2);
  auto psi_u = [](double u, double v) { return std::cos(u + 0.7 * v) + 0.3 * v; };
  auto psi_v = [](double u, double v) { return 0.7 * std::cos(u + 0.7 * v) + 0.3 * u; };
  Omega exact = [&](double u, double v) {
    Vec3 ea = rot_exp(-v * b) * a;
    return std::make_pair(Vec3(psi_u(u, v) * ea), Vec3(psi_v(u, v) * ea + b));
  };
  auto f = make_family(FamilyKind::Paraboloid, 1, -1);

  auto loop = [&](int n) {
    std::vector<Vec2> p;
    double u0 = 0, u1 = 1, v0 = 0, v1 = 0.8;
    for (int k = 0; k < n; ++k) p.push_back(Vec2(u0 + (u1 - u0) * k / n, v0));
    for (int k = 0; k < n; ++k) p.push_back(Vec2(u1, v0 + (v1 - v0) * k / n));
    for (int k = 0; k < n; ++k) p.push_back(Vec2(u1 - (u1 - u0) * k / n, v1));
    for (int k = 0; k < n; ++k) p.push_back(Vec2(u0, v1 - (v1 - v0) * k / n));
    p.push_back(Vec2(u0, v0));
    return p;
  };
  auto holonomy = [&](const Omega& om, int n) {
    auto frames = integrate_frame(f, om, loop(n), RigidMotion::identity());
    return (frames.back().R - Mat3::Identity()).norm();
  };
  CHECK(holonomy(exact, 96) < 1e-6);

  // Bilinear samples of the same form on an n x n grid.
  auto sampled = [&](int n) {
    double du = 1.0 / (n - 1), dv = 0.8 / (n - 1);
    std::vector<Vec3> P(n * n), Q(n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        auto pq = exact(i * du, j * dv);
        P[i * n + j] = pq.first;
        Q[i * n + j] = pq.second;
      }
    return Omega([=](double u, double v) {
      double fu = u / du, fv = v / dv;
      int i = std::min(std::max(int(std::floor(fu)), 0), n - 2);
      int j = std::min(std::max(int(std::floor(fv)), 0), n - 2);
      double s = fu - i, t = fv - j;
      auto mix = [&](const std::vector<Vec3>& w) {
        return Vec3((1 - s) * (1 - t) * w[i * n + j] + s * (1 - t) * w[(i + 1) * n + j] +
                    (1 - s) * t * w[i * n + j + 1] + s * t * w[(i + 1) * n + j + 1]);
      };
      return std::make_pair(mix(P), mix(Q));
    });
  };
  // Integrate finely enough that the bilinear sampling error dominates RK4.
  double h1 = holonomy(sampled(17), 64), h2 = holonomy(sampled(33), 64);
  double ratio = h1 / h2;
  CHECK(h1 > 1e-6);  // genuinely limited by the sampling, not by RK4
  CHECK(ratio > 2.5);
  CHECK(ratio < 6.0);
}

TEST_CASE("curve rolling: identity, circle on a line, mismatch guard") {
  using std::cos;
  using std::sin;

  std::vector<CurveSample> c0, c1;
  for (int k = 0; k <= 100; ++k) {
    double s = 0.05 * k;
    CurveSample cs{s, Vec2(cos(s), 2 * sin(s)), Vec2(-sin(s), 2 * cos(s))};
    c0.push_back(cs);
    c1.push_back(cs);
  }
  for (const auto& m : roll_curves(c0, c1)) {
    CHECK(std::abs(m.angle) < 1e-12);
    CHECK(m.t.norm() < 1e-12);
  }

  double r = 0.7;
  c0.clear();
  c1.clear();
  for (int k = 0; k <= 200; ++k) {
    double s = 4 * r * k / 200.0;
    c0.push_back({s, r * Vec2(sin(s / r), -cos(s / r)), Vec2(cos(s / r), sin(s / r))});
    c1.push_back({s, Vec2(s, 0), Vec2(1, 0)});
  }
  auto motions = roll_curves(c0, c1);
  for (int k = 0; k <= 200; ++k) {
    double s = 4 * r * k / 200.0;
    CHECK(std::abs(motions[k].angle + s / r) < 1e-10);
    CHECK((motions[k](Vec2(0, 0)) - Vec2(s, r)).norm() < 1e-10);
  }

  auto c1bad = c1;
  for (auto& cs : c1bad) cs.dc *= 1.01;
  CHECK_THROWS_AS((void)roll_curves(c0, c1bad), ArcLengthMismatch);
}

TEST_CASE("ellipse rolling on its mirror image: foci trace circles") {
  double A = 1.5, B = 1.0, E = std::sqrt(A * A - B * B);
  auto e = [&](double p) { return Vec2(A * std::cos(p), B * std::sin(p)); };
  auto de = [&](double p) { return Vec2(-A * std::sin(p), B * std::cos(p)); };

  std::vector<CurveSample> fixed, moving;
  int n = 500;
  for (int k = 0; k <= n; ++k) {
    double p = 2 * std::numbers::pi * k / n;
    // Equal speeds pointwise (|de(-p)| = |de(p)|), hence equal arclength:
    // index k is the rolling contact correspondence.
    fixed.push_back({p, e(p), de(p)});
    moving.push_back({p, e(-p), -de(-p)});
  }
  auto motions = roll_curves(moving, fixed);
  Vec2 f_plus(E, 0), f_minus(-E, 0);
  for (const auto& m : motions) {
    CHECK(std::abs((m(f_plus) - f_minus).norm() - 2 * A) < 1e-10);
    CHECK(std::abs((m(f_minus) - f_plus).norm() - 2 * A) < 1e-10);
  }
}
