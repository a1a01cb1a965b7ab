#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "util.h"

using namespace qdef;
using qtest::Rng;

TEST_CASE("make_family validates signs and distinctness") {
  CHECK_NOTHROW(make_family(FamilyKind::Central, 4, -1, 1));
  CHECK_NOTHROW(make_family(FamilyKind::Paraboloid, 2, -3));
  CHECK_THROWS_AS(make_family(FamilyKind::Central, 1, 1, 2), DegenerateAxes);
  CHECK_THROWS_AS(make_family(FamilyKind::Central, -4, -1, 1), InvalidSignature);
  CHECK_THROWS_AS(make_family(FamilyKind::Central, 4, 1, 2), InvalidSignature);
  CHECK_THROWS_AS(make_family(FamilyKind::Central, 4, -1), InvalidSignature);
  CHECK_THROWS_AS(make_family(FamilyKind::Paraboloid, -2, -3), InvalidSignature);
  CHECK_THROWS_AS(make_family(FamilyKind::Paraboloid, 2, 3), InvalidSignature);
  CHECK_THROWS_AS(make_family(FamilyKind::Paraboloid, 2, -3, 1), InvalidSignature);
}

TEST_CASE("evaluate reproduces hand values and stays on the member") {
  auto cf = make_family(FamilyKind::Central, 4, -1, 1);
  Vec3 p = evaluate(cf, 0, 2, 0);
  CHECK((p - Vec3(1, 0.5, 1)).norm() < 1e-14);
  CHECK(std::abs(quadric_value(cf, 0, p)) < 1e-14);

  auto pf = make_family(FamilyKind::Paraboloid, 1, -1);
  Vec3 q = evaluate(pf, 0, 1, 0);
  CHECK((q - Vec3(1, 1, 0)).norm() < 1e-14);
  CHECK(std::abs(quadric_value(pf, 0, q)) < 1e-14);

  CHECK_THROWS_AS(evaluate(cf, 0, 1.0, 1.0), SingularRuling);
  CHECK_THROWS_AS(evaluate(cf, 1.5, 1, 0), OutOfRange);   // above min(a1,a3)
  CHECK_THROWS_AS(evaluate(cf, -1.0, 1, 0), OutOfRange);  // at a2
  CHECK_THROWS_AS(evaluate(pf, 1.2, 1, 0), OutOfRange);

  Rng rng(11);
  for (int kind = 0; kind < 2; ++kind) {
    for (int it = 0; it < 200; ++it) {
      auto f = qtest::random_family(
          rng, kind ? FamilyKind::Paraboloid : FamilyKind::Central);
      double z = qtest::random_admissible_z(rng, f);
      auto [u, v] = qtest::random_uv(rng, f);
      Vec3 x = evaluate(f, z, u, v);
      CHECK(std::abs(quadric_value(f, z, x)) <
            1e-12 * std::max(1.0, x.squaredNorm()));
    }
  }
}

TEST_CASE("chart is affine in each parameter once the pole is cleared") {
  Rng rng(12);
  for (int kind = 0; kind < 2; ++kind) {
    auto f = qtest::random_family(
        rng, kind ? FamilyKind::Paraboloid : FamilyKind::Central);
    double z = qtest::random_admissible_z(rng, f);
    for (int it = 0; it < 50; ++it) {
      auto [u, v] = qtest::random_uv(rng, f);
      double h = 0.05;
      auto cleared = [&](double uu, double vv) -> Vec3 {
        return f.B_factor(1, 0) == 1.0 && !f.central()
                   ? evaluate(f, z, uu, vv)
                   : Vec3((uu - vv) * evaluate(f, z, uu, vv));
      };
      Vec3 d2u = cleared(u + h, v) - 2 * cleared(u, v) + cleared(u - h, v);
      Vec3 d2v = cleared(u, v + h) - 2 * cleared(u, v) + cleared(u, v - h);
      CHECK(d2u.norm() < 1e-12);
      CHECK(d2v.norm() < 1e-12);
    }
  }
}

TEST_CASE("ivory map: hand value, commuting diagram, guards") {
  auto cf = make_family(FamilyKind::Central, 4, -1, 1);
  Vec3 img = ivory_map(cf, 0.5, Vec3(1, 0.5, 1));
  Vec3 expect(std::sqrt(0.875), 0.5 * std::sqrt(1.5), std::sqrt(0.5));
  CHECK((img - expect).norm() < 1e-14);
  CHECK(std::abs(quadric_value(cf, 0.5, img)) < 1e-14);

  CHECK_THROWS_AS(ivory_map(cf, 0.5, Vec3(1, 1, 1)), OffQuadric);
  CHECK_THROWS_AS(ivory_map(cf, 2.0, Vec3(1, 0.5, 1)), OutOfRange);

  Rng rng(13);
  for (int kind = 0; kind < 2; ++kind) {
    for (int it = 0; it < 300; ++it) {
      auto f = qtest::random_family(
          rng, kind ? FamilyKind::Paraboloid : FamilyKind::Central);
      double z = qtest::random_admissible_z(rng, f);
      auto [u, v] = qtest::random_uv(rng, f);
      Vec3 p0 = evaluate(f, 0, u, v);
      CHECK((ivory_map(f, 0, p0) - p0).norm() == 0.0);  // z = 0 is the identity
      Vec3 via_ivory = ivory_map(f, z, p0);
      Vec3 direct = evaluate(f, z, u, v);
      CHECK((via_ivory - direct).norm() < 1e-10 * std::max(1.0, direct.norm()));
    }
  }
}

TEST_CASE("normal_hat: hand values and ruling orthogonality") {
  auto cf = make_family(FamilyKind::Central, 4, -1, 1);
  CHECK((normal_hat(cf, 0, Vec3(1, 0.5, 1)) - Vec3(0.25, -0.5, 1)).norm() < 1e-14);
  auto pf = make_family(FamilyKind::Paraboloid, 1, -1);
  CHECK((normal_hat(pf, 0, Vec3(1, 1, 0)) - Vec3(1, -1, -1)).norm() < 1e-14);
  CHECK_THROWS_AS(normal_hat(cf, 0, Vec3(1, 1, 1)), OffQuadric);

  Rng rng(14);
  for (int kind = 0; kind < 2; ++kind) {
    for (int it = 0; it < 200; ++it) {
      auto f = qtest::random_family(
          rng, kind ? FamilyKind::Paraboloid : FamilyKind::Central);
      double z = qtest::random_admissible_z(rng, f);
      auto [u, v] = qtest::random_uv(rng, f);
      Vec3 x = evaluate(f, z, u, v);
      Vec3 n = normal_hat(f, z, x);
      Vec3 wu = ruling_u_dir(f, z, v), wv = ruling_v_dir(f, z, u);
      CHECK(std::abs(n.dot(wu)) < 1e-10 * n.norm() * wu.norm());
      CHECK(std::abs(n.dot(wv)) < 1e-10 * n.norm() * wv.norm());
    }
  }
}

TEST_CASE("scaled ruling directions are constant along their ruling") {
  Rng rng(15);
  for (int kind = 0; kind < 2; ++kind) {
    auto f = qtest::random_family(
        rng, kind ? FamilyKind::Paraboloid : FamilyKind::Central);
    double z = qtest::random_admissible_z(rng, f);
    for (int it = 0; it < 50; ++it) {
      auto [u, v] = qtest::random_uv(rng, f);
      // B * x_u must agree with the direction computed from v alone, at any u.
      Vec3 via_point = f.B_factor(u, v) * point_du(f, z, u, v);
      CHECK((via_point - ruling_u_dir(f, z, v)).norm() < 1e-12);
      Vec3 via_point_v = f.B_factor(u, v) * point_dv(f, z, u, v);
      CHECK((via_point_v - ruling_v_dir(f, z, u)).norm() < 1e-12);
    }
  }
}

TEST_CASE("elliptic coordinates: back-substitution and Lame orthogonality") {
  auto cf = make_family(FamilyKind::Central, 4, -1, 1);
  auto ec = elliptic_coords(cf, Vec3(1, 1, 1));
  REQUIRE(ec.roots.size() == 3);
  for (double zr : ec.roots)
    CHECK(std::abs(quadric_value(cf, zr, Vec3(1, 1, 1))) < 1e-10);
  for (size_t i = 0; i < 3; ++i)
    for (size_t j = i + 1; j < 3; ++j) {
      Vec3 gi = normal_hat(cf, ec.roots[i], Vec3(1, 1, 1));
      Vec3 gj = normal_hat(cf, ec.roots[j], Vec3(1, 1, 1));
      CHECK(std::abs(gi.dot(gj)) < 1e-9 * gi.norm() * gj.norm());
    }

  // A point of the ruled member itself must list z = 0.
  Vec3 on0 = evaluate(cf, 0, 0.7, -0.4);
  auto ec0 = elliptic_coords(cf, on0);
  double best = 1e9;
  for (double zr : ec0.roots) best = std::min(best, std::abs(zr));
  CHECK(best < 1e-10);

  // Paraboloid pencils also thread three members through a generic point.
  auto pf = make_family(FamilyKind::Paraboloid, 1, -1);
  auto ecp = elliptic_coords(pf, Vec3(1, 1, 1));
  REQUIRE(ecp.roots.size() == 3);
  for (double zr : ecp.roots)
    CHECK(std::abs(quadric_value(pf, zr, Vec3(1, 1, 1))) < 1e-10);
  for (size_t i = 0; i < 3; ++i)
    for (size_t j = i + 1; j < 3; ++j) {
      Vec3 gi = normal_hat(pf, ecp.roots[i], Vec3(1, 1, 1));
      Vec3 gj = normal_hat(pf, ecp.roots[j], Vec3(1, 1, 1));
      CHECK(std::abs(gi.dot(gj)) < 1e-9 * gi.norm() * gj.norm());
    }

  // On the focal conic two spectral roots collide.
  double th = 0.3;
  Vec3 focal(std::sqrt(5.0) * std::cos(th), 0.0, std::sqrt(2.0) * std::sin(th));
  CHECK_THROWS_AS(elliptic_coords(cf, focal), DegeneratePoint);
}

TEST_CASE("rmpia: identity at z=0, four mappings, Gram equality, determinant") {
  Rng rng(16);
  auto cf = make_family(FamilyKind::Central, 4, -1, 1);
  auto id = rmpia(cf, 0, 1.3, -0.2, 0.4, 1.9);
  CHECK((id.R - Mat3::Identity()).norm() < 1e-12);
  CHECK(id.t.norm() < 1e-12);

  for (int kind = 0; kind < 2; ++kind) {
    for (int it = 0; it < 200; ++it) {
      auto f = qtest::random_family(
          rng, kind ? FamilyKind::Paraboloid : FamilyKind::Central);
      double z = qtest::random_admissible_z_nonzero(rng, f);
      auto [u0, v0] = qtest::random_uv(rng, f);
      auto [u1, v1] = qtest::random_uv(rng, f);
      Ruling rc = rng.coin() ? Ruling::U : Ruling::V;
      RigidMotion M = rmpia(f, z, u0, v0, u1, v1, rc, rc);

      Vec3 x0_0 = evaluate(f, 0, u0, v0), xz_0 = evaluate(f, z, u0, v0);
      Vec3 x0_1 = evaluate(f, 0, u1, v1), xz_1 = evaluate(f, z, u1, v1);
      double s = std::max({1.0, x0_0.norm(), xz_1.norm()});
      CHECK((M(x0_0) - xz_0).norm() < 1e-9 * s);
      CHECK((M(xz_1) - x0_1).norm() < 1e-9 * s);
      CHECK((M.R * ruling_dir(f, 0, rc, u0, v0) - ruling_dir(f, z, rc, u0, v0))
                .norm() < 1e-9 * s);
      CHECK((M.R * ruling_dir(f, z, rc, u1, v1) - ruling_dir(f, 0, rc, u1, v1))
                .norm() < 1e-9 * s);
      CHECK(M.orthogonality_defect() < 1e-10);
      CHECK(std::abs(M.R.determinant() - 1.0) < 1e-10);

      // Mixed ruling families flip the handedness.
      RigidMotion Mx = rmpia(f, z, u0, v0, u1, v1, rc,
                             rc == Ruling::U ? Ruling::V : Ruling::U);
      CHECK(std::abs(Mx.R.determinant() + 1.0) < 1e-10);

      // Length preservation behind the construction.
      Vec3 V01 = xz_1 - x0_0, V10 = xz_0 - x0_1;
      CHECK(std::abs(V01.squaredNorm() - V10.squaredNorm()) <
            1e-10 * std::max(1.0, V01.squaredNorm()));
      Vec3 w0 = ruling_dir(f, 0, rc, u0, v0), wz = ruling_dir(f, z, rc, u0, v0);
      CHECK(std::abs(w0.squaredNorm() - wz.squaredNorm()) <
            1e-10 * std::max(1.0, w0.squaredNorm()));

      // Gram equality of source and target triples.
      Mat3 S, T;
      S.col(0) = V01;
      S.col(1) = ruling_dir(f, 0, rc, u0, v0);
      S.col(2) = ruling_dir(f, z, rc, u1, v1);
      T.col(0) = -V10;
      T.col(1) = ruling_dir(f, z, rc, u0, v0);
      T.col(2) = ruling_dir(f, 0, rc, u1, v1);
      double gs = std::max(1.0, (S.transpose() * S).norm());
      CHECK((S.transpose() * S - T.transpose() * T).norm() < 1e-10 * gs);
    }
  }

  // Coincident endpoints at vanishing z give a collapsing frame.
  CHECK_THROWS_AS(rmpia(cf, 1e-12, 1.0, 0.0, 1.0, 0.0), DegenerateFrame);
}

TEST_CASE("tc_solve_u1: residuals, reciprocity, degenerate cases") {
  auto cf = make_family(FamilyKind::Central, 4, -1, 1);
  CHECK_THROWS_AS(tc_solve_u1(cf, 0, 1.0, 0.3, 0.3), DegenerateHomography);

  // At z = 0 the tangency point is the chart point itself.
  double u1_at0 = tc_solve_u1(cf, 0, 1.0, 0.3, 1.4);
  CHECK(std::abs(u1_at0 - 1.0) < 1e-9);

  Rng rng(17);
  for (int kind = 0; kind < 2; ++kind) {
    int done = 0, tries = 0;
    while (done < 200 && tries < 4000) {
      ++tries;
      auto f = qtest::random_family(
          rng, kind ? FamilyKind::Paraboloid : FamilyKind::Central);
      double z = qtest::random_admissible_z_nonzero(rng, f);
      auto [u0, v0] = qtest::random_uv(rng, f);
      double v1 = rng.uniform(-2.0, 2.0);
      try {
        double u1 = tc_solve_u1(f, z, u0, v0, v1);
        Vec3 x00 = evaluate(f, 0, u0, v0), n00 = normal_hat(f, 0, x00);
        Vec3 xz1 = evaluate(f, z, u1, v1);
        double r = std::abs((xz1 - x00).dot(n00));
        CHECK(r < 1e-10 * std::max(1.0, (xz1 - x00).norm() * n00.norm()));
        // Reciprocal tangency at the partner point.
        Vec3 x01 = evaluate(f, 0, u1, v1), n01 = normal_hat(f, 0, x01);
        Vec3 xz0 = evaluate(f, z, u0, v0);
        double r2 = std::abs((xz0 - x01).dot(n01));
        CHECK(r2 < 1e-10 * std::max(1.0, (xz0 - x01).norm() * n01.norm()));
        ++done;
      } catch (const SingularRuling&) {
      } catch (const DegenerateHomography&) {
      }
    }
    CHECK(done == 200);
  }
}

TEST_CASE("tangency symmetry holds identically, not only at tangency") {
  Rng rng(18);
  for (int kind = 0; kind < 2; ++kind) {
    for (int it = 0; it < 200; ++it) {
      auto f = qtest::random_family(
          rng, kind ? FamilyKind::Paraboloid : FamilyKind::Central);
      double z = qtest::random_admissible_z(rng, f);
      auto [u0, v0] = qtest::random_uv(rng, f);
      auto [u1, v1] = qtest::random_uv(rng, f);
      Vec3 x00 = evaluate(f, 0, u0, v0), xz0 = evaluate(f, z, u0, v0);
      Vec3 x01 = evaluate(f, 0, u1, v1), xz1 = evaluate(f, z, u1, v1);
      double lhs = (xz1 - x00).dot(normal_hat(f, 0, x00));
      double rhs = (xz0 - x01).dot(normal_hat(f, 0, x01));
      CHECK(std::abs(lhs - rhs) < 1e-10 * std::max(1.0, std::abs(lhs)));
    }
  }
}
