#include "qdef/permutability.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace qdef {

namespace {

// Tangency of x_z(u,v) against the tangent plane of the base member at
// (ub,vb), with the chart pole cleared: a bilinear form in (u,v).  For the
// central chart the genuine residual is eval/(u-v); the zero set is shared.
struct Bilin {
  double A = 0, B = 0, C = 0, D = 0;  // A uv + B u + C v + D
  double eval(double u, double v) const { return A * u * v + B * u + C * v + D; }
  double du(double u, double v) const { return A * v + B; }
  double dv(double u, double v) const { return A * u + C; }
  // the u tracing the tangency curve over a given v
  double u_of(double v) const { return -(C * v + D) / (A * v + B); }
  double u_den(double v) const { return A * v + B; }
};

Bilin tc_bilinear(const ConfocalFamily& fam, double z, double ub, double vb) {
  Vec3 xb = evaluate(fam, 0, ub, vb);
  Vec3 n = normal_hat(fam, 0, xb);
  double c = xb.dot(n);
  if (fam.central()) {
    double al = std::sqrt(fam.a1 - z), be = std::sqrt(z - fam.a2),
           ga = std::sqrt(fam.a3 - z);
    return {be * n[1] - al * n[0], ga * n[2] - c, ga * n[2] + c,
            al * n[0] + be * n[1]};
  }
  double al = std::sqrt(fam.a1 - z), be = std::sqrt(z - fam.a2);
  return {2 * n[2], al * n[0] + be * n[1], al * n[0] - be * n[1],
          0.5 * z * n[2] - c};
}

double scaled_tc_residual(const ConfocalFamily& fam, double ze, double ub,
                          double vb, double up, double vp) {
  Vec3 xb = evaluate(fam, 0, ub, vb);
  Vec3 n = normal_hat(fam, 0, xb);
  Vec3 V = evaluate(fam, ze, up, vp) - xb;
  return std::abs(V.dot(n)) / std::max(1.0, V.norm() * n.norm());
}

Ruling rc_of(int eps) { return eps > 0 ? Ruling::U : Ruling::V; }

// Algebraic form of the ruling cross-ratio for a (possibly tentative)
// closure: equals z1/z2 exactly when (u3,v3) completes the same branch.
double chi_value(const ConfocalFamily& fam, double z1, double z2, double u0,
                 double v0, double u1, double v1, double u2, double v2,
                 double u3, double v3) {
  Vec3 n0 = normal_hat(fam, 0, evaluate(fam, 0, u0, v0));
  Vec3 n3 = normal_hat(fam, 0, evaluate(fam, 0, u3, v3));
  double num = point_du(fam, z1, u1, v1).dot(n0) *
               point_du(fam, z1, u2, v2).dot(n3);
  double den = point_du(fam, z2, u1, v1).dot(n3) *
               point_du(fam, z2, u2, v2).dot(n0);
  return num / den;
}

bool near_pole(const ConfocalFamily& fam, double u, double v) {
  return fam.central() && std::abs(u - v) < 1e-10 * (1.0 + std::abs(u));
}

}  // namespace

Vec2 BianchiQuad::p(int j) const {
  switch (j) {
    case 0: return Vec2(u0, v0);
    case 1: return Vec2(u1, v1);
    case 2: return Vec2(u2, v2);
    case 3: return Vec2(u3, v3);
    default: throw OutOfRange("quad vertex index");
  }
}

double BianchiQuad::edge_z(int j, int k) const {
  switch (j ^ k) {
    case 1: return z1;  // (0,1) and (2,3)
    case 2: return z2;  // (0,2) and (1,3)
    default: throw OutOfRange("not an edge of the square");
  }
}

double BianchiQuad::tangency_residual() const {
  const int edges[4][2] = {{0, 1}, {0, 2}, {1, 3}, {2, 3}};
  double worst = 0;
  for (auto& e : edges) {
    double ze = edge_z(e[0], e[1]);
    Vec2 a = p(e[0]), b = p(e[1]);
    worst = std::max(worst,
                     scaled_tc_residual(fam, ze, a[0], a[1], b[0], b[1]));
    worst = std::max(worst,
                     scaled_tc_residual(fam, ze, b[0], b[1], a[0], a[1]));
  }
  return worst;
}

bool BianchiQuad::signature_valid(const std::array<int, 4>& eps, Branch b) {
  int prod = 1;
  for (int e : eps) {
    if (e != 1 && e != -1) return false;
    prod *= e;
  }
  if (prod != 1) return false;
  return eps[1] * eps[2] == (b == Branch::Same ? 1 : -1);
}

double BianchiQuad::cocycle_residual(const std::array<int, 4>& eps) const {
  RigidMotion lhs = rmpia(fam, z1, u0, v0, u1, v1, rc_of(eps[0]),
                          rc_of(eps[1])) *
                    rmpia(fam, z2, u2, v2, u0, v0, rc_of(eps[2]),
                          rc_of(eps[0]));
  RigidMotion rhs = rmpia(fam, z2, u3, v3, u1, v1, rc_of(eps[3]),
                          rc_of(eps[1])) *
                    rmpia(fam, z1, u2, v2, u3, v3, rc_of(eps[2]),
                          rc_of(eps[3]));
  return lhs.gap(rhs);
}

double BianchiQuad::cross_ratio() const {
  return chi_value(fam, z1, z2, u0, v0, u1, v1, u2, v2, u3, v3);
}

double cross_ratio(double p1, double p2, double p3, double p4) {
  return ((p1 - p3) * (p2 - p4)) / ((p2 - p3) * (p1 - p4));
}

double intersect_param(const Vec3& a, const Vec3& d, const Vec3& b,
                       const Vec3& w, double tol) {
  Eigen::Matrix<double, 3, 2> M;
  M.col(0) = d;
  M.col(1) = -w;
  Vec2 st = M.colPivHouseholderQr().solve(b - a);
  double gap = (a + st[0] * d - b - st[1] * w).norm();
  if (gap > tol * std::max(1.0, d.norm()))
    throw NoIntersection("lines are skew beyond tolerance");
  return st[0];
}

double ruling_cross_ratio(const BianchiQuad& q) {
  const ConfocalFamily& f = q.fam;
  // endpoints of the section line
  Vec3 e1 = evaluate(f, q.z1, q.u0, q.v0);
  Vec3 e2 = evaluate(f, q.z2, q.u3, q.v3);
  Vec3 d = e2 - e1;
  // ruling through x_0(p1); it lies in the tangent plane at x_0(p1),
  // as do both endpoints, so the intersection is planar.
  double s1 = intersect_param(e1, d, evaluate(f, 0, q.u1, q.v1),
                              point_du(f, 0, q.u1, q.v1));
  // ruling through x_0(p2), transported by the diagonal motion
  RigidMotion m30 = rmpia(f, q.z1, q.u0, q.v0, q.u1, q.v1) *
                    rmpia(f, q.z2, q.u2, q.v2, q.u0, q.v0);
  Vec3 moved_pt = m30(evaluate(f, 0, q.u2, q.v2));
  Vec3 moved_dir = m30.R * point_du(f, 0, q.u2, q.v2);
  double s2 = intersect_param(e1, d, moved_pt, moved_dir);
  return cross_ratio(0.0, 1.0, s1, s2);
}

BianchiQuad sitc_complete(const ConfocalFamily& fam, double z1, double z2,
                          double u0, double v0, double u1, double v1,
                          double u2, double v2, Branch branch, double tol) {
  require_admissible(fam, z1);
  require_admissible(fam, z2);

  const double pre_tol = 1e-6;
  if (scaled_tc_residual(fam, z1, u0, v0, u1, v1) > pre_tol)
    throw NotInTangency("first partner off the base tangent plane");
  if (scaled_tc_residual(fam, z2, u0, v0, u2, v2) > pre_tol)
    throw NotInTangency("second partner off the base tangent plane");

  BianchiQuad quad;
  quad.fam = fam;
  quad.z1 = z1;
  quad.z2 = z2;
  quad.u0 = u0;
  quad.v0 = v0;
  quad.u1 = u1;
  quad.v1 = v1;
  quad.u2 = u2;
  quad.v2 = v2;
  quad.branch = branch;

  // Degenerate iteration: both partners coincide on one member, and the
  // square collapses onto its base point.
  if (std::abs(z1 - z2) < 1e-12 &&
      std::abs(u1 - u2) < 1e-12 * (1.0 + std::abs(u1)) &&
      std::abs(v1 - v2) < 1e-12 * (1.0 + std::abs(v1))) {
    quad.u3 = u0;
    quad.v3 = v0;
    return quad;
  }

  // Vertex 3 must be tangent to the plane at vertex 1 on member z2 and to
  // the plane at vertex 2 on member z1.  Eliminating u3 from the two
  // bilinear conditions leaves a quadratic in v3.
  Bilin P = tc_bilinear(fam, z2, u1, v1);
  Bilin Q = tc_bilinear(fam, z1, u2, v2);
  double qa = P.A * Q.C - Q.A * P.C;
  double qb = P.A * Q.D + P.B * Q.C - Q.A * P.D - Q.B * P.C;
  double qc = P.B * Q.D - Q.B * P.D;
  double scale = std::max({std::abs(qa), std::abs(qb), std::abs(qc)});
  if (scale < 1e-300)
    throw SingularClosure("closure conditions are identically dependent");

  int n_roots = 0;
  double roots[2];
  if (std::abs(qa) <= 1e-14 * std::max(std::abs(qb), std::abs(qc))) {
    // one branch escaped to infinity
    if (std::abs(qb) < 1e-14 * std::abs(qc))
      throw NoRealBranch("no finite closure");
    roots[n_roots++] = -qc / qb;
  } else {
    double disc = qb * qb - 4 * qa * qc;
    if (disc < 0) {
      if (disc > -1e-12 * (qb * qb + std::abs(4 * qa * qc)))
        disc = 0;  // double root within roundoff
      else
        throw NoRealBranch("closure discriminant is negative");
    }
    double sq = std::sqrt(disc);
    double h = -0.5 * (qb + (qb >= 0 ? sq : -sq));
    roots[n_roots++] = h / qa;
    if (std::abs(h) > 0)
      roots[n_roots++] = qc / h;
    else
      roots[n_roots++] = 0.0;  // double root at the origin of the shift
  }

  // Identify each root's branch by its cross-ratio; z1/z2 marks Same.
  double target = z1 / z2;
  double best[2] = {1e300, 1e300};  // score per root, lower = closer
  double u3s[2] = {0, 0};
  bool usable[2] = {false, false};
  for (int k = 0; k < n_roots; ++k) {
    double v3 = roots[k];
    double den = P.u_den(v3);
    double u3;
    if (std::abs(den) > 1e-12 * scale)
      u3 = P.u_of(v3);
    else if (std::abs(Q.u_den(v3)) > 1e-12 * scale)
      u3 = Q.u_of(v3);
    else
      continue;  // partner ruling at infinity
    if (!std::isfinite(u3) || near_pole(fam, u3, v3)) continue;
    u3s[k] = u3;
    usable[k] = true;
    best[k] = std::abs(chi_value(fam, z1, z2, u0, v0, u1, v1, u2, v2, u3, v3) -
                       target);
  }
  int same = best[0] <= best[1] ? 0 : 1;
  int want = branch == Branch::Same ? same : 1 - same;
  if (want >= n_roots || !usable[want])
    throw NoRealBranch("requested branch is degenerate or at infinity");

  // Newton polish of the simultaneous bilinear system.
  double u3 = u3s[want], v3 = roots[want];
  for (int it = 0; it < 3; ++it) {
    double f1 = P.eval(u3, v3), f2 = Q.eval(u3, v3);
    double j11 = P.du(u3, v3), j12 = P.dv(u3, v3);
    double j21 = Q.du(u3, v3), j22 = Q.dv(u3, v3);
    double det = j11 * j22 - j12 * j21;
    if (std::abs(det) < 1e-300) break;
    double du = (f1 * j22 - f2 * j12) / det;
    double dv = (j11 * f2 - j21 * f1) / det;
    if (!std::isfinite(du) || !std::isfinite(dv) ||
        std::abs(du) + std::abs(dv) > 1.0)
      throw NewtonDivergence("closure polish diverged");
    u3 -= du;
    v3 -= dv;
  }
  if (near_pole(fam, u3, v3))
    throw NoRealBranch("closure sits on the chart pole");

  quad.u3 = u3;
  quad.v3 = v3;
  if (quad.tangency_residual() > tol)
    throw NewtonDivergence("closure did not reach tolerance");
  return quad;
}

Eigen::Matrix<double, 8, 1> HomographyCoeffs::basis(double v0, double v1,
                                                    double v2, double v3) {
  Eigen::Matrix<double, 8, 1> b;
  b << 1.0, v0 + v3, v1 + v2, v0 * v3, v1 * v2, v0 * v1 + v2 * v3,
      v0 * v2 + v1 * v3, v0 * v1 * v2 * v3;
  return b;
}

double HomographyCoeffs::eval(double v0, double v1, double v2,
                              double v3) const {
  return c.dot(basis(v0, v1, v2, v3));
}

double HomographyCoeffs::v3_of(double v0, double v1, double v2) const {
  double den = c[1] + c[3] * v0 + c[5] * v2 + c[6] * v1 + c[7] * v0 * v1 * v2;
  double num = c[0] + c[1] * v0 + c[2] * (v1 + v2) + c[4] * v1 * v2 +
               c[5] * v0 * v1 + c[6] * v0 * v2;
  if (std::abs(den) < 1e-14 * std::max(1.0, std::abs(num)))
    throw DegenerateHomography("relation not solvable for v3");
  return -num / den;
}

HomographyCoeffs homography_fit(const ConfocalFamily& fam, double z1,
                                double z2,
                                const std::vector<BianchiQuad>& samples) {
  if (samples.size() < 16)
    throw RankDeficientSamples("need at least 16 closure samples");
  MatX M(samples.size(), 8);
  for (size_t i = 0; i < samples.size(); ++i)
    M.row(i) =
        HomographyCoeffs::basis(samples[i].v0, samples[i].v1, samples[i].v2,
                                samples[i].v3)
            .transpose();
  Eigen::JacobiSVD<MatX> svd(M, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv[6] < 1e-10 * sv[0])
    throw RankDeficientSamples("closure samples leave a degenerate nullspace");

  HomographyCoeffs out;
  out.fam = fam;
  out.z1 = z1;
  out.z2 = z2;
  out.c = svd.matrixV().col(7);
  int lead;
  out.c.cwiseAbs().maxCoeff(&lead);
  if (out.c[lead] < 0) out.c = -out.c;
  for (size_t i = 0; i < samples.size(); ++i) {
    double r = std::abs(M.row(i).dot(out.c)) / M.row(i).norm();
    out.fit_residual = std::max(out.fit_residual, r);
  }
  return out;
}

double moment_m2(const ConfocalFamily& fam, double z) {
  double r1 = std::sqrt(1.0 - z / fam.a1), r2 = std::sqrt(1.0 - z / fam.a2);
  if (fam.central()) {
    double r3 = std::sqrt(1.0 - z / fam.a3);
    return (r1 + r2) * (1.0 + r3) / z;
  }
  return 2.0 * (r1 + r2) / z;
}

double moment_m3(const ConfocalFamily& fam, double z1, double z2) {
  double a1 = std::sqrt(1.0 - z1 / fam.a1), b1 = std::sqrt(1.0 - z1 / fam.a2);
  double a2 = std::sqrt(1.0 - z2 / fam.a1), b2 = std::sqrt(1.0 - z2 / fam.a2);
  double cross = a1 * b2 + b1 * a2;
  if (fam.central()) {
    double c1 = std::sqrt(1.0 - z1 / fam.a3), c2 = std::sqrt(1.0 - z2 / fam.a3);
    return fam.a3 * cross / (c2 - c1);
  }
  return 2.0 * cross / (z1 - z2);
}

double moment_a(const ConfocalFamily& fam) {
  double planar = 0.5 * (1.0 / fam.a1 - 1.0 / fam.a2);
  return fam.central() ? planar / fam.a3 : planar;
}

HomographyCoeffs homography_moment_form(const ConfocalFamily& fam, double z1,
                                        double z2) {
  double m21 = moment_m2(fam, z1), m22 = moment_m2(fam, z2);
  double m3 = moment_m3(fam, z1, z2);
  double a = moment_a(fam);
  HomographyCoeffs out;
  out.fam = fam;
  out.z1 = z1;
  out.z2 = z2;
  // The closed-form relation is stated for ruling parameters scaled by
  // sqrt(2) relative to this chart.  Substituting v -> sqrt(2) v and
  // dividing by the common factor 2 leaves the quadratic terms alone and
  // turns the constant a(4 + d v0v1v2v3) into 2a(1 + d v0v1v2v3), d = 1
  // for central members and 0 for paraboloids.
  double m0 = 2.0 * a / (m21 * m22 * m3);
  out.c[0] = m0;
  out.c[3] = 1.0 / m3;
  out.c[4] = 1.0 / m3;
  out.c[5] = -1.0 / m21;
  out.c[6] = 1.0 / m22;
  out.c[7] = fam.central() ? m0 : 0.0;
  out.c.normalize();
  int lead;
  out.c.cwiseAbs().maxCoeff(&lead);
  if (out.c[lead] < 0) out.c = -out.c;
  return out;
}

Leaf bpt_apply(const Seed& seed, const Leaf& leaf1, const Leaf& leaf2,
               BptReport* report, double tol) {
  const ConfocalFamily& f = seed.fam;
  const GridSpec& g = seed.grid;
  if (leaf1.grid.nu != g.nu || leaf1.grid.nv != g.nv ||
      leaf2.grid.nu != g.nu || leaf2.grid.nv != g.nv)
    throw OutOfRange("leaves live on a different grid than the seed");
  size_t nodes = static_cast<size_t>(g.nu) * g.nv;
  if (leaf1.rolling.size() != nodes || leaf2.rolling.size() != nodes)
    throw OutOfRange("leaf rollings missing; run inversion_rolling first");

  Leaf out;
  out.fam = f;
  out.z = leaf2.z;  // leaf2's transform applied on top of leaf1
  out.flag = leaf1.flag;
  out.grid = g;
  out.u1.resize(g.nu, g.nv);
  out.v1.resize(g.nu, g.nv);
  out.x1.assign(static_cast<size_t>(g.nu) * g.nv, Vec3::Zero());
  out.rolling.assign(static_cast<size_t>(g.nu) * g.nv,
                     RigidMotion::identity());

  BptReport rep;
  const double zl1 = leaf1.z, zl2 = leaf2.z;
  for (int i = 0; i < g.nu; ++i) {
    for (int j = 0; j < g.nv; ++j) {
      int idx = g.index(i, j);
      double u0 = g.u(i), v0 = g.v(j);
      double u1 = leaf1.u1(i, j), v1 = leaf1.v1(i, j);
      double u2 = leaf2.u1(i, j), v2 = leaf2.v1(i, j);
      BianchiQuad quad = sitc_complete(f, zl1, zl2, u0, v0, u1, v1, u2, v2,
                                       Branch::Same, tol);
      rep.max_tangency = std::max(rep.max_tangency, quad.tangency_residual());

      // the new point, reached through either leaf
      Vec3 V13 = evaluate(f, zl2, quad.u3, quad.v3) - evaluate(f, 0, u1, v1);
      Vec3 V23 = evaluate(f, zl1, quad.u3, quad.v3) - evaluate(f, 0, u2, v2);
      Vec3 x3a = leaf1.x1[idx] + leaf1.rolling[idx].R * V13;
      Vec3 x3b = leaf2.x1[idx] + leaf2.rolling[idx].R * V23;
      rep.max_two_way_gap = std::max(rep.max_two_way_gap, (x3a - x3b).norm());

      RigidMotion r3a =
          leaf1.rolling[idx] * rmpia(f, zl2, quad.u3, quad.v3, u1, v1);
      RigidMotion r3b =
          leaf2.rolling[idx] * rmpia(f, zl1, quad.u3, quad.v3, u2, v2);
      rep.max_rolling_gap = std::max(rep.max_rolling_gap, r3a.gap(r3b));

      rep.max_cocycle =
          std::max(rep.max_cocycle, quad.cocycle_residual({1, 1, 1, 1}));

      // invariant-ratio necessary condition along the two closing edges
      double lhs = zl2 * delta_minus(f, zl1, v0, v1) /
                   (zl1 * delta_minus(f, zl2, v1, quad.v3));
      double rhs = zl1 * delta_minus(f, zl2, v0, v2) /
                   (zl2 * delta_minus(f, zl1, v2, quad.v3));
      rep.max_ratio_gap = std::max(
          rep.max_ratio_gap, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));

      out.u1(i, j) = quad.u3;
      out.v1(i, j) = quad.v3;
      out.x1[idx] = x3a;
      out.rolling[idx] = r3a;
    }
  }
  if (report) *report = rep;
  return out;
}

double Mobius3::menelaus_product() const {
  std::array<int, 8> eps{};
  eps[0] = 1;
  eps[1] = 1;
  eps[2] = branches[0] == Branch::Same ? eps[1] : -eps[1];
  eps[4] = branches[1] == Branch::Same ? eps[1] : -eps[1];

  auto lift = [&](int vertex, double ze) {
    return evaluate(fam, ze, u[vertex], v[vertex]);
  };
  auto ruling_dir_at = [&](int vertex) {
    return eps[vertex] > 0 ? point_du(fam, 0, u[vertex], v[vertex])
                           : point_dv(fam, 0, u[vertex], v[vertex]);
  };
  auto ratio = [&](int base, int va, double za, int vb, double zb) {
    Vec3 A = lift(va, za), B = lift(vb, zb);
    double s = intersect_param(A, B - A, evaluate(fam, 0, u[base], v[base]),
                               ruling_dir_at(base));
    return s / (s - 1.0);
  };
  // base 1 against [3 @ z2, 5 @ z3]; base 4 against [5 @ z1, 6 @ z2];
  // base 2 against [6 @ z3, 3 @ z1]
  return ratio(1, 3, z[1], 5, z[2]) * ratio(4, 5, z[0], 6, z[1]) *
         ratio(2, 6, z[2], 3, z[0]);
}

Mobius3 mobius3(const ConfocalFamily& fam, double z1, double z2, double z3,
                double u0, double v0, double v1, double v2, double v4,
                const std::array<Branch, 3>& branches, double tol) {
  int e1 = 1;
  int e2 = branches[0] == Branch::Same ? e1 : -e1;
  int e4 = branches[1] == Branch::Same ? e1 : -e1;
  if ((branches[2] == Branch::Same) != (e2 == e4))
    throw InvalidSignature("face branches violate the ruling signature");

  Mobius3 m;
  m.fam = fam;
  m.z = {z1, z2, z3};
  m.branches = branches;
  m.u[0] = u0;
  m.v[0] = v0;
  m.v[1] = v1;
  m.v[2] = v2;
  m.v[4] = v4;
  m.u[1] = tc_solve_u1(fam, z1, u0, v0, v1);
  m.u[2] = tc_solve_u1(fam, z2, u0, v0, v2);
  m.u[4] = tc_solve_u1(fam, z3, u0, v0, v4);

  auto put = [&](int vertex, const BianchiQuad& q) {
    m.u[vertex] = q.u3;
    m.v[vertex] = q.v3;
  };
  put(3, sitc_complete(fam, z1, z2, u0, v0, m.u[1], m.v[1], m.u[2], m.v[2],
                       branches[0], tol));
  put(5, sitc_complete(fam, z1, z3, u0, v0, m.u[1], m.v[1], m.u[4], m.v[4],
                       branches[1], tol));
  put(6, sitc_complete(fam, z2, z3, u0, v0, m.u[2], m.v[2], m.u[4], m.v[4],
                       branches[2], tol));

  // vertex 7 three ways; the upper-face branches follow from the signature
  Branch b7a = branches[2];  // (1; 3@z2, 5@z3): eps3 == eps5 iff eps2 == eps4
  Branch b7b = branches[1];  // (2; 3@z1, 6@z3): iff eps1 == eps4
  Branch b7c = branches[0];  // (4; 5@z1, 6@z2): iff eps1 == eps2
  BianchiQuad q7a = sitc_complete(fam, z2, z3, m.u[1], m.v[1], m.u[3], m.v[3],
                                  m.u[5], m.v[5], b7a, tol);
  BianchiQuad q7b = sitc_complete(fam, z1, z3, m.u[2], m.v[2], m.u[3], m.v[3],
                                  m.u[6], m.v[6], b7b, tol);
  BianchiQuad q7c = sitc_complete(fam, z1, z2, m.u[4], m.v[4], m.u[5], m.v[5],
                                  m.u[6], m.v[6], b7c, tol);
  m.v7_spread = std::max({std::abs(q7a.v3 - q7b.v3), std::abs(q7a.v3 - q7c.v3),
                          std::abs(q7b.v3 - q7c.v3), std::abs(q7a.u3 - q7b.u3),
                          std::abs(q7a.u3 - q7c.u3),
                          std::abs(q7b.u3 - q7c.u3)});
  put(7, q7a);
  return m;
}

RigidMotion DDQLattice::edge_motion(int j, int k, bool horizontal) const {
  int ja = j + (horizontal ? 1 : 0), ka = k + (horizontal ? 0 : 1);
  if (ja >= J || ka >= K) throw OutOfRange("edge leaves the lattice");
  int a = index(j, k), b = index(ja, ka);
  double ze = horizontal ? zs[j] : zps[k];
  return rmpia(fam, ze, us[a], vs[a], us[b], vs[b]);
}

double DDQLattice::cell_cocycle_residual(int j, int k) const {
  // 0 -> 1 -> 3 -> 2 -> 0 around the cell with lower corner (j,k)
  RigidMotion e1 = edge_motion(j, k, true);
  RigidMotion e2 = edge_motion(j + 1, k, false);
  int a3 = index(j + 1, k + 1), a2 = index(j, k + 1);
  RigidMotion e3 =
      rmpia(fam, zs[j], us[a3], vs[a3], us[a2], vs[a2]);  // 3 -> 2
  int a0 = index(j, k);
  RigidMotion e4 =
      rmpia(fam, zps[k], us[a2], vs[a2], us[a0], vs[a0]);  // 2 -> 0
  return (e4 * e3 * e2 * e1).gap(RigidMotion::identity());
}

namespace {

struct CellFrames {
  Vec3 n0, n1, n2, n3;   // conormals at the four chart points
  Mat3 r10, r20, r21;    // relative rotations pulled to vertex 0's frame
};

CellFrames cell_frames(const DDQLattice& L, int j, int k) {
  int a0 = L.index(j, k), a1 = L.index(j + 1, k), a2 = L.index(j, k + 1),
      a3 = L.index(j + 1, k + 1);
  CellFrames c;
  auto conormal = [&](int a) {
    return normal_hat(L.fam, 0, evaluate(L.fam, 0, L.us[a], L.vs[a]));
  };
  c.n0 = conormal(a0);
  c.n1 = conormal(a1);
  c.n2 = conormal(a2);
  c.n3 = conormal(a3);
  c.r10 = rmpia(L.fam, L.zs[j], L.us[a0], L.vs[a0], L.us[a1], L.vs[a1])
              .R.transpose();
  c.r20 = rmpia(L.fam, L.zps[k], L.us[a0], L.vs[a0], L.us[a2], L.vs[a2])
              .R.transpose();
  Mat3 r31 =
      rmpia(L.fam, L.zps[k], L.us[a3], L.vs[a3], L.us[a1], L.vs[a1]).R;
  c.r21 = c.r10 * r31;
  return c;
}

}  // namespace

double DDQLattice::planarity_residual(int j, int k) const {
  CellFrames c = cell_frames(*this, j, k);
  Vec3 a = c.r21 * c.n3 - c.n0;
  Vec3 b = c.r10 * c.n1 - c.r20 * c.n2;
  return a.cross(b).norm() / std::max(1.0, a.norm() * b.norm());
}

double DDQLattice::gauss_identity_residual(int j, int k) const {
  // The conormal triple product is not zero at finite facet size: it pairs
  // exactly with the facet area,
  //   n0 . (r10 n1 x r20 n2) = (V01 x V02) . n0 / (calA^2 |n0|^2),
  // and only degenerates to the continuum statement "= 0" as the facet
  // shrinks.  We report the residual of the finite-size identity.
  CellFrames c = cell_frames(*this, j, k);
  int a0 = index(j, k), a1 = index(j + 1, k), a2 = index(j, k + 1);
  Vec3 V01 = point[a1] - point[a0];
  Vec3 V02 = point[a2] - point[a0];
  // Edge vectors live in the ambient frame; pull them back to vertex 0's
  // chart frame, where the conormals are expressed.
  Mat3 R0t = motion[a0].R.transpose();
  Vec3 v01 = R0t * V01, v02 = R0t * V02;
  double a2cal = fam.calA() * fam.calA();
  double t = c.n0.dot((c.r10 * c.n1).cross(c.r20 * c.n2));
  double pair = v01.cross(v02).dot(c.n0) / (a2cal * c.n0.squaredNorm());
  return std::abs(t - pair) / std::max(1.0, std::abs(t));
}

double DDQLattice::discrete_gauss_curvature(int j, int k) const {
  // Lelieuvre-style pairing of the conormal-quad area with the facet area;
  // exact at any facet size, coinciding with K = -1/(calA^2 |n0|^4).
  CellFrames c = cell_frames(*this, j, k);
  int a0 = index(j, k), a1 = index(j + 1, k), a2 = index(j, k + 1);
  Mat3 R0t = motion[a0].R.transpose();
  Vec3 v01 = R0t * (point[a1] - point[a0]);
  Vec3 v02 = R0t * (point[a2] - point[a0]);
  Vec3 farea = v01.cross(v02);
  Vec3 qarea = (c.r10 * c.n1 - c.n0).cross(c.r20 * c.n2 - c.n0);
  return -qarea.dot(farea) / (farea.squaredNorm() * c.n0.squaredNorm());
}

double DDQLattice::facet_tangency_residual(int j, int k) const {
  int a = index(j, k);
  double worst = 0;
  const int dj[4] = {1, -1, 0, 0}, dk[4] = {0, 0, 1, -1};
  for (int t = 0; t < 4; ++t) {
    int jn = j + dj[t], kn = k + dk[t];
    if (jn < 0 || jn >= J || kn < 0 || kn >= K) continue;
    Vec3 d = point[index(jn, kn)] - point[a];
    worst = std::max(worst, std::abs(d.dot(normal[a])) / d.norm());
  }
  return worst;
}

DDQLattice ddq_build(const ConfocalFamily& fam, const std::vector<double>& zs,
                     const std::vector<double>& zps, const DDQCross& cross,
                     double tol) {
  DDQLattice L;
  L.fam = fam;
  L.zs = zs;
  L.zps = zps;
  L.J = static_cast<int>(cross.v_right.size()) + 1;
  L.K = static_cast<int>(cross.v_up.size()) + 1;
  if (static_cast<int>(zs.size()) != L.J - 1 ||
      static_cast<int>(zps.size()) != L.K - 1)
    throw OutOfRange("spectral sequence lengths do not match the cross");
  for (double z : zs) require_admissible(fam, z);
  for (double z : zps) require_admissible(fam, z);

  size_t n = static_cast<size_t>(L.J) * L.K;
  L.us.assign(n, 0.0);
  L.vs.assign(n, 0.0);
  L.motion.assign(n, RigidMotion::identity());
  L.point.assign(n, Vec3::Zero());
  L.normal.assign(n, Vec3::Zero());

  L.us[L.index(0, 0)] = cross.u0;
  L.vs[L.index(0, 0)] = cross.v0;
  for (int j = 0; j + 1 < L.J; ++j) {
    int a = L.index(j, 0), b = L.index(j + 1, 0);
    L.vs[b] = cross.v_right[j];
    L.us[b] = tc_solve_u1(fam, zs[j], L.us[a], L.vs[a], L.vs[b]);
  }
  for (int k = 0; k + 1 < L.K; ++k) {
    int a = L.index(0, k), b = L.index(0, k + 1);
    L.vs[b] = cross.v_up[k];
    L.us[b] = tc_solve_u1(fam, zps[k], L.us[a], L.vs[a], L.vs[b]);
  }

  // interior: row-major order respects the wavefront dependencies
  for (int j = 1; j < L.J; ++j) {
    for (int k = 1; k < L.K; ++k) {
      int a0 = L.index(j - 1, k - 1), a1 = L.index(j, k - 1),
          a2 = L.index(j - 1, k), a3 = L.index(j, k);
      BianchiQuad q =
          sitc_complete(fam, zs[j - 1], zps[k - 1], L.us[a0], L.vs[a0],
                        L.us[a1], L.vs[a1], L.us[a2], L.vs[a2], Branch::Same,
                        tol);
      L.us[a3] = q.u3;
      L.vs[a3] = q.v3;
    }
  }

  // accumulated motions; the two routes into each vertex must agree
  for (int j = 0; j + 1 < L.J; ++j) {
    int a = L.index(j, 0), b = L.index(j + 1, 0);
    L.motion[b] = L.motion[a] * L.edge_motion(j, 0, true).inverse();
  }
  for (int k = 0; k + 1 < L.K; ++k) {
    int a = L.index(0, k), b = L.index(0, k + 1);
    L.motion[b] = L.motion[a] * L.edge_motion(0, k, false).inverse();
  }
  for (int j = 1; j < L.J; ++j) {
    for (int k = 1; k < L.K; ++k) {
      int via_h = L.index(j - 1, k), target = L.index(j, k);
      RigidMotion mh =
          L.motion[via_h] * L.edge_motion(j - 1, k, true).inverse();
      RigidMotion mv = L.motion[L.index(j, k - 1)] *
                       L.edge_motion(j, k - 1, false).inverse();
      double gap = mh.gap(mv);
      L.max_fill_conflict = std::max(L.max_fill_conflict, gap);
      if (gap > std::max(tol, 1e-9))
        throw LatticeConflict("fill paths disagree beyond tolerance");
      L.motion[target] = mh;
    }
  }

  for (size_t i = 0; i < n; ++i) {
    Vec3 x0 = evaluate(fam, 0, L.us[i], L.vs[i]);
    L.point[i] = L.motion[i](x0);
    L.normal[i] = (L.motion[i].R * normal_hat(fam, 0, x0)).normalized();
  }
  return L;
}

}  // namespace qdef
