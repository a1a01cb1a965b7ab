#include "qdef/quadric.h"

#include <algorithm>
#include <cmath>

namespace qdef {

namespace {

bool all_finite(std::initializer_list<double> xs) {
  for (double x : xs)
    if (!std::isfinite(x)) return false;
  return true;
}

// Orthonormalize the columns of M in place, in column order.
Mat3 gram_schmidt(Mat3 M) {
  for (int j = 0; j < 3; ++j) {
    for (int k = 0; k < j; ++k) M.col(j) -= M.col(k).dot(M.col(j)) * M.col(k);
    double n = M.col(j).norm();
    if (n == 0) throw DegenerateFrame("zero column in frame");
    M.col(j) /= n;
  }
  return M;
}

}  // namespace

ConfocalFamily make_family(FamilyKind kind, double a1, double a2,
                           std::optional<double> a3opt) {
  if (kind == FamilyKind::Central) {
    if (!a3opt) throw InvalidSignature("central family takes three axis parameters");
    double a3 = *a3opt;
    if (!all_finite({a1, a2, a3})) throw InvalidSignature("non-finite axis parameter");
    if (std::abs(a1 - a2) <= 1e-12 || std::abs(a1 - a3) <= 1e-12 ||
        std::abs(a2 - a3) <= 1e-12)
      throw DegenerateAxes("axis parameters coincide");
    if (!(a1 > 0) || !(a2 < 0) || !(a3 > 0))
      throw InvalidSignature("central family needs a1 > 0, a2 < 0, a3 > 0");
    return {kind, a1, a2, a3};
  }
  if (a3opt) throw InvalidSignature("paraboloid family takes two axis parameters");
  if (!all_finite({a1, a2})) throw InvalidSignature("non-finite axis parameter");
  if (!(a1 > 0) || !(a2 < 0))
    throw InvalidSignature("paraboloid family needs a1 > 0 > a2");
  return {kind, a1, a2, 0.0};
}

void require_admissible(const ConfocalFamily& fam, double z) {
  if (!fam.z_admissible(z)) throw OutOfRange("z outside the admissible spectral range");
}

double quadric_value(const ConfocalFamily& fam, double z, const Vec3& x) {
  // Rational form: valid for any z away from the axis parameters, admissible
  // or not (non-ruled members of the pencil are legitimate here).
  if (fam.central())
    return x[0] * x[0] / (fam.a1 - z) + x[1] * x[1] / (fam.a2 - z) +
           x[2] * x[2] / (fam.a3 - z) - 1.0;
  return x[0] * x[0] / (fam.a1 - z) + x[1] * x[1] / (fam.a2 - z) - 2.0 * x[2] + z;
}

Vec3 evaluate(const ConfocalFamily& fam, double z, double u, double v) {
  require_admissible(fam, z);
  if (fam.central()) {
    double d = u - v;
    if (std::abs(d) <= eps_sing) throw SingularRuling("|u - v| at the chart pole");
    double al = std::sqrt(fam.a1 - z), be = std::sqrt(z - fam.a2),
           ga = std::sqrt(fam.a3 - z);
    return Vec3(al * (1 - u * v), be * (1 + u * v), ga * (u + v)) / d;
  }
  double al = std::sqrt(fam.a1 - z), be = std::sqrt(z - fam.a2);
  return Vec3(al * (u + v), be * (u - v), 2 * u * v + 0.5 * z);
}

Vec3 point_du(const ConfocalFamily& fam, double z, double u, double v) {
  return ruling_u_dir(fam, z, v) / fam.B_factor(u, v);
}

Vec3 point_dv(const ConfocalFamily& fam, double z, double u, double v) {
  return ruling_v_dir(fam, z, u) / fam.B_factor(u, v);
}

Vec3 point_duu(const ConfocalFamily& fam, double z, double u, double v) {
  if (!fam.central()) {
    require_admissible(fam, z);
    return Vec3::Zero();
  }
  double d = u - v;
  return -2.0 * ruling_u_dir(fam, z, v) / (d * d * d);
}

Vec3 point_dvv(const ConfocalFamily& fam, double z, double u, double v) {
  if (!fam.central()) {
    require_admissible(fam, z);
    return Vec3::Zero();
  }
  double d = u - v;
  return 2.0 * ruling_v_dir(fam, z, u) / (d * d * d);
}

Vec3 point_duv(const ConfocalFamily& fam, double z, double u, double v) {
  if (!fam.central()) {
    require_admissible(fam, z);
    return Vec3(0, 0, 2);
  }
  double al = std::sqrt(fam.a1 - z), be = std::sqrt(z - fam.a2),
         ga = std::sqrt(fam.a3 - z);
  double d = u - v;
  Vec3 ddir(2 * al * v, -2 * be * v, -2 * ga);  // d/dv of the scaled u-direction
  return ddir / (d * d) + 2.0 * ruling_u_dir(fam, z, v) / (d * d * d);
}

double gauss_curvature_chart(const ConfocalFamily& fam, double z, double u,
                             double v) {
  Vec3 xu = point_du(fam, z, u, v), xv = point_dv(fam, z, u, v);
  Vec3 n = xu.cross(xv);
  double nn = n.norm();
  if (nn < eps_deg) throw DegenerateFrame("degenerate tangent plane");
  n /= nn;
  double E = xu.dot(xu), F = xu.dot(xv), G = xv.dot(xv);
  double e = n.dot(point_duu(fam, z, u, v));
  double f = n.dot(point_duv(fam, z, u, v));
  double g = n.dot(point_dvv(fam, z, u, v));
  return (e * g - f * f) / (E * G - F * F);
}

Vec3 ruling_u_dir(const ConfocalFamily& fam, double z, double v) {
  require_admissible(fam, z);
  if (fam.central()) {
    double al = std::sqrt(fam.a1 - z), be = std::sqrt(z - fam.a2),
           ga = std::sqrt(fam.a3 - z);
    return Vec3(al * (v * v - 1), -be * (1 + v * v), -2 * ga * v);
  }
  double al = std::sqrt(fam.a1 - z), be = std::sqrt(z - fam.a2);
  return Vec3(al, be, 2 * v);
}

Vec3 ruling_v_dir(const ConfocalFamily& fam, double z, double u) {
  require_admissible(fam, z);
  if (fam.central()) {
    double al = std::sqrt(fam.a1 - z), be = std::sqrt(z - fam.a2),
           ga = std::sqrt(fam.a3 - z);
    return Vec3(al * (1 - u * u), be * (1 + u * u), 2 * ga * u);
  }
  double al = std::sqrt(fam.a1 - z), be = std::sqrt(z - fam.a2);
  return Vec3(al, -be, 2 * u);
}

Vec3 ruling_dir(const ConfocalFamily& fam, double z, Ruling which, double u,
                double v) {
  return which == Ruling::U ? ruling_u_dir(fam, z, v) : ruling_v_dir(fam, z, u);
}

namespace {

// On-member residual scaled by the magnitude of the evaluated terms, so that
// points far along a ruling (large coordinates, exact to rounding) are not
// rejected by cancellation noise.
double member_residual(const ConfocalFamily& fam, double z, const Vec3& p) {
  double mag = std::abs(p[0] * p[0] / (fam.a1 - z)) +
               std::abs(p[1] * p[1] / (fam.a2 - z));
  if (fam.central())
    mag += std::abs(p[2] * p[2] / (fam.a3 - z));
  else
    mag += 2.0 * std::abs(p[2]) + std::abs(z);
  return std::abs(quadric_value(fam, z, p)) / std::max(1.0, mag);
}

}  // namespace

Vec3 ivory_map(const ConfocalFamily& fam, double z, const Vec3& p, double on_tol) {
  require_admissible(fam, z);
  if (member_residual(fam, 0.0, p) > on_tol)
    throw OffQuadric("point not on the z = 0 member");
  Vec3 r = fam.r_diag(z);
  Vec3 q(std::sqrt(r[0]) * p[0], std::sqrt(r[1]) * p[1], std::sqrt(r[2]) * p[2]);
  if (!fam.central()) q[2] = p[2] + 0.5 * z;
  return q;
}

Vec3 normal_hat(const ConfocalFamily& fam, double z, const Vec3& p, double on_tol) {
  double pole = std::min(std::abs(fam.a1 - z), std::abs(fam.a2 - z));
  if (fam.central()) pole = std::min(pole, std::abs(fam.a3 - z));
  if (pole <= 1e-13) throw OutOfRange("z at a focal parameter of the pencil");
  if (member_residual(fam, z, p) > on_tol)
    throw OffQuadric("point not on the member at z");
  if (fam.central())
    return Vec3(p[0] / (fam.a1 - z), p[1] / (fam.a2 - z), p[2] / (fam.a3 - z));
  return Vec3(p[0] / (fam.a1 - z), p[1] / (fam.a2 - z), -1.0);
}

namespace {

// p(z) = c[0] + c[1] z + c[2] z^2 + ...
double poly_eval(const std::vector<double>& c, double z) {
  double acc = 0;
  for (size_t i = c.size(); i-- > 0;) acc = acc * z + c[i];
  return acc;
}

double poly_eval_deriv(const std::vector<double>& c, double z) {
  double acc = 0;
  for (size_t i = c.size(); i-- > 1;) acc = acc * z + double(i) * c[i];
  return acc;
}

std::vector<double> poly_mul(const std::vector<double>& a,
                             const std::vector<double>& b) {
  std::vector<double> c(a.size() + b.size() - 1, 0.0);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
  return c;
}

void poly_axpy(std::vector<double>& acc, double s, const std::vector<double>& a) {
  if (acc.size() < a.size()) acc.resize(a.size(), 0.0);
  for (size_t i = 0; i < a.size(); ++i) acc[i] += s * a[i];
}

}  // namespace

EllipticCoords elliptic_coords(const ConfocalFamily& fam, const Vec3& q) {
  // Clear denominators of Q_z(q) = 0: a monic cubic in z for either kind.
  std::vector<double> l1 = {fam.a1, -1.0}, l2 = {fam.a2, -1.0};
  std::vector<double> P;
  if (fam.central()) {
    std::vector<double> l3 = {fam.a3, -1.0};
    P = poly_mul(poly_mul(l1, l2), l3);
    for (auto& c : P) c = -c;  // -(a1-z)(a2-z)(a3-z), monic
    poly_axpy(P, q[0] * q[0], poly_mul(l2, l3));
    poly_axpy(P, q[1] * q[1], poly_mul(l1, l3));
    poly_axpy(P, q[2] * q[2], poly_mul(l1, l2));
  } else {
    P = poly_mul({-2.0 * q[2], 1.0}, poly_mul(l1, l2));
    poly_axpy(P, q[0] * q[0], l2);
    poly_axpy(P, q[1] * q[1], l1);
  }

  // Companion-matrix roots, Newton-polished where the derivative allows.
  Mat3 C = Mat3::Zero();
  C(1, 0) = 1;
  C(2, 1) = 1;
  C(0, 2) = -P[0];
  C(1, 2) = -P[1];
  C(2, 2) = -P[2];
  Eigen::EigenSolver<Mat3> es(C);
  double scale = 1.0;
  for (int i = 0; i < 3; ++i) scale = std::max(scale, std::abs(es.eigenvalues()[i]));
  EllipticCoords out;
  for (int i = 0; i < 3; ++i) {
    auto lam = es.eigenvalues()[i];
    if (std::abs(lam.imag()) > 1e-6 * scale)
      throw ComplexRoots("spectral roots through the point are not all real");
    double zr = lam.real();
    for (int it = 0; it < 4; ++it) {
      double d = poly_eval_deriv(P, zr);
      if (std::abs(d) < 1e-8 * scale * scale) break;
      zr -= poly_eval(P, zr) / d;
    }
    out.roots.push_back(zr);
  }
  std::sort(out.roots.begin(), out.roots.end());
  for (size_t i = 1; i < out.roots.size(); ++i)
    if (out.roots[i] - out.roots[i - 1] <= eps_deg)
      throw DegeneratePoint("coincident spectral roots through the point");
  return out;
}

RigidMotion rmpia(const ConfocalFamily& fam, double z, double u0, double v0,
                  double u1, double v1, Ruling rc0, Ruling rc1) {
  require_admissible(fam, z);
  Vec3 x0_0 = evaluate(fam, 0, u0, v0), xz_0 = evaluate(fam, z, u0, v0);
  Vec3 x0_1 = evaluate(fam, 0, u1, v1), xz_1 = evaluate(fam, z, u1, v1);
  Vec3 V01 = xz_1 - x0_0;  // base point to far image
  Vec3 V10 = xz_0 - x0_1;  // far point to base image

  Mat3 S, T;
  S.col(0) = V01;
  S.col(1) = ruling_dir(fam, 0, rc0, u0, v0);
  S.col(2) = ruling_dir(fam, z, rc1, u1, v1);
  T.col(0) = -V10;
  T.col(1) = ruling_dir(fam, z, rc0, u0, v0);
  T.col(2) = ruling_dir(fam, 0, rc1, u1, v1);

  Mat3 Sn = S;
  for (int j = 0; j < 3; ++j) {
    double n = Sn.col(j).norm();
    if (n < eps_deg) throw DegenerateFrame("frame vector vanishes");
    Sn.col(j) /= n;
  }
  if (std::abs(Sn.determinant()) <= 1e-8)
    throw DegenerateFrame("frame triple nearly coplanar");

  Mat3 R = gram_schmidt(T) * gram_schmidt(S).transpose();
  return {R, xz_0 - R * x0_0};
}

double tc_solve_u1(const ConfocalFamily& fam, double z, double u0, double v0,
                   double v1) {
  require_admissible(fam, z);
  Vec3 x00 = evaluate(fam, 0, u0, v0);
  Vec3 n00 = normal_hat(fam, 0, x00);
  auto g = [&](double u1) { return (evaluate(fam, z, u1, v1) - x00).dot(n00); };

  // Clearing the chart pole (Central) leaves an affine function of u1; two
  // samples at u1 = v1 +- 1 stay clear of the pole and determine it.
  double mul_p = fam.central() ? +1.0 : 1.0;
  double mul_m = fam.central() ? -1.0 : 1.0;
  double hp = mul_p * g(v1 + 1.0);
  double hm = mul_m * g(v1 - 1.0);
  double c1 = 0.5 * (hp - hm);
  double c0 = 0.5 * (hp + hm) - c1 * v1;
  if (std::abs(c1) <= 1e-10 * std::max(1.0, std::abs(c0)))
    throw DegenerateHomography("tangency equation degenerate in u1");
  return -c0 / c1;
}

double tc_solve_v1(const ConfocalFamily& fam, double z, double u0, double v0,
                   double u1) {
  require_admissible(fam, z);
  Vec3 x00 = evaluate(fam, 0, u0, v0);
  Vec3 n00 = normal_hat(fam, 0, x00);
  auto g = [&](double v1) { return (evaluate(fam, z, u1, v1) - x00).dot(n00); };

  // Mirror of tc_solve_u1: the pole factor at v1 = u1 + s is -s.
  double mul_p = fam.central() ? -1.0 : 1.0;
  double mul_m = fam.central() ? +1.0 : 1.0;
  double hp = mul_p * g(u1 + 1.0);
  double hm = mul_m * g(u1 - 1.0);
  double c1 = 0.5 * (hp - hm);
  double c0 = 0.5 * (hp + hm) - c1 * u1;
  if (std::abs(c1) <= 1e-10 * std::max(1.0, std::abs(c0)))
    throw DegenerateHomography("tangency equation degenerate in v1");
  return -c0 / c1;
}

}  // namespace qdef
