#pragma once

// Confocal families of the two real doubly ruled quadric types, their ruling
// charts, the Ivory affinity between members, and the rigid motion / tangency
// solves built on it.
//
// Conventions used throughout:
//   Central    : Q_z(x) = x1^2/(a1-z) + x2^2/(a2-z) + x3^2/(a3-z) - 1,
//                a1 > 0 > a2, a3 > 0; doubly ruled member at z = 0.
//   Paraboloid : Q_z(x) = x1^2/(a1-z) + x2^2/(a2-z) - 2 x3 + z,  a1 > 0 > a2.
//   R_z = I - z A with A = diag(1/a1, 1/a2, 1/a3) resp. diag(1/a1, 1/a2, 0);
//   z admissible iff every diagonal entry of R_z is positive.

#include <optional>
#include <vector>

#include "qdef/types.h"

namespace qdef {

enum class FamilyKind { Central, Paraboloid };
enum class Ruling { U, V };

struct ConfocalFamily {
  FamilyKind kind = FamilyKind::Central;
  double a1 = 0, a2 = 0, a3 = 0;  // a3 meaningless for Paraboloid

  bool central() const { return kind == FamilyKind::Central; }

  Vec3 A_diag() const {
    return central() ? Vec3(1 / a1, 1 / a2, 1 / a3) : Vec3(1 / a1, 1 / a2, 0);
  }
  Vec3 B_vec() const { return central() ? Vec3(0, 0, 0) : Vec3(0, 0, -1); }

  // diag(R_z) = diag(I - z A)
  Vec3 r_diag(double z) const {
    Vec3 a = A_diag();
    return Vec3(1 - z * a[0], 1 - z * a[1], 1 - z * a[2]);
  }

  bool z_admissible(double z) const {
    Vec3 r = r_diag(z);
    return r[0] > 0 && r[1] > 0 && r[2] > 0;
  }

  // (u - v)^2 for the Central chart, 1 for the Paraboloid chart.
  double B_factor(double u, double v) const {
    if (!central()) return 1.0;
    double d = u - v;
    return d * d;
  }

  // Scale factor of the Gauss-curvature law K = -1 / (calA^2 |N_hat|^4).
  double calA() const {
    double s = central() ? -a1 * a2 * a3 : -a1 * a2;
    return std::sqrt(s);
  }

  // Sign carried by calA in oriented identities (normal transport, the
  // solved-parameter differential): -sign((x_u x x_v) . N_hat), which is
  // constant over each chart. The ruling chart is left-handed with respect
  // to the chosen normal field for central members and right-handed for
  // paraboloids.
  double orientation() const { return central() ? 1.0 : -1.0; }
};

ConfocalFamily make_family(FamilyKind kind, double a1, double a2,
                           std::optional<double> a3 = std::nullopt);

void require_admissible(const ConfocalFamily& fam, double z);

// Implicit-equation residual Q_z(x); zero (to round-off) iff x lies on the
// member at parameter z.
double quadric_value(const ConfocalFamily& fam, double z, const Vec3& x);

// Ruling chart of the member at z.
Vec3 evaluate(const ConfocalFamily& fam, double z, double u, double v);
Vec3 point_du(const ConfocalFamily& fam, double z, double u, double v);
Vec3 point_dv(const ConfocalFamily& fam, double z, double u, double v);

// Second chart derivatives and the Gauss curvature of the member at z.
Vec3 point_duu(const ConfocalFamily& fam, double z, double u, double v);
Vec3 point_duv(const ConfocalFamily& fam, double z, double u, double v);
Vec3 point_dvv(const ConfocalFamily& fam, double z, double u, double v);
double gauss_curvature_chart(const ConfocalFamily& fam, double z, double u,
                             double v);

// B_factor * x_u as a function of v only, and B_factor * x_v as a function of
// u only (the scaled ruling directions are constant along their own ruling).
Vec3 ruling_u_dir(const ConfocalFamily& fam, double z, double v);
Vec3 ruling_v_dir(const ConfocalFamily& fam, double z, double u);
Vec3 ruling_dir(const ConfocalFamily& fam, double z, Ruling which, double u,
                double v);

// Ivory affinity: the member-z image sqrt(R_z) p (+ (z/2) e3 for the
// Paraboloid pencil) of a point p on the member at z = 0.
Vec3 ivory_map(const ConfocalFamily& fam, double z, const Vec3& p,
               double on_tol = 1e-8);

// N_hat_z = R_z^{-1} (A p + B); normal to the member at z through p (not unit).
Vec3 normal_hat(const ConfocalFamily& fam, double z, const Vec3& p,
                double on_tol = 1e-8);

struct EllipticCoords {
  std::vector<double> roots;  // ascending; members of the pencil through q
};

EllipticCoords elliptic_coords(const ConfocalFamily& fam, const Vec3& q);

// Rigid motion of the Ivory affinity between the pair of points
// p0 = (u0,v0), p1 = (u1,v1) and the members z = 0, z: it maps
//   x0(p0) -> xz(p0),  xz(p1) -> x0(p1),
// and the chosen scaled ruling directions
//   w0(p0) -> wz(p0),  wz(p1) -> w0(p1).
RigidMotion rmpia(const ConfocalFamily& fam, double z, double u0, double v0,
                  double u1, double v1, Ruling rc0 = Ruling::U,
                  Ruling rc1 = Ruling::U);

// Tangency configuration: solve (xz(u1,v1) - x0(u0,v0))^T N_hat_0(x0(u0,v0)) = 0
// for u1, which is linear after clearing the chart pole.
double tc_solve_u1(const ConfocalFamily& fam, double z, double u0, double v0,
                   double v1);

// Same condition solved for v1 with u1 held fixed.
double tc_solve_v1(const ConfocalFamily& fam, double z, double u0, double v0,
                   double u1);

}  // namespace qdef
