#include "qdef/tangency.h"

#include <cmath>

namespace qdef {

namespace {

// m as a function of v1 alone (z, base point fixed).  Any point of the v1
// ruling serves: points on the ruling differ by multiples of the direction,
// which the cross product kills.  u = v1 + 1 stays clear of the chart pole.
Vec3 m_of_v1(const ConfocalFamily& fam, double z, const Vec3& x00, double v1) {
  Vec3 d = ruling_u_dir(fam, z, v1);
  Vec3 on_ruling = evaluate(fam, z, v1 + 1.0, v1);
  return d.cross(on_ruling - x00);
}

}  // namespace

MField m_field(const ConfocalFamily& fam, double z, double u0, double v0,
               double v1) {
  double u1 = tc_solve_u1(fam, z, u0, v0, v1);
  Vec3 x00 = evaluate(fam, 0, u0, v0);
  Vec3 V01 = evaluate(fam, z, u1, v1) - x00;
  MField out;
  out.u1 = u1;
  out.m = ruling_u_dir(fam, z, v1).cross(V01);
  out.m_prime = ruling_v_dir(fam, z, u1).cross(V01);
  return out;
}

Vec3 m_field_dv1(const ConfocalFamily& fam, double z, double u0, double v0,
                 double v1) {
  Vec3 x00 = evaluate(fam, 0, u0, v0);
  const double h = 0.5;
  return (m_of_v1(fam, z, x00, v1 + h) - m_of_v1(fam, z, x00, v1 - h)) /
         (2.0 * h);
}

double delta_minus(const ConfocalFamily& fam, double z, double v0, double v1) {
  // The anchor u0 is immaterial: moving the base point along its own ruling
  // changes m by a multiple of that ruling direction, which the final dot
  // product kills.
  double u0 = fam.central() ? v0 + 1.0 : 0.0;
  Vec3 x00 = evaluate(fam, 0, u0, v0);
  return -m_of_v1(fam, z, x00, v1).dot(ruling_u_dir(fam, 0, v0));
}

double delta_prime_minus(const ConfocalFamily& fam, double z, double v0,
                         double u1) {
  double u0 = fam.central() ? v0 + 1.0 : 0.0;
  Vec3 x00 = evaluate(fam, 0, u0, v0);
  double v_anchor = fam.central() ? u1 + 1.0 : 0.0;
  Vec3 m_prime = ruling_v_dir(fam, z, u1)
                     .cross(evaluate(fam, z, u1, v_anchor) - x00);
  return -m_prime.dot(ruling_u_dir(fam, 0, v0));
}

TCState deltas(const ConfocalFamily& fam, double z, double u0, double v0,
               double u1, double v1, double tc_tol) {
  Vec3 x00 = evaluate(fam, 0, u0, v0);
  Vec3 n00 = normal_hat(fam, 0, x00);
  Vec3 xz1 = evaluate(fam, z, u1, v1);
  Vec3 V01 = xz1 - x00;
  double resid = std::abs(V01.dot(n00));
  if (resid > tc_tol * std::max(1.0, V01.norm() * n00.norm()))
    throw NotInTangency("partner point off the tangent plane");

  TCState s;
  s.z = z;
  s.u0 = u0;
  s.v0 = v0;
  s.u1 = u1;
  s.v1 = v1;
  s.m = ruling_u_dir(fam, z, v1).cross(V01);
  s.m_prime = ruling_v_dir(fam, z, u1).cross(V01);

  Vec3 w0u = ruling_u_dir(fam, 0, v0), w0v = ruling_v_dir(fam, 0, u0);
  s.delta_m = -s.m.dot(w0u);
  s.delta_p = s.m.dot(w0v);
  s.deltap_m = -s.m_prime.dot(w0u);
  s.deltap_p = s.m_prime.dot(w0v);

  s.a_cal = fam.orientation() * fam.calA();
  Vec3 n01 = normal_hat(fam, 0, evaluate(fam, 0, u1, v1));
  s.n_cal0 = 1.0 / (s.a_cal * fam.B_factor(u0, v0) * n00.squaredNorm());
  s.n_cal1 = 1.0 / (s.a_cal * fam.B_factor(u1, v1) * n01.squaredNorm());
  s.rho0 = s.a_cal * n00.squaredNorm();
  return s;
}

}  // namespace qdef
