#pragma once

// Tangency-configuration normal fields m, m' and the four Delta invariants
// built from them, which drive the Backlund machinery downstream.
//
// With x0^0 = x0(u0,v0), xz^1 = xz(u1,v1), V01 = xz^1 - x0^0:
//   m  := (B1 x_{z u1}) x V01   (independent of u1; quadratic in v1)
//   m' := (B1 x_{z v1}) x V01
//   Delta^-  := -m  . (B0 x_{0 u0}),   Delta^+  := +m  . (B0 x_{0 v0})
//   Delta'^- := -m' . (B0 x_{0 u0}),   Delta'^+ := +m' . (B0 x_{0 v0})
//   N_j := 1 / (A B_j |N_hat_0^j|^2),  rho0 := A |N_hat_0^0|^2,
// where A is the *signed* curvature constant orientation() * calA().

#include "qdef/quadric.h"

namespace qdef {

struct MField {
  Vec3 m = Vec3::Zero();
  Vec3 m_prime = Vec3::Zero();
  double u1 = 0;  // tangency-configuration solution used for m'
};

MField m_field(const ConfocalFamily& fam, double z, double u0, double v0,
               double v1);

// d m / d v1 with (z, u0, v0) held fixed.  Each component of m is quadratic
// in v1, so one central difference is exact up to round-off.
Vec3 m_field_dv1(const ConfocalFamily& fam, double z, double u0, double v0,
                 double v1);

// Delta^- as a function of (z, v0, v1) alone: it depends on neither u0 nor
// u1, so it is available before any tangency configuration is solved.  This
// is the coefficient driving the leaf equation along a ruled seed; it is an
// exact quadratic in v1.
double delta_minus(const ConfocalFamily& fam, double z, double v0, double v1);

// Delta'^- as a function of (z, v0, u1) alone (the v-ruling counterpart),
// an exact quadratic in u1.
double delta_prime_minus(const ConfocalFamily& fam, double z, double v0,
                         double u1);

struct TCState {
  double z = 0;
  double u0 = 0, v0 = 0;
  double u1 = 0, v1 = 0;
  Vec3 m = Vec3::Zero(), m_prime = Vec3::Zero();
  double delta_m = 0, delta_p = 0;    // Delta^-, Delta^+
  double deltap_m = 0, deltap_p = 0;  // Delta'^-, Delta'^+
  double n_cal0 = 0, n_cal1 = 0;  // N_0, N_1
  double a_cal = 0;               // signed A
  double rho0 = 0;
};

// Requires (u1,v1) to be in tangency configuration with (u0,v0); the residual
// is checked against tc_tol relative to the feature scale.
TCState deltas(const ConfocalFamily& fam, double z, double u0, double v0,
               double u1, double v1, double tc_tol = 1e-8);

}  // namespace qdef
