#pragma once

// Transformation leaves over a rolled seed: the scalar equation for the
// partner ruling parameter, the leaf surface, its rolling, the applicability
// check, and the Ribaucour curvature property.
//
// Over a ruled seed (profile phi, rotation about the u-rulings) the partner
// parameter closes to a one-variable ODE,
//     dv1/dv0 = phi(v0) Delta^-(z, v0, v1) / (2z),
// constant along u0; the right-hand side is an exact quadratic in v1, so the
// flow is a Moebius flow and may pass through infinity.  Integration runs in
// whichever of the charts v1, w = 1/v1 currently has the state in the unit
// band; the right-hand side is polynomial in both, so the passage through
// infinity is regular.

#include <vector>

#include "qdef/rolling.h"
#include "qdef/tangency.h"

namespace qdef {

struct Leaf {
  ConfocalFamily fam;
  double z = 0;
  Ruling flag = Ruling::U;  // which partner ruling family was integrated
  GridSpec grid;            // copy of the seed grid
  Eigen::ArrayXXd u1, v1;   // partner chart values per node, nu x nv
  std::vector<Vec3> x1;     // leaf points, grid.index(i, j)
  std::vector<RigidMotion> rolling;  // (R1, t1); filled by inversion_rolling
};

// Integrate the leaf equation along a ruled seed.  flag = Ruling::U drives
// v1 by the equation above (v1 constant along u0, u1 recovered per node);
// flag = Ruling::V drives u1 by the reflected equation
// du1/dv0 = phi Delta'^-(z, v0, u1) / (2z) and recovers v1 per node
// (v1_init then seeds u1).
// x1 = R0 (x_z(u1, v1) - x0(u0, v0)) + x^0  =  node motion applied to x_z.
Leaf leaf_integrate(const Seed& seed, double z, double v1_init,
                    Ruling flag = Ruling::U);

// Max relative gap, over interior nodes and metric components, between the
// finite-difference first fundamental forms of the leaf grid and of the
// partner-chart pullback grid x0(u1, v1).  Second order in the spacing.
double acpia_check(const Leaf& leaf);

// (R1, t1) = (R0, t0) o M^{-1} per node, M the Ivory-affinity motion of the
// configuration; rolls the partner patch x0(u1, v1) onto the leaf.  Fills
// leaf.rolling and returns it.
const std::vector<RigidMotion>& inversion_rolling(const Seed& seed,
                                                  Leaf& leaf);

struct WeingartenReport {
  bool degenerate = false;  // leaf collapsed to a curve; criterion skipped
  double closed_form = 0;   // max |K0 K1 A^4 |N0|^4 |N1|^4 - 1|
  double criterion = 0;     // max relative Ribaucour residual, FD curvatures
};

// Ribaucour criterion K(x^0) K(x^1) = sin^4(beta) / d^4, beta the angle
// between the tangent planes and d the distance between corresponding
// points; curvatures by finite differences on the two point grids.  The
// closed form K0 K1 = 1 / (A^4 |N_hat_0|^4 |N_hat_1|^4) is checked at the
// exact chart values.
WeingartenReport weingarten_check(const Seed& seed, const Leaf& leaf);

}  // namespace qdef
