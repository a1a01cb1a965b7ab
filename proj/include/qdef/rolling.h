#pragma once

// Flat connection forms in the tangent bundle of a confocal member, frame
// integration (R^{-1} dR = omega with dt = -dR x0), ruled-seed generation,
// and planar curve-on-curve rolling.
//
// omega = P du0 + Q dv0 with tangential vector coefficients; in the chart
// basis omega / B0 = (o_uu x_u - o_uv x_v) du0 + (o_vu x_u - o_uu x_v) dv0
// (equality of the two o_uu slots is the symmetry s_12 = s_21 of the
// difference of second fundamental forms).  Flatness:
//   d^omega + 1/2 omega x^ omega = 0,
// discretized as  d_u Q - d_v P + P x Q  per interior node.

#include <functional>
#include <utility>
#include <vector>

#include "qdef/quadric.h"

namespace qdef {

struct GridSpec {
  int nu = 0, nv = 0;
  double u_lo = 0, u_hi = 0;
  double v_lo = 0, v_hi = 0;

  double du() const { return (u_hi - u_lo) / (nu - 1); }
  double dv() const { return (v_hi - v_lo) / (nv - 1); }
  double u(int i) const { return u_lo + i * du(); }
  double v(int j) const { return v_lo + j * dv(); }
  int index(int i, int j) const { return i * nv + j; }
};

struct ConnectionForm {
  ConfocalFamily fam;
  GridSpec grid;
  Eigen::ArrayXXd o_uu, o_uv, o_vu;  // nu x nv; boundary rows replicate
};

// Vector-valued 1-form evaluated off-grid: omega(u, v) = (P, Q).
using Omega = std::function<std::pair<Vec3, Vec3>(double, double)>;

struct Seed {
  ConfocalFamily fam;
  GridSpec grid;
  std::vector<Vec3> x;               // deformed points, index(i, j)
  std::vector<RigidMotion> motion;   // node motions with motion(x0) = x
  std::function<double(double)> phi; // ruling profile (empty if not ruled)
};

// Difference-of-shape connection components by central differences of the
// seed and chart grids (identical stencils, so an undeformed seed gives an
// exactly zero form).
ConnectionForm connection_from_shapes(const Seed& seed);

// |d_u Q - d_v P + P x Q| per node; zero on the one-node border.
Eigen::ArrayXXd flatness_residual(const ConnectionForm& form);

// The form P = 0, Q = phi(v) * ruling_u_dir(fam, 0, v); flat for any profile.
Omega ruled_omega(const ConfocalFamily& fam, std::function<double(double)> phi);

// Bilinear interpolation of the stored components.
Omega omega_from_connection(const ConnectionForm& form);

// RK4 along the polyline (one step per segment), rotation re-projected by
// polar decomposition every 64 steps and at the end; drift beyond 1e-4
// before a projection raises StepTooLarge.  dt = -dR x0(u, v) along the way.
std::vector<RigidMotion> integrate_frame(const ConfocalFamily& fam,
                                         const Omega& omega,
                                         const std::vector<Vec2>& path,
                                         const RigidMotion& init);

// Rotate the member about its own u-rulings at rate phi(v): frames solve
// R' = R alpha(phi d), t' = -R' x0(u*, v) with the anchor u* = v + 1
// (Central) or u* = 0 (Paraboloid), then x = R x0 + t node-wise.
Seed ruled_seed(const ConfocalFamily& fam, std::function<double(double)> phi,
                const GridSpec& grid);

struct PlanarMotion {
  double angle = 0;
  Vec2 t = Vec2::Zero();

  Mat2 rot() const {
    Mat2 R;
    R << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return R;
  }
  Vec2 operator()(const Vec2& p) const { return rot() * p + t; }
};

struct CurveSample {
  double s = 0;  // common arclength parameter
  Vec2 c = Vec2::Zero();
  Vec2 dc = Vec2::Zero();  // dc/ds
};

// Roll c0 on c1 (both sampled at the same arclength values): R dc0 = dc1,
// t = c1 - R c0, angle unwrapped continuously along the motion.
std::vector<PlanarMotion> roll_curves(const std::vector<CurveSample>& c0,
                                      const std::vector<CurveSample>& c1);

}  // namespace qdef
