#pragma once
// Bianchi permutability: completion of tangency squares, the closure
// homography in the leaf parameters, superposition of two Backlund leaves,
// triple (Moebius) diagrams and discrete deformations of quadrics.

#include <array>
#include <cstdint>
#include <vector>

#include "qdef/backlund.h"
#include "qdef/quadric.h"
#include "qdef/rolling.h"
#include "qdef/types.h"

namespace qdef {

// The square closes in exactly two ways; "Same" is the one whose ruling
// cross-ratio against [x_{z1}(p0) x_{z2}(p3)] equals z1/z2.  On "Flipped"
// the consistent ruling signature changes family at vertices 2 and 3.
enum class Branch : std::uint8_t { Same, Flipped };

// Completed tangency square.  Vertex 0 is the base point, vertex 1 its
// partner at z1, vertex 2 its partner at z2, vertex 3 the common partner
// of 1 (at z2) and 2 (at z1).  Opposite edges live on the same member.
struct BianchiQuad {
  ConfocalFamily fam;
  double z1 = 0, z2 = 0;
  double u0 = 0, v0 = 0;
  double u1 = 0, v1 = 0;
  double u2 = 0, v2 = 0;
  double u3 = 0, v3 = 0;
  Branch branch = Branch::Same;

  Vec2 p(int j) const;                // chart coordinates of vertex j
  double edge_z(int j, int k) const;  // member carrying edge (j,k)

  // Worst of the eight tangency relations, scaled by |V||N|.
  double tangency_residual() const;

  // Per-vertex ruling signs, +1 = u-family.  A signature is admissible
  // for the quad's branch iff eps1*eps2 = +1 (Same) / -1 (Flipped) and
  // eps3 = eps0*eps1*eps2 (so the product over the square is +1).
  static bool signature_valid(const std::array<int, 4>& eps, Branch b);

  // Residual of (R01 t01)(R20 t20) = (R31 t31)(R23 t23) under eps.
  double cocycle_residual(const std::array<int, 4>& eps) const;

  // Algebraic form of the ruling cross-ratio on [x_{z1}(p0) x_{z2}(p3)];
  // equals z1/z2 on branch Same.
  double cross_ratio() const;
};

// Scalar cross-ratio, pinned convention
//   cr(p1,p2;p3,p4) = ((p1-p3)(p2-p4)) / ((p2-p3)(p1-p4)).
double cross_ratio(double p1, double p2, double p3, double p4);

// Parameter s with a + s*d closest to the line b + t*w; throws
// NoIntersection if the lines are skew beyond tol (relative to |d|).
double intersect_param(const Vec3& a, const Vec3& d, const Vec3& b,
                       const Vec3& w, double tol = 1e-6);

// Cross-ratio of the four points cut on the line [x_{z1}(p0) x_{z2}(p3)]
// by its endpoints, the ruling at x_0(p1) and the moved ruling at x_0(p2)
// (transported by the motion (R01 t01)(R20 t20)).
double ruling_cross_ratio(const BianchiQuad& q);

// Close the square over the two given tangency partners of (u0,v0).
// Eliminating u3 from the two bilinear tangency conditions leaves a
// quadratic in v3 whose roots are the two branches; the requested one is
// identified by its cross-ratio and Newton-polished.
BianchiQuad sitc_complete(const ConfocalFamily& fam, double z1, double z2,
                          double u0, double v0, double u1, double v1,
                          double u2, double v2, Branch branch = Branch::Same,
                          double tol = 1e-9);

// Coefficients of the closure relation linking the v-parameters of a
// completed square at fixed (z1,z2).  The relation is separately linear
// in each v_j and invariant under (v0<->v3)(v1<->v2); basis order:
//   { 1, v0+v3, v1+v2, v0*v3, v1*v2, v0*v1+v2*v3, v0*v2+v1*v3,
//     v0*v1*v2*v3 }.
struct HomographyCoeffs {
  ConfocalFamily fam;
  double z1 = 0, z2 = 0;
  Eigen::Matrix<double, 8, 1> c = Eigen::Matrix<double, 8, 1>::Zero();
  double fit_residual = 0;  // worst in-sample |c . basis|

  static Eigen::Matrix<double, 8, 1> basis(double v0, double v1, double v2,
                                           double v3);
  double eval(double v0, double v1, double v2, double v3) const;
  // Solve the relation for v3 given the other three (it is linear in v3).
  double v3_of(double v0, double v1, double v2) const;
};

// Least-squares nullvector fit over closure samples (all on one branch).
// Needs >= 16 samples in general position; throws RankDeficientSamples
// when the sample matrix leaves more than a one-dimensional nullspace.
HomographyCoeffs homography_fit(const ConfocalFamily& fam, double z1,
                                double z2,
                                const std::vector<BianchiQuad>& samples);

// Trace moments of sqrt(R_z) entering the closed-form closure relation:
//   m2(z)   second elementary symmetric function of the sqrt eigenvalues,
//           divided by z;
//   m3(z1,z2) mixed third moment of the pair, with the pole in z2 - z1
//           removed;
//   a       the chart anisotropy constant multiplying the affine part.
double moment_m2(const ConfocalFamily& fam, double z);
double moment_m3(const ConfocalFamily& fam, double z1, double z2);
double moment_a(const ConfocalFamily& fam);

// Candidate closure coefficients assembled from the moments.  Whether
// these match homography_fit in the real ruling chart is checked
// empirically in the tests, not assumed here.
HomographyCoeffs homography_moment_form(const ConfocalFamily& fam, double z1,
                                        double z2);

// Superposition of two leaves of the same seed.
struct BptReport {
  double max_two_way_gap = 0;   // |x3 via leaf1 - x3 via leaf2|
  double max_rolling_gap = 0;   // same comparison for the new rolling
  double max_cocycle = 0;       // edge-motion co-cycle per node
  double max_ratio_gap = 0;     // invariant-ratio necessary condition
  double max_tangency = 0;      // worst quad tangency residual
};

// Close every node's tangency square and assemble the third leaf without
// further integration.  leaf1, leaf2 must transform the same seed and
// carry their rollings (inversion_rolling).  The result is tagged with
// leaf2's z (it is leaf2's transform applied on top of leaf1).
Leaf bpt_apply(const Seed& seed, const Leaf& leaf1, const Leaf& leaf2,
               BptReport* report = nullptr, double tol = 1e-9);

// Triple diagram: 2^3 vertices indexed by the subset of {z1,z2,z3}
// applied (bit k-1 <-> z_k).  Built from the base point, the three
// v-parameters of its partners and the branch of each face at the base.
struct Mobius3 {
  ConfocalFamily fam;
  std::array<double, 3> z{};
  std::array<double, 8> u{}, v{};
  std::array<Branch, 3> branches{};  // faces (0;1,2), (0;1,4), (0;2,4)
  double v7_spread = 0;  // max gap between the three completions of 7

  Vec2 p(int j) const { return Vec2(u[j], v[j]); }
  // Signed-ratio product of the three ruling intersections with the
  // lines [x_{z2}(p3) x_{z3}(p5)], [x_{z1}(p5) x_{z2}(p6)],
  // [x_{z3}(p6) x_{z1}(p3)]; equals 1 by the converse Menelaus theorem.
  double menelaus_product() const;
};

// branches[2] (face (0;2,4)) is determined by the other two through the
// ruling signature; an inconsistent triple throws InvalidSignature.
Mobius3 mobius3(const ConfocalFamily& fam, double z1, double z2, double z3,
                double u0, double v0, double v1, double v2, double v4,
                const std::array<Branch, 3>& branches, double tol = 1e-9);

// Initial cross for a lattice fill: chart point of the corner plus the
// v-parameters of the successive partners along the two arms.
struct DDQCross {
  double u0 = 0, v0 = 0;
  std::vector<double> v_right;  // vertex (j+1,0) for j = 0..J-2
  std::vector<double> v_up;     // vertex (0,k+1) for k = 0..K-2
};

// Discrete deformation lattice.  Vertex (j,k) carries the chart point of
// the undeformed quadric, the accumulated rolling motion, and the facet
// (point, unit normal) it maps to.  Horizontal edges (j,k)-(j+1,k) live
// on member zs[j], vertical ones on zps[k].
struct DDQLattice {
  ConfocalFamily fam;
  std::vector<double> zs, zps;  // spectral sequences, sizes J-1 and K-1
  int J = 0, K = 0;             // vertex counts
  std::vector<double> us, vs;   // chart coordinates, row-major j*K+k
  std::vector<RigidMotion> motion;  // accumulated rolling per vertex
  std::vector<Vec3> point;          // facet point
  std::vector<Vec3> normal;         // facet unit normal
  double max_fill_conflict = 0;     // worst motion gap met during fill

  int index(int j, int k) const { return j * K + k; }
  // rmpia along an edge, oriented away from vertex (j,k).
  RigidMotion edge_motion(int j, int k, bool horizontal) const;
  // Loop of the four edge motions around the cell with corner (j,k).
  double cell_cocycle_residual(int j, int k) const;
  // Residual of the coplanarity of the four rotated neighbour normals.
  double planarity_residual(int j, int k) const;
  // Triple product of the rotated normal frame at (j,k).
  double gauss_identity_residual(int j, int k) const;
  // Discrete Gauss curvature of the cell at (j,k); equals the smooth
  // curvature of the chart point exactly.
  double discrete_gauss_curvature(int j, int k) const;
  // Distance of the four neighbour points from the facet plane at (j,k).
  double facet_tangency_residual(int j, int k) const;
};

DDQLattice ddq_build(const ConfocalFamily& fam, const std::vector<double>& zs,
                     const std::vector<double>& zps, const DDQCross& cross,
                     double tol = 1e-9);

}  // namespace qdef
