#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace qdef {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// Numerical guard rails on unit-scale data.  Call sites may override where a
// signature allows it; these are the documented defaults.
inline constexpr double eps_sing = 1e-6;      // ruling-chart pole guard on |u - v|
inline constexpr double eps_deg = 1e-8;       // separation below which things count as coincident
inline constexpr double tol_default = 1e-10;  // default residual tolerance

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define QDEF_DEFINE_ERROR(NAME)                                    \
  struct NAME : Error {                                            \
    explicit NAME(const std::string& msg = "")                     \
        : Error(msg.empty() ? #NAME : std::string(#NAME ": ") + msg) {} \
  }

QDEF_DEFINE_ERROR(InvalidSignature);
QDEF_DEFINE_ERROR(DegenerateAxes);
QDEF_DEFINE_ERROR(OutOfRange);
QDEF_DEFINE_ERROR(SingularRuling);
QDEF_DEFINE_ERROR(OffQuadric);
QDEF_DEFINE_ERROR(DegeneratePoint);
QDEF_DEFINE_ERROR(ComplexRoots);
QDEF_DEFINE_ERROR(DegenerateFrame);
QDEF_DEFINE_ERROR(DegenerateHomography);
QDEF_DEFINE_ERROR(NotInTangency);
QDEF_DEFINE_ERROR(GridTooCoarse);
QDEF_DEFINE_ERROR(StepTooLarge);
QDEF_DEFINE_ERROR(ArcLengthMismatch);
QDEF_DEFINE_ERROR(RicattiBlowup);
QDEF_DEFINE_ERROR(SingularDelta);
QDEF_DEFINE_ERROR(NoRealBranch);
QDEF_DEFINE_ERROR(NewtonDivergence);
QDEF_DEFINE_ERROR(RankDeficientSamples);
QDEF_DEFINE_ERROR(LatticeConflict);
QDEF_DEFINE_ERROR(RootCollision);
QDEF_DEFINE_ERROR(NoIntersection);
QDEF_DEFINE_ERROR(OrderingViolation);
QDEF_DEFINE_ERROR(BadLambda);
QDEF_DEFINE_ERROR(FirstRowVanishing);
QDEF_DEFINE_ERROR(SingularClosure);
QDEF_DEFINE_ERROR(BadSchema);
QDEF_DEFINE_ERROR(CheckFailure);
QDEF_DEFINE_ERROR(IOError);

#undef QDEF_DEFINE_ERROR

// Proper rigid motion x |-> R x + t.  Composition acts right-to-left, like the
// matrices it is made of: (M1 * M2)(x) = M1(M2(x)).
struct RigidMotion {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  Vec3 operator()(const Vec3& x) const { return R * x + t; }

  RigidMotion operator*(const RigidMotion& o) const {
    return {R * o.R, R * o.t + t};
  }

  RigidMotion inverse() const {
    Mat3 Rt = R.transpose();
    return {Rt, -(Rt * t)};
  }

  double orthogonality_defect() const {
    return (R.transpose() * R - Mat3::Identity()).norm();
  }

  // Frobenius distance to another motion, translation included; the scale of
  // t is left to the caller's data.
  double gap(const RigidMotion& o) const {
    return std::sqrt((R - o.R).squaredNorm() + (t - o.t).squaredNorm());
  }

  static RigidMotion identity() { return {}; }
};

// Nearest orthogonal matrix (polar factor).  Used to bleed off integration
// drift; input must already be close to orthogonal for the result to be a
// rotation of the same handedness.
template <class Mat>
Mat polar_rotation(const Mat& M) {
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace qdef
