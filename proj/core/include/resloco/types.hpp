#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>

namespace resloco {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec12 = Eigen::Matrix<double, 12, 1>;
using VecX = Eigen::VectorXd;
using Mat3 = Eigen::Matrix3d;
using Mat12 = Eigen::Matrix<double, 12, 12>;
using MatX = Eigen::MatrixXd;

inline constexpr int kNumLegs = 4;
inline constexpr int kStateDim = 12;
inline constexpr int kGrfDim = 12;
inline constexpr int kJointsPerLeg = 3;
inline constexpr int kNumJoints = 12;

// pitch must stay clear of the Euler-rate singularity at +-pi/2
inline constexpr double kPitchGuard = 1e-3;

// leg indexing convention used everywhere: front-right, front-left,
// rear-right, rear-left
enum LegIndex : int { kFR = 0, kFL = 1, kRR = 2, kRL = 3 };

struct SingularityError : std::domain_error {
  using std::domain_error::domain_error;
};

// body state x = [p, phi, v, omega]; phi is ZYX Euler [roll, pitch, yaw],
// omega expressed in the body frame
struct BodyState {
  Vec3 p = Vec3::Zero();
  Vec3 phi = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 omega = Vec3::Zero();

  Vec12 to_vector() const {
    Vec12 x;
    x << p, phi, v, omega;
    return x;
  }
  static BodyState from_vector(const Vec12& x) {
    BodyState s;
    s.p = x.segment<3>(0);
    s.phi = x.segment<3>(3);
    s.v = x.segment<3>(6);
    s.omega = x.segment<3>(9);
    return s;
  }
  bool finite() const { return to_vector().allFinite(); }
};

// stacked world-frame ground reaction forces, one 3-vector per leg
struct GrfInput {
  std::array<Vec3, kNumLegs> f{Vec3::Zero(), Vec3::Zero(), Vec3::Zero(),
                               Vec3::Zero()};

  Vec12 stacked() const {
    Vec12 u;
    for (int i = 0; i < kNumLegs; ++i) u.segment<3>(3 * i) = f[i];
    return u;
  }
  static GrfInput from_stacked(const Vec12& u) {
    GrfInput g;
    for (int i = 0; i < kNumLegs; ++i) g.f[i] = u.segment<3>(3 * i);
    return g;
  }
};

struct SrbmParams {
  double mass = 12.0;
  Mat3 inertia = (Eigen::Vector3d(0.08, 0.28, 0.30)).asDiagonal();
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);
  std::array<Vec3, kNumLegs> foot_positions{Vec3::Zero(), Vec3::Zero(),
                                            Vec3::Zero(), Vec3::Zero()};

  bool valid() const {
    if (!(mass > 0.0)) return false;
    if ((inertia - inertia.transpose()).lpNorm<Eigen::Infinity>() > 1e-9)
      return false;
    Eigen::SelfAdjointEigenSolver<Mat3> es(inertia);
    return es.eigenvalues().minCoeff() > 0.0;
  }
};

// discrete model x_{k+1} = A x_k + B u_k + affine, valid near the
// linearization point (phi0, foot_positions)
struct LinearizedModel {
  Mat12 A = Mat12::Identity();
  Eigen::Matrix<double, kStateDim, kGrfDim> B =
      Eigen::Matrix<double, kStateDim, kGrfDim>::Zero();
  Vec12 affine = Vec12::Zero();
  double dt = 0.0;
  Vec3 phi0 = Vec3::Zero();
  Vec3 p0 = Vec3::Zero();
  std::array<Vec3, kNumLegs> foot_positions{Vec3::Zero(), Vec3::Zero(),
                                            Vec3::Zero(), Vec3::Zero()};
};

}  // namespace resloco
