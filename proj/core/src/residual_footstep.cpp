#include "resloco/residual_footstep.hpp"

#include <stdexcept>

namespace resloco {

RfAction RfAction::from_vector(const VecX& a) {
  if (a.size() != kRfActionDim)
    throw std::invalid_argument("RfAction needs 16 entries");
  RfAction out;
  for (int i = 0; i < kNumLegs; ++i) out.foothold[i] = a.segment<3>(3 * i);
  out.phase = a.segment<4>(12);
  return out;
}

VecX RfAction::to_vector() const {
  VecX a(kRfActionDim);
  for (int i = 0; i < kNumLegs; ++i) a.segment<3>(3 * i) = foothold[i];
  a.segment<4>(12) = phase;
  return a;
}

void JointHistory::push(const VecX& theta, const VecX& theta_dot) {
  Eigen::Matrix<double, 24, 1> f;
  f.segment<12>(0) = theta;
  f.segment<12>(12) = theta_dot;
  frames_.push_front(f);
  while (frames_.size() > kRfHistory + 1) frames_.pop_back();
}

Eigen::Matrix<double, 24, 1> JointHistory::frame(int back) const {
  if (back < static_cast<int>(frames_.size())) return frames_[back];
  return Eigen::Matrix<double, 24, 1>::Zero();
}

Eigen::Matrix<double, kRfObsDim, 1> build_rf_observation(
    const Vec3& cmd, const Vec3& phi, const Vec3& omega,
    const JointHistory& joints, const std::array<Vec3, kNumLegs>& heur_delta,
    const Vec4& phases, const std::array<bool, kNumLegs>& planned_contact,
    const VecX& tau) {
  Eigen::Matrix<double, kRfObsDim, 1> o;
  int at = 0;
  o.segment<3>(at) = cmd;
  at += 3;
  o.segment<3>(at) = phi;
  at += 3;
  o.segment<3>(at) = omega;
  at += 3;
  for (int k = 0; k <= kRfHistory; ++k) {
    o.segment<24>(at) = joints.frame(k);
    at += 24;
  }
  for (int i = 0; i < kNumLegs; ++i) {
    o.segment<3>(at) = heur_delta[i];
    at += 3;
  }
  for (int i = 0; i < kNumLegs; ++i) o[at++] = phases[i];
  for (int i = 0; i < kNumLegs; ++i)
    o[at++] = planned_contact[i] ? 1.0 : 0.0;
  o.segment<12>(at) = tau;
  at += 12;
  return o;
}

}  // namespace resloco
