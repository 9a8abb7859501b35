#pragma once

#include <deque>

#include "resloco/types.hpp"

namespace resloco {

inline constexpr int kRfObsDim = 113;
inline constexpr int kRfActionDim = 16;
inline constexpr int kRfHistory = 2;  // joint history window h

// action layout: foothold residuals (4 legs x 3, m) then phase residuals (4)
struct RfAction {
  std::array<Vec3, kNumLegs> foothold = {Vec3::Zero(), Vec3::Zero(),
                                         Vec3::Zero(), Vec3::Zero()};
  Vec4 phase = Vec4::Zero();

  static RfAction from_vector(const VecX& a);
  VecX to_vector() const;
};

struct RfBounds {
  double foothold = 0.1;   // m per axis
  double phase = 2.0 / 30.0;  // ~2x the nominal per-tick advance

  VecX as_vector() const {
    VecX b(kRfActionDim);
    for (int i = 0; i < 12; ++i) b[i] = foothold;
    for (int i = 12; i < 16; ++i) b[i] = phase;
    return b;
  }
};

// rolling (h+1)-frame joint state history, zero-padded at episode start
class JointHistory {
 public:
  void reset() { frames_.clear(); }
  void push(const VecX& theta, const VecX& theta_dot);
  // frame k back (0 = newest): [theta(12), theta_dot(12)], zeros if absent
  Eigen::Matrix<double, 24, 1> frame(int back) const;

 private:
  std::deque<Eigen::Matrix<double, 24, 1>> frames_;
};

// o_RF = [cmd(3), phi(3), omega(3), {theta, thetad} over 3 frames (72),
//         heuristic deltas (12), phases (4), planned contact (4), tau(12)]
Eigen::Matrix<double, kRfObsDim, 1> build_rf_observation(
    const Vec3& cmd, const Vec3& phi, const Vec3& omega,
    const JointHistory& joints, const std::array<Vec3, kNumLegs>& heur_delta,
    const Vec4& phases, const std::array<bool, kNumLegs>& planned_contact,
    const VecX& tau);

}  // namespace resloco
