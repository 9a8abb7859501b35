#pragma once

#include <vector>

#include "resloco/gait.hpp"
#include "resloco/qp.hpp"
#include "resloco/srbm.hpp"
#include "resloco/types.hpp"

namespace resloco {

struct MpcConfig {
  int horizon = 10;
  double dt = 0.01;
  Vec3 w_p = Vec3(20.0, 20.0, 20.0);
  Vec3 w_phi = Vec3(20.0, 20.0, 20.0);
  Vec3 w_v = Vec3(0.2, 0.2, 0.2);
  Vec3 w_omega = Vec3(0.2, 0.2, 0.2);
  double w_u = 1e-5;
  double friction = 0.6;
  double f_min = 0.0;
  double f_max = 235.0;  // ~2 M g per leg
  double standing_height = 0.28;
  double update_rate = 100.0;
  QpSolverConfig qp = [] {
    QpSolverConfig c;
    c.polish = false;  // 1e-6 residuals are ample at the control rate
    return c;
  }();

  Vec12 state_weights() const {
    Vec12 w;
    w << w_p, w_phi, w_v, w_omega;
    return w;
  }
  bool valid() const {
    return horizon >= 1 && dt > 0.0 && state_weights().minCoeff() >= 0.0 &&
           w_u >= 0.0 && friction > 0.0 && f_min >= 0.0 && f_max > f_min;
  }
};

// desired states at horizon steps 0..N (N+1 entries); step 0 is the current
// desired state, steps 1..N enter the tracking cost
std::vector<Vec12> build_reference(const BodyState& x, const Vec3& cmd,
                                   const MpcConfig& cfg,
                                   double base_height = 0.0);

// Condensed QP over stacked forces U. Decision layout: 12 per step
// (3 per leg, legs in FR FL RR RL order), steps consecutive. Constraint
// layout: 5 rows per leg per step; stance legs get 4 friction-pyramid rows
// plus the normal-force box, swing legs get 3 zero pins and 2 inert rows.
QpProblem assemble_qp(const LinearizedModel& model, const Vec12& f_res,
                      const BodyState& x0, const std::vector<Vec12>& reference,
                      const ContactTable& contacts, const MpcConfig& cfg);

struct MpcSolution {
  std::vector<GrfInput> forces;      // horizon force plan
  std::vector<Vec12> predicted;      // x_1..x_N under the linear model
  QpStatus qp_status = QpStatus::kMaxIter;
  int qp_iterations = 0;
  bool fallback = false;  // true when a failed solve reused the shifted plan
  double solve_seconds = 0.0;
};

// Horizon controller with warm starting and shifted-plan fallback. One
// instance per robot; not safe for concurrent use.
class MpcController {
 public:
  explicit MpcController(const MpcConfig& cfg, const SrbmParams& params)
      : cfg_(cfg), params_(params) {}

  MpcSolution solve(const BodyState& x0, const Vec3& cmd,
                    const ContactTable& contacts,
                    const std::array<Vec3, kNumLegs>& feet, const Vec12& f_res,
                    double base_height = 0.0);

  void reset();
  const MpcConfig& config() const { return cfg_; }
  MpcConfig& config() { return cfg_; }
  const SrbmParams& params() const { return params_; }

 private:
  MpcConfig cfg_;
  SrbmParams params_;
  QpSolver solver_;
  VecX prev_z_;
  VecX prev_y_;
  bool has_prev_ = false;
};

MpcConfig load_mpc_config(const Config& cfg);

}  // namespace resloco
