#include "resloco/mpc.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace resloco {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

std::vector<Vec12> build_reference(const BodyState& x, const Vec3& cmd,
                                   const MpcConfig& cfg, double base_height) {
  std::vector<Vec12> refs(cfg.horizon + 1);
  double yaw = x.phi.z();
  Vec2 pos(x.p.x(), x.p.y());
  for (int k = 0; k <= cfg.horizon; ++k) {
    Vec12 r = Vec12::Zero();
    const double cy = std::cos(yaw), sy = std::sin(yaw);
    const Vec2 v_world(cy * cmd[0] - sy * cmd[1], sy * cmd[0] + cy * cmd[1]);
    r.segment<2>(0) = pos;
    r[2] = base_height + cfg.standing_height;
    r[5] = yaw;
    r.segment<2>(6) = v_world;
    r[11] = cmd[2];
    refs[k] = r;
    pos += cfg.dt * v_world;
    yaw += cfg.dt * cmd[2];
  }
  return refs;
}

QpProblem assemble_qp(const LinearizedModel& model, const Vec12& f_res,
                      const BodyState& x0, const std::vector<Vec12>& reference,
                      const ContactTable& contacts, const MpcConfig& cfg) {
  const int n_steps = cfg.horizon;
  if (static_cast<int>(contacts.size()) < n_steps ||
      static_cast<int>(reference.size()) < n_steps + 1)
    throw std::invalid_argument("assemble_qp: table sizes below horizon");

  const int n = kGrfDim * n_steps;
  const Vec12 wx = cfg.state_weights();
  const Vec12 d_step = model.affine + cfg.dt * f_res;

  // A = I + dt K with K nilpotent (K^2 = 0), so A^m B = B + m dt K B and the
  // condensed Hessian reduces to four 12x12 kernels with scalar index sums.
  const Eigen::Matrix<double, 12, 12>& b = model.B;
  Eigen::Matrix<double, 12, 12> kb;  // (A - I) * B, i.e. dt K B
  kb.setZero();
  kb.block<3, 12>(0, 0) = model.A.block<3, 3>(0, 6) * b.block<3, 12>(6, 0);
  kb.block<3, 12>(3, 0) = model.A.block<3, 3>(3, 9) * b.block<3, 12>(9, 0);

  const Eigen::Matrix<double, 12, 12> qb = wx.asDiagonal() * b;
  const Eigen::Matrix<double, 12, 12> qkb = wx.asDiagonal() * kb;
  const Eigen::Matrix<double, 12, 12> p0 = b.transpose() * qb;
  const Eigen::Matrix<double, 12, 12> p1 = b.transpose() * qkb;
  const Eigen::Matrix<double, 12, 12> p2 = kb.transpose() * qb;
  const Eigen::Matrix<double, 12, 12> p3 = kb.transpose() * qkb;

  QpProblem prob;
  prob.H = MatX::Zero(n, n);
  for (int j1 = 0; j1 < n_steps; ++j1) {
    for (int j2 = j1; j2 < n_steps; ++j2) {
      double c0 = 0, c1 = 0, c2 = 0, c3 = 0;
      for (int k = j2; k < n_steps; ++k) {
        const double m1 = static_cast<double>(k - j1);
        const double m2 = static_cast<double>(k - j2);
        c0 += 1.0;
        c1 += m2;
        c2 += m1;
        c3 += m1 * m2;
      }
      Eigen::Matrix<double, 12, 12> blk =
          2.0 * (c0 * p0 + c1 * p1 + c2 * p2 + c3 * p3);
      prob.H.block<12, 12>(12 * j1, 12 * j2) = blk;
      if (j2 > j1)
        prob.H.block<12, 12>(12 * j2, 12 * j1) = blk.transpose();
    }
  }
  prob.H.diagonal().array() += 2.0 * cfg.w_u;

  // free response error e_k = x_free(k+1) - x*(k+1)
  std::vector<Vec12> err(n_steps);
  Vec12 x_free = x0.to_vector();
  for (int k = 0; k < n_steps; ++k) {
    x_free = model.A * x_free + d_step;
    err[k] = x_free - reference[k + 1];
  }
  // g_j = 2 [B' sum_k Q e_k + dt (K B)' ... ] via suffix sums
  prob.g = VecX::Zero(n);
  Vec12 suffix = Vec12::Zero();
  Vec12 suffix_k = Vec12::Zero();
  for (int j = n_steps - 1; j >= 0; --j) {
    const Vec12 qe = wx.asDiagonal() * err[j];
    suffix += qe;
    suffix_k += static_cast<double>(j) * qe;
    // sum_{k>=j} (k - j) Q e_k = suffix_k - j * suffix
    prob.g.segment<12>(12 * j) =
        2.0 * (b.transpose() * suffix +
               kb.transpose() * (suffix_k - static_cast<double>(j) * suffix));
  }

  // constraints: 5 rows per leg per step
  const int m = 5 * kNumLegs * n_steps;
  prob.C = MatX::Zero(m, n);
  prob.lb = VecX::Zero(m);
  prob.ub = VecX::Zero(m);
  for (int k = 0; k < n_steps; ++k) {
    for (int leg = 0; leg < kNumLegs; ++leg) {
      const int row = 5 * (kNumLegs * k + leg);
      const int col = 12 * k + 3 * leg;
      if (contacts[k][leg]) {
        prob.C(row + 0, col + 0) = 1.0;
        prob.C(row + 0, col + 2) = -cfg.friction;
        prob.lb[row + 0] = -kInf;
        prob.ub[row + 0] = 0.0;
        prob.C(row + 1, col + 0) = 1.0;
        prob.C(row + 1, col + 2) = cfg.friction;
        prob.lb[row + 1] = 0.0;
        prob.ub[row + 1] = kInf;
        prob.C(row + 2, col + 1) = 1.0;
        prob.C(row + 2, col + 2) = -cfg.friction;
        prob.lb[row + 2] = -kInf;
        prob.ub[row + 2] = 0.0;
        prob.C(row + 3, col + 1) = 1.0;
        prob.C(row + 3, col + 2) = cfg.friction;
        prob.lb[row + 3] = 0.0;
        prob.ub[row + 3] = kInf;
        prob.C(row + 4, col + 2) = 1.0;
        prob.lb[row + 4] = cfg.f_min;
        prob.ub[row + 4] = cfg.f_max;
      } else {
        // swing: pin all three force components, two rows stay inert
        for (int a = 0; a < 3; ++a) prob.C(row + a, col + a) = 1.0;
        // rows row+3, row+4 are zero with [0, 0] bounds
      }
    }
  }
  return prob;
}

MpcSolution MpcController::solve(const BodyState& x0, const Vec3& cmd,
                                 const ContactTable& contacts,
                                 const std::array<Vec3, kNumLegs>& feet,
                                 const Vec12& f_res, double base_height) {
  const auto t_start = std::chrono::steady_clock::now();
  MpcSolution out;

  const LinearizedModel model =
      linearize_discretize(x0, feet, params_, cfg_.dt);
  const auto reference = build_reference(x0, cmd, cfg_, base_height);
  QpProblem prob = assemble_qp(model, f_res, x0, reference, contacts, cfg_);

  const int n = prob.num_vars();
  const int m = prob.num_constraints();
  VecX warm_z, warm_y;
  const VecX* wz = nullptr;
  const VecX* wy = nullptr;
  if (has_prev_ && prev_z_.size() == n && prev_y_.size() == m) {
    warm_z = warm_start_shift(prev_z_, cfg_.horizon, kGrfDim);
    warm_y = warm_start_shift(prev_y_, cfg_.horizon, 5 * kNumLegs);
    wz = &warm_z;
    wy = &warm_y;
  }

  QpSolution sol = solver_.solve(prob, cfg_.qp, wz, wy);
  out.qp_status = sol.status;
  out.qp_iterations = sol.iterations;

  VecX plan;
  if (sol.status == QpStatus::kSolved) {
    plan = sol.z;
    prev_z_ = sol.z;
    prev_y_ = sol.y;
    has_prev_ = true;
  } else if (has_prev_ && prev_z_.size() == n) {
    // reuse the previous plan shifted one step
    plan = warm_start_shift(prev_z_, cfg_.horizon, kGrfDim);
    out.fallback = true;
  } else {
    plan = sol.z;
    out.fallback = true;
  }

  // enforce contact consistency and the pyramid on whatever is returned
  for (int k = 0; k < cfg_.horizon; ++k) {
    for (int leg = 0; leg < kNumLegs; ++leg) {
      Eigen::Ref<Vec3> u = plan.segment<3>(12 * k + 3 * leg);
      if (!contacts[k][leg]) {
        u.setZero();
        continue;
      }
      if (out.fallback) {
        u[2] = std::min(std::max(u[2], cfg_.f_min), cfg_.f_max);
        const double t_max = cfg_.friction * u[2];
        u[0] = std::min(std::max(u[0], -t_max), t_max);
        u[1] = std::min(std::max(u[1], -t_max), t_max);
      }
    }
  }

  out.forces.resize(cfg_.horizon);
  for (int k = 0; k < cfg_.horizon; ++k)
    out.forces[k] = GrfInput::from_stacked(plan.segment<12>(12 * k));

  const Vec12 d_step = model.affine + cfg_.dt * f_res;
  out.predicted.resize(cfg_.horizon);
  Vec12 x = x0.to_vector();
  for (int k = 0; k < cfg_.horizon; ++k) {
    x = model.A * x + model.B * plan.segment<12>(12 * k) + d_step;
    out.predicted[k] = x;
  }

  out.solve_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return out;
}

void MpcController::reset() {
  has_prev_ = false;
  prev_z_.resize(0);
  prev_y_.resize(0);
}

MpcConfig load_mpc_config(const Config& cfg) {
  MpcConfig m;
  m.horizon = cfg.get_int("mpc.horizon", m.horizon);
  m.dt = cfg.get_double("mpc.dt", m.dt);
  auto read3 = [&](const std::string& key, Vec3 fallback) {
    if (!cfg.has(key)) return fallback;
    auto v = cfg.get_vector(key);
    if (v.size() == 1) return Vec3(v[0], v[0], v[0]);
    if (v.size() != 3)
      throw std::runtime_error(key + " needs 1 or 3 entries");
    return Vec3(v[0], v[1], v[2]);
  };
  m.w_p = read3("mpc.w_p", m.w_p);
  m.w_phi = read3("mpc.w_phi", m.w_phi);
  m.w_v = read3("mpc.w_v", m.w_v);
  m.w_omega = read3("mpc.w_omega", m.w_omega);
  m.w_u = cfg.get_double("mpc.w_u", m.w_u);
  m.friction = cfg.get_double("mpc.friction", m.friction);
  m.f_min = cfg.get_double("mpc.f_min", m.f_min);
  m.f_max = cfg.get_double("mpc.f_max", m.f_max);
  m.standing_height = cfg.get_double("mpc.standing_height", m.standing_height);
  m.update_rate = cfg.get_double("mpc.update_rate", m.update_rate);
  m.qp.eps_abs = cfg.get_double("mpc.qp_eps", m.qp.eps_abs);
  m.qp.max_iterations = cfg.get_int("mpc.qp_max_iterations",
                                    m.qp.max_iterations);
  if (!m.valid()) throw std::runtime_error("invalid mpc config");
  return m;
}

}  // namespace resloco
