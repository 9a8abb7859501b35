#include "resloco/qp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <vector>

namespace resloco {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double clamp(double v, double lo, double hi) {
  return std::min(std::max(v, lo), hi);
}

}  // namespace

bool QpProblem::well_formed() const {
  const int n = num_vars();
  const int m = num_constraints();
  if (H.rows() != n || H.cols() != n) return false;
  if (C.rows() != m || (m > 0 && C.cols() != n)) return false;
  if (ub.size() != m) return false;
  if ((H - H.transpose()).lpNorm<Eigen::Infinity>() > 1e-10) return false;
  for (int i = 0; i < m; ++i)
    if (!(lb[i] <= ub[i])) return false;
  return true;
}

KktResiduals kkt_residuals(const QpProblem& prob, const QpSolution& sol) {
  KktResiduals r;
  const VecX stat = prob.H * sol.z + prob.g + prob.C.transpose() * sol.y;
  r.stationarity = stat.size() ? stat.lpNorm<Eigen::Infinity>() : 0.0;
  if (prob.num_constraints() > 0) {
    const VecX cz = prob.C * sol.z;
    for (int i = 0; i < cz.size(); ++i) {
      r.primal = std::max(r.primal, std::max(prob.lb[i] - cz[i], 0.0));
      r.primal = std::max(r.primal, std::max(cz[i] - prob.ub[i], 0.0));
      // y < 0 pushes against lb, y > 0 against ub
      const double yi = sol.y[i];
      if (yi > 0.0 && std::isfinite(prob.ub[i]))
        r.complementarity =
            std::max(r.complementarity, yi * std::abs(cz[i] - prob.ub[i]));
      else if (yi < 0.0 && std::isfinite(prob.lb[i]))
        r.complementarity =
            std::max(r.complementarity, -yi * std::abs(cz[i] - prob.lb[i]));
    }
  }
  return r;
}

QpSolution QpSolver::solve(const QpProblem& prob, const QpSolverConfig& cfg,
                           const VecX* warm_z, const VecX* warm_y) {
  const int n = prob.num_vars();
  const int m = prob.num_constraints();

  if (!cfg.eliminate_fixed || m == 0)
    return solve_dense(prob, cfg, warm_z, warm_y);

  // --- presolve: pin variables fixed by single-entry equality rows ---
  std::vector<double> pinned_value(n, 0.0);
  std::vector<bool> pinned(n, false);
  std::vector<int> pin_row(n, -1);
  std::vector<int> pin_order;

  bool progress = true;
  while (progress) {
    progress = false;
    for (int r = 0; r < m; ++r) {
      int free_count = 0, free_idx = -1;
      double lo = prob.lb[r], hi = prob.ub[r];
      for (int j = 0; j < n; ++j) {
        const double c = prob.C(r, j);
        if (c == 0.0) continue;
        if (pinned[j]) {
          lo -= c * pinned_value[j];
          hi -= c * pinned_value[j];
        } else {
          ++free_count;
          free_idx = j;
        }
      }
      if (free_count == 1 && std::abs(hi - lo) < 1e-14 && std::isfinite(lo)) {
        const double c = prob.C(r, free_idx);
        pinned[free_idx] = true;
        pinned_value[free_idx] = 0.5 * (lo + hi) / c;
        pin_row[free_idx] = r;
        pin_order.push_back(free_idx);
        progress = true;
      }
    }
  }

  if (pin_order.empty()) return solve_dense(prob, cfg, warm_z, warm_y);

  // index maps for the reduced problem
  std::vector<int> free_vars;
  for (int j = 0; j < n; ++j)
    if (!pinned[j]) free_vars.push_back(j);
  const int nf = static_cast<int>(free_vars.size());

  VecX zp = VecX::Zero(n);
  for (int j = 0; j < n; ++j)
    if (pinned[j]) zp[j] = pinned_value[j];

  // rows that retain support on free variables; pin rows are dropped
  std::vector<int> kept_rows;
  for (int r = 0; r < m; ++r) {
    bool is_pin_row = false;
    for (int j : pin_order)
      if (pin_row[j] == r) is_pin_row = true;
    if (is_pin_row) continue;
    bool support = false;
    for (int j : free_vars)
      if (prob.C(r, j) != 0.0) support = true;
    if (support) kept_rows.push_back(r);
    // rows fully determined by pinned variables stay satisfied by
    // construction of the assembler; nothing to check here
  }
  const int mf = static_cast<int>(kept_rows.size());

  QpProblem red;
  red.H.resize(nf, nf);
  red.g.resize(nf);
  for (int a = 0; a < nf; ++a) {
    red.g[a] = prob.g[free_vars[a]] +
               prob.H.row(free_vars[a]).dot(zp);  // zp zero on free vars
    for (int b = 0; b < nf; ++b)
      red.H(a, b) = prob.H(free_vars[a], free_vars[b]);
  }
  red.C.resize(mf, nf);
  red.lb.resize(mf);
  red.ub.resize(mf);
  for (int a = 0; a < mf; ++a) {
    const int r = kept_rows[a];
    double shift = prob.C.row(r).dot(zp);
    red.lb[a] = prob.lb[r] - shift;
    red.ub[a] = prob.ub[r] - shift;
    for (int b = 0; b < nf; ++b) red.C(a, b) = prob.C(r, free_vars[b]);
  }

  // reduce warm starts
  VecX wz, wy;
  const VecX* wz_ptr = nullptr;
  const VecX* wy_ptr = nullptr;
  if (warm_z && warm_z->size() == n) {
    wz.resize(nf);
    for (int a = 0; a < nf; ++a) wz[a] = (*warm_z)[free_vars[a]];
    wz_ptr = &wz;
  }
  if (warm_y && warm_y->size() == m) {
    wy.resize(mf);
    for (int a = 0; a < mf; ++a) wy[a] = (*warm_y)[kept_rows[a]];
    wy_ptr = &wy;
  }

  QpSolution red_sol = solve_dense(red, cfg, wz_ptr, wy_ptr);

  // expand back to full size
  QpSolution sol;
  sol.status = red_sol.status;
  sol.iterations = red_sol.iterations;
  sol.primal_residual = red_sol.primal_residual;
  sol.dual_residual = red_sol.dual_residual;
  sol.z = zp;
  for (int a = 0; a < nf; ++a) sol.z[free_vars[a]] = red_sol.z[a];
  sol.y = VecX::Zero(m);
  for (int a = 0; a < mf; ++a) sol.y[kept_rows[a]] = red_sol.y[a];

  // recover duals of the dropped pin rows so full-problem stationarity
  // holds; reverse pin order makes the system triangular
  const VecX stat_base = prob.H * sol.z + prob.g;
  for (auto it = pin_order.rbegin(); it != pin_order.rend(); ++it) {
    const int j = *it;
    const int r = pin_row[j];
    double acc = stat_base[j];
    for (int rr = 0; rr < m; ++rr)
      if (rr != r) acc += prob.C(rr, j) * sol.y[rr];
    sol.y[r] = -acc / prob.C(r, j);
  }

  sol.objective = 0.5 * sol.z.dot(prob.H * sol.z) + prob.g.dot(sol.z);
  return sol;
}

QpSolution QpSolver::solve_dense(const QpProblem& prob,
                                 const QpSolverConfig& cfg, const VecX* warm_z,
                                 const VecX* warm_y) {
  const int n = prob.num_vars();
  const int m = prob.num_constraints();

  QpSolution sol;
  sol.z = VecX::Zero(n);
  sol.y = VecX::Zero(m);

  if (m == 0) {
    // unconstrained: single linear solve
    llt_.compute(prob.H + cfg.sigma * MatX::Identity(n, n));
    sol.z = llt_.solve(-prob.g);
    sol.status = QpStatus::kSolved;
    sol.iterations = 1;
    sol.objective = 0.5 * sol.z.dot(prob.H * sol.z) + prob.g.dot(sol.z);
    return sol;
  }

  VecX z = warm_z ? *warm_z : VecX::Zero(n);
  VecX y = warm_y ? *warm_y : VecX::Zero(m);
  VecX s = prob.C * z;
  for (int i = 0; i < m; ++i) s[i] = clamp(s[i], prob.lb[i], prob.ub[i]);

  double rho = tuned_n_ == n && tuned_rho_ > 0.0 ? tuned_rho_ : cfg.rho;
  const double sigma = cfg.sigma;
  const double alpha = cfg.over_relaxation;

  MatX kkt = prob.H + sigma * MatX::Identity(n, n) +
             rho * (prob.C.transpose() * prob.C);
  llt_.compute(kkt);

  VecX ztilde(n), stilde(m), s_relaxed(m), rhs(n);
  double best_primal = kInf;
  double prev_ratio = kInf;
  int divergence_count = 0;

  int it = 0;
  for (it = 1; it <= cfg.max_iterations; ++it) {
    rhs = sigma * z - prob.g + prob.C.transpose() * (rho * s - y);
    ztilde = llt_.solve(rhs);
    stilde.noalias() = prob.C * ztilde;

    z = alpha * ztilde + (1.0 - alpha) * z;
    s_relaxed = alpha * stilde + (1.0 - alpha) * s;
    for (int i = 0; i < m; ++i) {
      const double sv = s_relaxed[i] + y[i] / rho;
      s[i] = clamp(sv, prob.lb[i], prob.ub[i]);
      y[i] += rho * (s_relaxed[i] - s[i]);
    }

    const double r_prim = (prob.C * z - s).lpNorm<Eigen::Infinity>();
    const double r_dual = (prob.H * z + prob.g + prob.C.transpose() * y)
                              .lpNorm<Eigen::Infinity>();

    if (r_prim <= cfg.eps_abs && r_dual <= cfg.eps_abs) {
      sol.status = QpStatus::kSolved;
      sol.primal_residual = r_prim;
      sol.dual_residual = r_dual;
      break;
    }

    // divergence certificate: primal stalls well above tolerance while the
    // primal/dual ratio stays blown up
    const double ratio = r_prim / std::max(r_dual, 1e-30);
    if (r_prim > 0.999 * best_primal && ratio > 1e3 &&
        r_prim > 1e2 * cfg.eps_abs) {
      ++divergence_count;
    } else {
      divergence_count = 0;
    }
    best_primal = std::min(best_primal, r_prim);
    prev_ratio = ratio;
    if (divergence_count >= cfg.divergence_window) {
      sol.status = QpStatus::kInfeasible;
      sol.primal_residual = r_prim;
      sol.dual_residual = r_dual;
      break;
    }

    if (it % cfg.rho_adapt_interval == 0) {
      const double scale =
          std::sqrt(r_prim / std::max(r_dual, 1e-30));
      if (scale > 5.0 || scale < 0.2) {
        rho = clamp(rho * clamp(scale, 0.1, 10.0), 1e-6, 1e6);
        kkt = prob.H + sigma * MatX::Identity(n, n) +
              rho * (prob.C.transpose() * prob.C);
        llt_.compute(kkt);
      }
    }

    sol.primal_residual = r_prim;
    sol.dual_residual = r_dual;
  }

  if (it > cfg.max_iterations) {
    it = cfg.max_iterations;
    if (sol.status != QpStatus::kInfeasible) sol.status = QpStatus::kMaxIter;
  }

  tuned_rho_ = rho;
  tuned_n_ = n;

  if (sol.status == QpStatus::kSolved && cfg.polish)
    polish(prob, cfg, z, y);

  sol.z = z;
  sol.y = y;
  sol.iterations = it;
  sol.objective = 0.5 * z.dot(prob.H * z) + prob.g.dot(z);
  return sol;
}

void QpSolver::polish(const QpProblem& prob, const QpSolverConfig& cfg,
                      VecX& z, VecX& y) const {
  // Equality-constrained KKT solve on the active set detected from the ADMM
  // iterate, with a few refinement rounds: violated rows join the set,
  // wrong-signed multipliers leave it. Keeps the result only if the worst
  // KKT residual improves.
  const int n = prob.num_vars();
  const int m = prob.num_constraints();

  // +1 upper bound active, -1 lower, 0 inactive
  std::vector<int> side(m, 0);
  for (int r = 0; r < m; ++r) {
    const double cz = prob.C.row(r).dot(z);
    if (prob.lb[r] == prob.ub[r]) {
      side[r] = 1;
      continue;
    }
    if (std::isfinite(prob.ub[r]) &&
        (y[r] > 1e-7 || prob.ub[r] - cz < 1e-5))
      side[r] = 1;
    else if (std::isfinite(prob.lb[r]) &&
             (y[r] < -1e-7 || cz - prob.lb[r] < 1e-5))
      side[r] = -1;
  }

  VecX z_new, y_new;
  for (int round = 0; round < 4; ++round) {
    std::vector<int> active;
    for (int r = 0; r < m; ++r)
      if (side[r] != 0) active.push_back(r);
    const int k = static_cast<int>(active.size());

    MatX kkt = MatX::Zero(n + k, n + k);
    kkt.topLeftCorner(n, n) = prob.H;
    kkt.topLeftCorner(n, n).diagonal().array() += 1e-12;
    VecX rhs(n + k);
    rhs.head(n) = -prob.g;
    for (int a = 0; a < k; ++a) {
      const int r = active[a];
      kkt.block(n + a, 0, 1, n) = prob.C.row(r);
      kkt.block(0, n + a, n, 1) = prob.C.row(r).transpose();
      kkt(n + a, n + a) = -1e-12;
      rhs[n + a] = side[r] > 0 ? prob.ub[r] : prob.lb[r];
    }
    const VecX sol = Eigen::PartialPivLU<MatX>(kkt).solve(rhs);
    if (!sol.allFinite()) return;
    z_new = sol.head(n);
    y_new = VecX::Zero(m);
    for (int a = 0; a < k; ++a) y_new[active[a]] = sol[n + a];

    // refine the working set
    bool changed = false;
    const VecX cz = prob.C * z_new;
    for (int r = 0; r < m; ++r) {
      if (prob.lb[r] == prob.ub[r]) continue;
      if (side[r] == 0) {
        if (std::isfinite(prob.ub[r]) && cz[r] > prob.ub[r] + 1e-9) {
          side[r] = 1;
          changed = true;
        } else if (std::isfinite(prob.lb[r]) && cz[r] < prob.lb[r] - 1e-9) {
          side[r] = -1;
          changed = true;
        }
      } else if ((side[r] > 0 && y_new[r] < -1e-9) ||
                 (side[r] < 0 && y_new[r] > 1e-9)) {
        side[r] = 0;
        changed = true;
      }
    }
    if (!changed) break;
  }

  const KktResiduals before =
      kkt_residuals(prob, {z, y, 0, 0, 0, QpStatus::kSolved, 0});
  const KktResiduals after =
      kkt_residuals(prob, {z_new, y_new, 0, 0, 0, QpStatus::kSolved, 0});
  const double score_before =
      std::max({before.stationarity, before.primal, before.complementarity});
  const double score_after =
      std::max({after.stationarity, after.primal, after.complementarity});
  if (score_after < score_before && after.primal <= cfg.eps_abs) {
    z = z_new;
    y = y_new;
  }
}

VecX warm_start_shift(const VecX& prev_z, int horizon, int block_size) {
  if (prev_z.size() != static_cast<long>(horizon) * block_size)
    throw std::invalid_argument("warm_start_shift: size mismatch");
  VecX out(prev_z.size());
  for (int k = 0; k + 1 < horizon; ++k)
    out.segment(k * block_size, block_size) =
        prev_z.segment((k + 1) * block_size, block_size);
  out.segment((horizon - 1) * block_size, block_size) =
      prev_z.segment((horizon - 1) * block_size, block_size);
  return out;
}

void dump_problem(const QpProblem& prob, const std::string& prefix) {
  const Eigen::IOFormat fmt(Eigen::FullPrecision, 0, " ", "\n");
  auto write = [&](const std::string& name, const MatX& mat) {
    std::ofstream out(prefix + "_" + name + ".txt");
    if (!out)
      throw std::runtime_error("cannot write qp dump: " + prefix + "_" + name);
    out << mat.format(fmt) << "\n";
  };
  write("H", prob.H);
  write("g", prob.g);
  write("C", prob.C);
  write("lb", prob.lb);
  write("ub", prob.ub);
}

}  // namespace resloco
