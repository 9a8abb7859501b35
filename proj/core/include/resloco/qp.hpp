#pragma once

#include <optional>
#include <string>

#include "resloco/types.hpp"

namespace resloco {

// minimize 0.5 z'Hz + g'z  subject to  lb <= Cz <= ub
struct QpProblem {
  MatX H;
  VecX g;
  MatX C;
  VecX lb;
  VecX ub;

  int num_vars() const { return static_cast<int>(g.size()); }
  int num_constraints() const { return static_cast<int>(lb.size()); }
  // H symmetric within 1e-10, lb <= ub elementwise, consistent shapes
  bool well_formed() const;
};

enum class QpStatus { kSolved, kMaxIter, kInfeasible };

struct QpSolution {
  VecX z;
  VecX y;  // constraint duals, sign convention: stationarity Hz + g + C'y = 0
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
  QpStatus status = QpStatus::kMaxIter;
  double objective = 0.0;
};

struct QpSolverConfig {
  double eps_abs = 1e-6;
  int max_iterations = 4000;
  double rho = 0.1;
  double sigma = 1e-6;
  double over_relaxation = 1.6;
  int rho_adapt_interval = 25;
  int divergence_window = 200;
  // substitute out variables pinned by single-entry equality rows before
  // iterating; solutions are identical, stance-only MPC problems get small
  bool eliminate_fixed = true;
  // active-set KKT polish after convergence; delivers ~1e-10 residuals at
  // the cost of one dense LU (the control loop turns it off)
  bool polish = true;
};

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;
};

KktResiduals kkt_residuals(const QpProblem& prob, const QpSolution& sol);

// Operator-splitting (ADMM) dense QP solver with over-relaxation and
// periodic rho adaptation. One instance per control thread: the iteration
// matrix factorization and workspace are cached between solves.
class QpSolver {
 public:
  QpSolution solve(const QpProblem& prob, const QpSolverConfig& cfg,
                   const VecX* warm_start_z = nullptr,
                   const VecX* warm_start_y = nullptr);

 private:
  QpSolution solve_dense(const QpProblem& prob, const QpSolverConfig& cfg,
                         const VecX* warm_z, const VecX* warm_y);
  void polish(const QpProblem& prob, const QpSolverConfig& cfg, VecX& z,
              VecX& y) const;

  Eigen::LLT<MatX> llt_;
  // adapted step size carried across solves of the same shape, so warm
  // starts skip the rho search
  double tuned_rho_ = 0.0;
  int tuned_n_ = -1;
};

// shift a horizon solution one block earlier, duplicating the last block
VecX warm_start_shift(const VecX& prev_z, int horizon, int block_size);

// plain-text dump of (H, g, C, lb, ub) for offline inspection; writes
// <prefix>_H.txt etc.
void dump_problem(const QpProblem& prob, const std::string& prefix);

}  // namespace resloco
