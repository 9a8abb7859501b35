#pragma once

#include <iosfwd>

#include "resloco/mlp.hpp"
#include "resloco/rng.hpp"
#include "resloco/types.hpp"

namespace resloco {

// Diagonal-Gaussian policy head over an MLP mean. The Gaussian lives in an
// unbounded pre-squash space z; actions are tanh(z) scaled to per-dimension
// bounds. PPO ratios use pre-squash log-probs (the squash Jacobian cancels
// for a stored z).
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(MlpNet mean_net, VecX action_bounds,
                 double initial_log_std = -1.0);

  int obs_dim() const { return net.input_dim(); }
  int action_dim() const { return net.output_dim(); }

  // deterministic action: tanh(mean) scaled to bounds
  VecX act_deterministic(const VecX& obs) const;

  struct Sample {
    VecX z;       // pre-squash sample
    VecX action;  // squashed, scaled
    double log_prob = 0.0;
  };
  Sample sample(const VecX& obs, Rng& rng) const;

  // log N(z | mean(obs), std)
  double log_prob(const VecX& obs, const VecX& z) const;

  // gradient of log_prob w.r.t. the mean output and log-std, for reuse by
  // the PPO update; mean must be net.forward(obs)
  void log_prob_grad(const VecX& mean, const VecX& z, VecX* dmean,
                     VecX* dlogstd) const;

  // entropy of the pre-squash Gaussian (state independent)
  double entropy() const;

  VecX squash(const VecX& z) const;
  VecX clamped_log_std() const;

  void save(std::ostream& out) const;
  static GaussianPolicy load(std::istream& in);

  MlpNet net;
  VecX log_std;
  VecX bounds;  // per-dimension action scale
  double log_std_min = -5.0;
  double log_std_max = 1.0;
};

}  // namespace resloco
