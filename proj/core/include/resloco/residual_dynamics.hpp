#pragma once

#include <deque>
#include <string>
#include <vector>

#include "resloco/mlp.hpp"
#include "resloco/running_stats.hpp"
#include "resloco/srbm.hpp"
#include "resloco/types.hpp"

namespace resloco {

inline constexpr int kRdObsDim = 54;  // [phi, w, theta, thetad, tau, fres_prev]
inline constexpr int kRdHistory = 2;  // window h; inputs stack h+1 frames

// f_res = (x_k - x_{k-1})/dt - f_n(x_{k-1}, u_{k-1}); Euler-angle rows are
// differenced with wrap across +-pi
Vec12 extract_residual(const BodyState& x_prev, const BodyState& x_curr,
                       const GrfInput& u_prev, double dt,
                       const SrbmParams& params);

struct FilterConfig {
  double f_cutoff = 10.0;    // Hz
  double f_sample = 1000.0;  // Hz

  bool valid() const {
    return f_cutoff > 0.0 && f_cutoff < 0.5 * f_sample;
  }
  double alpha() const { return std::exp(-2.0 * M_PI * f_cutoff / f_sample); }
};

struct ResidualEstimate {
  Vec12 value = Vec12::Zero();
  double timestamp = 0.0;
};

// one step of the per-channel first-order IIR:
// out = alpha * prev + (1 - alpha) * raw
ResidualEstimate filter_step(const ResidualEstimate& prev, const Vec12& raw,
                             const FilterConfig& cfg);

// stateful convenience wrapper around filter_step
class ResidualFilter {
 public:
  explicit ResidualFilter(const FilterConfig& cfg = {}) : cfg_(cfg) {}
  const Vec12& update(const Vec12& raw, double dt) {
    est_ = filter_step(est_, raw, cfg_);
    est_.timestamp += dt;
    return est_.value;
  }
  const Vec12& value() const { return est_.value; }
  void reset() { est_ = ResidualEstimate{}; }
  const FilterConfig& config() const { return cfg_; }

 private:
  FilterConfig cfg_;
  ResidualEstimate est_;
};

// sliding-window baseline: constant least-squares fit over the last W raw
// residuals, i.e. their mean; underfull windows average what is there
class WindowRegressor {
 public:
  explicit WindowRegressor(int window = 50) : window_(window) {}
  void push(const Vec12& raw) {
    buf_.push_back(raw);
    while (static_cast<int>(buf_.size()) > window_) buf_.pop_front();
  }
  Vec12 estimate() const {
    Vec12 sum = Vec12::Zero();
    if (buf_.empty()) return sum;
    for (const auto& v : buf_) sum += v;
    return sum / static_cast<double>(buf_.size());
  }
  void reset() { buf_.clear(); }

 private:
  int window_;
  std::deque<Vec12> buf_;
};

struct RdSample {
  int32_t episode = 0;
  Eigen::Matrix<double, kRdObsDim, 1> obs;
  Vec12 label;
};

// builds the 54-dim observation [phi, w, theta, thetad, tau, fres_prev]
Eigen::Matrix<double, kRdObsDim, 1> make_rd_observation(
    const Vec3& phi, const Vec3& omega, const VecX& theta,
    const VecX& theta_dot, const VecX& tau, const Vec12& fres_prev);

// flat binary dataset with a self-describing header
class RdDataset {
 public:
  void append(const RdSample& s) { samples_.push_back(s); }
  size_t size() const { return samples_.size(); }
  const RdSample& operator[](size_t i) const { return samples_[i]; }
  const std::vector<RdSample>& samples() const { return samples_; }

  void save(const std::string& path) const;
  static RdDataset load(const std::string& path);

 private:
  std::vector<RdSample> samples_;
};

struct RdTrainOptions {
  int epochs = 20;
  int batch_size = 256;
  double lr = 5e-4;
  double lr_final_fraction = 0.05;  // linear decay across epochs
  double validation_fraction = 0.1;
  uint64_t seed = 0;
  std::vector<int> hidden = {256, 128};
};

struct RdTrainReport {
  double train_mse = 0.0;       // standardized units
  double validation_mse = 0.0;  // standardized units
  double label_variance = 1.0;  // mean per-channel variance, standardized
  int epochs_run = 0;
};

// Proprioception-only residual regressor: stacked (h+1) x 54 inputs, MSE on
// per-channel standardized labels.
class RdNetwork {
 public:
  RdNetwork() = default;
  RdNetwork(int history, const std::vector<int>& hidden, uint64_t seed);

  int history() const { return history_; }
  int input_dim() const { return (history_ + 1) * kRdObsDim; }

  // stateful inference over an observation stream; zero-padded at episode
  // start
  void reset();
  Vec12 infer(const Eigen::Matrix<double, kRdObsDim, 1>& obs);

  // stateless inference on an explicit stacked input (newest frame first)
  Vec12 infer_stacked(const VecX& stacked) const;

  void save(const std::string& path) const;
  static RdNetwork load(const std::string& path);

  MlpNet net;
  RunningStats input_stats;
  RunningStats label_stats;

 private:
  int history_ = kRdHistory;
  std::deque<Eigen::Matrix<double, kRdObsDim, 1>> buffer_;
};

RdTrainReport train_rd_network(const RdDataset& dataset, RdNetwork& network,
                               const RdTrainOptions& opts);

}  // namespace resloco
