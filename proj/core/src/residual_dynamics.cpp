#include "resloco/residual_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace resloco {

namespace {

double wrap_pi(double a) {
  while (a > M_PI) a -= 2.0 * M_PI;
  while (a < -M_PI) a += 2.0 * M_PI;
  return a;
}

constexpr uint32_t kDatasetMagic = 0x52444454;  // "RDDT"

}  // namespace

Vec12 extract_residual(const BodyState& x_prev, const BodyState& x_curr,
                       const GrfInput& u_prev, double dt,
                       const SrbmParams& params) {
  Vec12 diff = x_curr.to_vector() - x_prev.to_vector();
  for (int i = 3; i < 6; ++i) diff[i] = wrap_pi(diff[i]);
  return diff / dt - continuous_dynamics(x_prev, u_prev, params);
}

ResidualEstimate filter_step(const ResidualEstimate& prev, const Vec12& raw,
                             const FilterConfig& cfg) {
  ResidualEstimate out = prev;
  const double a = cfg.alpha();
  out.value = a * prev.value + (1.0 - a) * raw;
  return out;
}

Eigen::Matrix<double, kRdObsDim, 1> make_rd_observation(
    const Vec3& phi, const Vec3& omega, const VecX& theta,
    const VecX& theta_dot, const VecX& tau, const Vec12& fres_prev) {
  Eigen::Matrix<double, kRdObsDim, 1> o;
  o.segment<3>(0) = phi;
  o.segment<3>(3) = omega;
  o.segment<12>(6) = theta;
  o.segment<12>(18) = theta_dot;
  o.segment<12>(30) = tau;
  o.segment<12>(42) = fres_prev;
  return o;
}

void RdDataset::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset: " + path);
  out.write(reinterpret_cast<const char*>(&kDatasetMagic),
            sizeof(kDatasetMagic));
  const int32_t obs_dim = kRdObsDim, label_dim = 12, history = kRdHistory;
  const int64_t count = static_cast<int64_t>(samples_.size());
  out.write(reinterpret_cast<const char*>(&obs_dim), sizeof(obs_dim));
  out.write(reinterpret_cast<const char*>(&label_dim), sizeof(label_dim));
  out.write(reinterpret_cast<const char*>(&history), sizeof(history));
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  // standardization stats for the stored stream, part of the header
  RunningStats ostats(obs_dim), lstats(label_dim);
  for (const auto& s : samples_) {
    ostats.update(s.obs);
    lstats.update(s.label);
  }
  ostats.save(out);
  lstats.save(out);
  for (const auto& s : samples_) {
    out.write(reinterpret_cast<const char*>(&s.episode), sizeof(s.episode));
    out.write(reinterpret_cast<const char*>(s.obs.data()),
              sizeof(double) * kRdObsDim);
    out.write(reinterpret_cast<const char*>(s.label.data()),
              sizeof(double) * 12);
  }
}

RdDataset RdDataset::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  uint32_t magic = 0;
  in.read(reinterpret_cast<char*>(&magic), sizeof(magic));
  if (magic != kDatasetMagic)
    throw std::runtime_error("bad dataset magic: " + path);
  int32_t obs_dim = 0, label_dim = 0, history = 0;
  int64_t count = 0;
  in.read(reinterpret_cast<char*>(&obs_dim), sizeof(obs_dim));
  in.read(reinterpret_cast<char*>(&label_dim), sizeof(label_dim));
  in.read(reinterpret_cast<char*>(&history), sizeof(history));
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (obs_dim != kRdObsDim || label_dim != 12)
    throw std::runtime_error("dataset dims do not match this build");
  (void)RunningStats::load(in);
  (void)RunningStats::load(in);
  RdDataset ds;
  ds.samples_.resize(count);
  for (auto& s : ds.samples_) {
    in.read(reinterpret_cast<char*>(&s.episode), sizeof(s.episode));
    in.read(reinterpret_cast<char*>(s.obs.data()), sizeof(double) * kRdObsDim);
    in.read(reinterpret_cast<char*>(s.label.data()), sizeof(double) * 12);
  }
  if (!in) throw std::runtime_error("truncated dataset: " + path);
  return ds;
}

RdNetwork::RdNetwork(int history, const std::vector<int>& hidden,
                     uint64_t seed)
    : history_(history) {
  std::vector<int> dims;
  dims.push_back((history + 1) * kRdObsDim);
  for (int h : hidden) dims.push_back(h);
  dims.push_back(12);
  net = MlpNet(dims);
  Rng rng(seed);
  net.init_orthogonal(rng, 0.1);
  input_stats = RunningStats(kRdObsDim);
  label_stats = RunningStats(12);
}

void RdNetwork::reset() { buffer_.clear(); }

Vec12 RdNetwork::infer(const Eigen::Matrix<double, kRdObsDim, 1>& obs) {
  buffer_.push_front(obs);
  while (static_cast<int>(buffer_.size()) > history_ + 1) buffer_.pop_back();
  // cold start: missing frames stay zero in normalized space
  VecX stacked = VecX::Zero(input_dim());
  for (int k = 0; k < static_cast<int>(buffer_.size()); ++k)
    stacked.segment(k * kRdObsDim, kRdObsDim) =
        input_stats.normalize(buffer_[k]);
  return label_stats.denormalize(net.forward(stacked));
}

Vec12 RdNetwork::infer_stacked(const VecX& stacked) const {
  VecX norm = VecX::Zero(input_dim());
  for (int k = 0; k <= history_; ++k)
    norm.segment(k * kRdObsDim, kRdObsDim) =
        input_stats.normalize(stacked.segment(k * kRdObsDim, kRdObsDim));
  const VecX out = net.forward(norm);
  return label_stats.denormalize(out);
}

void RdNetwork::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write network: " + path);
  const int32_t h = history_;
  out.write(reinterpret_cast<const char*>(&h), sizeof(h));
  net.save(out);
  input_stats.save(out);
  label_stats.save(out);
}

RdNetwork RdNetwork::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open network: " + path);
  RdNetwork r;
  int32_t h = 0;
  in.read(reinterpret_cast<char*>(&h), sizeof(h));
  r.history_ = h;
  r.net = MlpNet::load(in);
  r.input_stats = RunningStats::load(in);
  r.label_stats = RunningStats::load(in);
  if (!in) throw std::runtime_error("truncated network: " + path);
  return r;
}

RdTrainReport train_rd_network(const RdDataset& dataset, RdNetwork& network,
                               const RdTrainOptions& opts) {
  const int h = network.history();
  const int in_dim = network.input_dim();

  // standardization from the training stream
  network.input_stats = RunningStats(kRdObsDim);
  network.label_stats = RunningStats(12);
  for (const auto& s : dataset.samples()) {
    network.input_stats.update(s.obs);
    network.label_stats.update(s.label);
  }
  network.input_stats.freeze();
  network.label_stats.freeze();

  // build stacked rows; samples lacking (h+1) consecutive same-episode
  // frames are skipped
  std::vector<VecX> inputs;
  std::vector<Vec12> labels;
  const auto& samples = dataset.samples();
  for (size_t i = 0; i < samples.size(); ++i) {
    bool ok = i >= static_cast<size_t>(h);
    for (int k = 1; ok && k <= h; ++k)
      if (samples[i - k].episode != samples[i].episode) ok = false;
    if (!ok) continue;
    VecX row(in_dim);
    for (int k = 0; k <= h; ++k)
      row.segment(k * kRdObsDim, kRdObsDim) =
          network.input_stats.normalize(samples[i - k].obs);
    inputs.push_back(row);
    labels.push_back(network.label_stats.normalize(samples[i].label));
  }

  RdTrainReport report;
  if (inputs.empty()) return report;

  Rng rng(opts.seed ^ 0xd5a11ull);
  std::vector<size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), 0);
  for (size_t i = order.size() - 1; i > 0; --i)
    std::swap(order[i], order[rng.uniform_int(i + 1)]);

  const size_t val_count = std::max<size_t>(
      1, static_cast<size_t>(opts.validation_fraction * order.size()));
  std::vector<size_t> val(order.begin(), order.begin() + val_count);
  std::vector<size_t> train(order.begin() + val_count, order.end());
  if (train.empty()) train = val;

  AdamOptimizer adam(network.net, opts.lr);
  auto full_mse = [&](const std::vector<size_t>& idx) {
    double acc = 0.0;
    for (size_t i : idx) {
      const VecX err = network.net.forward(inputs[i]) - labels[i];
      acc += err.squaredNorm();
    }
    return acc / (static_cast<double>(idx.size()) * 12.0);
  };

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    const double progress =
        opts.epochs > 1 ? static_cast<double>(epoch) / (opts.epochs - 1) : 0.0;
    adam.lr = opts.lr * (1.0 - (1.0 - opts.lr_final_fraction) * progress);
    for (size_t i = train.size() - 1; i > 0; --i)
      std::swap(train[i], train[rng.uniform_int(i + 1)]);
    for (size_t start = 0; start < train.size();
         start += static_cast<size_t>(opts.batch_size)) {
      const size_t stop =
          std::min(train.size(), start + static_cast<size_t>(opts.batch_size));
      MlpNet::Grads grads = network.net.make_grads();
      MlpNet::Cache cache;
      for (size_t i = start; i < stop; ++i) {
        const VecX out = network.net.forward(inputs[train[i]], cache);
        const VecX err = out - labels[train[i]];
        // d/dout of mean squared error over the batch
        network.net.backward(
            cache, 2.0 * err / (12.0 * static_cast<double>(stop - start)),
            grads);
      }
      adam.step(network.net, grads);
    }
    report.epochs_run = epoch + 1;
  }

  report.train_mse = full_mse(train);
  report.validation_mse = full_mse(val);
  // labels are standardized, their variance is ~1 by construction
  double var = 0.0;
  VecX mean = VecX::Zero(12);
  for (size_t i : val) mean += labels[i];
  mean /= static_cast<double>(val.size());
  for (size_t i : val) var += (labels[i] - mean).squaredNorm();
  report.label_variance = var / (static_cast<double>(val.size()) * 12.0);
  return report;
}

}  // namespace resloco
