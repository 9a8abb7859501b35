#include "resloco/policy.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace resloco {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;
}

GaussianPolicy::GaussianPolicy(MlpNet mean_net, VecX action_bounds,
                               double initial_log_std)
    : net(std::move(mean_net)), bounds(std::move(action_bounds)) {
  if (bounds.size() != net.output_dim())
    throw std::invalid_argument("policy bounds dim mismatch");
  log_std = VecX::Constant(net.output_dim(), initial_log_std);
}

VecX GaussianPolicy::clamped_log_std() const {
  return log_std.cwiseMax(log_std_min).cwiseMin(log_std_max);
}

VecX GaussianPolicy::squash(const VecX& z) const {
  VecX a(z.size());
  for (int i = 0; i < z.size(); ++i) a[i] = bounds[i] * std::tanh(z[i]);
  return a;
}

VecX GaussianPolicy::act_deterministic(const VecX& obs) const {
  return squash(net.forward(obs));
}

GaussianPolicy::Sample GaussianPolicy::sample(const VecX& obs,
                                              Rng& rng) const {
  Sample s;
  const VecX mean = net.forward(obs);
  const VecX ls = clamped_log_std();
  s.z.resize(mean.size());
  for (int i = 0; i < mean.size(); ++i)
    s.z[i] = mean[i] + std::exp(ls[i]) * rng.normal();
  s.action = squash(s.z);
  s.log_prob = 0.0;
  for (int i = 0; i < mean.size(); ++i) {
    const double d = (s.z[i] - mean[i]) * std::exp(-ls[i]);
    s.log_prob += -0.5 * d * d - ls[i] - 0.5 * kLog2Pi;
  }
  return s;
}

double GaussianPolicy::log_prob(const VecX& obs, const VecX& z) const {
  const VecX mean = net.forward(obs);
  const VecX ls = clamped_log_std();
  double lp = 0.0;
  for (int i = 0; i < mean.size(); ++i) {
    const double d = (z[i] - mean[i]) * std::exp(-ls[i]);
    lp += -0.5 * d * d - ls[i] - 0.5 * kLog2Pi;
  }
  return lp;
}

void GaussianPolicy::log_prob_grad(const VecX& mean, const VecX& z,
                                   VecX* dmean, VecX* dlogstd) const {
  const VecX ls = clamped_log_std();
  if (dmean) dmean->resize(mean.size());
  if (dlogstd) dlogstd->resize(mean.size());
  for (int i = 0; i < mean.size(); ++i) {
    const double inv_var = std::exp(-2.0 * ls[i]);
    const double diff = z[i] - mean[i];
    if (dmean) (*dmean)[i] = diff * inv_var;
    // d/dls of (-0.5 d^2 exp(-2 ls) - ls): clamp boundary treated as flat
    const bool active = log_std[i] > log_std_min && log_std[i] < log_std_max;
    if (dlogstd)
      (*dlogstd)[i] = active ? diff * diff * inv_var - 1.0 : 0.0;
  }
}

double GaussianPolicy::entropy() const {
  const VecX ls = clamped_log_std();
  double h = 0.0;
  for (int i = 0; i < ls.size(); ++i)
    h += ls[i] + 0.5 * (1.0 + kLog2Pi);
  return h;
}

void GaussianPolicy::save(std::ostream& out) const {
  net.save(out);
  const uint32_t n = static_cast<uint32_t>(log_std.size());
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(log_std.data()),
            sizeof(double) * n);
  out.write(reinterpret_cast<const char*>(bounds.data()), sizeof(double) * n);
}

GaussianPolicy GaussianPolicy::load(std::istream& in) {
  GaussianPolicy p;
  p.net = MlpNet::load(in);
  uint32_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!in || n != static_cast<uint32_t>(p.net.output_dim()))
    throw std::runtime_error("bad policy file");
  p.log_std.resize(n);
  p.bounds.resize(n);
  in.read(reinterpret_cast<char*>(p.log_std.data()), sizeof(double) * n);
  in.read(reinterpret_cast<char*>(p.bounds.data()), sizeof(double) * n);
  if (!in) throw std::runtime_error("truncated policy file");
  return p;
}

}  // namespace resloco
