#pragma once

#include <string>
#include <vector>

#include "resloco/rng.hpp"
#include "resloco/types.hpp"

namespace resloco {

// Fixed-graph feed-forward network: affine layers with LeakyReLU on all but
// the last. Double precision throughout so gradient checks are meaningful.
class MlpNet {
 public:
  MlpNet() = default;
  MlpNet(const std::vector<int>& dims, double leaky_slope = 0.01);

  // orthogonal weights (gain sqrt(2) on hidden layers), zero biases; the
  // output layer uses output_gain
  void init_orthogonal(Rng& rng, double output_gain = 1.0);
  void set_zero();

  VecX forward(const VecX& input) const;

  struct Cache {
    std::vector<VecX> act;  // act[0] = input, act[L] = output
  };
  VecX forward(const VecX& input, Cache& cache) const;

  struct Grads {
    std::vector<MatX> w;
    std::vector<VecX> b;
    void add_scaled(const Grads& other, double scale);
    void scale(double s);
  };
  Grads make_grads() const;

  // reverse pass; accumulates into grads, returns gradient w.r.t. the input
  VecX backward(const Cache& cache, const VecX& grad_output,
                Grads& grads) const;

  int input_dim() const { return dims_.empty() ? 0 : dims_.front(); }
  int output_dim() const { return dims_.empty() ? 0 : dims_.back(); }
  const std::vector<int>& dims() const { return dims_; }
  double leaky_slope() const { return leaky_slope_; }
  int num_layers() const { return static_cast<int>(w_.size()); }
  int num_params() const;

  std::vector<MatX>& weights() { return w_; }
  std::vector<VecX>& biases() { return b_; }
  const std::vector<MatX>& weights() const { return w_; }
  const std::vector<VecX>& biases() const { return b_; }

  void save(std::ostream& out) const;
  static MlpNet load(std::istream& in);

 private:
  std::vector<int> dims_;
  std::vector<MatX> w_;
  std::vector<VecX> b_;
  double leaky_slope_ = 0.01;
};

// standard Adam with bias correction; beta = (0.9, 0.999), eps = 1e-8
class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  explicit AdamOptimizer(const MlpNet& net, double lr = 5e-4);

  void step(MlpNet& net, const MlpNet::Grads& grads);
  // extra flat parameter blocks (e.g. policy log-std) share the step count
  void step_extra(VecX& params, const VecX& grads);

  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

 private:
  std::vector<MatX> mw_, vw_;
  std::vector<VecX> mb_, vb_;
  VecX m_extra_, v_extra_;
  long t_ = 0;
  long t_extra_ = 0;
};

// orthogonal matrix init used by MlpNet; exposed for tests
MatX orthogonal_matrix(int rows, int cols, double gain, Rng& rng);

}  // namespace resloco
