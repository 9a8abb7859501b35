#include "resloco/mlp.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace resloco {

namespace {

constexpr uint32_t kMagic = 0x4d4c5057;  // "MLPW"

void write_raw(std::ostream& out, const void* p, size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_raw(std::istream& in, void* p, size_t n) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!in) throw std::runtime_error("truncated network file");
}

}  // namespace

MatX orthogonal_matrix(int rows, int cols, double gain, Rng& rng) {
  const int big = std::max(rows, cols);
  const int small = std::min(rows, cols);
  MatX a(big, small);
  for (int i = 0; i < big; ++i)
    for (int j = 0; j < small; ++j) a(i, j) = rng.normal();
  Eigen::HouseholderQR<MatX> qr(a);
  MatX q = qr.householderQ() * MatX::Identity(big, small);
  // sign-correct so the factorization is unique
  MatX r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
  for (int j = 0; j < small; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  MatX out = rows >= cols ? q : MatX(q.transpose());
  return gain * out;
}

MlpNet::MlpNet(const std::vector<int>& dims, double leaky_slope)
    : dims_(dims), leaky_slope_(leaky_slope) {
  if (dims.size() < 2) throw std::invalid_argument("MlpNet needs >= 2 dims");
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    w_.emplace_back(MatX::Zero(dims[l + 1], dims[l]));
    b_.emplace_back(VecX::Zero(dims[l + 1]));
  }
}

void MlpNet::init_orthogonal(Rng& rng, double output_gain) {
  for (size_t l = 0; l < w_.size(); ++l) {
    const double gain = l + 1 == w_.size() ? output_gain : std::sqrt(2.0);
    w_[l] = orthogonal_matrix(static_cast<int>(w_[l].rows()),
                              static_cast<int>(w_[l].cols()), gain, rng);
    b_[l].setZero();
  }
}

void MlpNet::set_zero() {
  for (auto& w : w_) w.setZero();
  for (auto& b : b_) b.setZero();
}

VecX MlpNet::forward(const VecX& input) const {
  Cache cache;
  return forward(input, cache);
}

VecX MlpNet::forward(const VecX& input, Cache& cache) const {
  if (input.size() != input_dim())
    throw std::invalid_argument("MlpNet::forward: input dim mismatch");
  cache.act.assign(1, input);
  VecX h = input;
  for (size_t l = 0; l < w_.size(); ++l) {
    h = w_[l] * h + b_[l];
    if (l + 1 < w_.size())
      h = h.unaryExpr([this](double v) {
        return v >= 0.0 ? v : leaky_slope_ * v;
      });
    cache.act.push_back(h);
  }
  return h;
}

MlpNet::Grads MlpNet::make_grads() const {
  Grads g;
  for (size_t l = 0; l < w_.size(); ++l) {
    g.w.emplace_back(MatX::Zero(w_[l].rows(), w_[l].cols()));
    g.b.emplace_back(VecX::Zero(b_[l].size()));
  }
  return g;
}

void MlpNet::Grads::add_scaled(const Grads& other, double scale) {
  for (size_t l = 0; l < w.size(); ++l) {
    w[l] += scale * other.w[l];
    b[l] += scale * other.b[l];
  }
}

void MlpNet::Grads::scale(double s) {
  for (auto& m : w) m *= s;
  for (auto& v : b) v *= s;
}

VecX MlpNet::backward(const Cache& cache, const VecX& grad_output,
                      Grads& grads) const {
  const int layers = num_layers();
  VecX delta = grad_output;
  for (int l = layers - 1; l >= 0; --l) {
    if (l + 1 < layers) {
      // activation derivative of the post-activation value's sign
      const VecX& post = cache.act[l + 1];
      for (int i = 0; i < delta.size(); ++i)
        if (post[i] < 0.0) delta[i] *= leaky_slope_;
    }
    grads.w[l].noalias() += delta * cache.act[l].transpose();
    grads.b[l] += delta;
    if (l > 0) delta = w_[l].transpose() * delta;
  }
  return w_[0].transpose() * delta;
}

int MlpNet::num_params() const {
  int n = 0;
  for (size_t l = 0; l < w_.size(); ++l)
    n += static_cast<int>(w_[l].size() + b_[l].size());
  return n;
}

void MlpNet::save(std::ostream& out) const {
  write_raw(out, &kMagic, sizeof(kMagic));
  const uint32_t n = static_cast<uint32_t>(dims_.size());
  write_raw(out, &n, sizeof(n));
  for (int d : dims_) {
    const int32_t v = d;
    write_raw(out, &v, sizeof(v));
  }
  write_raw(out, &leaky_slope_, sizeof(leaky_slope_));
  for (size_t l = 0; l < w_.size(); ++l) {
    // row-major blobs
    for (int i = 0; i < w_[l].rows(); ++i)
      for (int j = 0; j < w_[l].cols(); ++j) {
        const double v = w_[l](i, j);
        write_raw(out, &v, sizeof(v));
      }
    write_raw(out, b_[l].data(), sizeof(double) * b_[l].size());
  }
}

MlpNet MlpNet::load(std::istream& in) {
  uint32_t magic = 0;
  read_raw(in, &magic, sizeof(magic));
  if (magic != kMagic) throw std::runtime_error("bad network file magic");
  uint32_t n = 0;
  read_raw(in, &n, sizeof(n));
  if (n < 2 || n > 64) throw std::runtime_error("bad network layer count");
  std::vector<int> dims(n);
  for (auto& d : dims) {
    int32_t v = 0;
    read_raw(in, &v, sizeof(v));
    d = v;
  }
  double slope = 0.01;
  read_raw(in, &slope, sizeof(slope));
  MlpNet net(dims, slope);
  for (size_t l = 0; l < net.w_.size(); ++l) {
    for (int i = 0; i < net.w_[l].rows(); ++i)
      for (int j = 0; j < net.w_[l].cols(); ++j) {
        double v = 0;
        read_raw(in, &v, sizeof(v));
        net.w_[l](i, j) = v;
      }
    read_raw(in, net.b_[l].data(), sizeof(double) * net.b_[l].size());
  }
  return net;
}

AdamOptimizer::AdamOptimizer(const MlpNet& net, double lr_in) : lr(lr_in) {
  for (int l = 0; l < net.num_layers(); ++l) {
    mw_.emplace_back(MatX::Zero(net.weights()[l].rows(),
                                net.weights()[l].cols()));
    vw_.emplace_back(MatX::Zero(net.weights()[l].rows(),
                                net.weights()[l].cols()));
    mb_.emplace_back(VecX::Zero(net.biases()[l].size()));
    vb_.emplace_back(VecX::Zero(net.biases()[l].size()));
  }
}

void AdamOptimizer::step(MlpNet& net, const MlpNet::Grads& grads) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (int l = 0; l < net.num_layers(); ++l) {
    mw_[l] = beta1 * mw_[l] + (1.0 - beta1) * grads.w[l];
    vw_[l] =
        beta2 * vw_[l] + (1.0 - beta2) * grads.w[l].cwiseProduct(grads.w[l]);
    net.weights()[l] -=
        (lr * (mw_[l] / bc1).array() /
         ((vw_[l] / bc2).array().sqrt() + eps))
            .matrix();
    mb_[l] = beta1 * mb_[l] + (1.0 - beta1) * grads.b[l];
    vb_[l] =
        beta2 * vb_[l] + (1.0 - beta2) * grads.b[l].cwiseProduct(grads.b[l]);
    net.biases()[l] -= (lr * (mb_[l] / bc1).array() /
                        ((vb_[l] / bc2).array().sqrt() + eps))
                           .matrix();
  }
}

void AdamOptimizer::step_extra(VecX& params, const VecX& grads) {
  if (m_extra_.size() != params.size()) {
    m_extra_ = VecX::Zero(params.size());
    v_extra_ = VecX::Zero(params.size());
    t_extra_ = 0;
  }
  ++t_extra_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_extra_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_extra_));
  m_extra_ = beta1 * m_extra_ + (1.0 - beta1) * grads;
  v_extra_ = beta2 * v_extra_ + (1.0 - beta2) * grads.cwiseProduct(grads);
  params -= (lr * (m_extra_ / bc1).array() /
             ((v_extra_ / bc2).array().sqrt() + eps))
                .matrix();
}

}  // namespace resloco
