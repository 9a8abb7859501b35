#pragma once

#include <iosfwd>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "resloco/types.hpp"

namespace resloco {

// Welford running mean/variance used for observation and label
// standardization. Frozen stats stop updating but keep normalizing.
class RunningStats {
 public:
  RunningStats() = default;
  explicit RunningStats(int dim)
      : count_(0.0), mean_(VecX::Zero(dim)), m2_(VecX::Zero(dim)) {}

  void update(const VecX& x) {
    if (frozen_) return;
    count_ += 1.0;
    const VecX delta = x - mean_;
    mean_ += delta / count_;
    m2_ += delta.cwiseProduct(x - mean_);
  }

  VecX mean() const { return mean_; }
  VecX variance() const {
    if (count_ < 2.0) return VecX::Ones(mean_.size());
    return (m2_ / count_).cwiseMax(1e-8);
  }
  VecX stddev() const { return variance().cwiseSqrt(); }
  double count() const { return count_; }

  VecX normalize(const VecX& x, double clip = 10.0) const {
    if (count_ < 2.0) return x;
    VecX z = (x - mean_).cwiseQuotient(stddev());
    return z.cwiseMax(-clip).cwiseMin(clip);
  }
  VecX denormalize(const VecX& z) const {
    if (count_ < 2.0) return z;
    return z.cwiseProduct(stddev()) + mean_;
  }

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  void save(std::ostream& out) const {
    const uint32_t n = static_cast<uint32_t>(mean_.size());
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(&count_), sizeof(count_));
    const uint8_t fr = frozen_ ? 1 : 0;
    out.write(reinterpret_cast<const char*>(&fr), sizeof(fr));
    out.write(reinterpret_cast<const char*>(mean_.data()), sizeof(double) * n);
    out.write(reinterpret_cast<const char*>(m2_.data()), sizeof(double) * n);
  }
  static RunningStats load(std::istream& in) {
    uint32_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    if (!in || n > 1u << 20) throw std::runtime_error("bad stats file");
    RunningStats s(static_cast<int>(n));
    in.read(reinterpret_cast<char*>(&s.count_), sizeof(s.count_));
    uint8_t fr = 0;
    in.read(reinterpret_cast<char*>(&fr), sizeof(fr));
    s.frozen_ = fr != 0;
    in.read(reinterpret_cast<char*>(s.mean_.data()), sizeof(double) * n);
    in.read(reinterpret_cast<char*>(s.m2_.data()), sizeof(double) * n);
    if (!in) throw std::runtime_error("truncated stats file");
    return s;
  }

 private:
  double count_ = 0.0;
  VecX mean_;
  VecX m2_;
  bool frozen_ = false;
};

}  // namespace resloco
