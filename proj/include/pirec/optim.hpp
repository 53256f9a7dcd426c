#pragma once

#include "pirec/archive.hpp"
#include "pirec/layers.hpp"

#include <string>
#include <vector>

namespace pirec {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double eps = 1e-8;
};

/// Adam over a fixed parameter list. Moments are keyed by parameter name so
/// they survive a checkpoint round trip.
template <typename Scalar>
class Adam {
 public:
  Adam(std::vector<Parameter<Scalar>*> params, const AdamConfig& config);

  const AdamConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }
  long long steps() const { return t_; }

  /// value -= lr * mhat / (sqrt(vhat) + eps) for every trainable parameter.
  void step();

  void save(Archive& ar, const std::string& prefix) const;
  void load(const Archive& ar, const std::string& prefix);

 private:
  std::vector<Parameter<Scalar>*> params_;
  std::vector<RowMatrix<Scalar>> m_, v_;
  AdamConfig config_;
  long long t_ = 0;
};

}  // namespace pirec
