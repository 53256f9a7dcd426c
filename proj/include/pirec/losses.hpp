#pragma once

#include "pirec/extractor.hpp"
#include "pirec/networks.hpp"

#include <nlohmann/json.hpp>

#include <vector>

namespace pirec {

/// Loss weights and schedule for one training phase.
struct PhaseConfig {
  Phase phase = Phase::Imitation;
  double alpha = 1.0;   // per-pixel
  double beta = 0.01;   // adversarial
  double gamma = 1.0;   // feature
  double delta = 150.0; // style
  int max_epochs = 50;
  int patience = 5;
  double min_delta = 1e-4;

  /// Phase 1: (1, 0.01, 1, 150); phase 2: beta 0.1, delta 0; phase 3: beta 2, delta 0.
  static PhaseConfig defaults(Phase phase);
  void validate() const;
};

void to_json(nlohmann::json& j, const PhaseConfig& c);
void from_json(const nlohmann::json& j, PhaseConfig& c);

template <typename Scalar>
struct LossWithGrad {
  double value = 0.0;
  Tensor<Scalar> grad;
};

template <typename Scalar>
struct StackLoss {
  double value = 0.0;
  std::vector<Tensor<Scalar>> grads;  // d(loss)/d(fake layer i)
};

template <typename Scalar>
struct LsganDLoss {
  double value = 0.0;
  Tensor<Scalar> grad_real, grad_fake;
};

/// Number of non-zero elements.
template <typename Scalar>
Eigen::Index count_nonzero(const Tensor<Scalar>& t);

/// (nnz(x_gt) / nnz(mask over all channels)) * mean |x_fake - mask * x_gt|.
template <typename Scalar>
LossWithGrad<Scalar> per_pixel_loss(const Tensor<Scalar>& x_fake, const Tensor<Scalar>& x_gt,
                                    const Tensor<Scalar>& mask);

template <typename Scalar>
LsganDLoss<Scalar> lsgan_d_loss(const Tensor<Scalar>& d_real, const Tensor<Scalar>& d_fake);

template <typename Scalar>
LossWithGrad<Scalar> lsgan_g_loss(const Tensor<Scalar>& d_fake);

template <typename Scalar>
StackLoss<Scalar> feature_loss(const FeatureStack<Scalar>& gt, const FeatureStack<Scalar>& fake);

/// F F^T / (channels * positions) for the channels x positions flattening.
template <typename Scalar>
RowMatrix<Scalar> gram_matrix(const Tensor<Scalar>& feature_map);

template <typename Scalar>
StackLoss<Scalar> style_loss(const FeatureStack<Scalar>& gt, const FeatureStack<Scalar>& fake);

struct LossComponents {
  double pixel = 0.0;
  double adversarial = 0.0;
  double feature = 0.0;
  double style = 0.0;
};

/// alpha*pixel + beta*adversarial + gamma*feature + delta*style; throws on a non-finite term.
double total_generator_loss(const LossComponents& c, const PhaseConfig& cfg);

}  // namespace pirec
