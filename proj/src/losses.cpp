#include "pirec/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace pirec {

PhaseConfig PhaseConfig::defaults(Phase phase) {
  PhaseConfig c;
  c.phase = phase;
  switch (phase) {
    case Phase::Imitation: c.beta = 0.01; c.delta = 150.0; break;
    case Phase::Generating: c.beta = 0.1; c.delta = 0.0; break;
    case Phase::Refinement: c.beta = 2.0; c.delta = 0.0; break;
  }
  return c;
}

void PhaseConfig::validate() const {
  for (double w : {alpha, beta, gamma, delta})
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("loss weights must be finite and non-negative");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (!(min_delta >= 0.0)) throw std::invalid_argument("min_delta must be >= 0");
}

void to_json(nlohmann::json& j, const PhaseConfig& c) {
  j = {{"phase", to_int(c.phase)}, {"alpha", c.alpha},           {"beta", c.beta},
       {"gamma", c.gamma},         {"delta", c.delta},           {"max_epochs", c.max_epochs},
       {"patience", c.patience},   {"min_delta", c.min_delta}};
}

void from_json(const nlohmann::json& j, PhaseConfig& c) {
  if (j.contains("phase")) c = PhaseConfig::defaults(phase_from_int(j.at("phase").get<int>()));
  c.alpha = j.value("alpha", c.alpha);
  c.beta = j.value("beta", c.beta);
  c.gamma = j.value("gamma", c.gamma);
  c.delta = j.value("delta", c.delta);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.patience = j.value("patience", c.patience);
  c.min_delta = j.value("min_delta", c.min_delta);
}

template <typename Scalar>
Eigen::Index count_nonzero(const Tensor<Scalar>& t) {
  return (t.array() != Scalar(0)).count();
}

template <typename Scalar>
LossWithGrad<Scalar> per_pixel_loss(const Tensor<Scalar>& x_fake, const Tensor<Scalar>& x_gt,
                                    const Tensor<Scalar>& mask) {
  if (!x_fake.same_shape(x_gt)) throw std::invalid_argument("per_pixel_loss: x_fake/x_gt shape mismatch");
  if (mask.channels() != 1 || !mask.same_spatial(x_gt))
    throw std::invalid_argument("per_pixel_loss: mask must be 1 x H x W matching the images");
  const double mask_nnz = static_cast<double>(count_nonzero(mask)) * x_gt.channels();
  if (mask_nnz == 0.0) throw std::invalid_argument("per_pixel_loss: mask has no visible pixels");
  const double weight = static_cast<double>(count_nonzero(x_gt)) / mask_nnz;
  const auto n = static_cast<double>(x_fake.size());

  Tensor<Scalar> diff = x_fake;
  diff.matrix() -= apply_mask(x_gt, mask).matrix();
  LossWithGrad<Scalar> out;
  out.value = weight * static_cast<double>(diff.array().abs().sum()) / n;
  out.grad = Tensor<Scalar>::like(diff);
  out.grad.array() = diff.array().sign() * static_cast<Scalar>(weight / n);
  return out;
}

template <typename Scalar>
LsganDLoss<Scalar> lsgan_d_loss(const Tensor<Scalar>& d_real, const Tensor<Scalar>& d_fake) {
  if (!d_real.same_shape(d_fake)) throw std::invalid_argument("lsgan_d_loss: score grids differ in shape");
  if (d_real.empty()) throw std::invalid_argument("lsgan_d_loss: empty score grid");
  const auto n = static_cast<double>(d_real.size());
  LsganDLoss<Scalar> out;
  out.value = 0.5 * static_cast<double>((d_real.array() - Scalar(1)).square().sum()) / n +
              0.5 * static_cast<double>(d_fake.array().square().sum()) / n;
  out.grad_real = Tensor<Scalar>::like(d_real);
  out.grad_real.array() = (d_real.array() - Scalar(1)) * static_cast<Scalar>(1.0 / n);
  out.grad_fake = Tensor<Scalar>::like(d_fake);
  out.grad_fake.array() = d_fake.array() * static_cast<Scalar>(1.0 / n);
  return out;
}

template <typename Scalar>
LossWithGrad<Scalar> lsgan_g_loss(const Tensor<Scalar>& d_fake) {
  if (d_fake.empty()) throw std::invalid_argument("lsgan_g_loss: empty score grid");
  const auto n = static_cast<double>(d_fake.size());
  LossWithGrad<Scalar> out;
  out.value = 0.5 * static_cast<double>((d_fake.array() - Scalar(1)).square().sum()) / n;
  out.grad = Tensor<Scalar>::like(d_fake);
  out.grad.array() = (d_fake.array() - Scalar(1)) * static_cast<Scalar>(1.0 / n);
  return out;
}

namespace {

template <typename Scalar>
void check_stacks(const FeatureStack<Scalar>& gt, const FeatureStack<Scalar>& fake, const char* who) {
  if (gt.depth() != fake.depth() || gt.depth() == 0)
    throw std::invalid_argument(std::string(who) + ": feature stacks have mismatched layer sets");
  for (std::size_t i = 0; i < gt.depth(); ++i)
    if (!gt.layers[i].same_shape(fake.layers[i]))
      throw std::invalid_argument(std::string(who) + ": layer " + std::to_string(i) + " shape mismatch");
}

}  // namespace

template <typename Scalar>
StackLoss<Scalar> feature_loss(const FeatureStack<Scalar>& gt, const FeatureStack<Scalar>& fake) {
  check_stacks(gt, fake, "feature_loss");
  const auto layers = static_cast<double>(gt.depth());
  StackLoss<Scalar> out;
  for (std::size_t i = 0; i < gt.depth(); ++i) {
    const auto n = static_cast<double>(gt.size(i));
    const auto diff = (fake.layers[i].array() - gt.layers[i].array()).eval();
    out.value += static_cast<double>(diff.abs().sum()) / n / layers;
    Tensor<Scalar> g = Tensor<Scalar>::like(fake.layers[i]);
    g.array() = diff.sign() * static_cast<Scalar>(1.0 / (n * layers));
    out.grads.push_back(std::move(g));
  }
  return out;
}

template <typename Scalar>
RowMatrix<Scalar> gram_matrix(const Tensor<Scalar>& feature_map) {
  if (feature_map.channels() < 1 || feature_map.plane_size() < 1)
    throw std::invalid_argument("gram_matrix: empty feature map");
  const auto& f = feature_map.matrix();
  // Lower triangle via a rank update, mirrored so G is exactly symmetric.
  RowMatrix<Scalar> lower = RowMatrix<Scalar>::Zero(f.rows(), f.rows());
  lower.template selfadjointView<Eigen::Lower>().rankUpdate(f, Scalar(1) / static_cast<Scalar>(f.rows() * f.cols()));
  RowMatrix<Scalar> g = lower.template selfadjointView<Eigen::Lower>();
  return g;
}

template <typename Scalar>
StackLoss<Scalar> style_loss(const FeatureStack<Scalar>& gt, const FeatureStack<Scalar>& fake) {
  check_stacks(gt, fake, "style_loss");
  const auto layers = static_cast<double>(gt.depth());
  StackLoss<Scalar> out;
  for (std::size_t i = 0; i < gt.depth(); ++i) {
    const auto& f = fake.layers[i].matrix();
    const RowMatrix<Scalar> diff = gram_matrix(fake.layers[i]) - gram_matrix(gt.layers[i]);
    const auto entries = static_cast<double>(diff.size());
    out.value += static_cast<double>(diff.array().abs().sum()) / entries / layers;
    // d|G|/dG then dG/dF = (S + S^T) F / (C * P).
    RowMatrix<Scalar> s = diff.array().sign().matrix() * static_cast<Scalar>(1.0 / (entries * layers));
    Tensor<Scalar> g = Tensor<Scalar>::like(fake.layers[i]);
    g.matrix() = (s + s.transpose()) * f / static_cast<Scalar>(f.rows() * f.cols());
    out.grads.push_back(std::move(g));
  }
  return out;
}

double total_generator_loss(const LossComponents& c, const PhaseConfig& cfg) {
  const std::pair<const char*, double> terms[] = {
      {"per-pixel", c.pixel}, {"adversarial", c.adversarial}, {"feature", c.feature}, {"style", c.style}};
  for (const auto& [name, v] : terms)
    if (!std::isfinite(v)) throw std::domain_error(std::string("non-finite ") + name + " loss term: " + std::to_string(v));
  return cfg.alpha * c.pixel + cfg.beta * c.adversarial + cfg.gamma * c.feature + cfg.delta * c.style;
}

#define PIREC_INSTANTIATE_LOSSES(S)                                                                   \
  template Eigen::Index count_nonzero(const Tensor<S>&);                                              \
  template LossWithGrad<S> per_pixel_loss(const Tensor<S>&, const Tensor<S>&, const Tensor<S>&);      \
  template LsganDLoss<S> lsgan_d_loss(const Tensor<S>&, const Tensor<S>&);                            \
  template LossWithGrad<S> lsgan_g_loss(const Tensor<S>&);                                            \
  template StackLoss<S> feature_loss(const FeatureStack<S>&, const FeatureStack<S>&);                 \
  template RowMatrix<S> gram_matrix(const Tensor<S>&);                                                \
  template StackLoss<S> style_loss(const FeatureStack<S>&, const FeatureStack<S>&);

PIREC_INSTANTIATE_LOSSES(float)
PIREC_INSTANTIATE_LOSSES(double)

}  // namespace pirec
