#pragma once

#include "pirec/rng.hpp"
#include "pirec/tensor.hpp"

#include <memory>
#include <string>
#include <vector>

namespace pirec {

/// Weight or persistent buffer. Buffers (trainable = false) are checkpointed
/// but never touched by the optimizer.
template <typename Scalar>
struct Parameter {
  std::string name;
  RowMatrix<Scalar> value;
  RowMatrix<Scalar> grad;
  bool trainable = true;

  void zero_grad() {
    if (trainable) grad.setZero(value.rows(), value.cols());
  }
};

/// A differentiable stage. `forward` caches what `backward` needs; `infer` is
/// const and cache-free so frozen models can serve concurrent callers.
/// `backward` accumulates parameter gradients and returns the input gradient.
template <typename Scalar>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<Scalar> infer(const Tensor<Scalar>& x) const = 0;
  virtual Tensor<Scalar> forward(const Tensor<Scalar>& x) = 0;
  virtual Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) = 0;
  virtual void collect(const std::string& /*prefix*/, std::vector<Parameter<Scalar>*>& /*out*/) {}
  virtual std::string kind() const = 0;
};

enum class PadMode { Zero, Reflect };

struct ConvSpec {
  int in_channels = 1;
  int out_channels = 1;
  int kernel = 3;
  int stride = 1;
  int padding = 0;
  int dilation = 1;
  PadMode pad_mode = PadMode::Zero;
  bool bias = true;
  bool spectral_norm = false;
};

/// Spatial bookkeeping shared by convolution and its transpose.
struct ConvGeometry {
  int channels, in_h, in_w, kernel, stride, padding, dilation;
  PadMode pad_mode;
  int out_h, out_w;

  static ConvGeometry make(int channels, int in_h, int in_w, int kernel, int stride, int padding, int dilation,
                           PadMode mode);
};

/// (channels*k*k) x (out_h*out_w) patch matrix.
template <typename Scalar>
RowMatrix<Scalar> im2col(const Tensor<Scalar>& x, const ConvGeometry& g);
/// Adjoint of im2col: scatters-and-adds columns back onto the input grid.
template <typename Scalar>
Tensor<Scalar> col2im(const RowMatrix<Scalar>& cols, const ConvGeometry& g);

template <typename Scalar>
class Conv2d final : public Layer<Scalar> {
 public:
  Conv2d(const ConvSpec& spec, Rng& rng, double init_std = 0.02);

  Tensor<Scalar> infer(const Tensor<Scalar>& x) const override;
  Tensor<Scalar> forward(const Tensor<Scalar>& x) override;
  Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) override;
  void collect(const std::string& prefix, std::vector<Parameter<Scalar>*>& out) override;
  std::string kind() const override { return spec_.spectral_norm ? "conv2d_sn" : "conv2d"; }

  const ConvSpec& spec() const { return spec_; }
  /// Weight actually applied to inputs (divided by the spectral estimate when enabled).
  RowMatrix<Scalar> effective_weight() const;
  Parameter<Scalar>& weight() { return weight_; }
  Parameter<Scalar>& bias() { return bias_; }
  /// Runs additional power iterations on the stored left singular vector.
  void refine_spectral_estimate(int iterations);
  /// Runs power iterations until the estimate settles; used at construction.
  void converge_spectral_estimate(double tolerance = 1e-10, int max_iterations = 20000);

 private:
  struct SpectralTerms {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> u, v;
    Scalar sigma;
  };
  SpectralTerms spectral_terms(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& u) const;
  Tensor<Scalar> apply(const Tensor<Scalar>& x, const RowMatrix<Scalar>& w, RowMatrix<Scalar>* cols_out) const;

  ConvSpec spec_;
  Parameter<Scalar> weight_;  // out x (in*k*k)
  Parameter<Scalar> bias_;    // out x 1
  Parameter<Scalar> u_;       // out x 1, spectral-norm buffer

  // backward cache
  RowMatrix<Scalar> cols_;
  RowMatrix<Scalar> w_eff_;
  SpectralTerms sn_cache_;
  ConvGeometry geom_{};
};

/// Transposed convolution with zero padding; output = (in-1)*stride - 2*pad + kernel.
template <typename Scalar>
class ConvTranspose2d final : public Layer<Scalar> {
 public:
  ConvTranspose2d(int in_channels, int out_channels, int kernel, int stride, int padding, Rng& rng,
                  double init_std = 0.02);

  Tensor<Scalar> infer(const Tensor<Scalar>& x) const override;
  Tensor<Scalar> forward(const Tensor<Scalar>& x) override;
  Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) override;
  void collect(const std::string& prefix, std::vector<Parameter<Scalar>*>& out) override;
  std::string kind() const override { return "conv_transpose2d"; }

 private:
  ConvGeometry geometry_for(const Tensor<Scalar>& x) const;

  int in_, out_, kernel_, stride_, padding_;
  Parameter<Scalar> weight_;  // in x (out*k*k)
  Parameter<Scalar> bias_;    // out x 1
  Tensor<Scalar> input_;
  ConvGeometry geom_{};
};

/// Per-sample, per-channel normalization without affine terms.
template <typename Scalar>
class InstanceNorm final : public Layer<Scalar> {
 public:
  explicit InstanceNorm(double eps = 1e-5) : eps_(eps) {}
  Tensor<Scalar> infer(const Tensor<Scalar>& x) const override;
  Tensor<Scalar> forward(const Tensor<Scalar>& x) override;
  Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) override;
  std::string kind() const override { return "instance_norm"; }

 private:
  double eps_;
  Tensor<Scalar> normalized_;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv_std_;
};

enum class ActivationKind { ReLU, LeakyReLU, Tanh, Sigmoid };

template <typename Scalar>
class Activation final : public Layer<Scalar> {
 public:
  explicit Activation(ActivationKind kind, double slope = 0.2) : kind_(kind), slope_(slope) {}
  Tensor<Scalar> infer(const Tensor<Scalar>& x) const override;
  Tensor<Scalar> forward(const Tensor<Scalar>& x) override;
  Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) override;
  std::string kind() const override;

 private:
  ActivationKind kind_;
  double slope_;
  Tensor<Scalar> input_, output_;
};

/// x2 bilinear upsampling with half-pixel centers.
template <typename Scalar>
class BilinearUpsample final : public Layer<Scalar> {
 public:
  Tensor<Scalar> infer(const Tensor<Scalar>& x) const override;
  Tensor<Scalar> forward(const Tensor<Scalar>& x) override;
  Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) override;
  std::string kind() const override { return "bilinear_upsample"; }

 private:
  int in_h_ = 0, in_w_ = 0;
};

/// 2x2 average pooling, stride 2 (odd trailing row/column dropped).
template <typename Scalar>
class AvgPool2 final : public Layer<Scalar> {
 public:
  Tensor<Scalar> infer(const Tensor<Scalar>& x) const override;
  Tensor<Scalar> forward(const Tensor<Scalar>& x) override;
  Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) override;
  std::string kind() const override { return "avg_pool2"; }

 private:
  int in_h_ = 0, in_w_ = 0;
};

template <typename Scalar>
class Sequential final : public Layer<Scalar> {
 public:
  Sequential() = default;
  template <typename L, typename... Args>
  L& emplace(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }
  void push(std::unique_ptr<Layer<Scalar>> layer) { layers_.push_back(std::move(layer)); }

  Tensor<Scalar> infer(const Tensor<Scalar>& x) const override;
  Tensor<Scalar> forward(const Tensor<Scalar>& x) override;
  Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) override;
  void collect(const std::string& prefix, std::vector<Parameter<Scalar>*>& out) override;
  std::string kind() const override { return "sequential"; }

  std::size_t size() const { return layers_.size(); }
  Layer<Scalar>& at(std::size_t i) { return *layers_.at(i); }
  const Layer<Scalar>& at(std::size_t i) const { return *layers_.at(i); }

 private:
  std::vector<std::unique_ptr<Layer<Scalar>>> layers_;
};

/// x + body(x)
template <typename Scalar>
class Residual final : public Layer<Scalar> {
 public:
  Sequential<Scalar>& body() { return body_; }
  Tensor<Scalar> infer(const Tensor<Scalar>& x) const override;
  Tensor<Scalar> forward(const Tensor<Scalar>& x) override;
  Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) override;
  void collect(const std::string& prefix, std::vector<Parameter<Scalar>*>& out) override;
  std::string kind() const override { return "residual"; }

 private:
  Sequential<Scalar> body_;
};

/// Top singular value by power iteration; independent of the layer's own estimate.
template <typename Scalar>
double top_singular_value(const RowMatrix<Scalar>& m, int iterations = 500);

}  // namespace pirec
