#pragma once

#include "pirec/layers.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pirec {

/// Pre-activation outputs of the first convolution of each block, in order.
template <typename Scalar>
struct FeatureStack {
  std::vector<Tensor<Scalar>> layers;

  std::size_t depth() const { return layers.size(); }
  /// Element count N_i of layer i.
  Eigen::Index size(std::size_t i) const { return layers.at(i).size(); }
};

/// VGG-shaped feature network: blocks of 3x3 convolutions separated by 2x pooling.
struct ExtractorConfig {
  std::vector<int> widths{8, 16, 16, 32, 32};
  std::vector<int> convs_per_block{1, 1, 1, 1, 1};
  std::uint64_t seed = 7;
  std::string name = "random-small";

  /// The 19-layer classification network layout (conv1_1 ... conv5_1 taps).
  static ExtractorConfig vgg19();
  /// Small fixed-seed random-weight network for tests and desk-scale runs.
  static ExtractorConfig small_random(std::size_t blocks = 5, std::uint64_t seed = 7);
  void validate() const;
};

/// Frozen perceptual network. Gradients flow to the input only.
template <typename Scalar>
class PerceptualExtractor {
 public:
  explicit PerceptualExtractor(const ExtractorConfig& config);

  const ExtractorConfig& config() const { return config_; }
  std::size_t depth() const { return taps_.size(); }

  FeatureStack<Scalar> extract(const Tensor<Scalar>& image) const;
  /// Records activations so that `backward` can return d(loss)/d(image).
  FeatureStack<Scalar> forward(const Tensor<Scalar>& image);
  Tensor<Scalar> backward(const std::vector<Tensor<Scalar>>& tap_grads);

  std::vector<Conv2d<Scalar>*> convolutions();
  /// Loads weights in layer order from a checkpoint-style archive.
  void load_weights(const std::string& path);

 private:
  ExtractorConfig config_;
  std::vector<std::unique_ptr<Layer<Scalar>>> layers_;
  std::vector<std::size_t> taps_;  // index of the layer whose output is tapped
};

}  // namespace pirec
