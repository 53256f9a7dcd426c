#include "pirec/extractor.hpp"

#include "pirec/archive.hpp"

#include <cmath>
#include <stdexcept>

namespace pirec {

ExtractorConfig ExtractorConfig::vgg19() {
  ExtractorConfig c;
  c.widths = {64, 128, 256, 512, 512};
  c.convs_per_block = {2, 2, 4, 4, 4};
  c.name = "vgg19";
  return c;
}

ExtractorConfig ExtractorConfig::small_random(std::size_t blocks, std::uint64_t seed) {
  ExtractorConfig c;
  const std::vector<int> widths{8, 16, 16, 32, 32, 32};
  if (blocks < 1 || blocks > widths.size()) throw std::invalid_argument("small_random: 1..6 blocks");
  c.widths.assign(widths.begin(), widths.begin() + static_cast<std::ptrdiff_t>(blocks));
  c.convs_per_block.assign(blocks, 1);
  c.seed = seed;
  return c;
}

void ExtractorConfig::validate() const {
  if (widths.empty() || widths.size() != convs_per_block.size())
    throw std::invalid_argument("extractor widths and convs_per_block must be non-empty and equal length");
  for (std::size_t i = 0; i < widths.size(); ++i)
    if (widths[i] < 1 || convs_per_block[i] < 1) throw std::invalid_argument("extractor block sizes must be >= 1");
}

template <typename Scalar>
PerceptualExtractor<Scalar>::PerceptualExtractor(const ExtractorConfig& config) : config_(config) {
  config_.validate();
  Rng rng(derive_seed(config.seed, {0x564747}));
  int in = 3;
  for (std::size_t b = 0; b < config.widths.size(); ++b) {
    if (b > 0) layers_.push_back(std::make_unique<AvgPool2<Scalar>>());
    for (int k = 0; k < config.convs_per_block[b]; ++k) {
      const int out = config.widths[b];
      // He-scaled weights keep activations O(1) through the random stack.
      const double stddev = std::sqrt(2.0 / (9.0 * in));
      layers_.push_back(
          std::make_unique<Conv2d<Scalar>>(ConvSpec{in, out, 3, 1, 1, 1, PadMode::Zero, true, false}, rng, stddev));
      if (k == 0) taps_.push_back(layers_.size() - 1);
      const bool last = b + 1 == config.widths.size() && k == 0;
      if (last) break;  // nothing past the final tap contributes
      layers_.push_back(std::make_unique<Activation<Scalar>>(ActivationKind::ReLU));
      in = out;
    }
  }
}

template <typename Scalar>
FeatureStack<Scalar> PerceptualExtractor<Scalar>::extract(const Tensor<Scalar>& image) const {
  if (image.channels() != 3) throw std::invalid_argument("extractor expects a 3-channel image");
  FeatureStack<Scalar> stack;
  Tensor<Scalar> h = image;
  std::size_t next_tap = 0;
  for (std::size_t i = 0; i < layers_.size() && next_tap < taps_.size(); ++i) {
    h = layers_[i]->infer(h);
    if (i == taps_[next_tap]) {
      stack.layers.push_back(h);
      ++next_tap;
    }
  }
  return stack;
}

template <typename Scalar>
FeatureStack<Scalar> PerceptualExtractor<Scalar>::forward(const Tensor<Scalar>& image) {
  if (image.channels() != 3) throw std::invalid_argument("extractor expects a 3-channel image");
  FeatureStack<Scalar> stack;
  Tensor<Scalar> h = image;
  std::size_t next_tap = 0;
  for (std::size_t i = 0; i < layers_.size() && next_tap < taps_.size(); ++i) {
    h = layers_[i]->forward(h);
    if (i == taps_[next_tap]) {
      stack.layers.push_back(h);
      ++next_tap;
    }
  }
  return stack;
}

template <typename Scalar>
Tensor<Scalar> PerceptualExtractor<Scalar>::backward(const std::vector<Tensor<Scalar>>& tap_grads) {
  if (tap_grads.size() != taps_.size()) throw std::invalid_argument("extractor backward: one gradient per tap");
  Tensor<Scalar> g;
  for (std::size_t t = taps_.size(); t-- > 0;) {
    const std::size_t stop = t == 0 ? 0 : taps_[t - 1] + 1;
    if (g.empty()) {
      g = tap_grads[t];
    } else {
      g.matrix() += tap_grads[t].matrix();
    }
    for (std::size_t i = taps_[t] + 1; i-- > stop;) g = layers_[i]->backward(g);
  }
  // Frozen: parameter gradients are discarded.
  for (auto* c : convolutions()) {
    c->weight().zero_grad();
    c->bias().zero_grad();
  }
  return g;
}

template <typename Scalar>
std::vector<Conv2d<Scalar>*> PerceptualExtractor<Scalar>::convolutions() {
  std::vector<Conv2d<Scalar>*> out;
  for (auto& l : layers_)
    if (auto* c = dynamic_cast<Conv2d<Scalar>*>(l.get())) out.push_back(c);
  return out;
}

template <typename Scalar>
void PerceptualExtractor<Scalar>::load_weights(const std::string& path) {
  const Archive a = Archive::load(path);
  auto convs = convolutions();
  for (std::size_t i = 0; i < convs.size(); ++i) {
    const std::string base = "E." + std::to_string(i) + ".";
    RowMatrix<Scalar> w = a.get<Scalar>(base + "weight");
    RowMatrix<Scalar> b = a.get<Scalar>(base + "bias");
    auto& cw = convs[i]->weight().value;
    auto& cb = convs[i]->bias().value;
    if (w.size() != cw.size() || b.size() != cb.size())
      throw std::runtime_error("extractor weight shape mismatch at conv " + std::to_string(i));
    cw = Eigen::Map<RowMatrix<Scalar>>(w.data(), cw.rows(), cw.cols());
    cb = Eigen::Map<RowMatrix<Scalar>>(b.data(), cb.rows(), cb.cols());
  }
}

template class PerceptualExtractor<float>;
template class PerceptualExtractor<double>;

}  // namespace pirec
