#include "pirec/networks.hpp"

#include <cstdio>
#include <stdexcept>

namespace pirec {

Phase phase_from_int(int id) {
  if (id < 1 || id > 3) throw std::invalid_argument("phase id must be 1, 2 or 3 (got " + std::to_string(id) + ")");
  return static_cast<Phase>(id);
}

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Imitation: return "imitation";
    case Phase::Generating: return "generating";
    case Phase::Refinement: return "refinement";
  }
  return "unknown";
}

std::string make_model_id(const char* prefix, std::uint64_t seed) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s-%016llx", prefix, static_cast<unsigned long long>(splitmix64(seed)));
  return buf;
}

void GeneratorConfig::validate() const {
  if (input_channels != 4) throw std::invalid_argument("generator expects 4 input channels (edge + image)");
  if (output_channels != 3) throw std::invalid_argument("generator emits 3 channels");
  if (residual_blocks < 0 || base_width < 1 || dilation < 1 || downsampling_stages < 1)
    throw std::invalid_argument("invalid generator config");
}

void DiscriminatorConfig::validate() const {
  if (input_channels != (conditional ? 4 : 3))
    throw std::invalid_argument("discriminator input_channels must be 3 (4 when conditional)");
  if (base_width < 1 || strided_layers < 1) throw std::invalid_argument("invalid discriminator config");
}

void to_json(nlohmann::json& j, const GeneratorConfig& c) {
  j = {{"input_channels", c.input_channels},   {"output_channels", c.output_channels},
       {"residual_blocks", c.residual_blocks}, {"base_width", c.base_width},
       {"dilation", c.dilation},               {"downsampling_stages", c.downsampling_stages},
       {"bilinear_first_stage", c.bilinear_first_stage}, {"instance_norm", c.instance_norm},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, GeneratorConfig& c) {
  c.input_channels = j.value("input_channels", c.input_channels);
  c.output_channels = j.value("output_channels", c.output_channels);
  c.residual_blocks = j.value("residual_blocks", c.residual_blocks);
  c.base_width = j.value("base_width", c.base_width);
  c.dilation = j.value("dilation", c.dilation);
  c.downsampling_stages = j.value("downsampling_stages", c.downsampling_stages);
  c.bilinear_first_stage = j.value("bilinear_first_stage", c.bilinear_first_stage);
  c.instance_norm = j.value("instance_norm", c.instance_norm);
  c.seed = j.value("seed", c.seed);
}

void to_json(nlohmann::json& j, const DiscriminatorConfig& c) {
  j = {{"input_channels", c.input_channels}, {"base_width", c.base_width},   {"strided_layers", c.strided_layers},
       {"spectral_norm", c.spectral_norm},   {"conditional", c.conditional}, {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, DiscriminatorConfig& c) {
  c.conditional = j.value("conditional", c.conditional);
  c.input_channels = j.value("input_channels", c.conditional ? 4 : 3);
  c.base_width = j.value("base_width", c.base_width);
  c.strided_layers = j.value("strided_layers", c.strided_layers);
  c.spectral_norm = j.value("spectral_norm", c.spectral_norm);
  c.seed = j.value("seed", c.seed);
}

namespace {

template <typename Scalar>
void conv_block(Sequential<Scalar>& seq, const ConvSpec& spec, Rng& rng, bool norm, bool relu) {
  seq.template emplace<Conv2d<Scalar>>(spec, rng);
  if (norm) seq.template emplace<InstanceNorm<Scalar>>();
  if (relu) seq.template emplace<Activation<Scalar>>(ActivationKind::ReLU);
}

template <typename Scalar>
std::uint64_t hash_parameters(const std::vector<Parameter<Scalar>*>& params) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto* p : params) {
    h = fnv1a(p->value.data(), static_cast<std::size_t>(p->value.size()) * sizeof(Scalar), h);
  }
  return h;
}

}  // namespace

template <typename Scalar>
Generator<Scalar>::Generator(const GeneratorConfig& config)
    : config_(config), model_id_(make_model_id("G", config.seed)) {
  config_.validate();
  Rng rng(derive_seed(config.seed, {0x47454E}));
  const int w = config.base_width;
  const bool norm = config.instance_norm;

  conv_block(net_, ConvSpec{config.input_channels, w, 7, 1, 3, 1, PadMode::Reflect}, rng, norm, true);
  int width = w;
  for (int s = 0; s < config.downsampling_stages; ++s) {
    conv_block(net_, ConvSpec{width, width * 2, 4, 2, 1, 1, PadMode::Zero}, rng, norm, true);
    width *= 2;
  }
  for (int b = 0; b < config.residual_blocks; ++b) {
    auto& block = net_.template emplace<Residual<Scalar>>();
    const int d = config.dilation;
    conv_block(block.body(), ConvSpec{width, width, 3, 1, d, d, PadMode::Reflect}, rng, norm, true);
    conv_block(block.body(), ConvSpec{width, width, 3, 1, 1, 1, PadMode::Reflect}, rng, norm, false);
  }
  for (int s = 0; s < config.downsampling_stages; ++s) {
    if (s == 0 && config.bilinear_first_stage) {
      net_.template emplace<BilinearUpsample<Scalar>>();
      conv_block(net_, ConvSpec{width, width / 2, 3, 1, 1, 1, PadMode::Reflect}, rng, norm, true);
    } else {
      net_.template emplace<ConvTranspose2d<Scalar>>(width, width / 2, 4, 2, 1, rng);
      if (norm) net_.template emplace<InstanceNorm<Scalar>>();
      net_.template emplace<Activation<Scalar>>(ActivationKind::ReLU);
    }
    width /= 2;
  }
  conv_block(net_, ConvSpec{width, config.output_channels, 7, 1, 3, 1, PadMode::Reflect}, rng, false, false);
  net_.template emplace<Activation<Scalar>>(ActivationKind::Tanh);
}

template <typename Scalar>
Tensor<Scalar> Generator<Scalar>::assemble(const Tensor<Scalar>& edge, const Tensor<Scalar>& conditioning) const {
  if (edge.channels() != 1 || conditioning.channels() != 3)
    throw std::invalid_argument("generator expects a 1-channel edge and a 3-channel conditioning image");
  if (!edge.same_spatial(conditioning))
    throw std::invalid_argument("generator inputs differ in size: " + edge.shape_string() + " vs " +
                                conditioning.shape_string());
  const int f = config_.downsampling_factor();
  if (edge.height() % f != 0 || edge.width() % f != 0)
    throw std::invalid_argument("generator input size must be a multiple of " + std::to_string(f));
  return concat_channels(edge, conditioning);
}

template <typename Scalar>
GeneratorOutput<Scalar> Generator<Scalar>::infer(const Tensor<Scalar>& edge, const Tensor<Scalar>& conditioning,
                                                 Phase phase) const {
  return {net_.infer(assemble(edge, conditioning)), phase};
}

template <typename Scalar>
GeneratorOutput<Scalar> Generator<Scalar>::forward(const Tensor<Scalar>& edge, const Tensor<Scalar>& conditioning,
                                                   Phase phase) {
  return {net_.forward(assemble(edge, conditioning)), phase};
}

template <typename Scalar>
void Generator<Scalar>::backward(const Tensor<Scalar>& grad_image) {
  net_.backward(grad_image);
}

template <typename Scalar>
std::vector<Parameter<Scalar>*> Generator<Scalar>::parameters() {
  std::vector<Parameter<Scalar>*> out;
  net_.collect("G.", out);
  return out;
}

template <typename Scalar>
std::size_t Generator<Scalar>::parameter_count() {
  std::size_t n = 0;
  for (auto* p : parameters())
    if (p->trainable) n += static_cast<std::size_t>(p->value.size());
  return n;
}

template <typename Scalar>
void Generator<Scalar>::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

template <typename Scalar>
std::uint64_t Generator<Scalar>::weights_hash() {
  return hash_parameters(parameters());
}

template <typename Scalar>
Discriminator<Scalar>::Discriminator(const DiscriminatorConfig& config)
    : config_(config), model_id_(make_model_id("D", config.seed)) {
  config_.validate();
  Rng rng(derive_seed(config.seed, {0x444953}));
  const bool sn = config.spectral_norm;
  int in = config.input_channels, width = config.base_width;
  for (int i = 0; i < config.strided_layers; ++i) {
    net_.template emplace<Conv2d<Scalar>>(ConvSpec{in, width, 4, 2, 1, 1, PadMode::Zero, !sn, sn}, rng);
    net_.template emplace<Activation<Scalar>>(ActivationKind::LeakyReLU, 0.2);
    in = width;
    width *= 2;
  }
  net_.template emplace<Conv2d<Scalar>>(ConvSpec{in, width, 4, 1, 1, 1, PadMode::Zero, !sn, sn}, rng);
  net_.template emplace<Activation<Scalar>>(ActivationKind::LeakyReLU, 0.2);
  net_.template emplace<Conv2d<Scalar>>(ConvSpec{width, 1, 4, 1, 1, 1, PadMode::Zero, !sn, sn}, rng);
  net_.template emplace<Activation<Scalar>>(ActivationKind::Sigmoid);
}

template <typename Scalar>
Tensor<Scalar> Discriminator<Scalar>::assemble(const Tensor<Scalar>& image, const Tensor<Scalar>* edge) const {
  if (image.channels() != 3) throw std::invalid_argument("discriminator expects a 3-channel image");
  if (!config_.conditional) return image;
  if (edge == nullptr) throw std::invalid_argument("conditional discriminator requires the edge map");
  return concat_channels(image, *edge);
}

template <typename Scalar>
Tensor<Scalar> Discriminator<Scalar>::infer(const Tensor<Scalar>& image, const Tensor<Scalar>* edge) const {
  return net_.infer(assemble(image, edge));
}

template <typename Scalar>
Tensor<Scalar> Discriminator<Scalar>::forward(const Tensor<Scalar>& image, const Tensor<Scalar>* edge) {
  return net_.forward(assemble(image, edge));
}

template <typename Scalar>
Tensor<Scalar> Discriminator<Scalar>::backward(const Tensor<Scalar>& grad_scores) {
  Tensor<Scalar> g = net_.backward(grad_scores);
  if (!config_.conditional) return g;
  Tensor<Scalar> image_grad(3, g.height(), g.width());
  image_grad.matrix() = g.matrix().topRows(3);
  return image_grad;
}

template <typename Scalar>
std::vector<Parameter<Scalar>*> Discriminator<Scalar>::parameters() {
  std::vector<Parameter<Scalar>*> out;
  net_.collect("D.", out);
  return out;
}

template <typename Scalar>
std::vector<Conv2d<Scalar>*> Discriminator<Scalar>::convolutions() {
  std::vector<Conv2d<Scalar>*> out;
  for (std::size_t i = 0; i < net_.size(); ++i)
    if (auto* c = dynamic_cast<Conv2d<Scalar>*>(&net_.at(i))) out.push_back(c);
  return out;
}

template <typename Scalar>
void Discriminator<Scalar>::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

template <typename Scalar>
std::uint64_t Discriminator<Scalar>::weights_hash() {
  return hash_parameters(parameters());
}

template <typename Scalar>
Tensor<Scalar> reconstruct(const Generator<Scalar>& g, const Tensor<Scalar>& edge, const Tensor<Scalar>& style,
                           Phase phase) {
  if (phase != Phase::Refinement) return g.infer(edge, style, phase).image;
  const Tensor<Scalar> coarse = g.infer(edge, style, Phase::Generating).image;
  return g.infer(edge, coarse, Phase::Refinement).image;
}

template class Generator<float>;
template class Generator<double>;
template Tensor<float> reconstruct(const Generator<float>&, const Tensor<float>&, const Tensor<float>&, Phase);
template Tensor<double> reconstruct(const Generator<double>&, const Tensor<double>&, const Tensor<double>&, Phase);
template class Discriminator<float>;
template class Discriminator<double>;

}  // namespace pirec
