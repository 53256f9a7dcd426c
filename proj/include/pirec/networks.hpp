#pragma once

#include "pirec/layers.hpp"
#include "pirec/preproc.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace pirec {

enum class Phase : int { Imitation = 1, Generating = 2, Refinement = 3 };

Phase phase_from_int(int id);
inline int to_int(Phase p) { return static_cast<int>(p); }
const char* phase_name(Phase p);

struct GeneratorConfig {
  int input_channels = 4;  // edge + 3-channel conditioning image
  int output_channels = 3;
  int residual_blocks = 8;
  int base_width = 64;
  int dilation = 2;
  int downsampling_stages = 2;
  /// First decoder stage upsamples bilinearly and convolves; later stages use transposed convolutions.
  bool bilinear_first_stage = true;
  /// Parameter-free instance normalization after hidden convolutions.
  bool instance_norm = true;
  std::uint64_t seed = 1;

  int downsampling_factor() const { return 1 << downsampling_stages; }
  void validate() const;
};

struct DiscriminatorConfig {
  int input_channels = 3;
  int base_width = 64;
  int strided_layers = 3;
  bool spectral_norm = true;
  /// Concatenates the edge map to the image (4 input channels).
  bool conditional = false;
  std::uint64_t seed = 2;

  void validate() const;
};

void to_json(nlohmann::json& j, const GeneratorConfig& c);
void from_json(const nlohmann::json& j, GeneratorConfig& c);
void to_json(nlohmann::json& j, const DiscriminatorConfig& c);
void from_json(const nlohmann::json& j, DiscriminatorConfig& c);

template <typename Scalar>
struct GeneratorOutput {
  Tensor<Scalar> image;  // 3 x H x W in [-1, 1]
  Phase phase = Phase::Generating;
};

/// Encoder, dilated residual trunk, decoder; no encoder/decoder skips.
template <typename Scalar>
class Generator {
 public:
  explicit Generator(const GeneratorConfig& config);

  const GeneratorConfig& config() const { return config_; }
  const std::string& model_id() const { return model_id_; }
  void set_model_id(std::string id) { model_id_ = std::move(id); }

  /// Evaluation-mode pass; const, deterministic and cache-free.
  GeneratorOutput<Scalar> infer(const Tensor<Scalar>& edge, const Tensor<Scalar>& conditioning, Phase phase) const;
  /// Training-mode pass that records activations for `backward`.
  GeneratorOutput<Scalar> forward(const Tensor<Scalar>& edge, const Tensor<Scalar>& conditioning, Phase phase);
  /// Accumulates parameter gradients for d(loss)/d(output image).
  void backward(const Tensor<Scalar>& grad_image);

  std::vector<Parameter<Scalar>*> parameters();
  std::size_t parameter_count();
  void zero_grad();
  std::uint64_t weights_hash();

 private:
  Tensor<Scalar> assemble(const Tensor<Scalar>& edge, const Tensor<Scalar>& conditioning) const;

  GeneratorConfig config_;
  std::string model_id_;
  Sequential<Scalar> net_;
};

/// PatchGAN with spectrally normalized convolutions and a sigmoid head.
template <typename Scalar>
class Discriminator {
 public:
  explicit Discriminator(const DiscriminatorConfig& config);

  const DiscriminatorConfig& config() const { return config_; }
  const std::string& model_id() const { return model_id_; }
  void set_model_id(std::string id) { model_id_ = std::move(id); }

  /// `edge` is consulted only by the conditional variant.
  Tensor<Scalar> infer(const Tensor<Scalar>& image, const Tensor<Scalar>* edge = nullptr) const;
  Tensor<Scalar> forward(const Tensor<Scalar>& image, const Tensor<Scalar>* edge = nullptr);
  /// Returns d(loss)/d(image) and accumulates parameter gradients.
  Tensor<Scalar> backward(const Tensor<Scalar>& grad_scores);

  std::vector<Parameter<Scalar>*> parameters();
  std::vector<Conv2d<Scalar>*> convolutions();
  void zero_grad();
  std::uint64_t weights_hash();

 private:
  Tensor<Scalar> assemble(const Tensor<Scalar>& image, const Tensor<Scalar>* edge) const;

  DiscriminatorConfig config_;
  std::string model_id_;
  Sequential<Scalar> net_;
};

std::string make_model_id(const char* prefix, std::uint64_t seed);

/// Inference from an edge map and a color domain. Phase 3 feeds the phase-2
/// output back in as conditioning; phase 1 treats `style` as the masked image.
template <typename Scalar>
Tensor<Scalar> reconstruct(const Generator<Scalar>& g, const Tensor<Scalar>& edge, const Tensor<Scalar>& style,
                           Phase phase);

}  // namespace pirec
