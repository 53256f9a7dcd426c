#pragma once

#include "pirec/archive.hpp"
#include "pirec/networks.hpp"
#include "pirec/preproc.hpp"

#include <memory>
#include <string>
#include <vector>

namespace pirec {

inline constexpr int kCheckpointVersion = 1;

/// Stores every parameter (including non-trainable buffers) under its name.
template <typename Scalar>
void save_parameters(Archive& ar, const std::vector<Parameter<Scalar>*>& params);
/// Loads by name; missing tensors or shape mismatches throw.
template <typename Scalar>
void load_parameters(const Archive& ar, const std::vector<Parameter<Scalar>*>& params);

nlohmann::json preproc_to_json(const PreprocParams& p);
PreprocParams preproc_from_json(const nlohmann::json& j);
nlohmann::json hc_to_json(const HcRanges& r);
HcRanges hc_from_json(const nlohmann::json& j);

/// What inference needs from a training run.
struct ModelCheckpoint {
  Phase phase = Phase::Generating;
  GeneratorConfig generator_config;
  DiscriminatorConfig discriminator_config;
  std::string model_id;
  std::uint64_t weights_hash = 0;
  /// Preprocessing defaults used in training (reference parameters for inference).
  nlohmann::json preprocessing = nlohmann::json::object();
  std::shared_ptr<const Generator<float>> generator;
};

/// Writes a version-tagged phase checkpoint with generator and discriminator weights.
void save_model_checkpoint(const std::string& path, Generator<float>& g, Discriminator<float>& d, Phase phase,
                           const nlohmann::json& preprocessing);

/// Reads a checkpoint back into a frozen generator.
ModelCheckpoint load_model_checkpoint(const std::string& path);

}  // namespace pirec
