#pragma once

#include "pirec/dataio.hpp"
#include "pirec/extractor.hpp"
#include "pirec/losses.hpp"
#include "pirec/networks.hpp"
#include "pirec/optim.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pirec {

struct TrainerConfig {
  GeneratorConfig generator;
  DiscriminatorConfig discriminator;
  ExtractorConfig extractor = ExtractorConfig::small_random();
  /// Optional archive with pretrained extractor weights.
  std::string extractor_weights;
  std::array<PhaseConfig, 3> phases{PhaseConfig::defaults(Phase::Imitation), PhaseConfig::defaults(Phase::Generating),
                                    PhaseConfig::defaults(Phase::Refinement)};

  /// Hyperparameter confusion: sample preprocessing per item and epoch.
  bool hc_enabled = true;
  HcRanges hc;
  /// Used when HC is off, and always for validation.
  PreprocParams fixed_params = reference_params();

  int image_size = 64;
  /// 0 picks 8 at 128x128, scaled inversely with pixel count.
  int batch_size = 0;
  AdamConfig adam_g{1e-4, 0.0, 0.9, 1e-8};
  AdamConfig adam_d{1e-5, 0.0, 0.9, 1e-8};
  double max_hidden_fraction = 0.7;
  /// When false every phase runs exactly max_epochs.
  bool convergence_gate = true;
  /// A finished phase hands over the state of its best validation epoch.
  bool restore_best = true;
  /// Caps on items per epoch / validation items (0 = all).
  int train_limit = 0;
  int validation_limit = 0;
  /// Preprocessed validation samples are cached here when set.
  std::string cache_dir;
  std::uint64_t seed = 42;

  static PreprocParams reference_params();
  int effective_batch_size() const;
  const PhaseConfig& phase_config(Phase p) const { return phases.at(static_cast<std::size_t>(to_int(p) - 1)); }
  void validate() const;
};

void to_json(nlohmann::json& j, const TrainerConfig& c);
void from_json(const nlohmann::json& j, TrainerConfig& c);

/// Progress within one phase.
struct PhaseState {
  Phase phase = Phase::Imitation;
  int epoch = 0;                      // completed epochs
  std::vector<double> loss_history;   // per-epoch validation loss
  bool converged = false;
};

struct StepMetrics {
  double d_loss = 0.0;
  LossComponents g;
  double g_total = 0.0;
};

/// Raised when a loss turns non-finite; carries the batch description.
class NonFiniteLoss : public std::domain_error {
 public:
  NonFiniteLoss(const std::string& what, nlohmann::json batch) : std::domain_error(what), batch_(std::move(batch)) {}
  const nlohmann::json& batch() const { return batch_; }

 private:
  nlohmann::json batch_;
};

/// Edge and conditioning image for one generator pass.
template <typename Scalar>
struct PhaseInput {
  Tensor<Scalar> edge;
  Tensor<Scalar> conditioning;
};

/// Phase 1: mask * x_gt; phase 2: color domain; phase 3: `prev_output`.
template <typename Scalar>
PhaseInput<Scalar> build_phase_input(const TrainingSample<Scalar>& sample, Phase phase,
                                     const Tensor<Scalar>* prev_output = nullptr);

/// True once the best loss has not improved by `min_delta` over the last
/// `patience` epochs, or the history reached `max_epochs`.
bool check_convergence(const std::vector<double>& history, int patience, double min_delta, int max_epochs = 0);

/// The single generator/discriminator pair with its optimizers and the frozen
/// perceptual extractor. Not copyable or movable: optimizers hold parameter pointers.
class TrainingSession {
 public:
  explicit TrainingSession(const TrainerConfig& config);
  TrainingSession(const TrainingSession&) = delete;
  TrainingSession& operator=(const TrainingSession&) = delete;

  const TrainerConfig& config() const { return config_; }
  Generator<float>& generator() { return g_; }
  Discriminator<float>& discriminator() { return d_; }
  const PerceptualExtractor<float>& extractor() const { return extractor_; }
  Adam<float>& generator_optimizer() { return opt_g_; }
  Adam<float>& discriminator_optimizer() { return opt_d_; }

  /// Conditioning for every sample in the batch; phase 3 runs the current generator in phase-2 mode.
  std::vector<PhaseInput<float>> phase_inputs(const std::vector<TrainingSample<float>>& batch, Phase phase) const;

  /// One discriminator update on the batch (generator frozen). Returns the LSGAN loss before the update.
  double discriminator_update(const std::vector<TrainingSample<float>>& batch, const PhaseConfig& cfg);
  /// One generator update (discriminator frozen). Returns the loss terms before the update.
  StepMetrics generator_update(const std::vector<TrainingSample<float>>& batch, const PhaseConfig& cfg);
  /// Discriminator update then generator update on the same batch.
  StepMetrics train_step(const std::vector<TrainingSample<float>>& batch, const PhaseConfig& cfg);

  /// Losses without touching any state (evaluation-mode passes only).
  double discriminator_loss(const std::vector<TrainingSample<float>>& batch, const PhaseConfig& cfg) const;
  StepMetrics generator_loss(const std::vector<TrainingSample<float>>& batch, const PhaseConfig& cfg) const;

  void save_state(Archive& ar) const;
  void load_state(const Archive& ar);

 private:
  TrainerConfig config_;
  Generator<float> g_;
  Discriminator<float> d_;
  PerceptualExtractor<float> extractor_;
  Adam<float> opt_g_, opt_d_;
};

/// Observes training; throwing from a hook aborts the run (used to simulate interruption).
struct TrainerHooks {
  std::function<void(Phase, int epoch, int step, const StepMetrics&)> on_step;
  std::function<void(const PhaseState&)> on_epoch;
};

struct TrainResult {
  std::array<std::string, 3> checkpoints;        // phase 1..3 model checkpoints
  std::array<std::uint64_t, 3> end_hashes{};     // generator hash at the end of each phase
  std::array<std::uint64_t, 3> start_hashes{};   // generator hash at the start of each phase
  std::array<PhaseState, 3> phases;
  std::string model_id;
  std::uint64_t final_hash = 0;
};

/// Runs phases 1 -> 2 -> 3 in `output_dir`, writing metrics.jsonl, an
/// end-of-epoch full-state checkpoint (latest.state) and phaseK.ckpt model
/// checkpoints. With `resume`, continues from latest.state if present.
TrainResult train_all(const DatasetIndex& dataset, const TrainerConfig& config, const std::string& output_dir,
                      bool resume = false, const TrainerHooks& hooks = {});

/// Loads the training samples of one epoch (preprocessing per item).
std::vector<TrainingSample<float>> load_batch(const DatasetIndex& dataset, const std::vector<DatasetItem>& items,
                                              const TrainerConfig& config, Phase phase, int epoch, bool training);

}  // namespace pirec
