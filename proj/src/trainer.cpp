#include "pirec/trainer.hpp"

#include "pirec/checkpoint.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace fs = std::filesystem;

namespace pirec {

namespace {

constexpr std::uint64_t kShuffleTag = 0x5348;
constexpr std::uint64_t kParamsTag = 0x5041;
constexpr std::uint64_t kSampleTag = 0x5341;

std::size_t phase_index(Phase p) { return static_cast<std::size_t>(to_int(p) - 1); }

nlohmann::json batch_description(const std::vector<TrainingSample<float>>& batch) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& s : batch)
    items.push_back({{"source", s.source}, {"params", preproc_to_json(s.params)}});
  return items;
}

nlohmann::json phase_state_json(const PhaseState& s) {
  return {{"phase", to_int(s.phase)}, {"epoch", s.epoch}, {"loss_history", s.loss_history}, {"converged", s.converged}};
}

PhaseState phase_state_from_json(const nlohmann::json& j) {
  PhaseState s;
  s.phase = phase_from_int(j.at("phase").get<int>());
  s.epoch = j.at("epoch");
  s.loss_history = j.at("loss_history").get<std::vector<double>>();
  s.converged = j.at("converged");
  return s;
}

class MetricsLog {
 public:
  explicit MetricsLog(std::string path) : path_(std::move(path)) {}

  void truncate(std::uintmax_t bytes) {
    if (!fs::exists(path_)) {
      std::ofstream(path_).close();
    }
    fs::resize_file(path_, bytes);
  }
  void write(const nlohmann::json& line) {
    std::ofstream out(path_, std::ios::app);
    out << line.dump() << '\n';
    if (!out) throw std::runtime_error("cannot append to " + path_);
  }
  std::uintmax_t size() const { return fs::exists(path_) ? fs::file_size(path_) : 0; }

 private:
  std::string path_;
};

}  // namespace

PreprocParams TrainerConfig::reference_params() {
  PreprocParams p;
  p.canny_sigma = 3.0;
  p.cluster_count = 3;
  p.median_kernel_pre = 3;
  p.median_kernel_post = 3;
  p.edge_dropout_prob = 0.0;
  return p;
}

int TrainerConfig::effective_batch_size() const {
  if (batch_size > 0) return batch_size;
  const double scaled = 8.0 * (128.0 * 128.0) / (static_cast<double>(image_size) * image_size);
  return std::max(1, static_cast<int>(std::lround(scaled)));
}

void TrainerConfig::validate() const {
  generator.validate();
  discriminator.validate();
  extractor.validate();
  for (std::size_t i = 0; i < phases.size(); ++i) {
    phases[i].validate();
    if (phase_index(phases[i].phase) != i) throw std::invalid_argument("phase configs must be ordered 1, 2, 3");
  }
  hc.validate();
  fixed_params.validate();
  if (image_size < 8 || image_size % generator.downsampling_factor() != 0)
    throw std::invalid_argument("image_size must be >= 8 and a multiple of the generator downsampling factor");
  if (batch_size < 0) throw std::invalid_argument("batch_size must be >= 0");
  if (!(max_hidden_fraction >= 0.0 && max_hidden_fraction <= 0.7))
    throw std::invalid_argument("max_hidden_fraction must lie in [0, 0.7]");
  if (train_limit < 0 || validation_limit < 0) throw std::invalid_argument("limits must be >= 0");
}

void to_json(nlohmann::json& j, const TrainerConfig& c) {
  j = {{"generator", c.generator},
       {"discriminator", c.discriminator},
       {"extractor",
        {{"widths", c.extractor.widths},
         {"convs_per_block", c.extractor.convs_per_block},
         {"seed", c.extractor.seed},
         {"name", c.extractor.name},
         {"weights", c.extractor_weights}}},
       {"phases", {c.phases[0], c.phases[1], c.phases[2]}},
       {"hc_enabled", c.hc_enabled},
       {"hc", hc_to_json(c.hc)},
       {"fixed_params", preproc_to_json(c.fixed_params)},
       {"image_size", c.image_size},
       {"batch_size", c.batch_size},
       {"adam_g", {{"lr", c.adam_g.lr}, {"beta1", c.adam_g.beta1}, {"beta2", c.adam_g.beta2}, {"eps", c.adam_g.eps}}},
       {"adam_d", {{"lr", c.adam_d.lr}, {"beta1", c.adam_d.beta1}, {"beta2", c.adam_d.beta2}, {"eps", c.adam_d.eps}}},
       {"max_hidden_fraction", c.max_hidden_fraction},
       {"convergence_gate", c.convergence_gate},
       {"restore_best", c.restore_best},
       {"train_limit", c.train_limit},
       {"validation_limit", c.validation_limit},
       {"cache_dir", c.cache_dir},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, TrainerConfig& c) {
  c = TrainerConfig{};
  if (j.contains("generator")) c.generator = j.at("generator").get<GeneratorConfig>();
  if (j.contains("discriminator")) c.discriminator = j.at("discriminator").get<DiscriminatorConfig>();
  if (j.contains("extractor")) {
    const auto& e = j.at("extractor");
    if (e.value("name", "") == "vgg19") c.extractor = ExtractorConfig::vgg19();
    c.extractor.widths = e.value("widths", c.extractor.widths);
    c.extractor.convs_per_block = e.value("convs_per_block", c.extractor.convs_per_block);
    c.extractor.seed = e.value("seed", c.extractor.seed);
    c.extractor.name = e.value("name", c.extractor.name);
    c.extractor_weights = e.value("weights", std::string());
  }
  if (j.contains("phases")) {
    const auto& ph = j.at("phases");
    for (std::size_t i = 0; i < 3 && i < ph.size(); ++i) {
      nlohmann::json entry = ph.at(i);
      entry["phase"] = static_cast<int>(i + 1);
      c.phases[i] = entry.get<PhaseConfig>();
    }
  }
  c.hc_enabled = j.value("hc_enabled", c.hc_enabled);
  if (j.contains("hc")) c.hc = hc_from_json(j.at("hc"));
  if (j.contains("fixed_params")) c.fixed_params = preproc_from_json(j.at("fixed_params"));
  c.image_size = j.value("image_size", c.image_size);
  c.batch_size = j.value("batch_size", c.batch_size);
  auto adam = [](const nlohmann::json& a, AdamConfig d) {
    d.lr = a.value("lr", d.lr);
    d.beta1 = a.value("beta1", d.beta1);
    d.beta2 = a.value("beta2", d.beta2);
    d.eps = a.value("eps", d.eps);
    return d;
  };
  if (j.contains("adam_g")) c.adam_g = adam(j.at("adam_g"), c.adam_g);
  if (j.contains("adam_d")) c.adam_d = adam(j.at("adam_d"), c.adam_d);
  c.max_hidden_fraction = j.value("max_hidden_fraction", c.max_hidden_fraction);
  c.convergence_gate = j.value("convergence_gate", c.convergence_gate);
  c.restore_best = j.value("restore_best", c.restore_best);
  c.train_limit = j.value("train_limit", c.train_limit);
  c.validation_limit = j.value("validation_limit", c.validation_limit);
  c.cache_dir = j.value("cache_dir", c.cache_dir);
  c.seed = j.value("seed", c.seed);
}

template <typename Scalar>
PhaseInput<Scalar> build_phase_input(const TrainingSample<Scalar>& sample, Phase phase, const Tensor<Scalar>* prev_output) {
  switch (phase) {
    case Phase::Imitation:
      return {sample.edge, apply_mask(sample.x_gt, sample.mask)};
    case Phase::Generating:
      return {sample.edge, sample.color_domain};
    case Phase::Refinement:
      if (!prev_output) throw std::invalid_argument("phase 3 needs the phase-2 output as conditioning");
      if (!prev_output->same_shape(sample.x_gt))
        throw std::invalid_argument("phase-2 output has shape " + prev_output->shape_string());
      return {sample.edge, *prev_output};
  }
  throw std::invalid_argument("unknown phase");
}

bool check_convergence(const std::vector<double>& history, int patience, double min_delta, int max_epochs) {
  if (max_epochs > 0 && static_cast<int>(history.size()) >= max_epochs) return true;
  if (patience < 1 || static_cast<int>(history.size()) <= patience) return false;
  const auto split = history.end() - patience;
  const double best_before = *std::min_element(history.begin(), split);
  const double best_recent = *std::min_element(split, history.end());
  return !(best_recent < best_before - min_delta);
}

TrainingSession::TrainingSession(const TrainerConfig& config)
    : config_(config),
      g_(config.generator),
      d_(config.discriminator),
      extractor_(config.extractor),
      opt_g_(g_.parameters(), config.adam_g),
      opt_d_(d_.parameters(), config.adam_d) {
  config_.validate();
  if (!config.extractor_weights.empty()) extractor_.load_weights(config.extractor_weights);
}

std::vector<PhaseInput<float>> TrainingSession::phase_inputs(const std::vector<TrainingSample<float>>& batch,
                                                             Phase phase) const {
  std::vector<PhaseInput<float>> out;
  out.reserve(batch.size());
  for (const auto& s : batch) {
    if (phase == Phase::Refinement) {
      // X_fake-2 from the current generator; no gradient flows through it.
      const Tensor<float> prev = g_.infer(s.edge, s.color_domain, Phase::Generating).image;
      out.push_back(build_phase_input(s, phase, &prev));
    } else {
      out.push_back(build_phase_input(s, phase));
    }
  }
  return out;
}

double TrainingSession::discriminator_loss(const std::vector<TrainingSample<float>>& batch, const PhaseConfig& cfg) const {
  const auto inputs = phase_inputs(batch, cfg.phase);
  const bool cond = config_.discriminator.conditional;
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Tensor<float> fake = g_.infer(inputs[i].edge, inputs[i].conditioning, cfg.phase).image;
    const Tensor<float>* e = cond ? &batch[i].edge : nullptr;
    total += lsgan_d_loss(d_.infer(batch[i].x_gt, e), d_.infer(fake, e)).value;
  }
  return total / static_cast<double>(batch.size());
}

double TrainingSession::discriminator_update(const std::vector<TrainingSample<float>>& batch, const PhaseConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const auto inputs = phase_inputs(batch, cfg.phase);
  const bool cond = config_.discriminator.conditional;
  const auto scale = 1.0f / static_cast<float>(batch.size());
  d_.zero_grad();
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Tensor<float> fake = g_.infer(inputs[i].edge, inputs[i].conditioning, cfg.phase).image;
    const Tensor<float>* e = cond ? &batch[i].edge : nullptr;
    // Real and fake are separate training passes; each caches its own activations.
    const Tensor<float> real_scores = d_.forward(batch[i].x_gt, e);
    Tensor<float> grad_real = real_scores;
    grad_real.array() = (real_scores.array() - 1.0f) * (scale / static_cast<float>(real_scores.size()));
    d_.backward(grad_real);
    const Tensor<float> fake_scores = d_.forward(fake, e);
    const auto l = lsgan_d_loss(real_scores, fake_scores);
    Tensor<float> grad_fake = l.grad_fake;
    grad_fake.array() *= scale;
    d_.backward(grad_fake);
    total += l.value;
  }
  total /= static_cast<double>(batch.size());
  if (!std::isfinite(total))
    throw NonFiniteLoss("non-finite discriminator loss: " + std::to_string(total), batch_description(batch));
  opt_d_.step();
  return total;
}

StepMetrics TrainingSession::generator_loss(const std::vector<TrainingSample<float>>& batch, const PhaseConfig& cfg) const {
  const auto inputs = phase_inputs(batch, cfg.phase);
  const bool cond = config_.discriminator.conditional;
  StepMetrics m;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& s = batch[i];
    const Tensor<float> out = g_.infer(inputs[i].edge, inputs[i].conditioning, cfg.phase).image;
    m.g.pixel += per_pixel_loss(out, s.x_gt, s.mask).value;
    m.g.adversarial += lsgan_g_loss(d_.infer(out, cond ? &s.edge : nullptr)).value;
    const auto gt = extractor_.extract(s.x_gt), fk = extractor_.extract(out);
    m.g.feature += feature_loss(gt, fk).value;
    if (cfg.delta != 0.0) m.g.style += style_loss(gt, fk).value;
  }
  const auto n = static_cast<double>(batch.size());
  m.g = {m.g.pixel / n, m.g.adversarial / n, m.g.feature / n, m.g.style / n};
  m.g_total = total_generator_loss(m.g, cfg);
  return m;
}

StepMetrics TrainingSession::generator_update(const std::vector<TrainingSample<float>>& batch, const PhaseConfig& cfg) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const auto inputs = phase_inputs(batch, cfg.phase);
  const bool cond = config_.discriminator.conditional;
  const double scale = 1.0 / static_cast<double>(batch.size());
  g_.zero_grad();
  StepMetrics m;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& s = batch[i];
    const Tensor<float> out = g_.forward(inputs[i].edge, inputs[i].conditioning, cfg.phase).image;

    const auto pix = per_pixel_loss(out, s.x_gt, s.mask);
    Tensor<float> grad = pix.grad;
    grad.array() *= static_cast<float>(cfg.alpha * scale);

    const auto adv = lsgan_g_loss(d_.forward(out, cond ? &s.edge : nullptr));
    Tensor<float> g_adv = d_.backward(adv.grad);
    grad.array() += static_cast<float>(cfg.beta * scale) * g_adv.array();

    const auto gt = extractor_.extract(s.x_gt);
    const auto fk = extractor_.forward(out);
    const auto feat = feature_loss(gt, fk);
    std::vector<Tensor<float>> taps = feat.grads;
    for (auto& t : taps) t.array() *= static_cast<float>(cfg.gamma * scale);
    double style = 0.0;
    if (cfg.delta != 0.0) {
      const auto st = style_loss(gt, fk);
      style = st.value;
      for (std::size_t k = 0; k < taps.size(); ++k)
        taps[k].array() += static_cast<float>(cfg.delta * scale) * st.grads[k].array();
    }
    grad.array() += extractor_.backward(taps).array();
    g_.backward(grad);

    m.g.pixel += pix.value * scale;
    m.g.adversarial += adv.value * scale;
    m.g.feature += feat.value * scale;
    m.g.style += style * scale;
  }
  d_.zero_grad();  // the discriminator is frozen here; drop what its backward accumulated
  try {
    m.g_total = total_generator_loss(m.g, cfg);
  } catch (const std::domain_error& e) {
    throw NonFiniteLoss(e.what(), batch_description(batch));
  }
  opt_g_.step();
  return m;
}

StepMetrics TrainingSession::train_step(const std::vector<TrainingSample<float>>& batch, const PhaseConfig& cfg) {
  const double d_loss = discriminator_update(batch, cfg);
  StepMetrics m = generator_update(batch, cfg);
  m.d_loss = d_loss;
  return m;
}

void TrainingSession::save_state(Archive& ar) const {
  auto& self = const_cast<TrainingSession&>(*this);
  save_parameters(ar, self.g_.parameters());
  save_parameters(ar, self.d_.parameters());
  opt_g_.save(ar, "adam.G.");
  opt_d_.save(ar, "adam.D.");
  ar.meta()["model_id"] = g_.model_id();
  ar.meta()["discriminator_id"] = d_.model_id();
}

void TrainingSession::load_state(const Archive& ar) {
  load_parameters(ar, g_.parameters());
  load_parameters(ar, d_.parameters());
  opt_g_.load(ar, "adam.G.");
  opt_d_.load(ar, "adam.D.");
  g_.set_model_id(ar.meta().at("model_id").get<std::string>());
  d_.set_model_id(ar.meta().at("discriminator_id").get<std::string>());
}

std::vector<TrainingSample<float>> load_batch(const DatasetIndex& dataset, const std::vector<DatasetItem>& items,
                                              const TrainerConfig& config, Phase phase, int epoch, bool training) {
  std::vector<TrainingSample<float>> out;
  out.reserve(items.size());
  // Validation samples do not depend on the epoch.
  const auto e = static_cast<std::uint64_t>(training ? epoch : 0);
  const auto ph = static_cast<std::uint64_t>(to_int(phase));
  std::optional<SampleCache> cache;
  if (!training && !config.cache_dir.empty()) cache.emplace(config.cache_dir);
  for (const auto& item : items) {
    const std::uint64_t base = derive_seed(config.seed, {ph, e, item.key, training ? 1u : 0u});
    PreprocParams params;
    const bool hc = training && config.hc_enabled;
    if (hc) {
      params = sample_hc_params(config.hc, derive_seed(base, {kParamsTag}));
    } else {
      params = config.fixed_params;
      params.seed = derive_seed(base, {kParamsTag});
    }
    SampleOptions opts;
    opts.image_size = config.image_size;
    opts.phase = phase;
    opts.training = training;
    opts.max_hidden_fraction = config.max_hidden_fraction;
    opts.seed = derive_seed(base, {kSampleTag});
    out.push_back(cache ? cache->get(dataset, item, params, opts, hc) : make_sample<float>(dataset, item, params, opts));
  }
  return out;
}

namespace {

nlohmann::json preprocessing_meta(const TrainerConfig& c) {
  return {{"reference", preproc_to_json(c.fixed_params)},
          {"hc_enabled", c.hc_enabled},
          {"hc", hc_to_json(c.hc)},
          {"image_size", c.image_size}};
}

double validation_loss(const TrainingSession& session, const std::vector<TrainingSample<float>>& val,
                       const PhaseConfig& cfg, int batch_size) {
  double total = 0.0;
  for (std::size_t i = 0; i < val.size(); i += static_cast<std::size_t>(batch_size)) {
    const std::vector<TrainingSample<float>> b(val.begin() + static_cast<std::ptrdiff_t>(i),
                                               val.begin() + static_cast<std::ptrdiff_t>(
                                                                 std::min(val.size(), i + static_cast<std::size_t>(batch_size))));
    total += session.generator_loss(b, cfg).g_total * static_cast<double>(b.size());
  }
  return total / static_cast<double>(val.size());
}

}  // namespace

TrainResult train_all(const DatasetIndex& dataset, const TrainerConfig& config, const std::string& output_dir,
                      bool resume, const TrainerHooks& hooks) {
  config.validate();
  fs::create_directories(output_dir);
  const std::string latest = (fs::path(output_dir) / "latest.state").string();
  const std::string best_state = (fs::path(output_dir) / "best.state").string();
  MetricsLog metrics((fs::path(output_dir) / "metrics.jsonl").string());

  auto session = std::make_unique<TrainingSession>(config);
  TrainResult result;
  for (std::size_t i = 0; i < 3; ++i) result.phases[i].phase = phase_from_int(static_cast<int>(i + 1));
  std::size_t current = 0;
  const nlohmann::json config_json = config;

  if (resume && fs::exists(latest)) {
    const Archive ar = Archive::load(latest);
    const auto& m = ar.meta();
    if (m.at("config") != config_json) throw std::runtime_error("resume: training config differs from the saved run");
    session->load_state(ar);
    current = m.at("phase_index").get<std::size_t>();
    for (std::size_t i = 0; i < 3; ++i) {
      result.phases[i] = phase_state_from_json(m.at("phases").at(i));
      // Stored relative to the run directory so a moved run still resumes.
      const std::string name = fs::path(m.at("checkpoints").at(i).get<std::string>()).filename().string();
      if (!name.empty()) result.checkpoints[i] = (fs::path(output_dir) / name).string();
      result.start_hashes[i] = m.at("start_hashes").at(i).get<std::uint64_t>();
      result.end_hashes[i] = m.at("end_hashes").at(i).get<std::uint64_t>();
    }
    metrics.truncate(m.at("metrics_bytes").get<std::uintmax_t>());
  } else {
    metrics.truncate(0);
  }

  std::vector<DatasetItem> train_items = dataset.split(Split::Train);
  std::vector<DatasetItem> val_items = dataset.split(Split::Validation);
  if (train_items.empty()) throw std::runtime_error("dataset has no training items");
  if (config.train_limit > 0 && train_items.size() > static_cast<std::size_t>(config.train_limit))
    train_items.resize(static_cast<std::size_t>(config.train_limit));
  if (val_items.empty())  // tiny datasets: score convergence on a slice of the training items
    val_items.assign(train_items.begin(), train_items.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(8, train_items.size())));
  if (config.validation_limit > 0 && val_items.size() > static_cast<std::size_t>(config.validation_limit))
    val_items.resize(static_cast<std::size_t>(config.validation_limit));
  const int batch_size = config.effective_batch_size();

  auto save_latest = [&](std::size_t phase_idx) {
    Archive ar;
    session->save_state(ar);
    auto& m = ar.meta();
    m["kind"] = "train_state";
    m["version"] = kCheckpointVersion;
    m["config"] = config_json;
    m["phase_index"] = phase_idx;
    m["phases"] = nlohmann::json::array();
    for (const auto& s : result.phases) m["phases"].push_back(phase_state_json(s));
    m["checkpoints"] = nlohmann::json::array();
    for (const auto& c : result.checkpoints) m["checkpoints"].push_back(fs::path(c).filename().string());
    m["start_hashes"] = result.start_hashes;
    m["end_hashes"] = result.end_hashes;
    m["metrics_bytes"] = metrics.size();
    ar.save(latest);
  };

  for (; current < 3; ++current) {
    PhaseState& st = result.phases[current];
    const PhaseConfig& cfg = config.phases[current];
    const Phase phase = st.phase;
    if (st.epoch == 0) {
      result.start_hashes[current] = session->generator().weights_hash();
      metrics.write({{"event", "phase_start"},
                     {"phase", to_int(phase)},
                     {"model_id", session->generator().model_id()},
                     {"weights_hash", result.start_hashes[current]},
                     {"weights", {cfg.alpha, cfg.beta, cfg.gamma, cfg.delta}}});
    }
    const auto val = load_batch(dataset, val_items, config, phase, 0, false);

    while (!st.converged) {
      const int epoch = st.epoch + 1;
      std::vector<DatasetItem> order = train_items;
      Rng shuffle(derive_seed(config.seed, {kShuffleTag, static_cast<std::uint64_t>(to_int(phase)),
                                            static_cast<std::uint64_t>(epoch)}));
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle.uniform_int(0, static_cast<int>(i) - 1))]);

      int step = 0;
      double sum_total = 0.0, sum_d = 0.0;
      for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(batch_size), ++step) {
        const std::vector<DatasetItem> slice(
            order.begin() + static_cast<std::ptrdiff_t>(b),
            order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), b + static_cast<std::size_t>(batch_size))));
        const auto batch = load_batch(dataset, slice, config, phase, epoch, true);
        StepMetrics m;
        try {
          m = session->train_step(batch, cfg);
        } catch (const NonFiniteLoss& e) {
          const std::string dump = (fs::path(output_dir) / ("nonfinite_phase" + std::to_string(to_int(phase)) +
                                                            "_epoch" + std::to_string(epoch) + "_step" +
                                                            std::to_string(step) + ".json"))
                                       .string();
          write_file_atomic(dump, nlohmann::json{{"error", e.what()}, {"phase", to_int(phase)}, {"epoch", epoch},
                                                 {"step", step}, {"batch", e.batch()}}
                                          .dump(2));
          throw;
        }
        sum_total += m.g_total;
        sum_d += m.d_loss;
        metrics.write({{"event", "step"},
                       {"phase", to_int(phase)},
                       {"epoch", epoch},
                       {"step", step},
                       {"d_loss", m.d_loss},
                       {"pixel", m.g.pixel},
                       {"adversarial", m.g.adversarial},
                       {"feature", m.g.feature},
                       {"style", m.g.style},
                       {"total", m.g_total}});
        if (hooks.on_step) hooks.on_step(phase, epoch, step, m);
      }

      const double vloss = validation_loss(*session, val, cfg, batch_size);
      st.loss_history.push_back(vloss);
      st.epoch = epoch;
      st.converged = config.convergence_gate
                         ? check_convergence(st.loss_history, cfg.patience, cfg.min_delta, cfg.max_epochs)
                         : epoch >= cfg.max_epochs;
      metrics.write({{"event", "epoch"},
                     {"phase", to_int(phase)},
                     {"epoch", epoch},
                     {"train_total", sum_total / std::max(1, step)},
                     {"train_d_loss", sum_d / std::max(1, step)},
                     {"val_loss", vloss},
                     {"weights_hash", session->generator().weights_hash()},
                     {"converged", st.converged}});
      // Snapshot written before latest.state so a resumed run always finds it.
      const auto best = std::min_element(st.loss_history.begin(), st.loss_history.end());
      const int best_epoch = static_cast<int>(best - st.loss_history.begin()) + 1;
      if (config.restore_best && best_epoch == epoch) {
        Archive snap;
        session->save_state(snap);
        snap.save(best_state);
      }
      if (st.converged) {
        if (config.restore_best && best_epoch != epoch) session->load_state(Archive::load(best_state));
        const std::string ckpt = (fs::path(output_dir) / ("phase" + std::to_string(to_int(phase)) + ".ckpt")).string();
        save_model_checkpoint(ckpt, session->generator(), session->discriminator(), phase, preprocessing_meta(config));
        result.checkpoints[current] = ckpt;
        result.end_hashes[current] = session->generator().weights_hash();
        metrics.write({{"event", "phase_end"},
                       {"phase", to_int(phase)},
                       {"epochs", epoch},
                       {"best_epoch", config.restore_best ? best_epoch : epoch},
                       {"checkpoint", fs::path(ckpt).filename().string()},
                       {"weights_hash", result.end_hashes[current]}});
      }
      save_latest(st.converged ? current + 1 : current);
      if (hooks.on_epoch) hooks.on_epoch(st);
    }
  }
  result.model_id = session->generator().model_id();
  result.final_hash = session->generator().weights_hash();
  return result;
}

template PhaseInput<float> build_phase_input(const TrainingSample<float>&, Phase, const Tensor<float>*);
template PhaseInput<double> build_phase_input(const TrainingSample<double>&, Phase, const Tensor<double>*);

}  // namespace pirec
