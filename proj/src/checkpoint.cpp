#include "pirec/checkpoint.hpp"

#include <stdexcept>

namespace pirec {

template <typename Scalar>
void save_parameters(Archive& ar, const std::vector<Parameter<Scalar>*>& params) {
  for (const auto* p : params) ar.put(p->name, p->value);
}

template <typename Scalar>
void load_parameters(const Archive& ar, const std::vector<Parameter<Scalar>*>& params) {
  for (auto* p : params) {
    if (!ar.contains(p->name)) throw std::runtime_error("checkpoint is missing tensor " + p->name);
    RowMatrix<Scalar> v = ar.get<Scalar>(p->name);
    if (v.rows() != p->value.rows() || v.cols() != p->value.cols())
      throw std::runtime_error("checkpoint tensor " + p->name + " has the wrong shape");
    p->value = std::move(v);
  }
}

nlohmann::json preproc_to_json(const PreprocParams& p) {
  return {{"canny_sigma", p.canny_sigma},
          {"cluster_count", p.cluster_count},
          {"median_kernel_pre", p.median_kernel_pre},
          {"median_kernel_post", p.median_kernel_post},
          {"edge_dropout_prob", p.edge_dropout_prob},
          {"seed", p.seed},
          {"thresholds",
           {{"automatic", p.thresholds.automatic},
            {"median_multiplier", p.thresholds.median_multiplier},
            {"floor", p.thresholds.floor},
            {"low_ratio", p.thresholds.low_ratio},
            {"low", p.thresholds.low},
            {"high", p.thresholds.high}}}};
}

PreprocParams preproc_from_json(const nlohmann::json& j) {
  PreprocParams p;
  p.canny_sigma = j.value("canny_sigma", p.canny_sigma);
  p.cluster_count = j.value("cluster_count", p.cluster_count);
  p.median_kernel_pre = j.value("median_kernel_pre", p.median_kernel_pre);
  p.median_kernel_post = j.value("median_kernel_post", p.median_kernel_post);
  p.edge_dropout_prob = j.value("edge_dropout_prob", p.edge_dropout_prob);
  p.seed = j.value("seed", p.seed);
  if (j.contains("thresholds")) {
    const auto& t = j.at("thresholds");
    p.thresholds.automatic = t.value("automatic", p.thresholds.automatic);
    p.thresholds.median_multiplier = t.value("median_multiplier", p.thresholds.median_multiplier);
    p.thresholds.floor = t.value("floor", p.thresholds.floor);
    p.thresholds.low_ratio = t.value("low_ratio", p.thresholds.low_ratio);
    p.thresholds.low = t.value("low", p.thresholds.low);
    p.thresholds.high = t.value("high", p.thresholds.high);
  }
  p.validate();
  return p;
}

nlohmann::json hc_to_json(const HcRanges& r) {
  return {{"sigma", {r.sigma_min, r.sigma_max}},
          {"clusters", {r.clusters_min, r.clusters_max}},
          {"median_kernels", r.median_kernels},
          {"edge_dropout_prob", r.edge_dropout_prob}};
}

HcRanges hc_from_json(const nlohmann::json& j) {
  HcRanges r;
  if (j.contains("sigma")) {
    r.sigma_min = j.at("sigma").at(0);
    r.sigma_max = j.at("sigma").at(1);
  }
  if (j.contains("clusters")) {
    r.clusters_min = j.at("clusters").at(0);
    r.clusters_max = j.at("clusters").at(1);
  }
  r.median_kernels = j.value("median_kernels", r.median_kernels);
  r.edge_dropout_prob = j.value("edge_dropout_prob", r.edge_dropout_prob);
  r.validate();
  return r;
}

void save_model_checkpoint(const std::string& path, Generator<float>& g, Discriminator<float>& d, Phase phase,
                           const nlohmann::json& preprocessing) {
  Archive ar;
  ar.meta() = {{"format", "pirec-checkpoint"},
               {"version", kCheckpointVersion},
               {"kind", "model"},
               {"phase_id", to_int(phase)},
               {"generator_config", g.config()},
               {"discriminator_config", d.config()},
               {"model_id", g.model_id()},
               {"discriminator_id", d.model_id()},
               {"weights_hash", g.weights_hash()},
               {"preprocessing", preprocessing}};
  save_parameters(ar, g.parameters());
  save_parameters(ar, d.parameters());
  ar.save(path);
}

ModelCheckpoint load_model_checkpoint(const std::string& path) {
  const Archive ar = Archive::load(path);
  const auto& m = ar.meta();
  if (m.value("format", "") != "pirec-checkpoint") throw std::runtime_error(path + " is not a checkpoint");
  if (m.value("version", 0) != kCheckpointVersion)
    throw std::runtime_error(path + ": unsupported checkpoint version " + std::to_string(m.value("version", 0)));
  ModelCheckpoint c;
  c.phase = phase_from_int(m.at("phase_id").get<int>());
  c.generator_config = m.at("generator_config").get<GeneratorConfig>();
  c.discriminator_config = m.at("discriminator_config").get<DiscriminatorConfig>();
  c.model_id = m.at("model_id").get<std::string>();
  c.preprocessing = m.value("preprocessing", nlohmann::json::object());
  auto g = std::make_shared<Generator<float>>(c.generator_config);
  load_parameters(ar, g->parameters());
  g->set_model_id(c.model_id);
  c.weights_hash = g->weights_hash();
  if (m.contains("weights_hash") && m.at("weights_hash").get<std::uint64_t>() != c.weights_hash)
    throw std::runtime_error(path + ": weights do not match the recorded hash");
  c.generator = std::move(g);
  return c;
}

template void save_parameters(Archive&, const std::vector<Parameter<float>*>&);
template void save_parameters(Archive&, const std::vector<Parameter<double>*>&);
template void load_parameters(const Archive&, const std::vector<Parameter<float>*>&);
template void load_parameters(const Archive&, const std::vector<Parameter<double>*>&);

}  // namespace pirec
