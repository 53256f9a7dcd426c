// Command-line front end: synth, ingest, preprocess, train, evaluate, infer, serve.
#include "pirec/checkpoint.hpp"
#include "pirec/dataio.hpp"
#include "pirec/draft.hpp"
#include "pirec/evaluator.hpp"
#include "pirec/image.hpp"
#include "pirec/service.hpp"
#include "pirec/trainer.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace pirec;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const std::string& path, const nlohmann::json& j) {
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  write_file_atomic(path, j.dump(2) + "\n");
}

std::string png_name(const std::string& rel) { return fs::path(rel).replace_extension(".png").generic_string(); }

/// Reference preprocessing recorded by the trainer, or defaults without dropout.
PreprocParams reference_params(const ModelCheckpoint& ck) {
  if (ck.preprocessing.contains("reference")) return preproc_from_json(ck.preprocessing.at("reference"));
  return TrainerConfig::reference_params();
}

// ---- synth ----
struct SynthArgs {
  std::string out;
  SyntheticShapesConfig cfg;
};

void run_synth(const SynthArgs& a) {
  write_synthetic_shapes(a.out, a.cfg);
  std::cout << "wrote " << a.cfg.count << " images to " << a.out << "\n";
}

// ---- ingest ----
struct IngestArgs {
  std::string root;
  IngestConfig cfg;
};

void run_ingest(const IngestArgs& a) {
  const DatasetIndex d = ingest(a.root, a.cfg);
  std::cout << d.count() << " images (" << d.split(Split::Train).size() << " train, "
            << d.split(Split::Validation).size() << " validation)";
  if (!d.skipped.empty()) std::cout << ", " << d.skipped.size() << " skipped";
  std::cout << "\nmanifest: " << (a.cfg.manifest_path.empty() ? (fs::path(a.root) / "manifest.json").string() : a.cfg.manifest_path)
            << "\n";
  for (const auto& s : d.skipped) std::cerr << "skipped " << s.path << ": " << s.reason << "\n";
}

// ---- preprocess ----
struct PreprocessArgs {
  std::string input_dir, output_dir;
  double sigma = 3.0;
  int clusters = 3;
  bool hc = false;
  int size = 0;
  std::uint64_t seed = 0;
};

void run_preprocess(const PreprocessArgs& a) {
  IngestConfig ic;
  ic.validation_fraction = 0.0;
  ic.manifest_path = (fs::path(a.output_dir) / "source_manifest.json").string();
  fs::create_directories(a.output_dir);
  const DatasetIndex d = ingest(a.input_dir, ic);
  HcRanges hc;
  nlohmann::json items = nlohmann::json::array();
  for (const auto& item : d.items) {
    PreprocParams p;
    if (a.hc) {
      p = sample_hc_params(hc, derive_seed(a.seed, {item.key}));
    } else {
      p = TrainerConfig::reference_params();
      p.canny_sigma = a.sigma;
      p.cluster_count = a.clusters;
      p.seed = derive_seed(a.seed, {item.key});
    }
    p.validate();
    Tensor<float> img = read_image(d.absolute_path(item));
    if (a.size > 0) img = resize_and_crop(img, a.size, CropMode::Center);
    const auto edge = extract_edge(img, p, a.hc ? EdgeMode::Training : EdgeMode::Inference);
    const auto color = extract_color_domain(img, p);
    const std::string rel = png_name(item.path);
    const auto edge_path = fs::path(a.output_dir) / "edges" / rel, color_path = fs::path(a.output_dir) / "colors" / rel;
    fs::create_directories(edge_path.parent_path());
    fs::create_directories(color_path.parent_path());
    write_png(edge_path.string(), edge.pixels);
    write_png(color_path.string(), color.pixels);
    items.push_back({{"source", item.path},
                     {"edge", "edges/" + rel},
                     {"color_domain", "colors/" + rel},
                     {"params", preproc_to_json(p)},
                     {"kmeans_converged", color.kmeans_converged}});
  }
  write_json((fs::path(a.output_dir) / "manifest.json").string(),
             {{"schema_version", 1}, {"input", d.root}, {"hc", a.hc}, {"size", a.size}, {"items", items}});
  fs::remove(ic.manifest_path);
  std::cout << "preprocessed " << items.size() << " images into " << a.output_dir << "\n";
}

// ---- train ----
struct TrainArgs {
  std::string dataset, config, out = "run";
  bool resume = false;
  int phase_cap = 0;
};

void run_train(const TrainArgs& a) {
  const DatasetIndex d = DatasetIndex::load(a.dataset);
  TrainerConfig cfg;
  if (!a.config.empty()) cfg = nlohmann::json::parse(read_file(a.config)).get<TrainerConfig>();
  if (a.phase_cap > 0)
    for (auto& p : cfg.phases) p.max_epochs = a.phase_cap;
  cfg.validate();
  fs::create_directories(a.out);
  write_json((fs::path(a.out) / "config.json").string(), cfg);
  const auto t0 = std::chrono::steady_clock::now();
  TrainerHooks hooks;
  hooks.on_epoch = [&](const PhaseState& s) {
    const double mins = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
    std::cout << "phase " << to_int(s.phase) << " epoch " << s.epoch << " val " << s.loss_history.back()
              << (s.converged ? " (done)" : "") << " [" << mins << " min]\n"
              << std::flush;
  };
  const TrainResult r = train_all(d, cfg, a.out, a.resume, hooks);
  for (std::size_t k = 0; k < 3; ++k) std::cout << "checkpoint " << r.checkpoints[k] << "\n";
}

// ---- evaluate ----
struct EvaluateArgs {
  std::string checkpoint, dataset, out = "report.json", phase;
  int limit = 0, size = 0;
  std::uint64_t seed = 0;
};

void run_evaluate(const EvaluateArgs& a) {
  const ModelCheckpoint ck = load_model_checkpoint(a.checkpoint);
  const DatasetIndex d = DatasetIndex::load(a.dataset);
  EvalOptions o;
  o.phase = a.phase.empty() ? (ck.phase == Phase::Refinement ? Phase::Refinement : Phase::Generating)
                            : (infer_mode_from_string(a.phase) == InferMode::Refine ? Phase::Refinement : Phase::Generating);
  o.params = reference_params(ck);
  o.image_size = a.size > 0 ? a.size : ck.preprocessing.value("image_size", d.height);
  o.limit = a.limit;
  o.seed = a.seed;
  const auto pairs = make_eval_pairs(d, o.params, o.image_size, o.limit, o.seed);
  const EvalReport r = evaluate(*ck.generator, pairs, o);
  nlohmann::json j = r.to_json();
  j["checkpoint"] = a.checkpoint;
  j["dataset"] = d.name;
  write_json(a.out, j);
  std::cout << "accuracy " << r.accuracy << " (color-domain baseline " << r.baseline_accuracy << "), mmd " << r.mmd
            << ", fid " << r.fid << " over " << r.sample_count << " samples\n";
}

// ---- infer ----
struct InferArgs {
  std::vector<std::string> checkpoints;
  std::string edge, color, draft, out = "out.png", phase = "generate", model_id;
  int median_blur = 0;
};

void run_infer(const InferArgs& a) {
  ServiceOptions o;
  o.checkpoints = a.checkpoints;
  o.median_blur_kernel = a.median_blur;
  InferenceService svc(o);
  ReconstructRequest r;
  std::string mode = a.phase;
  if (!a.draft.empty()) {
    const Draft d = import_draft(read_file(a.draft));
    r.edge_png = encode_png(d.edge);
    r.color_png = encode_png(d.color);
    if (d.meta.contains("phase") && a.phase.empty()) mode = d.meta.at("phase").get<std::string>();
  } else {
    if (a.edge.empty() || a.color.empty()) throw std::runtime_error("infer needs --edge and --color, or --draft");
    r.edge_png = read_file(a.edge);
    r.color_png = read_file(a.color);
  }
  r.mode = infer_mode_from_string(mode);
  r.model_id = a.model_id;
  write_file_atomic(a.out, svc.reconstruct(r));
  std::cout << "wrote " << a.out << "\n";
}

// ---- serve ----
struct ServeArgs {
  std::vector<std::string> checkpoints;
  std::string model_dir, host = "0.0.0.0";
  int port = 8080, median_blur = 0;
};

void run_serve(const ServeArgs& a) {
  ServiceOptions o = ServiceOptions::from_environment();
  if (!a.model_dir.empty()) o.model_dir = a.model_dir;
  o.checkpoints = a.checkpoints;
  o.median_blur_kernel = a.median_blur;
  InferenceService svc(o);
  serve(svc, a.host, a.port);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Progressive edge + color domain image reconstruction"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Render the bundled synthetic shapes dataset");
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--count", synth.cfg.count, "Number of images");
  s->add_option("--size", synth.cfg.image_size, "Square image size");
  s->add_option("--seed", synth.cfg.seed, "Seed");
  s->callback([&] { run_synth(synth); });

  IngestArgs ing;
  auto* i = app.add_subcommand("ingest", "Index a directory of images and split it");
  i->add_option("--root", ing.root, "Image directory")->required();
  i->add_option("--name", ing.cfg.name, "Dataset name");
  i->add_option("--size", ing.cfg.image_size, "Training resolution");
  i->add_option("--validation-fraction", ing.cfg.validation_fraction, "Held-out fraction");
  i->add_option("--manifest", ing.cfg.manifest_path, "Manifest path (default <root>/manifest.json)");
  i->callback([&] { run_ingest(ing); });

  PreprocessArgs pre;
  auto* p = app.add_subcommand("preprocess", "Extract edge maps and color domains");
  p->add_option("--input-dir", pre.input_dir, "Image directory")->required();
  p->add_option("--output-dir", pre.output_dir, "Output directory")->required();
  p->add_option("--sigma", pre.sigma, "Canny sigma (ignored with --hc)");
  p->add_option("--clusters", pre.clusters, "K-means clusters (ignored with --hc)");
  p->add_flag("--hc,!--no-hc", pre.hc, "Sample parameters per image from the HC ranges");
  p->add_option("--size", pre.size, "Resize shortest side and center crop (0 keeps native size)");
  p->add_option("--seed", pre.seed, "Seed");
  p->callback([&] { run_preprocess(pre); });

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Run phases 1, 2 and 3");
  t->add_option("--dataset", tr.dataset, "Dataset manifest")->required();
  t->add_option("--config", tr.config, "Trainer config (JSON)");
  t->add_option("--out", tr.out, "Run directory");
  t->add_flag("--resume", tr.resume, "Continue from <out>/latest.state");
  t->add_option("--phase-cap", tr.phase_cap, "Hard epoch cap for every phase");
  t->callback([&] { run_train(tr); });

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Accuracy, kernel MMD and FID on the validation split");
  e->add_option("--checkpoint", ev.checkpoint, "Model checkpoint")->required();
  e->add_option("--dataset", ev.dataset, "Dataset manifest")->required();
  e->add_option("--out", ev.out, "Report path");
  e->add_option("--phase", ev.phase, "generate | refine (default follows the checkpoint)");
  e->add_option("--limit", ev.limit, "Maximum samples");
  e->add_option("--size", ev.size, "Evaluation resolution");
  e->add_option("--seed", ev.seed, "Seed");
  e->callback([&] { run_evaluate(ev); });

  InferArgs inf;
  auto* f = app.add_subcommand("infer", "Reconstruct one image");
  f->add_option("--checkpoint", inf.checkpoints, "Model checkpoint")->required();
  f->add_option("--edge", inf.edge, "Edge PNG");
  f->add_option("--color", inf.color, "Color domain PNG");
  f->add_option("--draft", inf.draft, "Exported draft zip instead of --edge/--color");
  f->add_option("--out", inf.out, "Output PNG");
  f->add_option("--phase", inf.phase, "generate | refine");
  f->add_option("--model-id", inf.model_id, "Model id");
  f->add_option("--median-blur", inf.median_blur, "Median kernel for the color input (0 = off)");
  f->callback([&] { run_infer(inf); });

  ServeArgs sv;
  auto* v = app.add_subcommand("serve", "HTTP inference server");
  v->add_option("--checkpoint", sv.checkpoints, "Model checkpoint (repeatable)");
  v->add_option("--model-dir", sv.model_dir, "Checkpoint directory (default $PIREC_MODEL_DIR)");
  v->add_option("--host", sv.host, "Bind address");
  v->add_option("--port", sv.port, "Port");
  v->add_option("--median-blur", sv.median_blur, "Median kernel for color inputs (0 = off)");
  v->callback([&] { run_serve(sv); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
