#include "pirec/dataio.hpp"

#include "pirec/archive.hpp"
#include "pirec/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace pirec {

namespace {

constexpr std::uint64_t kCropTag = 0xC409;
constexpr std::uint64_t kMaskTag = 0x3A5C;

bool has_image_extension(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

std::uint64_t path_key(const std::string& rel) { return fnv1a(rel.data(), rel.size()); }

}  // namespace

const char* split_name(Split s) { return s == Split::Train ? "train" : "validation"; }

std::vector<DatasetItem> DatasetIndex::split(Split s) const {
  std::vector<DatasetItem> out;
  for (const auto& it : items)
    if (it.split == s) out.push_back(it);
  return out;
}

std::string DatasetIndex::absolute_path(const DatasetItem& item) const { return (fs::path(root) / item.path).string(); }

nlohmann::json DatasetIndex::to_json() const {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = name;
  j["root"] = root;
  j["image_size"] = {height, width};
  j["count"] = items.size();
  j["items"] = nlohmann::json::array();
  for (const auto& it : items) j["items"].push_back({{"path", it.path}, {"split", split_name(it.split)}});
  j["skipped"] = nlohmann::json::array();
  for (const auto& s : skipped) j["skipped"].push_back({{"path", s.path}, {"reason", s.reason}});
  return j;
}

DatasetIndex DatasetIndex::from_json(const nlohmann::json& j) {
  const int version = j.at("schema_version").get<int>();
  if (version != kSchemaVersion)
    throw std::runtime_error("unsupported manifest schema version " + std::to_string(version));
  DatasetIndex d;
  d.name = j.at("name").get<std::string>();
  d.root = j.at("root").get<std::string>();
  d.height = j.at("image_size").at(0).get<int>();
  d.width = j.at("image_size").at(1).get<int>();
  for (const auto& it : j.at("items")) {
    DatasetItem item;
    item.path = it.at("path").get<std::string>();
    item.split = it.at("split").get<std::string>() == "validation" ? Split::Validation : Split::Train;
    item.key = path_key(item.path);
    d.items.push_back(std::move(item));
  }
  if (j.contains("skipped"))
    for (const auto& s : j.at("skipped")) d.skipped.push_back({s.at("path"), s.at("reason")});
  if (j.value("count", d.items.size()) != d.items.size()) throw std::runtime_error("manifest count disagrees with items");
  return d;
}

void DatasetIndex::save(const std::string& path) const { write_file_atomic(path, to_json().dump(2) + "\n"); }

DatasetIndex DatasetIndex::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path);
  return from_json(nlohmann::json::parse(in));
}

DatasetIndex ingest(const std::string& root, const IngestConfig& config) {
  if (!fs::is_directory(root)) throw std::runtime_error("dataset root is not a directory: " + root);
  if (config.image_size < 8) throw std::invalid_argument("image_size must be >= 8");
  if (!(config.validation_fraction >= 0.0 && config.validation_fraction < 1.0))
    throw std::invalid_argument("validation_fraction must lie in [0, 1)");

  DatasetIndex d;
  d.name = config.name;
  d.root = fs::absolute(root).lexically_normal().string();
  d.height = d.width = config.image_size;

  std::vector<std::string> rels;
  for (const auto& entry : fs::recursive_directory_iterator(root, fs::directory_options::skip_permission_denied))
    if (entry.is_regular_file() && has_image_extension(entry.path()))
      rels.push_back(fs::relative(entry.path(), root).generic_string());
  std::sort(rels.begin(), rels.end());

  for (const auto& rel : rels) {
    try {
      const Tensor<float> img = read_image((fs::path(root) / rel).string());
      if (img.height() < 8 || img.width() < 8) throw std::runtime_error("image smaller than 8x8");
      d.items.push_back({rel, Split::Train, path_key(rel)});
    } catch (const std::exception& e) {
      d.skipped.push_back({rel, e.what()});
    }
  }
  if (d.items.empty()) throw std::runtime_error("no images found in " + root);

  const auto n_val = static_cast<std::size_t>(std::llround(config.validation_fraction * d.items.size()));
  std::vector<std::size_t> order(d.items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return d.items[a].key != d.items[b].key ? d.items[a].key < d.items[b].key : d.items[a].path < d.items[b].path;
  });
  for (std::size_t i = 0; i < n_val; ++i) d.items[order[i]].split = Split::Validation;

  d.save(config.manifest_path.empty() ? (fs::path(root) / "manifest.json").string() : config.manifest_path);
  return d;
}

template <typename Scalar>
TrainingSample<Scalar> make_sample_from_image(const Tensor<float>& image01, const PreprocParams& params,
                                              const SampleOptions& options) {
  params.validate();
  Rng crop_rng(derive_seed(options.seed, {kCropTag}));
  const Tensor<Scalar> img =
      resize_and_crop(image01, options.image_size, options.training ? CropMode::Random : CropMode::Center, &crop_rng)
          .template cast<Scalar>();

  TrainingSample<Scalar> s;
  s.params = params;
  s.x_gt = normalize(img);
  s.edge = extract_edge(img, params, options.training ? EdgeMode::Training : EdgeMode::Inference).pixels;
  const ColorDomain<Scalar> cd = extract_color_domain(img, params);
  s.color_domain = normalize(cd.pixels);
  s.kmeans_converged = cd.kmeans_converged;
  if (options.phase == Phase::Imitation)
    s.mask = generate_mask<Scalar>(options.image_size, options.image_size, options.max_hidden_fraction,
                                   derive_seed(options.seed, {kMaskTag}))
                 .pixels;
  else
    s.mask = Tensor<Scalar>(1, options.image_size, options.image_size, Scalar(1));
  return s;
}

template <typename Scalar>
TrainingSample<Scalar> make_sample(const DatasetIndex& index, const DatasetItem& item, const PreprocParams& params,
                                   const SampleOptions& options) {
  try {
    auto s = make_sample_from_image<Scalar>(read_image(index.absolute_path(item)), params, options);
    s.source = item.path;
    return s;
  } catch (const std::exception& e) {
    throw std::runtime_error(item.path + ": " + e.what());
  }
}

std::uint64_t params_fingerprint(const PreprocParams& p, const SampleOptions& o) {
  const nlohmann::json j = {{"sigma", p.canny_sigma},
                            {"clusters", p.cluster_count},
                            {"median_pre", p.median_kernel_pre},
                            {"median_post", p.median_kernel_post},
                            {"dropout", p.edge_dropout_prob},
                            {"seed", p.seed},
                            {"auto", p.thresholds.automatic},
                            {"mult", p.thresholds.median_multiplier},
                            {"floor", p.thresholds.floor},
                            {"ratio", p.thresholds.low_ratio},
                            {"low", p.thresholds.low},
                            {"high", p.thresholds.high},
                            {"size", o.image_size},
                            {"phase", to_int(o.phase)},
                            {"training", o.training},
                            {"max_hidden", o.max_hidden_fraction},
                            {"sample_seed", o.seed}};
  const std::string s = j.dump();
  return fnv1a(s.data(), s.size());
}

SampleCache::SampleCache(std::string directory) : dir_(std::move(directory)) { fs::create_directories(dir_); }

std::string SampleCache::entry_path(const DatasetItem& item, std::uint64_t fingerprint) const {
  char name[64];
  std::snprintf(name, sizeof(name), "%016llx-%016llx.pirec", static_cast<unsigned long long>(item.key),
                static_cast<unsigned long long>(fingerprint));
  return (fs::path(dir_) / name).string();
}

std::optional<TrainingSample<float>> SampleCache::find(const DatasetItem& item, std::uint64_t fingerprint) const {
  const std::string path = entry_path(item, fingerprint);
  if (!fs::exists(path)) return std::nullopt;
  try {
    const Archive ar = Archive::load(path);
    if (ar.meta().value("item", "") != item.path) return std::nullopt;
    const int h = ar.meta().at("height"), w = ar.meta().at("width");
    auto tensor = [&](const char* name, int c) {
      Tensor<float> t(c, h, w);
      t.matrix() = ar.get<float>(name);
      return t;
    };
    TrainingSample<float> s;
    s.x_gt = tensor("x_gt", 3);
    s.edge = tensor("edge", 1);
    s.color_domain = tensor("color_domain", 3);
    s.mask = tensor("mask", 1);
    const auto& p = ar.meta().at("params");
    s.params.canny_sigma = p.at("sigma");
    s.params.cluster_count = p.at("clusters");
    s.params.median_kernel_pre = p.at("median_pre");
    s.params.median_kernel_post = p.at("median_post");
    s.params.edge_dropout_prob = p.at("dropout");
    s.params.seed = p.at("seed");
    s.kmeans_converged = ar.meta().value("kmeans_converged", true);
    s.source = item.path;
    return s;
  } catch (const std::exception&) {
    return std::nullopt;  // unreadable entries are recomputed
  }
}

void SampleCache::store(const DatasetItem& item, std::uint64_t fingerprint, const TrainingSample<float>& s) const {
  Archive ar;
  ar.meta() = {{"kind", "sample"},
               {"item", item.path},
               {"height", s.x_gt.height()},
               {"width", s.x_gt.width()},
               {"kmeans_converged", s.kmeans_converged},
               {"params",
                {{"sigma", s.params.canny_sigma},
                 {"clusters", s.params.cluster_count},
                 {"median_pre", s.params.median_kernel_pre},
                 {"median_post", s.params.median_kernel_post},
                 {"dropout", s.params.edge_dropout_prob},
                 {"seed", s.params.seed}}}};
  ar.put("x_gt", s.x_gt.matrix());
  ar.put("edge", s.edge.matrix());
  ar.put("color_domain", s.color_domain.matrix());
  ar.put("mask", s.mask.matrix());
  ar.save(entry_path(item, fingerprint));
}

TrainingSample<float> SampleCache::get(const DatasetIndex& index, const DatasetItem& item, const PreprocParams& params,
                                       const SampleOptions& options, bool hc_active) const {
  if (hc_active) return make_sample<float>(index, item, params, options);
  const std::uint64_t fp = params_fingerprint(params, options);
  if (auto hit = find(item, fp)) {
    ++hits_;
    return *hit;
  }
  ++misses_;
  TrainingSample<float> s = make_sample<float>(index, item, params, options);
  store(item, fp, s);
  return s;
}

Tensor<float> render_synthetic_shapes(int size, std::uint64_t seed) {
  if (size < 8) throw std::invalid_argument("synthetic images must be at least 8 pixels");
  Rng rng(seed);
  using Color = std::array<double, 3>;
  auto random_color = [&] { return Color{rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)}; };

  // Light always comes from the upper left, so shading is learnable from shape alone.
  const double lx = -0.5, ly = -0.6, lz = 0.62;
  const Color bg_top = random_color(), bg_bottom = random_color();

  struct Shape {
    int kind;  // 0 disc, 1 box, 2 triangle
    double cx, cy, r, angle;
    Color color;
  };
  std::vector<Shape> shapes(static_cast<std::size_t>(rng.uniform_int(2, 4)));
  for (auto& s : shapes) {
    s.kind = rng.uniform_int(0, 2);
    s.r = rng.uniform(0.12, 0.3);
    s.cx = rng.uniform(s.r * 0.5, 1.0 - s.r * 0.5);
    s.cy = rng.uniform(s.r * 0.5, 1.0 - s.r * 0.5);
    s.angle = rng.uniform(0.0, 6.283185307179586);
    s.color = random_color();
  }

  auto shade = [&](double u, double v) -> Color {
    Color c;
    for (int k = 0; k < 3; ++k) c[static_cast<std::size_t>(k)] = bg_top[k] + (bg_bottom[k] - bg_top[k]) * v;
    for (const auto& s : shapes) {
      const double dx = (u - s.cx) / s.r, dy = (v - s.cy) / s.r;
      double light = -1.0;
      if (s.kind == 0) {
        const double rr = dx * dx + dy * dy;
        if (rr <= 1.0) light = std::max(0.0, dx * lx + dy * ly + std::sqrt(1.0 - rr) * lz);
      } else {
        const double ca = std::cos(s.angle), sa = std::sin(s.angle);
        const double px = ca * dx + sa * dy, py = -sa * dx + ca * dy;
        // Box, or an equilateral triangle with circumradius 1.
        const bool inside = s.kind == 1 ? (std::abs(px) <= 0.8 && std::abs(py) <= 0.6)
                                        : (py <= 0.5 && py >= 1.7320508 * std::abs(px) - 1.0);
        // Flat faces get a linear ramp toward the light.
        if (inside) light = 0.5 + 0.35 * (dx * lx + dy * ly);
      }
      if (light >= 0.0) {
        const double f = std::clamp(0.35 + 0.75 * light, 0.0, 1.3);
        for (int k = 0; k < 3; ++k) c[static_cast<std::size_t>(k)] = std::clamp(s.color[k] * f, 0.0, 1.0);
      }
    }
    return c;
  };

  constexpr int ss = 3;  // supersampling for anti-aliased boundaries
  Tensor<float> out(3, size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      Color acc{0, 0, 0};
      for (int sy = 0; sy < ss; ++sy)
        for (int sx = 0; sx < ss; ++sx) {
          const Color c = shade((x + (sx + 0.5) / ss) / size, (y + (sy + 0.5) / ss) / size);
          for (int k = 0; k < 3; ++k) acc[static_cast<std::size_t>(k)] += c[k];
        }
      for (int k = 0; k < 3; ++k) out(k, y, x) = static_cast<float>(acc[static_cast<std::size_t>(k)] / (ss * ss));
    }
  return out;
}

void write_synthetic_shapes(const std::string& directory, const SyntheticShapesConfig& config) {
  if (config.count < 1) throw std::invalid_argument("synthetic count must be positive");
  fs::create_directories(directory);
  for (int i = 0; i < config.count; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "shape_%05d.png", i);
    write_png((fs::path(directory) / name).string(),
              render_synthetic_shapes(config.image_size, derive_seed(config.seed, {static_cast<std::uint64_t>(i)})));
  }
}

#define PIREC_INSTANTIATE_DATAIO(S)                                                                              \
  template TrainingSample<S> make_sample_from_image(const Tensor<float>&, const PreprocParams&,                  \
                                                    const SampleOptions&);                                       \
  template TrainingSample<S> make_sample(const DatasetIndex&, const DatasetItem&, const PreprocParams&,           \
                                         const SampleOptions&);

PIREC_INSTANTIATE_DATAIO(float)
PIREC_INSTANTIATE_DATAIO(double)

}  // namespace pirec
