#pragma once

#include "pirec/networks.hpp"
#include "pirec/preproc.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pirec {

enum class Split { Train, Validation };

const char* split_name(Split s);

struct DatasetItem {
  std::string path;        // relative to the dataset root, '/' separated
  Split split = Split::Train;
  std::uint64_t key = 0;   // FNV-1a of `path`; drives the split
};

struct SkippedItem {
  std::string path;
  std::string reason;
};

struct IngestConfig {
  std::string name = "dataset";
  int image_size = 64;
  double validation_fraction = 0.05;
  /// Where the manifest is written; empty means <root>/manifest.json.
  std::string manifest_path;
};

struct DatasetIndex {
  static constexpr int kSchemaVersion = 1;

  std::string name;
  std::string root;
  int height = 0;
  int width = 0;
  std::vector<DatasetItem> items;
  std::vector<SkippedItem> skipped;

  std::size_t count() const { return items.size(); }
  std::vector<DatasetItem> split(Split s) const;
  std::string absolute_path(const DatasetItem& item) const;

  nlohmann::json to_json() const;
  static DatasetIndex from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static DatasetIndex load(const std::string& path);
};

/// Recursive scan for decodable images. Items are ordered by path; the
/// round(fraction * n) items with the smallest path hashes form the
/// validation split. Corrupt files are listed in `skipped`.
DatasetIndex ingest(const std::string& root, const IngestConfig& config);

template <typename Scalar>
struct TrainingSample {
  Tensor<Scalar> x_gt;          // 3 x H x W in [-1, 1]
  Tensor<Scalar> edge;          // 1 x H x W in {0, 1}
  Tensor<Scalar> color_domain;  // 3 x H x W in [-1, 1]
  Tensor<Scalar> mask;          // 1 x H x W, 1 = visible; all ones outside phase 1
  PreprocParams params;
  bool kmeans_converged = true;
  std::string source;           // dataset-relative path, for diagnostics
};

struct SampleOptions {
  int image_size = 64;
  Phase phase = Phase::Generating;
  /// Random crop and edge dropout in training; center crop and raw edges otherwise.
  bool training = true;
  double max_hidden_fraction = 0.7;
  std::uint64_t seed = 0;
};

/// Preprocesses an already decoded [0, 1] image.
template <typename Scalar>
TrainingSample<Scalar> make_sample_from_image(const Tensor<float>& image01, const PreprocParams& params,
                                              const SampleOptions& options);

/// Loads `item`, resizes/crops and preprocesses it. Errors carry the item path.
template <typename Scalar>
TrainingSample<Scalar> make_sample(const DatasetIndex& index, const DatasetItem& item, const PreprocParams& params,
                                   const SampleOptions& options);

/// Stable digest of everything that influences a preprocessed sample.
std::uint64_t params_fingerprint(const PreprocParams& params, const SampleOptions& options);

/// On-disk cache of preprocessed samples, keyed by (path hash, params fingerprint).
class SampleCache {
 public:
  explicit SampleCache(std::string directory);

  std::string entry_path(const DatasetItem& item, std::uint64_t fingerprint) const;
  std::optional<TrainingSample<float>> find(const DatasetItem& item, std::uint64_t fingerprint) const;
  void store(const DatasetItem& item, std::uint64_t fingerprint, const TrainingSample<float>& sample) const;

  /// Cached make_sample; `hc_active` bypasses the cache since params vary per epoch.
  TrainingSample<float> get(const DatasetIndex& index, const DatasetItem& item, const PreprocParams& params,
                            const SampleOptions& options, bool hc_active) const;

  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  std::string dir_;
  mutable std::size_t hits_ = 0, misses_ = 0;
};

struct SyntheticShapesConfig {
  int count = 200;
  int image_size = 64;
  std::uint64_t seed = 1234;
};

/// Renders a flat-shaded shapes image: a lit gradient background and a few
/// shaded discs, boxes and triangles. Values in [0, 1].
Tensor<float> render_synthetic_shapes(int size, std::uint64_t seed);

/// Writes `count` PNGs named shape_00000.png ... into `directory`.
void write_synthetic_shapes(const std::string& directory, const SyntheticShapesConfig& config);

}  // namespace pirec
