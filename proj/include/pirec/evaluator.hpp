#pragma once

#include "pirec/dataio.hpp"
#include "pirec/extractor.hpp"
#include "pirec/networks.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace pirec {

/// One feature vector per row.
template <typename Scalar>
using FeatureMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// LPIPS-like distance with uniform layer weights: features are unit-normalized
/// across channels at every position, then the squared difference is averaged
/// per layer and the layer means are averaged.
template <typename Scalar>
double perceptual_distance(const FeatureStack<Scalar>& a, const FeatureStack<Scalar>& b);
template <typename Scalar>
double perceptual_distance(const Tensor<Scalar>& x, const Tensor<Scalar>& y, const PerceptualExtractor<Scalar>& extractor);

struct EvalPair {
  Tensor<float> x_gt;   // [-1, 1]
  Tensor<float> edge;   // {0, 1}
  Tensor<float> style;  // color domain, [-1, 1]
  std::string source;
};

using Reconstructor = std::function<Tensor<float>(const Tensor<float>& edge, const Tensor<float>& style)>;

struct AccuracyResult {
  double mean = 0.0;
  std::vector<double> distances;
};

/// Mean perceptual distance between x_gt and the reconstruction of (edge, style).
AccuracyResult accuracy_score(const std::vector<EvalPair>& pairs, const Reconstructor& generator,
                              const PerceptualExtractor<float>& extractor);

/// Median pairwise Euclidean distance over the pooled rows of `a` and `b` (1 if all coincide).
template <typename Scalar>
double median_bandwidth(const FeatureMatrix<Scalar>& a, const FeatureMatrix<Scalar>& b);

/// Biased squared MMD with k(u, v) = exp(-|u - v|^2 / (2 h^2)). h <= 0 picks the median heuristic.
template <typename Scalar>
double kernel_mmd(const FeatureMatrix<Scalar>& a, const FeatureMatrix<Scalar>& b, double bandwidth = 0.0);

struct FidResult {
  double value = 0.0;
  /// Negative eigenvalues beyond round-off were clipped in the square root.
  bool clipped = false;
  /// Fewer samples than dimension + 1; a small ridge was added to both covariances.
  bool regularized = false;
};

/// |mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a S_b)^(1/2)) with unbiased covariances.
template <typename Scalar>
FidResult fid(const FeatureMatrix<Scalar>& a, const FeatureMatrix<Scalar>& b);

/// Global-average-pooled activations of every extractor tap, concatenated.
template <typename Scalar>
Eigen::Matrix<Scalar, 1, Eigen::Dynamic> image_embedding(const Tensor<Scalar>& image,
                                                         const PerceptualExtractor<Scalar>& extractor);

struct EvalOptions {
  /// Phase used to produce outputs; phase 3 chains through phase 2.
  Phase phase = Phase::Generating;
  PreprocParams params;
  int image_size = 64;
  /// Maximum number of pairs (0 = all).
  int limit = 0;
  ExtractorConfig extractor = ExtractorConfig::small_random();
  double mmd_bandwidth = 0.0;
  std::uint64_t seed = 0;
};

struct EvalReport {
  double accuracy = 0.0;
  double mmd = 0.0;
  double fid = 0.0;
  int sample_count = 0;
  /// Same metric with the color domain itself as the output.
  double baseline_accuracy = 0.0;
  double mmd_bandwidth = 0.0;
  bool fid_clipped = false;
  bool fid_regularized = false;
  int phase = 2;
  std::string model_id;
  std::string feature_source;
  std::vector<std::string> sources;
  std::vector<double> distances;
  std::vector<double> baseline_distances;

  nlohmann::json to_json() const;
};

/// Validation pairs (center crop, fixed preprocessing). Falls back to all items when
/// the dataset has no validation split.
std::vector<EvalPair> make_eval_pairs(const DatasetIndex& dataset, const PreprocParams& params, int image_size,
                                      int limit, std::uint64_t seed);

EvalReport evaluate(const Generator<float>& generator, const std::vector<EvalPair>& pairs, const EvalOptions& options);

}  // namespace pirec
