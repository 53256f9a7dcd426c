#pragma once

#include "pirec/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pirec {

/// 1 x H x W, every element exactly 0 or 1.
template <typename Scalar>
struct EdgeMap {
  Tensor<Scalar> pixels;
};

/// 3 x H x W flat color regions in [0, 1].
template <typename Scalar>
struct ColorDomain {
  Tensor<Scalar> pixels;
  int cluster_count = 0;
  /// False when K-means hit its iteration cap before assignments settled.
  bool kmeans_converged = true;
};

/// 1 x H x W, 1 = visible, 0 = hidden.
template <typename Scalar>
struct Mask {
  Tensor<Scalar> pixels;

  double hidden_fraction() const {
    if (pixels.empty()) return 0.0;
    return 1.0 - static_cast<double>(pixels.matrix().sum()) / static_cast<double>(pixels.size());
  }
};

/// Hysteresis thresholds on Sobel gradient magnitude (intensity scaled to [0, 1]).
/// In automatic mode high = max(floor, median_multiplier * median nonzero magnitude)
/// and low = low_ratio * high.
struct CannyThresholds {
  bool automatic = true;
  double median_multiplier = 2.0;
  double floor = 0.15;
  double low_ratio = 0.5;
  double low = 0.1;
  double high = 0.2;
};

struct PreprocParams {
  double canny_sigma = 3.0;
  int cluster_count = 3;
  int median_kernel_pre = 3;
  int median_kernel_post = 3;
  double edge_dropout_prob = 0.08;
  std::uint64_t seed = 0;
  CannyThresholds thresholds{};

  void validate() const;
};

/// Sampling ranges for hyperparameter confusion.
struct HcRanges {
  double sigma_min = 1.0;
  double sigma_max = 4.0;
  int clusters_min = 2;
  int clusters_max = 6;
  std::vector<int> median_kernels{3, 5};
  double edge_dropout_prob = 0.08;

  void validate() const;
  /// Both ranges collapsed onto one value.
  static HcRanges fixed(double sigma, int clusters, int median_kernel = 3);
};

enum class EdgeMode { Training, Inference };

/// Radius of the Gaussian used before gradient estimation.
int gaussian_radius(double sigma);

PreprocParams sample_hc_params(const HcRanges& ranges, std::uint64_t seed);

template <typename Scalar>
Tensor<Scalar> to_grayscale(const Tensor<Scalar>& image);

template <typename Scalar>
Tensor<Scalar> gaussian_blur(const Tensor<Scalar>& plane, double sigma, int radius);

/// Canny edges; dropout is applied only in training mode.
template <typename Scalar>
EdgeMap<Scalar> extract_edge(const Tensor<Scalar>& image, const PreprocParams& params,
                             EdgeMode mode = EdgeMode::Training);

/// Zeroes each edge pixel independently with probability `prob`.
template <typename Scalar>
void drop_edge_pixels(EdgeMap<Scalar>& edge, double prob, std::uint64_t seed);

/// Per-channel median with replicated borders; kernel 1 is the identity.
template <typename Scalar>
Tensor<Scalar> median_filter(const Tensor<Scalar>& image, int kernel);

struct KMeansResult {
  Eigen::MatrixXd centroids;  // K x D
  std::vector<int> labels;
  double inertia = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct KMeansOptions {
  int clusters = 3;
  int max_iterations = 10;
  int restarts = 10;
  /// Point-transfer refinement passes after the Lloyd iterations (0 disables).
  int hartigan_passes = 10;
  std::uint64_t seed = 0;
};

/// Lloyd iterations from seeded k-means++ starts; returns the lowest-inertia run.
KMeansResult kmeans(const Eigen::MatrixXd& points, const KMeansOptions& options);

template <typename Scalar>
ColorDomain<Scalar> extract_color_domain(const Tensor<Scalar>& image, const PreprocParams& params);

template <typename Scalar>
Mask<Scalar> generate_mask(int height, int width, double max_hidden_fraction, std::uint64_t seed);

template <typename Scalar>
ColorDomain<Scalar> interpolate_color_domain(const ColorDomain<Scalar>& a, const ColorDomain<Scalar>& b, double t);

}  // namespace pirec
