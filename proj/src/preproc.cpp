#include "pirec/preproc.hpp"

#include "pirec/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pirec {

namespace {

constexpr std::uint64_t kEdgeDropoutTag = 0xED6E;
constexpr std::uint64_t kKMeansTag = 0x4B4D;

bool is_odd_positive(int k) { return k > 0 && (k % 2) == 1; }

int reflect101(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

int clamp_index(int i, int n) { return std::clamp(i, 0, n - 1); }

}  // namespace

void PreprocParams::validate() const {
  if (!(canny_sigma > 0.0) || !std::isfinite(canny_sigma)) throw std::invalid_argument("canny_sigma must be positive");
  if (cluster_count < 1) throw std::invalid_argument("cluster_count must be >= 1");
  if (!is_odd_positive(median_kernel_pre) || !is_odd_positive(median_kernel_post))
    throw std::invalid_argument("median kernels must be odd and positive");
  if (!(edge_dropout_prob >= 0.0 && edge_dropout_prob <= 1.0))
    throw std::invalid_argument("edge_dropout_prob must lie in [0, 1]");
  if (!thresholds.automatic && !(thresholds.low >= 0.0 && thresholds.low <= thresholds.high))
    throw std::invalid_argument("canny thresholds must satisfy 0 <= low <= high");
}

void HcRanges::validate() const {
  if (sigma_min > sigma_max) throw std::invalid_argument("HC sigma range is degenerate (min > max)");
  if (clusters_min > clusters_max) throw std::invalid_argument("HC cluster range is degenerate (min > max)");
  if (!(sigma_min > 0.0)) throw std::invalid_argument("HC sigma range must be positive");
  if (clusters_min < 1) throw std::invalid_argument("HC cluster range must start at >= 1");
  if (median_kernels.empty()) throw std::invalid_argument("HC median kernel set is empty");
  for (int k : median_kernels)
    if (!is_odd_positive(k)) throw std::invalid_argument("HC median kernels must be odd and positive");
  if (!(edge_dropout_prob >= 0.0 && edge_dropout_prob <= 1.0))
    throw std::invalid_argument("HC edge_dropout_prob must lie in [0, 1]");
}

HcRanges HcRanges::fixed(double sigma, int clusters, int median_kernel) {
  HcRanges r;
  r.sigma_min = r.sigma_max = sigma;
  r.clusters_min = r.clusters_max = clusters;
  r.median_kernels = {median_kernel};
  return r;
}

int gaussian_radius(double sigma) { return std::max(1, static_cast<int>(std::ceil(3.0 * sigma))); }

PreprocParams sample_hc_params(const HcRanges& ranges, std::uint64_t seed) {
  ranges.validate();
  Rng rng(derive_seed(seed, {0x4843}));
  PreprocParams p;
  p.canny_sigma = ranges.sigma_min == ranges.sigma_max ? ranges.sigma_min : rng.uniform(ranges.sigma_min, ranges.sigma_max);
  p.cluster_count = rng.uniform_int(ranges.clusters_min, ranges.clusters_max);
  const auto nk = static_cast<int>(ranges.median_kernels.size());
  p.median_kernel_pre = ranges.median_kernels[rng.uniform_int(0, nk - 1)];
  p.median_kernel_post = ranges.median_kernels[rng.uniform_int(0, nk - 1)];
  p.edge_dropout_prob = ranges.edge_dropout_prob;
  p.seed = rng.next();
  return p;
}

template <typename Scalar>
Tensor<Scalar> to_grayscale(const Tensor<Scalar>& image) {
  if (image.channels() == 1) return image;
  if (image.channels() != 3) throw std::invalid_argument("to_grayscale: expected 1 or 3 channels");
  Tensor<Scalar> gray(1, image.height(), image.width());
  gray.matrix().row(0) = Scalar(0.299) * image.matrix().row(0) + Scalar(0.587) * image.matrix().row(1) +
                         Scalar(0.114) * image.matrix().row(2);
  return gray;
}

template <typename Scalar>
Tensor<Scalar> gaussian_blur(const Tensor<Scalar>& plane, double sigma, int radius) {
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) total += kernel[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
  for (auto& k : kernel) k /= total;

  const int h = plane.height(), w = plane.width();
  Tensor<Scalar> tmp = Tensor<Scalar>::like(plane), out = Tensor<Scalar>::like(plane);
  for (int c = 0; c < plane.channels(); ++c) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * plane(c, y, reflect101(x + i, w));
        tmp(c, y, x) = static_cast<Scalar>(acc);
      }
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * tmp(c, reflect101(y + i, h), x);
        out(c, y, x) = static_cast<Scalar>(acc);
      }
  }
  return out;
}

template <typename Scalar>
EdgeMap<Scalar> extract_edge(const Tensor<Scalar>& image, const PreprocParams& params, EdgeMode mode) {
  params.validate();
  if (image.empty()) throw std::invalid_argument("extract_edge: empty image");
  const int radius = gaussian_radius(params.canny_sigma);
  const int support = 2 * radius + 1;
  if (image.height() < support || image.width() < support)
    throw std::invalid_argument("extract_edge: image " + image.shape_string() + " smaller than Canny kernel support " +
                                std::to_string(support));

  const int h = image.height(), w = image.width();
  const Tensor<Scalar> blurred = gaussian_blur(to_grayscale(image), params.canny_sigma, radius);
  auto at = [&](int y, int x) { return static_cast<double>(blurred(0, clamp_index(y, h), clamp_index(x, w))); };

  Eigen::MatrixXd dx(h, w), dy(h, w), mag(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      dx(y, x) = (at(y - 1, x + 1) + 2 * at(y, x + 1) + at(y + 1, x + 1)) -
                 (at(y - 1, x - 1) + 2 * at(y, x - 1) + at(y + 1, x - 1));
      dy(y, x) = (at(y + 1, x - 1) + 2 * at(y + 1, x) + at(y + 1, x + 1)) -
                 (at(y - 1, x - 1) + 2 * at(y - 1, x) + at(y - 1, x + 1));
      mag(y, x) = std::sqrt(dx(y, x) * dx(y, x) + dy(y, x) * dy(y, x));
    }

  double low = params.thresholds.low, high = params.thresholds.high;
  if (params.thresholds.automatic) {
    std::vector<double> nz;
    nz.reserve(mag.size());
    for (Eigen::Index i = 0; i < mag.size(); ++i)
      if (mag.data()[i] > 1e-9) nz.push_back(mag.data()[i]);
    double median = 0.0;
    if (!nz.empty()) {
      auto mid = nz.begin() + static_cast<std::ptrdiff_t>(nz.size() / 2);
      std::nth_element(nz.begin(), mid, nz.end());
      median = *mid;
    }
    high = std::max(params.thresholds.floor, params.thresholds.median_multiplier * median);
    low = params.thresholds.low_ratio * high;
  }

  // Non-maximum suppression along the quantized gradient direction; ties
  // resolve toward the lower/left neighbour.
  auto m_at = [&](int y, int x) { return (y < 0 || y >= h || x < 0 || x >= w) ? 0.0 : mag(y, x); };
  constexpr double kTan22 = 0.41421356237309503;
  // Rounding in the blur must not break exact mathematical ties.
  const double tol = 1e-6 * mag.maxCoeff();
  auto gt = [tol](double a, double b) { return a > b + tol; };
  auto ge = [tol](double a, double b) { return a >= b - tol; };
  // 0 = none, 1 = weak, 2 = strong
  Eigen::Matrix<unsigned char, Eigen::Dynamic, Eigen::Dynamic> state =
      Eigen::Matrix<unsigned char, Eigen::Dynamic, Eigen::Dynamic>::Zero(h, w);
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double m = mag(y, x);
      if (!(m > low)) continue;
      const double ax = std::abs(dx(y, x)), ay = std::abs(dy(y, x));
      bool keep;
      if (ay < ax * kTan22) {
        keep = gt(m, m_at(y, x - 1)) && ge(m, m_at(y, x + 1));
      } else if (ay > ax * (kTan22 + 2.0)) {
        keep = gt(m, m_at(y - 1, x)) && ge(m, m_at(y + 1, x));
      } else {
        const int s = ((dx(y, x) < 0) != (dy(y, x) < 0)) ? -1 : 1;
        keep = gt(m, m_at(y - 1, x - s)) && gt(m, m_at(y + 1, x + s));
      }
      if (!keep) continue;
      if (m > high) {
        state(y, x) = 2;
        stack.emplace_back(y, x);
      } else {
        state(y, x) = 1;
      }
    }

  while (!stack.empty()) {
    auto [y, x] = stack.back();
    stack.pop_back();
    for (int oy = -1; oy <= 1; ++oy)
      for (int ox = -1; ox <= 1; ++ox) {
        const int ny = y + oy, nx = x + ox;
        if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
        if (state(ny, nx) == 1) {
          state(ny, nx) = 2;
          stack.emplace_back(ny, nx);
        }
      }
  }

  EdgeMap<Scalar> edge{Tensor<Scalar>(1, h, w)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) edge.pixels(0, y, x) = state(y, x) == 2 ? Scalar(1) : Scalar(0);

  if (mode == EdgeMode::Training && params.edge_dropout_prob > 0.0)
    drop_edge_pixels(edge, params.edge_dropout_prob, derive_seed(params.seed, {kEdgeDropoutTag}));
  return edge;
}

template <typename Scalar>
void drop_edge_pixels(EdgeMap<Scalar>& edge, double prob, std::uint64_t seed) {
  if (!(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("drop_edge_pixels: probability outside [0, 1]");
  Rng rng(seed);
  Scalar* p = edge.pixels.data();
  for (Eigen::Index i = 0; i < edge.pixels.size(); ++i)
    if (p[i] != Scalar(0) && rng.bernoulli(prob)) p[i] = Scalar(0);
}

template <typename Scalar>
Tensor<Scalar> median_filter(const Tensor<Scalar>& image, int kernel) {
  if (!is_odd_positive(kernel)) throw std::invalid_argument("median_filter: kernel must be odd and positive");
  if (kernel == 1) return image;
  const int r = kernel / 2, h = image.height(), w = image.width();
  Tensor<Scalar> out = Tensor<Scalar>::like(image);
  std::vector<Scalar> window(static_cast<std::size_t>(kernel) * kernel);
  const auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
  for (int c = 0; c < image.channels(); ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        std::size_t n = 0;
        for (int oy = -r; oy <= r; ++oy)
          for (int ox = -r; ox <= r; ++ox) window[n++] = image(c, clamp_index(y + oy, h), clamp_index(x + ox, w));
        std::nth_element(window.begin(), mid, window.end());
        out(c, y, x) = *mid;
      }
  return out;
}

namespace {

void seed_plus_plus(const Eigen::MatrixXd& points, int k, Rng& rng, Eigen::MatrixXd& centroids) {
  const Eigen::Index n = points.rows();
  centroids.resize(k, points.cols());
  centroids.row(0) = points.row(rng.uniform_int(0, static_cast<int>(n) - 1));
  Eigen::VectorXd d2 = (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total <= 0.0) {
      pick = rng.uniform_int(0, static_cast<int>(n) - 1);
    } else {
      double target = rng.uniform() * total;
      for (pick = 0; pick < n - 1; ++pick) {
        target -= d2(pick);
        if (target < 0.0) break;
      }
    }
    centroids.row(c) = points.row(pick);
    d2 = d2.cwiseMin((points.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }
}

double assign(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids, std::vector<int>& labels) {
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
      const double d = (points.row(i) - centroids.row(c)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    labels[static_cast<std::size_t>(i)] = best;
    inertia += best_d;
  }
  return inertia;
}

/// Single-point transfers that strictly lower the objective (Hartigan's rule):
/// moving x from A to B changes inertia by nB/(nB+1)|x-muB|^2 - nA/(nA-1)|x-muA|^2.
void hartigan_polish(const Eigen::MatrixXd& points, std::vector<int>& labels, int k, int passes) {
  const auto n = static_cast<std::size_t>(points.rows());
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
  for (std::size_t i = 0; i < n; ++i) {
    sums.row(labels[i]) += points.row(static_cast<Eigen::Index>(i));
    counts(labels[i]) += 1.0;
  }
  for (int pass = 0; pass < passes; ++pass) {
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int a = labels[i];
      if (counts(a) <= 1.0) continue;
      const auto x = points.row(static_cast<Eigen::Index>(i));
      const double cost_out = counts(a) / (counts(a) - 1.0) * (x - sums.row(a) / counts(a)).squaredNorm();
      int best = a;
      double best_gain = 1e-12 * (1.0 + cost_out);
      for (int b = 0; b < k; ++b) {
        if (b == a) continue;
        const double cost_in =
            counts(b) == 0.0 ? 0.0 : counts(b) / (counts(b) + 1.0) * (x - sums.row(b) / counts(b)).squaredNorm();
        if (cost_out - cost_in > best_gain) {
          best_gain = cost_out - cost_in;
          best = b;
        }
      }
      if (best != a) {
        sums.row(a) -= x;
        counts(a) -= 1.0;
        sums.row(best) += x;
        counts(best) += 1.0;
        labels[i] = best;
        moved = true;
      }
    }
    if (!moved) break;
  }
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, const KMeansOptions& options) {
  const int k = options.clusters;
  if (k < 1) throw std::invalid_argument("kmeans: clusters must be >= 1");
  if (points.rows() < k) throw std::invalid_argument("kmeans: fewer points than clusters");
  if (options.max_iterations < 1 || options.restarts < 1) throw std::invalid_argument("kmeans: bad iteration options");

  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  const auto n = static_cast<std::size_t>(points.rows());
  for (int run = 0; run < options.restarts; ++run) {
    Rng rng(derive_seed(options.seed, {kKMeansTag, static_cast<std::uint64_t>(run)}));
    KMeansResult r;
    seed_plus_plus(points, k, rng, r.centroids);
    r.labels.assign(n, -1);
    std::vector<int> previous;
    assign(points, r.centroids, r.labels);
    for (r.iterations = 0; r.iterations < options.max_iterations;) {
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
      Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
      for (std::size_t i = 0; i < n; ++i) {
        sums.row(r.labels[i]) += points.row(static_cast<Eigen::Index>(i));
        counts(r.labels[i]) += 1.0;
      }
      for (int c = 0; c < k; ++c)
        if (counts(c) > 0) r.centroids.row(c) = sums.row(c) / counts(c);
      ++r.iterations;
      previous = r.labels;
      assign(points, r.centroids, r.labels);
      if (previous == r.labels) {
        r.converged = true;
        break;
      }
    }
    if (options.hartigan_passes > 0) hartigan_polish(points, r.labels, k, options.hartigan_passes);
    // Final centroids are the means of the final assignment.
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (std::size_t i = 0; i < n; ++i) {
      sums.row(r.labels[i]) += points.row(static_cast<Eigen::Index>(i));
      counts(r.labels[i]) += 1.0;
    }
    for (int c = 0; c < k; ++c)
      if (counts(c) > 0) r.centroids.row(c) = sums.row(c) / counts(c);
    r.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      r.inertia += (points.row(static_cast<Eigen::Index>(i)) - r.centroids.row(r.labels[i])).squaredNorm();
    if (r.inertia < best.inertia) best = std::move(r);
  }
  return best;
}

template <typename Scalar>
ColorDomain<Scalar> extract_color_domain(const Tensor<Scalar>& image, const PreprocParams& params) {
  params.validate();
  if (image.channels() != 3) throw std::invalid_argument("extract_color_domain: expected 3 channels");
  if (image.plane_size() < params.cluster_count)
    throw std::invalid_argument("extract_color_domain: fewer pixels than clusters");

  const Tensor<Scalar> smoothed = median_filter(image, params.median_kernel_pre);
  const Eigen::MatrixXd points = smoothed.matrix().transpose().template cast<double>();
  KMeansOptions opts;
  opts.clusters = params.cluster_count;
  opts.seed = derive_seed(params.seed, {kKMeansTag});
  const KMeansResult km = kmeans(points, opts);

  Tensor<Scalar> quantized = Tensor<Scalar>::like(image);
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    quantized.matrix().col(i) = km.centroids.row(km.labels[static_cast<std::size_t>(i)]).transpose().template cast<Scalar>();

  ColorDomain<Scalar> out;
  out.pixels = median_filter(quantized, params.median_kernel_post);
  out.cluster_count = params.cluster_count;
  out.kmeans_converged = km.converged;
  return out;
}

namespace {

template <typename Scalar>
void fill_rect(Tensor<Scalar>& m, int y0, int x0, int hh, int ww) {
  for (int y = std::max(0, y0); y < std::min(m.height(), y0 + hh); ++y)
    for (int x = std::max(0, x0); x < std::min(m.width(), x0 + ww); ++x) m(0, y, x) = Scalar(0);
}

template <typename Scalar>
void fill_disc(Tensor<Scalar>& m, double cy, double cx, double r) {
  const int r_int = static_cast<int>(std::ceil(r));
  for (int y = static_cast<int>(cy) - r_int; y <= static_cast<int>(cy) + r_int; ++y)
    for (int x = static_cast<int>(cx) - r_int; x <= static_cast<int>(cx) + r_int; ++x) {
      if (y < 0 || y >= m.height() || x < 0 || x >= m.width()) continue;
      if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r) m(0, y, x) = Scalar(0);
    }
}

}  // namespace

template <typename Scalar>
Mask<Scalar> generate_mask(int height, int width, double max_hidden_fraction, std::uint64_t seed) {
  if (height < 1 || width < 1) throw std::invalid_argument("generate_mask: empty extent");
  if (!(max_hidden_fraction >= 0.0 && max_hidden_fraction <= 0.7))
    throw std::invalid_argument("generate_mask: max_hidden_fraction must lie in [0, 0.7]");
  Mask<Scalar> mask{Tensor<Scalar>(1, height, width, Scalar(1))};
  if (max_hidden_fraction == 0.0) return mask;
  if (max_hidden_fraction * height * width < 1.0)
    throw std::invalid_argument("generate_mask: max_hidden_fraction below one pixel");

  Rng rng(derive_seed(seed, {0x4D41534B}));
  double scale = 1.0;
  for (;;) {
    mask.pixels.matrix().setOnes();
    if (scale < 0.02) {
      // Degenerate fallback: a single small rectangle always fits.
      const int side = std::max(1, static_cast<int>(std::sqrt(max_hidden_fraction * height * width) * 0.5));
      fill_rect(mask.pixels, rng.uniform_int(0, height - 1), rng.uniform_int(0, width - 1), side, side);
    } else {
      const int rects = rng.uniform_int(1, 3), strokes = rng.uniform_int(1, 3);
      for (int i = 0; i < rects; ++i) {
        const int hh = std::max(1, static_cast<int>(scale * rng.uniform(0.1, 0.5) * height));
        const int ww = std::max(1, static_cast<int>(scale * rng.uniform(0.1, 0.5) * width));
        fill_rect(mask.pixels, rng.uniform_int(-hh / 2, height - 1), rng.uniform_int(-ww / 2, width - 1), hh, ww);
      }
      const double extent = std::min(height, width);
      for (int s = 0; s < strokes; ++s) {
        double cy = rng.uniform(0, height), cx = rng.uniform(0, width);
        const double radius = std::max(0.5, scale * rng.uniform(0.02, 0.08) * extent);
        const int vertices = rng.uniform_int(3, 8);
        for (int v = 0; v < vertices; ++v) {
          const double angle = rng.uniform(0.0, 6.283185307179586);
          const double length = scale * rng.uniform(0.1, 0.3) * extent;
          const int steps = std::max(1, static_cast<int>(length));
          for (int t = 0; t <= steps; ++t) {
            fill_disc(mask.pixels, cy + std::sin(angle) * length * t / steps, cx + std::cos(angle) * length * t / steps,
                      radius);
          }
          cy = std::clamp(cy + std::sin(angle) * length, 0.0, height - 1.0);
          cx = std::clamp(cx + std::cos(angle) * length, 0.0, width - 1.0);
        }
      }
    }
    const double hidden = mask.hidden_fraction();
    if (hidden > 0.0 && hidden <= max_hidden_fraction) return mask;
    if (hidden > max_hidden_fraction) scale *= 0.85;
  }
}

template <typename Scalar>
ColorDomain<Scalar> interpolate_color_domain(const ColorDomain<Scalar>& a, const ColorDomain<Scalar>& b, double t) {
  if (!a.pixels.same_shape(b.pixels))
    throw std::invalid_argument("interpolate_color_domain: shape mismatch " + a.pixels.shape_string() + " vs " +
                                b.pixels.shape_string());
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("interpolate_color_domain: t outside [0, 1]");
  ColorDomain<Scalar> out;
  if (t == 0.0) {
    out.pixels = a.pixels;
  } else if (t == 1.0) {
    out.pixels = b.pixels;
  } else {
    out.pixels = Tensor<Scalar>::like(a.pixels);
    out.pixels.matrix() = Scalar(1 - t) * a.pixels.matrix() + Scalar(t) * b.pixels.matrix();
  }
  out.cluster_count = std::max(a.cluster_count, b.cluster_count);
  out.kmeans_converged = a.kmeans_converged && b.kmeans_converged;
  return out;
}

#define PIREC_INSTANTIATE_PREPROC(S)                                                                        \
  template Tensor<S> to_grayscale(const Tensor<S>&);                                                        \
  template Tensor<S> gaussian_blur(const Tensor<S>&, double, int);                                          \
  template EdgeMap<S> extract_edge(const Tensor<S>&, const PreprocParams&, EdgeMode);                       \
  template void drop_edge_pixels(EdgeMap<S>&, double, std::uint64_t);                                       \
  template Tensor<S> median_filter(const Tensor<S>&, int);                                                  \
  template ColorDomain<S> extract_color_domain(const Tensor<S>&, const PreprocParams&);                     \
  template Mask<S> generate_mask<S>(int, int, double, std::uint64_t);                                       \
  template ColorDomain<S> interpolate_color_domain(const ColorDomain<S>&, const ColorDomain<S>&, double);

PIREC_INSTANTIATE_PREPROC(float)
PIREC_INSTANTIATE_PREPROC(double)

}  // namespace pirec
