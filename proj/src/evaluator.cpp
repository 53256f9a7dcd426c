#include "pirec/evaluator.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pirec {

namespace {

constexpr double kUnitEps = 1e-10;

template <typename Scalar>
Eigen::MatrixXd unit_columns(const Tensor<Scalar>& t) {
  // columns are spatial positions
  Eigen::MatrixXd m = t.matrix().template cast<double>();
  const Eigen::RowVectorXd norms = m.colwise().norm();
  for (Eigen::Index j = 0; j < m.cols(); ++j) m.col(j) /= norms(j) + kUnitEps;
  return m;
}

Eigen::MatrixXd centered(const Eigen::MatrixXd& x, Eigen::RowVectorXd& mean) {
  mean = x.colwise().mean();
  return x.rowwise() - mean;
}

}  // namespace

template <typename Scalar>
double perceptual_distance(const FeatureStack<Scalar>& a, const FeatureStack<Scalar>& b) {
  if (a.depth() != b.depth() || a.depth() == 0) throw std::invalid_argument("perceptual_distance: layer count mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < a.depth(); ++i) {
    if (!a.layers[i].same_shape(b.layers[i]))
      throw std::invalid_argument("perceptual_distance: layer " + std::to_string(i) + " shapes " +
                                  a.layers[i].shape_string() + " vs " + b.layers[i].shape_string());
    total += (unit_columns(a.layers[i]) - unit_columns(b.layers[i])).squaredNorm() /
             static_cast<double>(a.layers[i].size());
  }
  return total / static_cast<double>(a.depth());
}

template <typename Scalar>
double perceptual_distance(const Tensor<Scalar>& x, const Tensor<Scalar>& y, const PerceptualExtractor<Scalar>& extractor) {
  if (!x.same_shape(y))
    throw std::invalid_argument("perceptual_distance: " + x.shape_string() + " vs " + y.shape_string());
  return perceptual_distance(extractor.extract(x), extractor.extract(y));
}

AccuracyResult accuracy_score(const std::vector<EvalPair>& pairs, const Reconstructor& generator,
                              const PerceptualExtractor<float>& extractor) {
  if (pairs.empty()) throw std::invalid_argument("accuracy_score: no pairs");
  AccuracyResult r;
  r.distances.reserve(pairs.size());
  for (const auto& p : pairs) r.distances.push_back(perceptual_distance(p.x_gt, generator(p.edge, p.style), extractor));
  double sum = 0.0;
  for (double d : r.distances) sum += d;
  r.mean = sum / static_cast<double>(r.distances.size());
  return r;
}

template <typename Scalar>
double median_bandwidth(const FeatureMatrix<Scalar>& a, const FeatureMatrix<Scalar>& b) {
  Eigen::MatrixXd pooled(a.rows() + b.rows(), a.cols());
  pooled << a.template cast<double>(), b.template cast<double>();
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(pooled.rows() * (pooled.rows() - 1) / 2));
  for (Eigen::Index i = 0; i < pooled.rows(); ++i)
    for (Eigen::Index j = i + 1; j < pooled.rows(); ++j) d.push_back((pooled.row(i) - pooled.row(j)).norm());
  if (d.empty()) return 1.0;
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  double med = *mid;
  if (d.size() % 2 == 0) med = 0.5 * (med + *std::max_element(d.begin(), mid));
  return med > 0.0 ? med : 1.0;
}

template <typename Scalar>
double kernel_mmd(const FeatureMatrix<Scalar>& a, const FeatureMatrix<Scalar>& b, double bandwidth) {
  if (a.rows() == 0 || b.rows() == 0) throw std::invalid_argument("kernel_mmd: empty feature set");
  if (a.cols() != b.cols()) throw std::invalid_argument("kernel_mmd: dimension mismatch");
  const double h = bandwidth > 0.0 ? bandwidth : median_bandwidth(a, b);
  const Eigen::MatrixXd x = a.template cast<double>(), y = b.template cast<double>();
  auto mean_kernel = [h](const Eigen::MatrixXd& u, const Eigen::MatrixXd& v) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < u.rows(); ++i)
      for (Eigen::Index j = 0; j < v.rows(); ++j) s += std::exp(-(u.row(i) - v.row(j)).squaredNorm() / (2.0 * h * h));
    return s / static_cast<double>(u.rows() * v.rows());
  };
  return mean_kernel(x, x) + mean_kernel(y, y) - 2.0 * mean_kernel(x, y);
}

template <typename Scalar>
FidResult fid(const FeatureMatrix<Scalar>& a, const FeatureMatrix<Scalar>& b) {
  if (a.rows() < 2 || b.rows() < 2) throw std::invalid_argument("fid: each set needs at least two samples");
  if (a.cols() != b.cols()) throw std::invalid_argument("fid: dimension mismatch");
  FidResult r;
  Eigen::RowVectorXd mu_a, mu_b;
  const Eigen::MatrixXd ca = centered(a.template cast<double>(), mu_a);
  const Eigen::MatrixXd cb = centered(b.template cast<double>(), mu_b);
  Eigen::MatrixXd sa = ca.transpose() * ca / static_cast<double>(a.rows() - 1);
  Eigen::MatrixXd sb = cb.transpose() * cb / static_cast<double>(b.rows() - 1);
  sa = 0.5 * (sa + sa.transpose());
  sb = 0.5 * (sb + sb.transpose());
  const Eigen::Index d = a.cols();
  if (a.rows() < d + 1 || b.rows() < d + 1) {
    r.regularized = true;
    sa.diagonal().array() += 1e-6;
    sb.diagonal().array() += 1e-6;
  }
  // tr((Sa Sb)^(1/2)) = tr((Sa^(1/2) Sb Sa^(1/2))^(1/2)); the inner matrix is symmetric PSD.
  const double scale = std::max({sa.diagonal().cwiseAbs().maxCoeff(), sb.diagonal().cwiseAbs().maxCoeff(), 1e-300});
  const double tol = 1e-10 * scale;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(sa);
  Eigen::VectorXd la = ea.eigenvalues();
  if (la.minCoeff() < -tol) r.clipped = true;
  la = la.cwiseMax(0.0);
  const Eigen::MatrixXd root_a = ea.eigenvectors() * la.cwiseSqrt().asDiagonal() * ea.eigenvectors().transpose();
  Eigen::MatrixXd inner = root_a * sb * root_a;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ei(inner, Eigen::EigenvaluesOnly);
  Eigen::VectorXd li = ei.eigenvalues();
  if (li.minCoeff() < -tol * scale) r.clipped = true;
  const double tr_root = li.cwiseMax(0.0).cwiseSqrt().sum();
  r.value = (mu_a - mu_b).squaredNorm() + sa.trace() + sb.trace() - 2.0 * tr_root;
  return r;
}

template <typename Scalar>
Eigen::Matrix<Scalar, 1, Eigen::Dynamic> image_embedding(const Tensor<Scalar>& image,
                                                         const PerceptualExtractor<Scalar>& extractor) {
  const FeatureStack<Scalar> f = extractor.extract(image);
  Eigen::Index width = 0;
  for (const auto& l : f.layers) width += l.channels();
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> out(width);
  Eigen::Index at = 0;
  for (const auto& l : f.layers) {
    out.segment(at, l.channels()) = l.matrix().rowwise().mean().transpose();
    at += l.channels();
  }
  return out;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json per = nlohmann::json::array();
  for (std::size_t i = 0; i < distances.size(); ++i)
    per.push_back({{"source", i < sources.size() ? sources[i] : std::string()},
                   {"distance", distances[i]},
                   {"baseline_distance", i < baseline_distances.size() ? baseline_distances[i] : 0.0}});
  return {{"accuracy", accuracy},
          {"mmd", mmd},
          {"fid", fid},
          {"sample_count", sample_count},
          {"baseline_accuracy", baseline_accuracy},
          {"mmd_bandwidth", mmd_bandwidth},
          {"fid_clipped", fid_clipped},
          {"fid_regularized", fid_regularized},
          {"phase", phase},
          {"model_id", model_id},
          {"metric", "lpips-like (uniform layer weights)"},
          {"feature_source", feature_source},
          {"per_sample", per}};
}

std::vector<EvalPair> make_eval_pairs(const DatasetIndex& dataset, const PreprocParams& params, int image_size,
                                      int limit, std::uint64_t seed) {
  std::vector<DatasetItem> items = dataset.split(Split::Validation);
  if (items.empty()) items = dataset.items;
  if (limit > 0 && items.size() > static_cast<std::size_t>(limit)) items.resize(static_cast<std::size_t>(limit));
  std::vector<EvalPair> pairs;
  pairs.reserve(items.size());
  for (const auto& item : items) {
    PreprocParams p = params;
    p.seed = derive_seed(seed, {item.key, 1});
    SampleOptions o;
    o.image_size = image_size;
    o.phase = Phase::Generating;
    o.training = false;
    o.seed = derive_seed(seed, {item.key, 2});
    auto s = make_sample<float>(dataset, item, p, o);
    pairs.push_back({std::move(s.x_gt), std::move(s.edge), std::move(s.color_domain), item.path});
  }
  return pairs;
}

EvalReport evaluate(const Generator<float>& generator, const std::vector<EvalPair>& pairs, const EvalOptions& options) {
  if (pairs.empty()) throw std::invalid_argument("evaluate: no samples");
  const PerceptualExtractor<float> extractor(options.extractor);
  EvalReport r;
  r.phase = to_int(options.phase);
  r.model_id = generator.model_id();
  r.feature_source = options.extractor.name;
  r.sample_count = static_cast<int>(pairs.size());

  std::vector<Tensor<float>> outputs;
  outputs.reserve(pairs.size());
  const auto acc = accuracy_score(
      pairs,
      [&](const Tensor<float>& e, const Tensor<float>& s) {
        outputs.push_back(reconstruct(generator, e, s, options.phase));
        return outputs.back();
      },
      extractor);
  r.accuracy = acc.mean;
  r.distances = acc.distances;
  const auto base = accuracy_score(pairs, [](const Tensor<float>&, const Tensor<float>& s) { return s; }, extractor);
  r.baseline_accuracy = base.mean;
  r.baseline_distances = base.distances;
  for (const auto& p : pairs) r.sources.push_back(p.source);

  FeatureMatrix<double> real, fake;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto er = image_embedding(pairs[i].x_gt, extractor).cast<double>().eval();
    const auto ef = image_embedding(outputs[i], extractor).cast<double>().eval();
    if (i == 0) {
      real.resize(static_cast<Eigen::Index>(pairs.size()), er.size());
      fake.resize(static_cast<Eigen::Index>(pairs.size()), ef.size());
    }
    real.row(static_cast<Eigen::Index>(i)) = er;
    fake.row(static_cast<Eigen::Index>(i)) = ef;
  }
  r.mmd_bandwidth = options.mmd_bandwidth > 0.0 ? options.mmd_bandwidth : median_bandwidth(real, fake);
  r.mmd = kernel_mmd(real, fake, r.mmd_bandwidth);
  if (pairs.size() >= 2) {
    const FidResult f = fid(real, fake);
    r.fid = f.value;
    r.fid_clipped = f.clipped;
    r.fid_regularized = f.regularized;
  }
  return r;
}

#define PIREC_EVAL(S)                                                                                        \
  template double perceptual_distance(const FeatureStack<S>&, const FeatureStack<S>&);                       \
  template double perceptual_distance(const Tensor<S>&, const Tensor<S>&, const PerceptualExtractor<S>&);    \
  template double median_bandwidth(const FeatureMatrix<S>&, const FeatureMatrix<S>&);                        \
  template double kernel_mmd(const FeatureMatrix<S>&, const FeatureMatrix<S>&, double);                      \
  template FidResult fid(const FeatureMatrix<S>&, const FeatureMatrix<S>&);                                  \
  template Eigen::Matrix<S, 1, Eigen::Dynamic> image_embedding(const Tensor<S>&, const PerceptualExtractor<S>&);
PIREC_EVAL(float)
PIREC_EVAL(double)
#undef PIREC_EVAL

}  // namespace pirec
