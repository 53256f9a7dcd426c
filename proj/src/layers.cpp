#include "pirec/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace pirec {

namespace {

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

/// Source offset within one input plane for (ky, kx, oy, ox), or -1 for zero padding.
std::vector<int> patch_offsets(const ConvGeometry& g) {
  const int k = g.kernel;
  std::vector<int> idx(static_cast<std::size_t>(k) * k * g.out_h * g.out_w);
  std::size_t n = 0;
  for (int ky = 0; ky < k; ++ky)
    for (int kx = 0; kx < k; ++kx)
      for (int oy = 0; oy < g.out_h; ++oy)
        for (int ox = 0; ox < g.out_w; ++ox) {
          int y = oy * g.stride - g.padding + ky * g.dilation;
          int x = ox * g.stride - g.padding + kx * g.dilation;
          if (y < 0 || y >= g.in_h || x < 0 || x >= g.in_w) {
            if (g.pad_mode == PadMode::Zero) {
              idx[n++] = -1;
              continue;
            }
            y = reflect_index(y, g.in_h);
            x = reflect_index(x, g.in_w);
          }
          idx[n++] = y * g.in_w + x;
        }
  return idx;
}

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
Vector<Scalar> normalized(const Vector<Scalar>& v) {
  const Scalar n = v.norm();
  return v / (n + Scalar(1e-12));
}

template <typename Scalar>
RowMatrix<Scalar> random_normal(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
  RowMatrix<Scalar> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(rng.normal(0.0, stddev));
  return m;
}

}  // namespace

ConvGeometry ConvGeometry::make(int channels, int in_h, int in_w, int kernel, int stride, int padding, int dilation,
                                PadMode mode) {
  ConvGeometry g{channels, in_h, in_w, kernel, stride, padding, dilation, mode, 0, 0};
  const int span = dilation * (kernel - 1) + 1;
  g.out_h = (in_h + 2 * padding - span) / stride + 1;
  g.out_w = (in_w + 2 * padding - span) / stride + 1;
  if (in_h + 2 * padding < span || in_w + 2 * padding < span || g.out_h < 1 || g.out_w < 1)
    throw std::invalid_argument("convolution input " + std::to_string(in_h) + "x" + std::to_string(in_w) +
                                " too small for kernel span " + std::to_string(span));
  if (mode == PadMode::Reflect && (padding >= in_h || padding >= in_w))
    throw std::invalid_argument("reflect padding must be smaller than the input extent");
  return g;
}

template <typename Scalar>
RowMatrix<Scalar> im2col(const Tensor<Scalar>& x, const ConvGeometry& g) {
  const auto offsets = patch_offsets(g);
  const int kk = g.kernel * g.kernel;
  const Eigen::Index positions = Eigen::Index(g.out_h) * g.out_w;
  RowMatrix<Scalar> cols(Eigen::Index(g.channels) * kk, positions);
  for (int c = 0; c < g.channels; ++c) {
    const Scalar* src = x.matrix().row(c).data();
    for (int r = 0; r < kk; ++r) {
      Scalar* dst = cols.row(Eigen::Index(c) * kk + r).data();
      const int* off = offsets.data() + static_cast<std::size_t>(r) * positions;
      for (Eigen::Index p = 0; p < positions; ++p) dst[p] = off[p] < 0 ? Scalar(0) : src[off[p]];
    }
  }
  return cols;
}

template <typename Scalar>
Tensor<Scalar> col2im(const RowMatrix<Scalar>& cols, const ConvGeometry& g) {
  const auto offsets = patch_offsets(g);
  const int kk = g.kernel * g.kernel;
  const Eigen::Index positions = Eigen::Index(g.out_h) * g.out_w;
  Tensor<Scalar> out(g.channels, g.in_h, g.in_w);
  for (int c = 0; c < g.channels; ++c) {
    Scalar* dst = out.matrix().row(c).data();
    for (int r = 0; r < kk; ++r) {
      const Scalar* src = cols.row(Eigen::Index(c) * kk + r).data();
      const int* off = offsets.data() + static_cast<std::size_t>(r) * positions;
      for (Eigen::Index p = 0; p < positions; ++p)
        if (off[p] >= 0) dst[off[p]] += src[p];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Conv2d

template <typename Scalar>
Conv2d<Scalar>::Conv2d(const ConvSpec& spec, Rng& rng, double init_std) : spec_(spec) {
  if (spec.in_channels < 1 || spec.out_channels < 1 || spec.kernel < 1 || spec.stride < 1 || spec.dilation < 1 ||
      spec.padding < 0)
    throw std::invalid_argument("Conv2d: invalid spec");
  const Eigen::Index fan_in = Eigen::Index(spec.in_channels) * spec.kernel * spec.kernel;
  weight_.name = "weight";
  weight_.value = random_normal<Scalar>(spec.out_channels, fan_in, init_std, rng);
  weight_.zero_grad();
  bias_.name = "bias";
  bias_.value = RowMatrix<Scalar>::Zero(spec.out_channels, 1);
  bias_.trainable = spec.bias;
  bias_.zero_grad();
  if (spec.spectral_norm) {
    u_.name = "sn_u";
    u_.trainable = false;
    u_.value = normalized<Scalar>(random_normal<Scalar>(spec.out_channels, 1, 1.0, rng).col(0));
    converge_spectral_estimate();
  }
}

template <typename Scalar>
typename Conv2d<Scalar>::SpectralTerms Conv2d<Scalar>::spectral_terms(const Vector<Scalar>& u) const {
  SpectralTerms t;
  t.v = normalized<Scalar>(weight_.value.transpose() * u);
  t.u = normalized<Scalar>(weight_.value * t.v);
  t.sigma = t.u.dot(weight_.value * t.v);
  return t;
}

template <typename Scalar>
void Conv2d<Scalar>::converge_spectral_estimate(double tolerance, int max_iterations) {
  if (!spec_.spectral_norm) return;
  // Power iteration on the small out x out Gram matrix W W^T.
  const Eigen::MatrixXd w = weight_.value.template cast<double>();
  const Eigen::MatrixXd gram = w * w.transpose();
  Eigen::VectorXd u = u_.value.col(0).template cast<double>();
  double lambda = 0.0;
  for (int i = 0; i < max_iterations; ++i) {
    Eigen::VectorXd next = gram * u;
    const double norm = next.norm();
    if (norm == 0.0) break;
    next /= norm;
    const double change = std::abs(norm - lambda) / norm;
    u = next;
    lambda = norm;
    if (change < tolerance) break;
  }
  u_.value.col(0) = u.template cast<Scalar>();
}

template <typename Scalar>
void Conv2d<Scalar>::refine_spectral_estimate(int iterations) {
  if (!spec_.spectral_norm) return;
  Vector<Scalar> u = u_.value.col(0);
  for (int i = 0; i < iterations; ++i) u = spectral_terms(u).u;
  u_.value.col(0) = u;
}

template <typename Scalar>
RowMatrix<Scalar> Conv2d<Scalar>::effective_weight() const {
  if (!spec_.spectral_norm) return weight_.value;
  // The stored u is already the result of the latest power step; sigma uses one
  // more half-step so inference needs no mutation.
  const Vector<Scalar> u = u_.value.col(0);
  const Vector<Scalar> v = normalized<Scalar>(weight_.value.transpose() * u);
  const Scalar sigma = u.dot(weight_.value * v);
  return weight_.value / sigma;
}

template <typename Scalar>
Tensor<Scalar> Conv2d<Scalar>::apply(const Tensor<Scalar>& x, const RowMatrix<Scalar>& w,
                                     RowMatrix<Scalar>* cols_out) const {
  if (x.channels() != spec_.in_channels)
    throw std::invalid_argument("Conv2d: expected " + std::to_string(spec_.in_channels) + " channels, got " +
                                std::to_string(x.channels()));
  const auto g = ConvGeometry::make(x.channels(), x.height(), x.width(), spec_.kernel, spec_.stride, spec_.padding,
                                    spec_.dilation, spec_.pad_mode);
  RowMatrix<Scalar> cols = im2col(x, g);
  Tensor<Scalar> out(spec_.out_channels, g.out_h, g.out_w);
  out.matrix().noalias() = w * cols;
  if (spec_.bias) out.matrix().colwise() += bias_.value.col(0);
  if (cols_out) *cols_out = std::move(cols);
  return out;
}

template <typename Scalar>
Tensor<Scalar> Conv2d<Scalar>::infer(const Tensor<Scalar>& x) const {
  return apply(x, effective_weight(), nullptr);
}

template <typename Scalar>
Tensor<Scalar> Conv2d<Scalar>::forward(const Tensor<Scalar>& x) {
  if (spec_.spectral_norm) {
    // One power step per training forward; u is persistent.
    sn_cache_ = spectral_terms(u_.value.col(0));
    u_.value.col(0) = sn_cache_.u;
    // effective weight uses the updated u, matching infer().
    sn_cache_.v = normalized<Scalar>(weight_.value.transpose() * sn_cache_.u);
    sn_cache_.sigma = sn_cache_.u.dot(weight_.value * sn_cache_.v);
    w_eff_ = weight_.value / sn_cache_.sigma;
  } else {
    w_eff_ = weight_.value;
  }
  geom_ = ConvGeometry::make(x.channels(), x.height(), x.width(), spec_.kernel, spec_.stride, spec_.padding,
                             spec_.dilation, spec_.pad_mode);
  return apply(x, w_eff_, &cols_);
}

template <typename Scalar>
Tensor<Scalar> Conv2d<Scalar>::backward(const Tensor<Scalar>& grad_out) {
  const RowMatrix<Scalar>& g = grad_out.matrix();
  RowMatrix<Scalar> g_weff = g * cols_.transpose();
  if (spec_.spectral_norm) {
    // d(W/sigma)/dW with sigma = u^T W v and u, v held fixed.
    const Scalar sigma = sn_cache_.sigma;
    const Scalar inner = (g_weff.array() * w_eff_.array()).sum();
    weight_.grad += (g_weff - inner * (sn_cache_.u * sn_cache_.v.transpose())) / sigma;
  } else {
    weight_.grad += g_weff;
  }
  if (spec_.bias) bias_.grad.col(0) += g.rowwise().sum();
  RowMatrix<Scalar> dcols = w_eff_.transpose() * g;
  return col2im(dcols, geom_);
}

template <typename Scalar>
void Conv2d<Scalar>::collect(const std::string& prefix, std::vector<Parameter<Scalar>*>& out) {
  weight_.name = prefix + "weight";
  out.push_back(&weight_);
  if (spec_.bias) {
    bias_.name = prefix + "bias";
    out.push_back(&bias_);
  }
  if (spec_.spectral_norm) {
    u_.name = prefix + "sn_u";
    out.push_back(&u_);
  }
}

// ---------------------------------------------------------------------------
// ConvTranspose2d

template <typename Scalar>
ConvTranspose2d<Scalar>::ConvTranspose2d(int in_channels, int out_channels, int kernel, int stride, int padding,
                                         Rng& rng, double init_std)
    : in_(in_channels), out_(out_channels), kernel_(kernel), stride_(stride), padding_(padding) {
  weight_.name = "weight";
  weight_.value = random_normal<Scalar>(in_channels, Eigen::Index(out_channels) * kernel * kernel, init_std, rng);
  weight_.zero_grad();
  bias_.name = "bias";
  bias_.value = RowMatrix<Scalar>::Zero(out_channels, 1);
  bias_.zero_grad();
}

template <typename Scalar>
ConvGeometry ConvTranspose2d<Scalar>::geometry_for(const Tensor<Scalar>& x) const {
  if (x.channels() != in_) throw std::invalid_argument("ConvTranspose2d: channel mismatch");
  const int oh = (x.height() - 1) * stride_ - 2 * padding_ + kernel_;
  const int ow = (x.width() - 1) * stride_ - 2 * padding_ + kernel_;
  // Geometry of the adjoint convolution, which maps the output grid back to x.
  auto g = ConvGeometry::make(out_, oh, ow, kernel_, stride_, padding_, 1, PadMode::Zero);
  if (g.out_h != x.height() || g.out_w != x.width()) throw std::invalid_argument("ConvTranspose2d: geometry mismatch");
  return g;
}

template <typename Scalar>
Tensor<Scalar> ConvTranspose2d<Scalar>::infer(const Tensor<Scalar>& x) const {
  const auto g = geometry_for(x);
  RowMatrix<Scalar> cols = weight_.value.transpose() * x.matrix();
  Tensor<Scalar> out = col2im(cols, g);
  out.matrix().colwise() += bias_.value.col(0);
  return out;
}

template <typename Scalar>
Tensor<Scalar> ConvTranspose2d<Scalar>::forward(const Tensor<Scalar>& x) {
  geom_ = geometry_for(x);
  input_ = x;
  return infer(x);
}

template <typename Scalar>
Tensor<Scalar> ConvTranspose2d<Scalar>::backward(const Tensor<Scalar>& grad_out) {
  const RowMatrix<Scalar> gcols = im2col(grad_out, geom_);
  weight_.grad += input_.matrix() * gcols.transpose();
  bias_.grad.col(0) += grad_out.matrix().rowwise().sum();
  Tensor<Scalar> gx(in_, input_.height(), input_.width());
  gx.matrix().noalias() = weight_.value * gcols;
  return gx;
}

template <typename Scalar>
void ConvTranspose2d<Scalar>::collect(const std::string& prefix, std::vector<Parameter<Scalar>*>& out) {
  weight_.name = prefix + "weight";
  bias_.name = prefix + "bias";
  out.push_back(&weight_);
  out.push_back(&bias_);
}

// ---------------------------------------------------------------------------
// InstanceNorm

template <typename Scalar>
Tensor<Scalar> InstanceNorm<Scalar>::infer(const Tensor<Scalar>& x) const {
  Tensor<Scalar> out = x;
  const auto n = static_cast<Scalar>(x.plane_size());
  for (int c = 0; c < x.channels(); ++c) {
    auto row = out.matrix().row(c).array();
    const Scalar mean = row.sum() / n;
    row -= mean;
    const Scalar var = row.square().sum() / n;
    row *= Scalar(1) / std::sqrt(var + Scalar(eps_));
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> InstanceNorm<Scalar>::forward(const Tensor<Scalar>& x) {
  normalized_ = x;
  inv_std_.resize(x.channels());
  const auto n = static_cast<Scalar>(x.plane_size());
  for (int c = 0; c < x.channels(); ++c) {
    auto row = normalized_.matrix().row(c).array();
    const Scalar mean = row.sum() / n;
    row -= mean;
    const Scalar var = row.square().sum() / n;
    inv_std_(c) = Scalar(1) / std::sqrt(var + Scalar(eps_));
    row *= inv_std_(c);
  }
  return normalized_;
}

template <typename Scalar>
Tensor<Scalar> InstanceNorm<Scalar>::backward(const Tensor<Scalar>& grad_out) {
  Tensor<Scalar> gx = Tensor<Scalar>::like(grad_out);
  const auto n = static_cast<Scalar>(grad_out.plane_size());
  for (int c = 0; c < grad_out.channels(); ++c) {
    const auto g = grad_out.matrix().row(c).array();
    const auto xh = normalized_.matrix().row(c).array();
    const Scalar sum_g = g.sum();
    const Scalar sum_gx = (g * xh).sum();
    gx.matrix().row(c).array() = inv_std_(c) / n * (n * g - sum_g - xh * sum_gx);
  }
  return gx;
}

// ---------------------------------------------------------------------------
// Activation

template <typename Scalar>
std::string Activation<Scalar>::kind() const {
  switch (kind_) {
    case ActivationKind::ReLU: return "relu";
    case ActivationKind::LeakyReLU: return "leaky_relu";
    case ActivationKind::Tanh: return "tanh";
    case ActivationKind::Sigmoid: return "sigmoid";
  }
  return "activation";
}

template <typename Scalar>
Tensor<Scalar> Activation<Scalar>::infer(const Tensor<Scalar>& x) const {
  Tensor<Scalar> y = Tensor<Scalar>::like(x);
  const Scalar slope = static_cast<Scalar>(slope_);
  switch (kind_) {
    case ActivationKind::ReLU: y.array() = x.array().max(Scalar(0)); break;
    case ActivationKind::LeakyReLU: y.array() = (x.array() > Scalar(0)).select(x.array(), slope * x.array()); break;
    case ActivationKind::Tanh: y.array() = x.array().tanh(); break;
    case ActivationKind::Sigmoid: y.array() = Scalar(1) / (Scalar(1) + (-x.array()).exp()); break;
  }
  return y;
}

template <typename Scalar>
Tensor<Scalar> Activation<Scalar>::forward(const Tensor<Scalar>& x) {
  input_ = x;
  output_ = infer(x);
  return output_;
}

template <typename Scalar>
Tensor<Scalar> Activation<Scalar>::backward(const Tensor<Scalar>& grad_out) {
  Tensor<Scalar> gx = Tensor<Scalar>::like(grad_out);
  const Scalar slope = static_cast<Scalar>(slope_);
  const auto g = grad_out.array();
  switch (kind_) {
    case ActivationKind::ReLU: gx.array() = (input_.array() > Scalar(0)).select(g, Scalar(0)); break;
    case ActivationKind::LeakyReLU: gx.array() = (input_.array() > Scalar(0)).select(g, slope * g); break;
    case ActivationKind::Tanh: gx.array() = g * (Scalar(1) - output_.array().square()); break;
    case ActivationKind::Sigmoid: gx.array() = g * output_.array() * (Scalar(1) - output_.array()); break;
  }
  return gx;
}

// ---------------------------------------------------------------------------
// BilinearUpsample

namespace {

struct LinearTap {
  int lo, hi;
  double w_hi;
};

std::vector<LinearTap> upsample_taps(int in, int out) {
  std::vector<LinearTap> taps(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) * scale - 0.5;
    if (src < 0) src = 0;
    int lo = static_cast<int>(std::floor(src));
    if (lo > in - 1) lo = in - 1;
    const int hi = lo < in - 1 ? lo + 1 : lo;
    taps[static_cast<std::size_t>(o)] = {lo, hi, src - lo};
  }
  return taps;
}

}  // namespace

template <typename Scalar>
Tensor<Scalar> BilinearUpsample<Scalar>::infer(const Tensor<Scalar>& x) const {
  const int oh = x.height() * 2, ow = x.width() * 2;
  const auto ty = upsample_taps(x.height(), oh), tx = upsample_taps(x.width(), ow);
  Tensor<Scalar> y(x.channels(), oh, ow);
  for (int c = 0; c < x.channels(); ++c)
    for (int i = 0; i < oh; ++i) {
      const auto& a = ty[static_cast<std::size_t>(i)];
      for (int j = 0; j < ow; ++j) {
        const auto& b = tx[static_cast<std::size_t>(j)];
        const double top = (1 - b.w_hi) * x(c, a.lo, b.lo) + b.w_hi * x(c, a.lo, b.hi);
        const double bottom = (1 - b.w_hi) * x(c, a.hi, b.lo) + b.w_hi * x(c, a.hi, b.hi);
        y(c, i, j) = static_cast<Scalar>((1 - a.w_hi) * top + a.w_hi * bottom);
      }
    }
  return y;
}

template <typename Scalar>
Tensor<Scalar> BilinearUpsample<Scalar>::forward(const Tensor<Scalar>& x) {
  in_h_ = x.height();
  in_w_ = x.width();
  return infer(x);
}

template <typename Scalar>
Tensor<Scalar> BilinearUpsample<Scalar>::backward(const Tensor<Scalar>& grad_out) {
  const auto ty = upsample_taps(in_h_, grad_out.height()), tx = upsample_taps(in_w_, grad_out.width());
  Tensor<Scalar> gx(grad_out.channels(), in_h_, in_w_);
  for (int c = 0; c < grad_out.channels(); ++c)
    for (int i = 0; i < grad_out.height(); ++i) {
      const auto& a = ty[static_cast<std::size_t>(i)];
      for (int j = 0; j < grad_out.width(); ++j) {
        const auto& b = tx[static_cast<std::size_t>(j)];
        const double g = grad_out(c, i, j);
        gx(c, a.lo, b.lo) += static_cast<Scalar>(g * (1 - a.w_hi) * (1 - b.w_hi));
        gx(c, a.lo, b.hi) += static_cast<Scalar>(g * (1 - a.w_hi) * b.w_hi);
        gx(c, a.hi, b.lo) += static_cast<Scalar>(g * a.w_hi * (1 - b.w_hi));
        gx(c, a.hi, b.hi) += static_cast<Scalar>(g * a.w_hi * b.w_hi);
      }
    }
  return gx;
}

// ---------------------------------------------------------------------------
// AvgPool2

template <typename Scalar>
Tensor<Scalar> AvgPool2<Scalar>::infer(const Tensor<Scalar>& x) const {
  const int oh = x.height() / 2, ow = x.width() / 2;
  if (oh < 1 || ow < 1) throw std::invalid_argument("AvgPool2: input smaller than 2x2");
  Tensor<Scalar> y(x.channels(), oh, ow);
  for (int c = 0; c < x.channels(); ++c)
    for (int i = 0; i < oh; ++i)
      for (int j = 0; j < ow; ++j)
        y(c, i, j) = Scalar(0.25) * (x(c, 2 * i, 2 * j) + x(c, 2 * i, 2 * j + 1) + x(c, 2 * i + 1, 2 * j) +
                                     x(c, 2 * i + 1, 2 * j + 1));
  return y;
}

template <typename Scalar>
Tensor<Scalar> AvgPool2<Scalar>::forward(const Tensor<Scalar>& x) {
  in_h_ = x.height();
  in_w_ = x.width();
  return infer(x);
}

template <typename Scalar>
Tensor<Scalar> AvgPool2<Scalar>::backward(const Tensor<Scalar>& grad_out) {
  Tensor<Scalar> gx(grad_out.channels(), in_h_, in_w_);
  for (int c = 0; c < grad_out.channels(); ++c)
    for (int i = 0; i < grad_out.height(); ++i)
      for (int j = 0; j < grad_out.width(); ++j) {
        const Scalar g = Scalar(0.25) * grad_out(c, i, j);
        gx(c, 2 * i, 2 * j) += g;
        gx(c, 2 * i, 2 * j + 1) += g;
        gx(c, 2 * i + 1, 2 * j) += g;
        gx(c, 2 * i + 1, 2 * j + 1) += g;
      }
  return gx;
}

// ---------------------------------------------------------------------------
// Containers

template <typename Scalar>
Tensor<Scalar> Sequential<Scalar>::infer(const Tensor<Scalar>& x) const {
  Tensor<Scalar> h = x;
  for (const auto& layer : layers_) h = layer->infer(h);
  return h;
}

template <typename Scalar>
Tensor<Scalar> Sequential<Scalar>::forward(const Tensor<Scalar>& x) {
  Tensor<Scalar> h = x;
  for (auto& layer : layers_) h = layer->forward(h);
  return h;
}

template <typename Scalar>
Tensor<Scalar> Sequential<Scalar>::backward(const Tensor<Scalar>& grad_out) {
  Tensor<Scalar> g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

template <typename Scalar>
void Sequential<Scalar>::collect(const std::string& prefix, std::vector<Parameter<Scalar>*>& out) {
  for (std::size_t i = 0; i < layers_.size(); ++i) layers_[i]->collect(prefix + std::to_string(i) + ".", out);
}

template <typename Scalar>
Tensor<Scalar> Residual<Scalar>::infer(const Tensor<Scalar>& x) const {
  Tensor<Scalar> y = body_.infer(x);
  y.matrix() += x.matrix();
  return y;
}

template <typename Scalar>
Tensor<Scalar> Residual<Scalar>::forward(const Tensor<Scalar>& x) {
  Tensor<Scalar> y = body_.forward(x);
  y.matrix() += x.matrix();
  return y;
}

template <typename Scalar>
Tensor<Scalar> Residual<Scalar>::backward(const Tensor<Scalar>& grad_out) {
  Tensor<Scalar> g = body_.backward(grad_out);
  g.matrix() += grad_out.matrix();
  return g;
}

template <typename Scalar>
void Residual<Scalar>::collect(const std::string& prefix, std::vector<Parameter<Scalar>*>& out) {
  body_.collect(prefix, out);
}

template <typename Scalar>
double top_singular_value(const RowMatrix<Scalar>& m, int iterations) {
  const Eigen::MatrixXd a = m.template cast<double>();
  Eigen::VectorXd v = Eigen::VectorXd::Ones(a.cols()).normalized();
  double sigma = 0.0;
  for (int i = 0; i < iterations; ++i) {
    Eigen::VectorXd u = a * v;
    sigma = u.norm();
    if (sigma == 0.0) return 0.0;
    v = (a.transpose() * (u / sigma)).normalized();
  }
  return (a * v).norm();
}

#define PIREC_INSTANTIATE_LAYERS(S)                                            \
  template RowMatrix<S> im2col(const Tensor<S>&, const ConvGeometry&);          \
  template Tensor<S> col2im(const RowMatrix<S>&, const ConvGeometry&);          \
  template class Conv2d<S>;                                                     \
  template class ConvTranspose2d<S>;                                            \
  template class InstanceNorm<S>;                                               \
  template class Activation<S>;                                                 \
  template class BilinearUpsample<S>;                                           \
  template class AvgPool2<S>;                                                   \
  template class Sequential<S>;                                                 \
  template class Residual<S>;                                                   \
  template double top_singular_value(const RowMatrix<S>&, int);

PIREC_INSTANTIATE_LAYERS(float)
PIREC_INSTANTIATE_LAYERS(double)

}  // namespace pirec
