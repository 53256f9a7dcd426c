#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pirec {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense channels x height x width grid. Each channel is a contiguous row of
/// `matrix()`, so a convolution is a single GEMM against the im2col buffer.
template <typename Scalar>
class Tensor {
 public:
  using Matrix = RowMatrix<Scalar>;
  using PlaneMap = Eigen::Map<Matrix>;
  using ConstPlaneMap = Eigen::Map<const Matrix>;

  Tensor() = default;
  Tensor(int channels, int height, int width)
      : height_(height), width_(width), data_(Matrix::Zero(channels, Eigen::Index(height) * width)) {
    if (channels < 0 || height < 0 || width < 0) throw std::invalid_argument("Tensor: negative extent");
  }
  Tensor(int channels, int height, int width, Scalar fill) : Tensor(channels, height, width) {
    data_.setConstant(fill);
  }

  static Tensor like(const Tensor& other) { return Tensor(other.channels(), other.height(), other.width()); }

  int channels() const { return static_cast<int>(data_.rows()); }
  int height() const { return height_; }
  int width() const { return width_; }
  Eigen::Index plane_size() const { return Eigen::Index(height_) * width_; }
  Eigen::Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  bool same_shape(const Tensor& o) const {
    return channels() == o.channels() && height_ == o.height_ && width_ == o.width_;
  }
  bool same_spatial(const Tensor& o) const { return height_ == o.height_ && width_ == o.width_; }

  Scalar& operator()(int c, int y, int x) { return data_(c, Eigen::Index(y) * width_ + x); }
  Scalar operator()(int c, int y, int x) const { return data_(c, Eigen::Index(y) * width_ + x); }

  /// channels x (height*width)
  Matrix& matrix() { return data_; }
  const Matrix& matrix() const { return data_; }
  auto array() { return data_.array(); }
  auto array() const { return data_.array(); }

  PlaneMap plane(int c) { return PlaneMap(data_.row(c).data(), height_, width_); }
  ConstPlaneMap plane(int c) const { return ConstPlaneMap(data_.row(c).data(), height_, width_); }

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  void set_zero() { data_.setZero(); }

  template <typename Other>
  Tensor<Other> cast() const {
    Tensor<Other> out(channels(), height_, width_);
    out.matrix() = data_.template cast<Other>();
    return out;
  }

  std::string shape_string() const {
    return std::to_string(channels()) + "x" + std::to_string(height_) + "x" + std::to_string(width_);
  }

 private:
  int height_ = 0;
  int width_ = 0;
  Matrix data_;
};

/// Concatenates along the channel axis.
template <typename Scalar>
Tensor<Scalar> concat_channels(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (!a.same_spatial(b)) throw std::invalid_argument("concat_channels: spatial mismatch");
  Tensor<Scalar> out(a.channels() + b.channels(), a.height(), a.width());
  out.matrix().topRows(a.channels()) = a.matrix();
  out.matrix().bottomRows(b.channels()) = b.matrix();
  return out;
}

/// Elementwise product with a single-channel mask broadcast across channels.
template <typename Scalar>
Tensor<Scalar> apply_mask(const Tensor<Scalar>& image, const Tensor<Scalar>& mask) {
  if (mask.channels() != 1 || !image.same_spatial(mask)) throw std::invalid_argument("apply_mask: shape mismatch");
  Tensor<Scalar> out = image;
  out.matrix().array().rowwise() *= mask.matrix().row(0).array();
  return out;
}

/// FNV-1a over raw bytes; used for weight-equality checks across phase boundaries.
inline std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h = 1469598103934665603ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

template <typename Scalar>
std::uint64_t content_hash(const Tensor<Scalar>& t, std::uint64_t seed = 1469598103934665603ULL) {
  return fnv1a(t.data(), static_cast<std::size_t>(t.size()) * sizeof(Scalar), seed);
}

}  // namespace pirec
