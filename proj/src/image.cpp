#include "pirec/image.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pirec {

namespace {

int reflect101(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

template <typename Scalar>
RowMatrix<Scalar> resample_matrix(int in, int out) {
  RowMatrix<Scalar> r = RowMatrix<Scalar>::Zero(out, in);
  const double scale = static_cast<double>(in) / out;
  if (out <= in) {
    for (int j = 0; j < out; ++j) {
      const double a = j * scale, b = (j + 1) * scale;
      for (int i = static_cast<int>(std::floor(a)); i < std::min(in, static_cast<int>(std::ceil(b))); ++i) {
        const double overlap = std::min(b, i + 1.0) - std::max(a, static_cast<double>(i));
        if (overlap > 0) r(j, i) = static_cast<Scalar>(overlap / scale);
      }
    }
  } else {
    for (int j = 0; j < out; ++j) {
      const double src = std::clamp((j + 0.5) * scale - 0.5, 0.0, in - 1.0);
      const int i0 = static_cast<int>(std::floor(src));
      const int i1 = std::min(i0 + 1, in - 1);
      const double f = src - i0;
      r(j, i0) += static_cast<Scalar>(1.0 - f);
      r(j, i1) += static_cast<Scalar>(f);
    }
  }
  return r;
}

}  // namespace

Tensor<float> decode_image(const std::string& bytes) {
  if (bytes.empty()) throw std::runtime_error("cannot decode an empty image buffer");
  const cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<char*>(bytes.data()));
  cv::Mat bgr = cv::imdecode(buf, cv::IMREAD_COLOR);
  if (bgr.empty()) throw std::runtime_error("undecodable image data");
  Tensor<float> out(3, bgr.rows, bgr.cols);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x)
      for (int c = 0; c < 3; ++c) out(c, y, x) = row[x][2 - c] / 255.0f;
  }
  return out;
}

Tensor<float> read_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return decode_image(ss.str());
  } catch (const std::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

std::string encode_png(const Tensor<float>& image) {
  if (image.channels() != 1 && image.channels() != 3)
    throw std::invalid_argument("encode_png: expected 1 or 3 channels, got " + image.shape_string());
  const int type = image.channels() == 1 ? CV_8UC1 : CV_8UC3;
  cv::Mat m(image.height(), image.width(), type);
  auto to8 = [](float v) { return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); };
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) {
      if (image.channels() == 1) {
        m.at<unsigned char>(y, x) = to8(image(0, y, x));
      } else {
        auto& px = m.at<cv::Vec3b>(y, x);
        for (int c = 0; c < 3; ++c) px[2 - c] = to8(image(c, y, x));
      }
    }
  std::vector<unsigned char> buf;
  if (!cv::imencode(".png", m, buf)) throw std::runtime_error("PNG encoding failed");
  return std::string(buf.begin(), buf.end());
}

void write_png(const std::string& path, const Tensor<float>& image) {
  const std::string bytes = encode_png(image);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

template <typename Scalar>
Tensor<Scalar> quantize_8bit(const Tensor<Scalar>& image) {
  Tensor<Scalar> out = image;
  out.array() = (out.array().max(Scalar(0)).min(Scalar(1)) * Scalar(255)).round() / Scalar(255);
  return out;
}

template <typename Scalar>
Tensor<Scalar> normalize(const Tensor<Scalar>& image01) {
  Tensor<Scalar> out = image01;
  out.array() = out.array() * Scalar(2) - Scalar(1);
  return out;
}

template <typename Scalar>
Tensor<Scalar> denormalize(const Tensor<Scalar>& image) {
  Tensor<Scalar> out = image;
  out.array() = (out.array() + Scalar(1)) * Scalar(0.5);
  return out;
}

template <typename Scalar>
Tensor<Scalar> resize(const Tensor<Scalar>& image, int height, int width) {
  if (height < 1 || width < 1) throw std::invalid_argument("resize: target size must be positive");
  if (image.empty()) throw std::invalid_argument("resize: empty image");
  if (height == image.height() && width == image.width()) return image;
  const RowMatrix<Scalar> ry = resample_matrix<Scalar>(image.height(), height);
  const RowMatrix<Scalar> rx = resample_matrix<Scalar>(image.width(), width);
  Tensor<Scalar> out(image.channels(), height, width);
  for (int c = 0; c < image.channels(); ++c) {
    Eigen::Map<const RowMatrix<Scalar>> in(image.data() + static_cast<Eigen::Index>(c) * image.plane_size(),
                                           image.height(), image.width());
    Eigen::Map<RowMatrix<Scalar>> dst(out.data() + static_cast<Eigen::Index>(c) * out.plane_size(), height, width);
    dst.noalias() = ry * in * rx.transpose();
  }
  return out;
}

template <typename Scalar>
Tensor<Scalar> crop(const Tensor<Scalar>& image, int top, int left, int height, int width) {
  if (top < 0 || left < 0 || top + height > image.height() || left + width > image.width() || height < 1 || width < 1)
    throw std::invalid_argument("crop window outside the image");
  Tensor<Scalar> out(image.channels(), height, width);
  for (int c = 0; c < image.channels(); ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) out(c, y, x) = image(c, top + y, left + x);
  return out;
}

template <typename Scalar>
Tensor<Scalar> resize_and_crop(const Tensor<Scalar>& image, int size, CropMode mode, Rng* rng) {
  if (size < 1) throw std::invalid_argument("resize_and_crop: size must be positive");
  const int h = image.height(), w = image.width();
  const double s = static_cast<double>(size) / std::min(h, w);
  const int rh = std::max(size, static_cast<int>(std::lround(h * s)));
  const int rw = std::max(size, static_cast<int>(std::lround(w * s)));
  const Tensor<Scalar> r = resize(image, rh, rw);
  int top = (rh - size) / 2, left = (rw - size) / 2;
  if (mode == CropMode::Random) {
    if (!rng) throw std::invalid_argument("resize_and_crop: random crop needs an Rng");
    top = rng->uniform_int(0, rh - size);
    left = rng->uniform_int(0, rw - size);
  }
  return crop(r, top, left, size, size);
}

template <typename Scalar>
Tensor<Scalar> reflect_pad_to_multiple(const Tensor<Scalar>& image, int factor) {
  if (factor < 1) throw std::invalid_argument("pad factor must be positive");
  const int h = image.height(), w = image.width();
  const int ph = (h + factor - 1) / factor * factor, pw = (w + factor - 1) / factor * factor;
  if (ph == h && pw == w) return image;
  Tensor<Scalar> out(image.channels(), ph, pw);
  for (int c = 0; c < image.channels(); ++c)
    for (int y = 0; y < ph; ++y)
      for (int x = 0; x < pw; ++x) out(c, y, x) = image(c, reflect101(y, h), reflect101(x, w));
  return out;
}

template <typename Scalar>
Tensor<Scalar> binarize(const Tensor<Scalar>& image, double threshold) {
  Tensor<Scalar> out(1, image.height(), image.width());
  out.matrix() = image.matrix().colwise().mean();
  out.array() = (out.array() >= static_cast<Scalar>(threshold)).template cast<Scalar>();
  return out;
}

#define PIREC_INSTANTIATE_IMAGE(S)                                                   \
  template Tensor<S> quantize_8bit(const Tensor<S>&);                                \
  template Tensor<S> normalize(const Tensor<S>&);                                    \
  template Tensor<S> denormalize(const Tensor<S>&);                                  \
  template Tensor<S> resize(const Tensor<S>&, int, int);                             \
  template Tensor<S> crop(const Tensor<S>&, int, int, int, int);                     \
  template Tensor<S> resize_and_crop(const Tensor<S>&, int, CropMode, Rng*);         \
  template Tensor<S> reflect_pad_to_multiple(const Tensor<S>&, int);                 \
  template Tensor<S> binarize(const Tensor<S>&, double);

PIREC_INSTANTIATE_IMAGE(float)
PIREC_INSTANTIATE_IMAGE(double)

}  // namespace pirec
