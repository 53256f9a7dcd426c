#pragma once

#include "pirec/rng.hpp"
#include "pirec/tensor.hpp"

#include <string>

namespace pirec {

/// Decodes PNG/JPEG/BMP bytes into 3 x H x W values in [0, 1] (RGB order).
/// Grayscale and alpha inputs are expanded or flattened. Throws on failure.
Tensor<float> decode_image(const std::string& bytes);
Tensor<float> read_image(const std::string& path);

/// Lossless PNG of a 1- or 3-channel [0, 1] image, rounded to 8 bits.
std::string encode_png(const Tensor<float>& image);
void write_png(const std::string& path, const Tensor<float>& image);

/// Rounds to the 8-bit grid (what a PNG round trip returns).
template <typename Scalar>
Tensor<Scalar> quantize_8bit(const Tensor<Scalar>& image);

/// [0, 1] <-> [-1, 1]
template <typename Scalar>
Tensor<Scalar> normalize(const Tensor<Scalar>& image01);
template <typename Scalar>
Tensor<Scalar> denormalize(const Tensor<Scalar>& image);

/// Separable resampling: area averaging when shrinking, bilinear
/// (half-pixel centers) when enlarging.
template <typename Scalar>
Tensor<Scalar> resize(const Tensor<Scalar>& image, int height, int width);

enum class CropMode { Center, Random };

/// Shortest side resized to `size`, then a size x size crop.
template <typename Scalar>
Tensor<Scalar> resize_and_crop(const Tensor<Scalar>& image, int size, CropMode mode, Rng* rng = nullptr);

/// Pads with reflection (no border repeat) on the bottom/right up to a multiple of `factor`.
template <typename Scalar>
Tensor<Scalar> reflect_pad_to_multiple(const Tensor<Scalar>& image, int factor);

template <typename Scalar>
Tensor<Scalar> crop(const Tensor<Scalar>& image, int top, int left, int height, int width);

/// Pixels >= threshold become 1, the rest 0; multi-channel input is averaged first.
template <typename Scalar>
Tensor<Scalar> binarize(const Tensor<Scalar>& image, double threshold = 0.5);

}  // namespace pirec
