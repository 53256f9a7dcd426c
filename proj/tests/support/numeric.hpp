#pragma once

#include "pirec/rng.hpp"
#include "pirec/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace pirec::testing {

template <typename Scalar = double>
Tensor<Scalar> random_tensor(int c, int h, int w, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<Scalar> t(c, h, w);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<Scalar>(rng.uniform(lo, hi));
  return t;
}

/// Central differences of a scalar function of one tensor.
inline Tensor<double> numeric_gradient(const std::function<double(const Tensor<double>&)>& f, const Tensor<double>& x,
                                       double step = 1e-6) {
  Tensor<double> g = Tensor<double>::like(x);
  Tensor<double> probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = probe.data()[i];
    probe.data()[i] = orig + step;
    const double up = f(probe);
    probe.data()[i] = orig - step;
    const double down = f(probe);
    probe.data()[i] = orig;
    g.data()[i] = (up - down) / (2 * step);
  }
  return g;
}

/// ||a - b|| / max(||a||, ||b||, tiny)
inline double relative_error(const Tensor<double>& a, const Tensor<double>& b) {
  const double num = (a.matrix() - b.matrix()).norm();
  const double den = std::max({a.matrix().norm(), b.matrix().norm(), 1e-300});
  return num / den;
}

}  // namespace pirec::testing
