#include "pirec/layers.hpp"
#include "support/numeric.hpp"

#include <doctest.h>

using namespace pirec;
using pirec::testing::numeric_gradient;
using pirec::testing::random_tensor;
using pirec::testing::relative_error;

namespace {

double dot(const Tensor<double>& a, const Tensor<double>& b) { return (a.array() * b.array()).sum(); }

// Compares backward() against central differences of <infer(x), r> for the
// input and for every trainable parameter.
void check_layer(Layer<double>& layer, const Tensor<double>& x, Rng& rng, double tol = 1e-6) {
  const Tensor<double> y = layer.forward(x);
  const Tensor<double> r = random_tensor(y.channels(), y.height(), y.width(), rng);
  std::vector<Parameter<double>*> params;
  layer.collect("", params);
  for (auto* p : params) p->zero_grad();
  const Tensor<double> gx = layer.backward(r);

  REQUIRE(gx.same_shape(x));
  auto f = [&](const Tensor<double>& probe) { return dot(layer.infer(probe), r); };
  CHECK(relative_error(gx, numeric_gradient(f, x)) < tol);

  for (auto* p : params) {
    if (!p->trainable) continue;
    const auto rows = p->value.rows(), cols = p->value.cols();
    // Parameters are flattened row-major into a 1 x 1 x N tensor.
    Tensor<double> analytic(1, 1, static_cast<int>(rows * cols));
    Tensor<double> start = Tensor<double>::like(analytic);
    Eigen::Map<RowMatrix<double>>(analytic.data(), rows, cols) = p->grad;
    Eigen::Map<RowMatrix<double>>(start.data(), rows, cols) = p->value;
    auto fp = [&](const Tensor<double>& w) {
      p->value = Eigen::Map<const RowMatrix<double>>(w.data(), rows, cols);
      return dot(layer.infer(x), r);
    };
    const Tensor<double> numeric = numeric_gradient(fp, start);
    p->value = Eigen::Map<const RowMatrix<double>>(start.data(), rows, cols);
    INFO("parameter " << p->name);
    // Biases feeding a normalization have an exactly zero gradient.
    if (numeric.matrix().norm() < 1e-7) CHECK(analytic.matrix().norm() < 1e-7);
    else CHECK(relative_error(analytic, numeric) < tol);
  }
}

}  // namespace

TEST_CASE("im2col and col2im are adjoint") {
  Rng rng(3);
  for (PadMode mode : {PadMode::Zero, PadMode::Reflect}) {
    for (int dilation : {1, 2}) {
      const auto g = ConvGeometry::make(2, 7, 6, 3, 1, dilation, dilation, mode);
      const Tensor<double> x = random_tensor(2, 7, 6, rng);
      const RowMatrix<double> cols = im2col(x, g);
      RowMatrix<double> c = RowMatrix<double>::Random(cols.rows(), cols.cols());
      const Tensor<double> back = col2im(c, g);
      CHECK(std::abs((cols.array() * c.array()).sum() - dot(x, back)) < 1e-10);
    }
  }
  const auto g = ConvGeometry::make(3, 9, 8, 4, 2, 1, 1, PadMode::Zero);
  CHECK(g.out_h == 4);
  CHECK(g.out_w == 4);
}

TEST_CASE("conv2d matches a direct loop") {
  Rng rng(5);
  ConvSpec spec{2, 3, 3, 2, 1, 1, PadMode::Zero, true, false};
  Conv2d<double> conv(spec, rng, 0.5);
  conv.bias().value.setRandom();
  const Tensor<double> x = random_tensor(2, 7, 7, rng);
  const Tensor<double> y = conv.infer(x);
  REQUIRE(y.height() == 4);
  const auto& w = conv.weight().value;
  for (int o = 0; o < 3; ++o)
    for (int oy = 0; oy < 4; ++oy)
      for (int ox = 0; ox < 4; ++ox) {
        double s = conv.bias().value(o, 0);
        for (int c = 0; c < 2; ++c)
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int iy = oy * 2 - 1 + ky, ix = ox * 2 - 1 + kx;
              if (iy < 0 || ix < 0 || iy >= 7 || ix >= 7) continue;
              s += w(o, (c * 3 + ky) * 3 + kx) * x(c, iy, ix);
            }
        CHECK(y(o, oy, ox) == doctest::Approx(s).epsilon(1e-12));
      }
}

TEST_CASE("reflect padding mirrors without repeating the border") {
  Rng rng(1);
  ConvSpec spec{1, 1, 3, 1, 1, 1, PadMode::Reflect, false, false};
  Conv2d<double> conv(spec, rng);
  conv.weight().value.setZero();
  conv.weight().value(0, 0) = 1.0;  // picks the top-left neighbour
  Tensor<double> x(1, 3, 3);
  for (int i = 0; i < 9; ++i) x.data()[i] = i;
  const Tensor<double> y = conv.infer(x);
  CHECK(y(0, 0, 0) == 4.0);  // reflected (-1,-1) -> (1,1)
  CHECK(y(0, 1, 1) == 0.0);
}

TEST_CASE("layer gradients match finite differences") {
  Rng rng(11);
  SUBCASE("conv2d zero padding, stride 2") {
    Conv2d<double> conv({3, 4, 4, 2, 1, 1, PadMode::Zero, true, false}, rng, 0.3);
    check_layer(conv, random_tensor(3, 8, 8, rng), rng);
  }
  SUBCASE("conv2d reflect padding, dilation 2") {
    Conv2d<double> conv({2, 3, 3, 1, 2, 2, PadMode::Reflect, true, false}, rng, 0.3);
    check_layer(conv, random_tensor(2, 8, 8, rng), rng);
  }
  SUBCASE("conv2d spectral norm") {
    Conv2d<double> conv({3, 4, 4, 2, 1, 1, PadMode::Zero, false, true}, rng, 0.3);
    check_layer(conv, random_tensor(3, 8, 8, rng), rng);
  }
  SUBCASE("transposed conv") {
    ConvTranspose2d<double> up(3, 2, 4, 2, 1, rng, 0.3);
    const Tensor<double> x = random_tensor(3, 4, 4, rng);
    CHECK(up.infer(x).height() == 8);
    check_layer(up, x, rng);
  }
  SUBCASE("instance norm") {
    InstanceNorm<double> norm;
    check_layer(norm, random_tensor(3, 5, 5, rng), rng);
  }
  SUBCASE("activations") {
    for (auto kind : {ActivationKind::ReLU, ActivationKind::LeakyReLU, ActivationKind::Tanh, ActivationKind::Sigmoid}) {
      Activation<double> act(kind);
      INFO(act.kind());
      check_layer(act, random_tensor(2, 4, 4, rng), rng);
    }
  }
  SUBCASE("bilinear upsample") {
    BilinearUpsample<double> up;
    check_layer(up, random_tensor(2, 3, 5, rng), rng);
  }
  SUBCASE("avg pool") {
    AvgPool2<double> pool;
    check_layer(pool, random_tensor(2, 6, 7, rng), rng);
  }
  SUBCASE("residual block") {
    Residual<double> block;
    block.body().emplace<Conv2d<double>>(ConvSpec{2, 2, 3, 1, 2, 2, PadMode::Reflect}, rng, 0.3);
    block.body().emplace<InstanceNorm<double>>();
    block.body().emplace<Activation<double>>(ActivationKind::LeakyReLU);
    check_layer(block, random_tensor(2, 6, 6, rng), rng);
  }
}

TEST_CASE("bilinear upsample keeps constants and interpolates at quarter offsets") {
  BilinearUpsample<double> up;
  Tensor<double> c(1, 3, 3, 2.5);
  CHECK((up.infer(c).array() - 2.5).abs().maxCoeff() < 1e-15);
  Tensor<double> ramp(1, 1, 2);
  ramp(0, 0, 0) = 0.0;
  ramp(0, 0, 1) = 4.0;
  const Tensor<double> y = up.infer(ramp);
  REQUIRE(y.width() == 4);
  CHECK(y(0, 0, 0) == doctest::Approx(0.0));
  CHECK(y(0, 0, 1) == doctest::Approx(1.0));
  CHECK(y(0, 0, 2) == doctest::Approx(3.0));
  CHECK(y(0, 0, 3) == doctest::Approx(4.0));
}

TEST_CASE("spectral estimate bounds the top singular value") {
  Rng rng(21);
  Conv2d<double> conv({8, 16, 4, 2, 1, 1, PadMode::Zero, false, true}, rng, 1.0);
  const double raw = top_singular_value(conv.weight().value);
  CHECK(raw > 1.5);
  CHECK(top_singular_value(conv.effective_weight()) <= 1.0 + 1e-3);
  CHECK(top_singular_value(conv.effective_weight()) > 0.99);
}

TEST_CASE("top_singular_value agrees with SVD") {
  RowMatrix<double> m = RowMatrix<double>::Random(6, 9);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  CHECK(top_singular_value(m) == doctest::Approx(svd.singularValues()(0)).epsilon(1e-9));
}

TEST_CASE("infer and forward agree") {
  Rng rng(8);
  Sequential<float> net;
  net.emplace<Conv2d<float>>(ConvSpec{3, 4, 3, 1, 1, 1, PadMode::Reflect}, rng, 0.2);
  net.emplace<InstanceNorm<float>>();
  net.emplace<Activation<float>>(ActivationKind::ReLU);
  const Tensor<float> x = random_tensor<float>(3, 8, 8, rng);
  CHECK((net.infer(x).matrix() - net.forward(x).matrix()).cwiseAbs().maxCoeff() < 1e-6f);
}
