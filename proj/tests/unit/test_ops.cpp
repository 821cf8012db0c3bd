#include <cmath>
#include <random>

#include "doctest.h"
#include "isac_atr/errors.hpp"
#include "isac_atr/nn/ops.hpp"
#include "oracles.hpp"

using namespace isac_atr;
using namespace isac_atr::nn;

TEST_CASE("window arithmetic") {
  CHECK(window_output(64, 3, 1, 1) == 64);
  CHECK(window_output(64, 2, 2, 0) == 32);
  CHECK(window_output(7, 2, 2, 0) == 3);
  CHECK(window_output(1, 2, 2, 0) == 0);
  CHECK(window_output(5, 7, 1, 3) == 5);
  CHECK(window_output(5, 7, 2, 3) == 3);
}

TEST_CASE("conv2d forward matches the naive oracle") {
  std::mt19937_64 rng(1);
  for (std::size_t k : {1u, 3u, 5u, 7u}) {
    for (std::size_t stride : {1u, 2u}) {
      const auto x = oracle::random_tensor({2, 3, 9, 11}, rng);
      const auto w = oracle::random_tensor({4, 3, k, k}, rng);
      const auto b = oracle::random_tensor({1, 4}, rng);
      const auto y = conv2d_forward(x, w, b, stride);
      const auto ref = oracle::naive_conv(x, w, b, stride);
      REQUIRE(y.shape() == ref.shape());
      double worst = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) worst = std::max(worst, std::abs(y[i] - ref[i]));
      CHECK(worst < 1e-12);
    }
  }
}

TEST_CASE("conv2d rejects inputs smaller than the kernel window") {
  Tensor<double> x({1, 1, 1, 1});
  Tensor<double> w({1, 1, 5, 5});
  Tensor<double> b({1, 1});
  CHECK_NOTHROW(conv2d_forward(x, w, b, 1));  // padding 2 keeps it valid
  Tensor<double> w4({1, 1, 4, 4});
  CHECK_THROWS_AS(conv2d_forward(Tensor<double>({1, 1, 0, 0}), w4, b, 1), DimensionError);
  CHECK_THROWS_AS(conv2d_forward(Tensor<double>({1, 2, 4, 4}), w, b, 1), DimensionError);
}

TEST_CASE("fully connected forward is x W^T + b") {
  Tensor<double> x({2, 3}, std::vector<double>{1, 2, 3, -1, 0, 1});
  Tensor<double> w({2, 3}, std::vector<double>{1, 0, 0, 0, 1, 1});
  Tensor<double> b({1, 2}, std::vector<double>{0.5, -0.5});
  const auto y = fc_forward(x, w, b);
  CHECK(y.to_vector() == std::vector<double>{1.5, 4.5, -0.5, 0.5});
}

TEST_CASE("batch norm in train mode standardizes each channel") {
  std::mt19937_64 rng(2);
  const auto x = oracle::random_tensor({4, 3, 5, 5}, rng, 3.0);
  BatchNormState<double> st{Tensor<double>({1, 3}, 1.0), Tensor<double>({1, 3}, 0.0), Tensor<double>({1, 3}, 0.0),
                            Tensor<double>({1, 3}, 1.0)};
  const auto y = batchnorm_forward(x, st, Mode::kTrain);
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0, var = 0, xm = 0, xv = 0;
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t i = 0; i < 25; ++i) {
        mean += y.at(n, c, i / 5, i % 5);
        xm += x.at(n, c, i / 5, i % 5);
      }
    mean /= 100;
    xm /= 100;
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t i = 0; i < 25; ++i) {
        var += std::pow(y.at(n, c, i / 5, i % 5) - mean, 2);
        xv += std::pow(x.at(n, c, i / 5, i % 5) - xm, 2);
      }
    var /= 100;
    xv /= 100;
    CHECK(std::abs(mean) < 1e-12);
    CHECK(var == doctest::Approx(xv / (xv + kBatchNormEps)).epsilon(1e-10));
    CHECK(st.running_mean[c] == doctest::Approx(0.1 * xm));
    CHECK(st.running_var[c] == doctest::Approx(0.9 + 0.1 * xv));
  }
  BatchNormState<double> single = st;
  CHECK_THROWS_AS(batchnorm_forward(Tensor<double>({1, 3, 1, 1}), single, Mode::kTrain), DimensionError);
}

TEST_CASE("batch norm with momentum 1: eval after train reproduces train output") {
  std::mt19937_64 rng(3);
  const auto x = oracle::random_tensor({5, 2, 3, 3}, rng, 2.0);
  BatchNormState<double> st{oracle::random_tensor({1, 2}, rng), oracle::random_tensor({1, 2}, rng),
                            Tensor<double>({1, 2}, 0.0), Tensor<double>({1, 2}, 1.0), 1.0};
  const auto train = batchnorm_forward(x, st, Mode::kTrain);
  const auto eval = batchnorm_forward(x, st, Mode::kEval);
  for (std::size_t i = 0; i < train.size(); ++i) CHECK(eval[i] == doctest::Approx(train[i]).epsilon(1e-12));
}

TEST_CASE("max pooling picks the first maximum and routes gradients to it") {
  Tensor<double> x({1, 1, 2, 4}, std::vector<double>{1, 5, 2, 2, 5, 0, 2, 2});
  std::vector<std::uint32_t> argmax;
  const auto y = maxpool2d_forward(x, 2, 2, &argmax);
  REQUIRE(y.shape() == Shape{1, 1, 1, 2});
  CHECK(y[0] == 5);
  CHECK(y[1] == 2);
  CHECK(argmax[0] == 1);
  CHECK(argmax[1] == 2);
  const auto g = maxpool2d_backward(Tensor<double>({1, 1, 1, 2}, std::vector<double>{1, 1}), x.shape(), argmax);
  CHECK(g.to_vector() == std::vector<double>{0, 1, 1, 0, 0, 0, 0, 0});
}

TEST_CASE("adaptive average pooling bins cover the input") {
  Tensor<double> x({1, 1, 3, 3}, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  const auto g1 = adaptive_avgpool_forward(x, 1);
  CHECK(g1[0] == doctest::Approx(5.0));
  const auto g2 = adaptive_avgpool_forward(x, 2);
  // bins [0,2) and [1,3) on each axis
  CHECK(g2.storage()[0] == doctest::Approx((1 + 2 + 4 + 5) / 4.0));
  CHECK(g2.storage()[3] == doctest::Approx((5 + 6 + 8 + 9) / 4.0));
  const auto same = adaptive_avgpool_forward(x, 3);
  CHECK(same.storage() == x.storage());
}

TEST_CASE("relu and dropout") {
  Tensor<double> x({1, 4}, std::vector<double>{-1, 0, 2, -3});
  CHECK(relu_forward(x).to_vector() == std::vector<double>{0, 0, 2, 0});
  CHECK(relu_backward(Tensor<double>({1, 4}, 1.0), x).to_vector() == std::vector<double>{0, 0, 1, 0});

  const auto mask = dropout_mask<double>(100000, 0.5, 9);
  std::size_t kept = 0;
  for (double m : mask) {
    CHECK((m == 0.0 || m == 2.0));
    kept += m > 0;
  }
  CHECK(std::abs(static_cast<double>(kept) / 100000 - 0.5) < 0.01);
  CHECK(dropout_mask<double>(10, 0.5, 9) == dropout_mask<double>(10, 0.5, 9));
  const Tensor<double> ones({2, 5}, 1.0);
  CHECK(dropout_forward(ones, 0.8, Mode::kEval, 1) == ones);
  for (double m : dropout_mask<double>(16, 0.0, 3)) CHECK(m == 1.0);
}
