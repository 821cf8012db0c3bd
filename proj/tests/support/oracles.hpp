// Independent reference computations for the tests.
#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "isac_atr/nn/layers.hpp"
#include "isac_atr/nn/loss.hpp"
#include "isac_atr/periodogram.hpp"

namespace oracle {

using isac_atr::ComplexMatrix;

// Direct double sum over the zero-padded channel, O(N'^2 M'^2).
inline ComplexMatrix direct_periodogram(const ComplexMatrix& h, std::size_t rows, std::size_t cols) {
  using cd = std::complex<double>;
  const double two_pi = 2.0 * std::numbers::pi;
  // inner[k, m] = sum_l H[k,l] e^{-j 2 pi l m / M'}
  ComplexMatrix inner = ComplexMatrix::Zero(h.rows(), static_cast<Eigen::Index>(cols));
  for (Eigen::Index k = 0; k < h.rows(); ++k) {
    for (std::size_t m = 0; m < cols; ++m) {
      cd acc{0.0, 0.0};
      for (Eigen::Index l = 0; l < h.cols(); ++l) {
        acc += h(k, l) * std::polar(1.0, -two_pi * static_cast<double>(l) * static_cast<double>(m) /
                                             static_cast<double>(cols));
      }
      inner(k, static_cast<Eigen::Index>(m)) = acc;
    }
  }
  ComplexMatrix p(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const double scale = 1.0 / static_cast<double>(rows * cols);
  for (std::size_t n = 0; n < rows; ++n) {
    for (std::size_t m = 0; m < cols; ++m) {
      cd acc{0.0, 0.0};
      for (Eigen::Index k = 0; k < h.rows(); ++k) {
        acc += inner(k, static_cast<Eigen::Index>(m)) *
               std::polar(1.0, two_pi * static_cast<double>(k) * static_cast<double>(n) / static_cast<double>(rows));
      }
      p(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m)) = acc * scale;
    }
  }
  return p;
}

// Naive 2-D cross-correlation with zero padding k/2, NCHW.
inline isac_atr::nn::Tensor<double> naive_conv(const isac_atr::nn::Tensor<double>& x,
                                               const isac_atr::nn::Tensor<double>& w,
                                               const isac_atr::nn::Tensor<double>& b, std::size_t stride) {
  const auto& xs = x.shape();
  const auto& ws = w.shape();
  const std::size_t k = ws.h;
  const long pad = static_cast<long>(k / 2);
  const std::size_t oh = (xs.h + 2 * (k / 2) - k) / stride + 1;
  const std::size_t ow = (xs.w + 2 * (k / 2) - k) / stride + 1;
  isac_atr::nn::Tensor<double> y({xs.n, ws.n, oh, ow});
  for (std::size_t n = 0; n < xs.n; ++n) {
    for (std::size_t o = 0; o < ws.n; ++o) {
      for (std::size_t i = 0; i < oh; ++i) {
        for (std::size_t j = 0; j < ow; ++j) {
          double acc = b[o];
          for (std::size_t c = 0; c < xs.c; ++c) {
            for (std::size_t u = 0; u < k; ++u) {
              for (std::size_t v = 0; v < k; ++v) {
                const long yy = static_cast<long>(i * stride + u) - pad;
                const long xx = static_cast<long>(j * stride + v) - pad;
                if (yy < 0 || xx < 0 || yy >= static_cast<long>(xs.h) || xx >= static_cast<long>(xs.w)) {
                  continue;
                }
                acc += w.at(o, c, u, v) * x.at(n, c, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
              }
            }
          }
          y.at(n, o, i, j) = acc;
        }
      }
    }
  }
  return y;
}

inline isac_atr::nn::Tensor<double> random_tensor(isac_atr::nn::Shape s, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  isac_atr::nn::Tensor<double> t(s);
  for (auto& v : t.storage()) {
    v = normal(rng);
  }
  return t;
}

// ||a - n|| / max(||a||, ||n||, floor) over sampled coordinates, central differences. The floor
// keeps parameters whose true gradient is zero (a bias feeding batch norm) from dividing noise by noise.
struct GradCheck {
  double rel_error = 0.0;
  std::size_t checked = 0;
};

// `loss` evaluates a scalar objective from the current state; `analytic` is the gradient
// entry already computed by backprop for coordinate i of `values`.
inline GradCheck central_difference(std::span<double> values, std::span<const double> analytic,
                                    const std::function<double()>& loss, std::size_t samples,
                                    std::mt19937_64& rng, double h = 1e-6,
                                    double floor = 1e-3) {
  std::vector<std::size_t> idx;
  if (values.size() <= samples) {
    for (std::size_t i = 0; i < values.size(); ++i) idx.push_back(i);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
    for (std::size_t s = 0; s < samples; ++s) idx.push_back(pick(rng));
  }
  double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
  for (std::size_t i : idx) {
    const double saved = values[i];
    values[i] = saved + h;
    const double up = loss();
    values[i] = saved - h;
    const double down = loss();
    values[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    diff2 += (numeric - analytic[i]) * (numeric - analytic[i]);
    a2 += analytic[i] * analytic[i];
    n2 += numeric * numeric;
  }
  GradCheck out;
  out.checked = idx.size();
  const double denom = std::max(std::sqrt(std::max(a2, n2)), floor);
  out.rel_error = std::sqrt(diff2) / denom;
  return out;
}

// Checks d(sum r * layer(x))/dx and every parameter gradient; `prepare` runs before each
// forward (e.g. to pin a dropout mask). Returns the worst relative error.
inline double check_layer(isac_atr::nn::Layer<double>& layer, isac_atr::nn::Tensor<double> x,
                          isac_atr::nn::Mode mode, std::mt19937_64& rng, std::size_t samples = 40,
                          const std::function<void()>& prepare = {}) {
  using isac_atr::nn::Tensor;
  if (prepare) prepare();
  const Tensor<double> y0 = layer.forward(x, mode);
  const Tensor<double> r = random_tensor(y0.shape(), rng);
  for (auto* p : layer.params()) p->zero_grad();
  const Tensor<double> dx = layer.backward(r);
  const auto objective = [&]() {
    if (prepare) prepare();
    const Tensor<double> y = layer.forward(x, mode);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += r[i] * y[i];
    return s;
  };
  double worst = central_difference(x.storage(), dx.storage(), objective, samples, rng).rel_error;
  for (auto* p : layer.params()) {
    const auto g = p->grad.to_vector();
    worst = std::max(worst, central_difference(p->value.storage(), g, objective, samples, rng).rel_error);
  }
  return worst;
}

}  // namespace oracle
