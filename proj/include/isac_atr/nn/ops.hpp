// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "isac_atr/nn/tensor.hpp"

namespace isac_atr::nn {

// Output length of a strided window of `kernel` over `length + 2 * pad`; 0 if it does not fit.
std::size_t window_output(std::size_t length, std::size_t kernel, std::size_t stride, std::size_t pad);

// ---- 2-D convolution (cross-correlation), zero padding floor(k/2) ----
// weight: (out, in, k, k), bias: (1, out).
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                         std::size_t stride);

template <typename T>
struct Conv2dGrads {
  Tensor<T> input;
  Tensor<T> weight;
  Tensor<T> bias;
};

template <typename T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& grad_out, const Tensor<T>& x,
                               const Tensor<T>& weight, std::size_t stride);

// ---- fully connected: y = x W^T + b over the flattened sample ----
// weight: (out, in), bias: (1, out).
template <typename T>
Tensor<T> fc_forward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

template <typename T>
struct FcGrads {
  Tensor<T> input;
  Tensor<T> weight;
  Tensor<T> bias;
};

template <typename T>
FcGrads<T> fc_backward(const Tensor<T>& grad_out, const Tensor<T>& x, const Tensor<T>& weight);

// ---- batch normalization over (n, h, w) per channel ----
inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

template <typename T>
struct BatchNormState {
  Tensor<T> scale;         // gamma, (1, c)
  Tensor<T> shift;         // beta, (1, c)
  Tensor<T> running_mean;  // (1, c)
  Tensor<T> running_var;   // (1, c), biased batch variance
  double momentum = kBatchNormMomentum;
  double eps = kBatchNormEps;
};

// Per-channel normalized activations and inverse std, kept for backward.
template <typename T>
struct BatchNormCache {
  Tensor<T> normalized;
  std::vector<double> inv_std;
};

// Train mode needs batch >= 2 and updates the running statistics.
template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, BatchNormState<T>& state, Mode mode,
                            BatchNormCache<T>* cache = nullptr);

template <typename T>
struct BatchNormGrads {
  Tensor<T> input;
  Tensor<T> scale;
  Tensor<T> shift;
};

template <typename T>
BatchNormGrads<T> batchnorm_backward(const Tensor<T>& grad_out, const BatchNormCache<T>& cache,
                                     const Tensor<T>& scale);

// ---- max pooling, no padding; ties resolve to the lowest linear index ----
template <typename T>
Tensor<T> maxpool2d_forward(const Tensor<T>& x, std::size_t kernel, std::size_t stride,
                            std::vector<std::uint32_t>* argmax = nullptr);

template <typename T>
Tensor<T> maxpool2d_backward(const Tensor<T>& grad_out, const Shape& input_shape,
                             const std::vector<std::uint32_t>& argmax);

// ---- adaptive average pooling to a grid x grid output ----
template <typename T>
Tensor<T> adaptive_avgpool_forward(const Tensor<T>& x, std::size_t grid);

template <typename T>
Tensor<T> adaptive_avgpool_backward(const Tensor<T>& grad_out, const Shape& input_shape);

// ---- ReLU ----
template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x);

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const Tensor<T>& x);

// ---- inverted dropout ----
// Keep-mask with survivors scaled by 1/(1-rate); all ones when rate == 0.
template <typename T>
std::vector<T> dropout_mask(std::size_t count, double rate, std::uint64_t seed);

template <typename T>
Tensor<T> dropout_forward(const Tensor<T>& x, double rate, Mode mode, std::uint64_t seed,
                          std::vector<T>* mask_out = nullptr);

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& grad_out, const std::vector<T>& mask);

}  // namespace isac_atr::nn
