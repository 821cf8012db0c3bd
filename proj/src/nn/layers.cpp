// SPDX-License-Identifier: Apache-2.0
#include "isac_atr/nn/layers.hpp"

#include <cmath>

#include "isac_atr/errors.hpp"
#include "isac_atr/seeding.hpp"

namespace isac_atr::nn {

template <typename T>
void Layer<T>::require_cache() const {
  if (!cached_) {
    throw ContractError(kind() + ": backward called without a matching forward");
  }
}

// ---- Conv2d ----

template <typename T>
Conv2d<T>::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride)
    : kernel_(kernel),
      stride_(stride),
      weight_("weight", Shape{out_channels, in_channels, kernel, kernel}),
      bias_("bias", Shape{1, out_channels}) {
  if (kernel == 0 || stride == 0) {
    throw ConfigError("conv2d: kernel and stride must be positive");
  }
}

template <typename T>
Shape Conv2d<T>::output_shape(const Shape& in) const {
  const std::size_t oh = window_output(in.h, kernel_, stride_, kernel_ / 2);
  const std::size_t ow = window_output(in.w, kernel_, stride_, kernel_ / 2);
  if (in.c != weight_.value.shape().c || oh == 0 || ow == 0) {
    throw DimensionError("conv2d: cannot apply to input " + in.str());
  }
  return {in.n, weight_.value.shape().n, oh, ow};
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x, Mode) {
  input_ = x;
  this->cached_ = true;
  return conv2d_forward(x, weight_.value, bias_.value, stride_);
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& grad_out) {
  this->require_cache();
  auto grads = conv2d_backward(grad_out, input_, weight_.value, stride_);
  for (std::size_t i = 0; i < grads.weight.size(); ++i) {
    weight_.grad[i] += grads.weight[i];
  }
  for (std::size_t i = 0; i < grads.bias.size(); ++i) {
    bias_.grad[i] += grads.bias[i];
  }
  this->cached_ = false;
  return std::move(grads.input);
}

// ---- BatchNorm2d ----

template <typename T>
BatchNorm2d<T>::BatchNorm2d(std::size_t channels)
    : scale_("scale", Shape{1, channels}),
      shift_("shift", Shape{1, channels}),
      running_mean_(Shape{1, channels}, T{0}),
      running_var_(Shape{1, channels}, T{1}) {
  scale_.value.fill(T{1});
}

template <typename T>
Tensor<T> BatchNorm2d<T>::forward(const Tensor<T>& x, Mode mode) {
  BatchNormState<T> state{scale_.value, shift_.value, running_mean_, running_var_, momentum_, kBatchNormEps};
  auto y = batchnorm_forward(x, state, mode, &cache_);
  running_mean_ = std::move(state.running_mean);
  running_var_ = std::move(state.running_var);
  this->cached_ = mode == Mode::kTrain;
  return y;
}

template <typename T>
Tensor<T> BatchNorm2d<T>::backward(const Tensor<T>& grad_out) {
  this->require_cache();
  auto grads = batchnorm_backward(grad_out, cache_, scale_.value);
  for (std::size_t i = 0; i < grads.scale.size(); ++i) {
    scale_.grad[i] += grads.scale[i];
    shift_.grad[i] += grads.shift[i];
  }
  this->cached_ = false;
  return std::move(grads.input);
}

// ---- ReLU ----

template <typename T>
Tensor<T> ReLU<T>::forward(const Tensor<T>& x, Mode) {
  input_ = x;
  this->cached_ = true;
  return relu_forward(x);
}

template <typename T>
Tensor<T> ReLU<T>::backward(const Tensor<T>& grad_out) {
  this->require_cache();
  this->cached_ = false;
  return relu_backward(grad_out, input_);
}

// ---- MaxPool2d ----

template <typename T>
Shape MaxPool2d<T>::output_shape(const Shape& in) const {
  const std::size_t oh = window_output(in.h, kernel_, stride_, 0);
  const std::size_t ow = window_output(in.w, kernel_, stride_, 0);
  if (oh == 0 || ow == 0) {
    throw DimensionError("maxpool2d: window " + std::to_string(kernel_) + " does not fit input " + in.str());
  }
  return {in.n, in.c, oh, ow};
}

template <typename T>
Tensor<T> MaxPool2d<T>::forward(const Tensor<T>& x, Mode) {
  input_shape_ = x.shape();
  this->cached_ = true;
  return maxpool2d_forward(x, kernel_, stride_, &argmax_);
}

template <typename T>
Tensor<T> MaxPool2d<T>::backward(const Tensor<T>& grad_out) {
  this->require_cache();
  this->cached_ = false;
  return maxpool2d_backward(grad_out, input_shape_, argmax_);
}

// ---- AdaptiveAvgPool2d ----

template <typename T>
Tensor<T> AdaptiveAvgPool2d<T>::forward(const Tensor<T>& x, Mode) {
  input_shape_ = x.shape();
  this->cached_ = true;
  return adaptive_avgpool_forward(x, grid_);
}

template <typename T>
Tensor<T> AdaptiveAvgPool2d<T>::backward(const Tensor<T>& grad_out) {
  this->require_cache();
  this->cached_ = false;
  return adaptive_avgpool_backward(grad_out, input_shape_);
}

// ---- Dense ----

template <typename T>
Dense<T>::Dense(std::size_t in_features, std::size_t out_features)
    : weight_("weight", Shape{out_features, in_features}), bias_("bias", Shape{1, out_features}) {}

template <typename T>
Shape Dense<T>::output_shape(const Shape& in) const {
  if (in.sample_size() != weight_.value.shape().c) {
    throw DimensionError("dense: expected " + std::to_string(weight_.value.shape().c) +
                         " input features, got " + std::to_string(in.sample_size()));
  }
  return {in.n, weight_.value.shape().n};
}

template <typename T>
Tensor<T> Dense<T>::forward(const Tensor<T>& x, Mode) {
  input_ = x;
  this->cached_ = true;
  return fc_forward(x, weight_.value, bias_.value);
}

template <typename T>
Tensor<T> Dense<T>::backward(const Tensor<T>& grad_out) {
  this->require_cache();
  auto grads = fc_backward(grad_out, input_, weight_.value);
  for (std::size_t i = 0; i < grads.weight.size(); ++i) {
    weight_.grad[i] += grads.weight[i];
  }
  for (std::size_t i = 0; i < grads.bias.size(); ++i) {
    bias_.grad[i] += grads.bias[i];
  }
  this->cached_ = false;
  return std::move(grads.input);
}

// ---- Dropout ----

template <typename T>
Dropout<T>::Dropout(double rate) : rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1)");
  }
}

template <typename T>
Tensor<T> Dropout<T>::forward(const Tensor<T>& x, Mode mode) {
  const std::uint64_t seed = derive_seed(seed_, calls_);
  if (mode == Mode::kTrain) {
    ++calls_;
  }
  this->cached_ = true;
  return dropout_forward(x, rate_, mode, seed, &mask_);
}

template <typename T>
Tensor<T> Dropout<T>::backward(const Tensor<T>& grad_out) {
  this->require_cache();
  this->cached_ = false;
  return dropout_backward(grad_out, mask_);
}

// ---- Sequential ----

template <typename T>
Tensor<T> Sequential<T>::forward(const Tensor<T>& x, Mode mode) {
  Tensor<T> h = x;
  for (auto& layer : layers_) {
    h = layer->forward(h, mode);
  }
  return h;
}

template <typename T>
Tensor<T> Sequential<T>::backward(const Tensor<T>& grad_out) {
  Tensor<T> g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    g = (*it)->backward(g);
  }
  return g;
}

template <typename T>
Shape Sequential<T>::output_shape(const Shape& in) const {
  Shape s = in;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    try {
      s = layers_[i]->output_shape(s);
    } catch (const DimensionError& e) {
      throw DimensionError("layer " + std::to_string(i) + " (" + layers_[i]->kind() + "): " + e.what());
    }
  }
  return s;
}

template <typename T>
std::vector<Param<T>*> Sequential<T>::params() {
  std::vector<Param<T>*> out;
  for (auto& layer : layers_) {
    for (auto* p : layer->params()) {
      out.push_back(p);
    }
  }
  return out;
}

template <typename T>
std::vector<Tensor<T>*> Sequential<T>::buffers() {
  std::vector<Tensor<T>*> out;
  for (auto& layer : layers_) {
    for (auto* b : layer->buffers()) {
      out.push_back(b);
    }
  }
  return out;
}

template <typename T>
void Sequential<T>::zero_grad() {
  for (auto* p : params()) {
    p->zero_grad();
  }
}

template <typename T>
void sgd_step(const std::vector<Param<T>*>& params, double learning_rate) {
  const T lr = static_cast<T>(learning_rate);
  for (auto* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      p->value[i] -= lr * p->grad[i];
    }
  }
}

template <typename T>
std::size_t count_params(const std::vector<Param<T>*>& params) {
  std::size_t total = 0;
  for (const auto* p : params) {
    total += p->value.size();
  }
  return total;
}

template <typename T>
void init_fan_in_uniform(Param<T>& weight, Param<T>& bias, std::size_t fan_in, std::mt19937_64& rng,
                         double negative_slope) {
  const double fan = static_cast<double>(fan_in);
  const double gain = std::sqrt(2.0 / (1.0 + negative_slope * negative_slope));
  const double weight_bound = gain * std::sqrt(3.0 / fan);
  const double bias_bound = 1.0 / std::sqrt(fan);
  const auto draw = [&](double bound) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return static_cast<T>((2.0 * u - 1.0) * bound);
  };
  for (auto& v : weight.value.storage()) {
    v = draw(weight_bound);
  }
  for (auto& v : bias.value.storage()) {
    v = draw(bias_bound);
  }
}

#define ISAC_ATR_INSTANTIATE_LAYERS(T)                                                             \
  template class Layer<T>;                                                                         \
  template class Conv2d<T>;                                                                        \
  template class BatchNorm2d<T>;                                                                   \
  template class ReLU<T>;                                                                          \
  template class MaxPool2d<T>;                                                                     \
  template class AdaptiveAvgPool2d<T>;                                                             \
  template class Dense<T>;                                                                         \
  template class Dropout<T>;                                                                       \
  template class Sequential<T>;                                                                    \
  template void sgd_step(const std::vector<Param<T>*>&, double);                                  \
  template std::size_t count_params(const std::vector<Param<T>*>&);                                \
  template void init_fan_in_uniform(Param<T>&, Param<T>&, std::size_t, std::mt19937_64&, double);

ISAC_ATR_INSTANTIATE_LAYERS(float)
ISAC_ATR_INSTANTIATE_LAYERS(double)

#undef ISAC_ATR_INSTANTIATE_LAYERS

}  // namespace isac_atr::nn
