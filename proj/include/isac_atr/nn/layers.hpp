// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "isac_atr/nn/ops.hpp"
#include "isac_atr/nn/tensor.hpp"

namespace isac_atr::nn {

// A layer caches what it needs from forward; backward consumes that cache exactly once.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string kind() const = 0;
  virtual Shape output_shape(const Shape& in) const = 0;
  virtual Tensor<T> forward(const Tensor<T>& x, Mode mode) = 0;
  virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;

  virtual std::vector<Param<T>*> params() { return {}; }
  // Non-trainable state that must survive a checkpoint (batch-norm running statistics).
  virtual std::vector<Tensor<T>*> buffers() { return {}; }

 protected:
  void require_cache() const;
  bool cached_ = false;
};

template <typename T>
class Conv2d final : public Layer<T> {
 public:
  Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride);

  std::string kind() const override { return "conv2d"; }
  Shape output_shape(const Shape& in) const override;
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  std::vector<Param<T>*> params() override { return {&weight_, &bias_}; }

  std::size_t kernel() const { return kernel_; }
  std::size_t stride() const { return stride_; }
  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }

 private:
  std::size_t kernel_;
  std::size_t stride_;
  Param<T> weight_;
  Param<T> bias_;
  Tensor<T> input_;
};

template <typename T>
class BatchNorm2d final : public Layer<T> {
 public:
  explicit BatchNorm2d(std::size_t channels);

  std::string kind() const override { return "batchnorm2d"; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  std::vector<Param<T>*> params() override { return {&scale_, &shift_}; }
  std::vector<Tensor<T>*> buffers() override { return {&running_mean_, &running_var_}; }

  void set_momentum(double momentum) { momentum_ = momentum; }

 private:
  Param<T> scale_;
  Param<T> shift_;
  Tensor<T> running_mean_;
  Tensor<T> running_var_;
  double momentum_ = kBatchNormMomentum;
  BatchNormCache<T> cache_;
};

template <typename T>
class ReLU final : public Layer<T> {
 public:
  std::string kind() const override { return "relu"; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;

 private:
  Tensor<T> input_;
};

template <typename T>
class MaxPool2d final : public Layer<T> {
 public:
  MaxPool2d(std::size_t kernel, std::size_t stride) : kernel_(kernel), stride_(stride) {}

  std::string kind() const override { return "maxpool2d"; }
  Shape output_shape(const Shape& in) const override;
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;

 private:
  std::size_t kernel_;
  std::size_t stride_;
  Shape input_shape_;
  std::vector<std::uint32_t> argmax_;
};

template <typename T>
class AdaptiveAvgPool2d final : public Layer<T> {
 public:
  explicit AdaptiveAvgPool2d(std::size_t grid) : grid_(grid) {}

  std::string kind() const override { return "adaptive_avgpool2d"; }
  Shape output_shape(const Shape& in) const override { return {in.n, in.c, grid_, grid_}; }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;

 private:
  std::size_t grid_;
  Shape input_shape_;
};

// Fully connected over the flattened sample.
template <typename T>
class Dense final : public Layer<T> {
 public:
  Dense(std::size_t in_features, std::size_t out_features);

  std::string kind() const override { return "dense"; }
  Shape output_shape(const Shape& in) const override;
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;
  std::vector<Param<T>*> params() override { return {&weight_, &bias_}; }

  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }

 private:
  Param<T> weight_;
  Param<T> bias_;
  Tensor<T> input_;
};

// Inverted dropout. Each train-mode forward draws a fresh mask from (seed, call index).
template <typename T>
class Dropout final : public Layer<T> {
 public:
  explicit Dropout(double rate);

  std::string kind() const override { return "dropout"; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& grad_out) override;

  double rate() const { return rate_; }
  void reseed(std::uint64_t seed) {
    seed_ = seed;
    calls_ = 0;
  }

 private:
  double rate_;
  std::uint64_t seed_ = 0;
  std::uint64_t calls_ = 0;
  std::vector<T> mask_;
};

template <typename T>
class Sequential {
 public:
  Sequential() = default;
  Sequential(Sequential&&) noexcept = default;
  Sequential& operator=(Sequential&&) noexcept = default;

  template <typename L, typename... Args>
  L& add(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode);
  // Returns the gradient with respect to the network input.
  Tensor<T> backward(const Tensor<T>& grad_out);
  // Throws DimensionError naming the first layer whose output would be empty.
  Shape output_shape(const Shape& in) const;

  std::vector<Param<T>*> params();
  std::vector<Tensor<T>*> buffers();
  void zero_grad();

  std::size_t size() const { return layers_.size(); }
  Layer<T>& layer(std::size_t i) { return *layers_[i]; }
  const Layer<T>& layer(std::size_t i) const { return *layers_[i]; }

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

// theta <- theta - lr * grad. No momentum, no weight decay.
template <typename T>
void sgd_step(const std::vector<Param<T>*>& params, double learning_rate);

template <typename T>
std::size_t count_params(const std::vector<Param<T>*>& params);

// Kaiming uniform: weights U(-b, b) with b = sqrt(2 / (1 + a^2)) sqrt(3 / fan_in), biases
// U(-1/sqrt(fan_in), 1/sqrt(fan_in)). a = sqrt(5) gives the common 1/sqrt(fan_in) bound,
// a = 0 the ReLU-gain bound sqrt(6 / fan_in).
inline constexpr double kDefaultInitSlope = 2.23606797749978969641;  // sqrt(5)

template <typename T>
void init_fan_in_uniform(Param<T>& weight, Param<T>& bias, std::size_t fan_in, std::mt19937_64& rng,
                         double negative_slope = kDefaultInitSlope);

}  // namespace isac_atr::nn
