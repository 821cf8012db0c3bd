// SPDX-License-Identifier: Apache-2.0
#include "isac_atr/nn/loss.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "isac_atr/errors.hpp"

namespace isac_atr::nn {
namespace {

void check_labels(const Shape& s, std::span<const std::uint16_t> labels,
                  std::span<const double> class_weights) {
  if (labels.size() != s.n) {
    throw DimensionError("loss: " + std::to_string(labels.size()) + " labels for a batch of " +
                         std::to_string(s.n));
  }
  const std::size_t classes = s.sample_size();
  if (!class_weights.empty() && class_weights.size() != classes) {
    throw DimensionError("loss: " + std::to_string(class_weights.size()) + " class weights for " +
                         std::to_string(classes) + " classes");
  }
  for (auto y : labels) {
    if (y >= classes) {
      throw ConfigError("loss: label " + std::to_string(y) + " out of range for " +
                        std::to_string(classes) + " classes");
    }
  }
}

double weight_of(std::span<const double> class_weights, std::uint16_t label) {
  return class_weights.empty() ? 1.0 : class_weights[label];
}

}  // namespace

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  const std::size_t classes = logits.shape().sample_size();
  Tensor<T> probs(logits.shape());
  for (std::size_t n = 0; n < logits.shape().n; ++n) {
    const T* z = logits.sample(n);
    T* p = probs.sample(n);
    double max = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < classes; ++k) {
      max = std::max(max, static_cast<double>(z[k]));
    }
    double total = 0.0;
    for (std::size_t k = 0; k < classes; ++k) {
      total += std::exp(static_cast<double>(z[k]) - max);
    }
    for (std::size_t k = 0; k < classes; ++k) {
      p[k] = static_cast<T>(std::exp(static_cast<double>(z[k]) - max) / total);
    }
  }
  return probs;
}

template <typename T>
double weighted_ce(const Tensor<T>& probs, std::span<const std::uint16_t> labels,
                   std::span<const double> class_weights) {
  check_labels(probs.shape(), labels, class_weights);
  double loss = 0.0;
  double norm = 0.0;
  for (std::size_t n = 0; n < probs.shape().n; ++n) {
    const double w = weight_of(class_weights, labels[n]);
    const double p = std::max(static_cast<double>(probs.sample(n)[labels[n]]),
                              std::numeric_limits<double>::min());
    loss -= w * std::log(p);
    norm += w;
  }
  return norm > 0.0 ? loss / norm : 0.0;
}

template <typename T>
double softmax_weighted_ce(const Tensor<T>& logits, std::span<const std::uint16_t> labels,
                           std::span<const double> class_weights, std::type_identity_t<Tensor<T>>* grad_logits) {
  check_labels(logits.shape(), labels, class_weights);
  const std::size_t classes = logits.shape().sample_size();
  double norm = 0.0;
  for (std::size_t n = 0; n < logits.shape().n; ++n) {
    norm += weight_of(class_weights, labels[n]);
  }
  if (grad_logits != nullptr) {
    *grad_logits = Tensor<T>(logits.shape());
  }
  if (norm <= 0.0) {
    return 0.0;
  }
  double loss = 0.0;
  std::vector<double> shifted(classes);
  for (std::size_t n = 0; n < logits.shape().n; ++n) {
    const T* z = logits.sample(n);
    double max = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < classes; ++k) {
      max = std::max(max, static_cast<double>(z[k]));
    }
    double total = 0.0;
    for (std::size_t k = 0; k < classes; ++k) {
      shifted[k] = static_cast<double>(z[k]) - max;
      total += std::exp(shifted[k]);
    }
    const double log_total = std::log(total);
    const double w = weight_of(class_weights, labels[n]);
    loss -= w * (shifted[labels[n]] - log_total);
    if (grad_logits != nullptr) {
      T* g = grad_logits->sample(n);
      for (std::size_t k = 0; k < classes; ++k) {
        const double p = std::exp(shifted[k] - log_total);
        g[k] = static_cast<T>(w * (p - (k == labels[n] ? 1.0 : 0.0)) / norm);
      }
    }
  }
  return loss / norm;
}

template Tensor<float> softmax(const Tensor<float>&);
template Tensor<double> softmax(const Tensor<double>&);
template double weighted_ce(const Tensor<float>&, std::span<const std::uint16_t>, std::span<const double>);
template double weighted_ce(const Tensor<double>&, std::span<const std::uint16_t>, std::span<const double>);
template double softmax_weighted_ce(const Tensor<float>&, std::span<const std::uint16_t>,
                                    std::span<const double>, Tensor<float>*);
template double softmax_weighted_ce(const Tensor<double>&, std::span<const std::uint16_t>,
                                    std::span<const double>, Tensor<double>*);

}  // namespace isac_atr::nn
