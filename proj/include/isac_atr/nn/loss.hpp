// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <type_traits>

#include "isac_atr/nn/tensor.hpp"

namespace isac_atr::nn {

// Row-wise softmax of (batch, classes) logits with the row max subtracted first.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

// -sum_i w_{y_i} log p_{i,y_i} / sum_i w_{y_i}. Empty `weights` means unit weights.
template <typename T>
double weighted_ce(const Tensor<T>& probs, std::span<const std::uint16_t> labels,
                   std::span<const double> class_weights);


// Loss from logits through a stable log-softmax, plus d loss / d logits
// = w_{y_i} (p_i - onehot_i) / sum w.
template <typename T>
double softmax_weighted_ce(const Tensor<T>& logits, std::span<const std::uint16_t> labels,
                           std::span<const double> class_weights, std::type_identity_t<Tensor<T>>* grad_logits);

}  // namespace isac_atr::nn
