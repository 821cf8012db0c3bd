// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "isac_atr/dataset.hpp"
#include "isac_atr/kv_config.hpp"
#include "isac_atr/nn/layers.hpp"
#include "isac_atr/periodogram.hpp"

namespace isac_atr {

struct DetectorConfig {
  unsigned blocks = 2;         // C
  unsigned kernel = 3;         // k_c, blocks 2..C
  unsigned first_kernel = 3;   // block 1, fixed by the padding factor
  unsigned conv_stride = 1;    // s_c
  unsigned channels = 16;      // o_c, doubled after every block
  unsigned pool_kernel = 2;    // k_m
  unsigned pool_stride = 2;    // s_m
  unsigned hidden = 32;        // f
  double dropout = 0.5;        // d
  unsigned padding_factor = 0; // F
  unsigned classes = static_cast<unsigned>(kNumClasses);
  // Side of the adaptive average pool in front of the first dense layer (1 = global pooling).
  unsigned head_grid = kDefaultHeadGrid;

  static constexpr unsigned kDefaultHeadGrid = 16;

  void validate() const;
  std::size_t block_channels(std::size_t block) const { return std::size_t{channels} << block; }
  std::size_t block_kernel(std::size_t block) const { return block == 0 ? first_kernel : kernel; }
  bool operator==(const DetectorConfig&) const = default;
};

// 3, 5, 7 for F = 0, 1, 2; wider padding spreads each target over more bins.
unsigned first_kernel_for(unsigned padding_factor);

// Optimised architectures found for F = 0, 1, 2.
DetectorConfig reference_config(unsigned padding_factor);

// Keys: blocks, kernel, first_kernel, conv_stride, channels, pool_kernel, pool_stride, hidden,
// dropout, f, classes, head_grid. Missing keys fall back to reference_config(f).
DetectorConfig detector_from_config(const KeyValueConfig& cfg);
KeyValueConfig detector_to_config(const DetectorConfig& cfg);

// Multiply-accumulates of one forward pass for one sample (conv and dense layers).
std::uint64_t forward_macs(const DetectorConfig& cfg, std::size_t rows, std::size_t cols);

template <typename T>
class Detector {
 public:
  // Throws InfeasibleError when a block would leave an empty feature map.
  Detector(const DetectorConfig& cfg, std::size_t rows, std::size_t cols, std::uint64_t init_seed);
  Detector(Detector&&) noexcept = default;
  Detector& operator=(Detector&&) noexcept = default;

  const DetectorConfig& config() const { return cfg_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  nn::Sequential<T>& network() { return net_; }

  // (batch, 2, rows, cols) -> (batch, classes) logits.
  nn::Tensor<T> logits(const nn::Tensor<T>& x, nn::Mode mode) { return net_.forward(x, mode); }
  std::size_t param_count() { return nn::count_params(net_.params()); }
  // Feature-map shape after the last conv block for a single sample.
  nn::Shape trunk_shape() const { return trunk_shape_; }

 private:
  DetectorConfig cfg_;
  std::size_t rows_;
  std::size_t cols_;
  nn::Shape trunk_shape_;
  nn::Sequential<T> net_;
};

extern template class Detector<float>;
extern template class Detector<double>;

// Stacks samples into a (batch, 2, rows, cols) tensor.
template <typename T>
nn::Tensor<T> make_batch(std::span<const LabeledSample> samples, std::span<const std::size_t> order = {},
                         bool flip = false);

struct TrainConfig {
  std::size_t batch_size = 32;
  double learning_rate = 0.001;
  std::size_t epochs = 50;
  std::uint64_t seed = 1;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

// Seeds of the train/test split and of the weight init, derived from a training seed.
std::uint64_t split_seed_for(std::uint64_t train_seed);
std::uint64_t init_seed_for(std::uint64_t train_seed);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // running mean over the epoch's mini-batches
  double test_loss = 0.0;   // eval mode, class-weighted
  double test_accuracy = 0.0;
};

struct EvalReport {
  std::size_t classes = 0;
  std::vector<std::size_t> confusion;  // classes x classes, rows = true label
  std::vector<double> class_accuracy;  // NaN for classes absent from the test set
  double accuracy = 0.0;
  double mean_loss = 0.0;

  std::size_t at(std::size_t truth, std::size_t predicted) const { return confusion[truth * classes + predicted]; }
  std::size_t class_count(std::size_t truth) const;
  std::size_t total() const;
};

// Shuffled mini-batch SGD with class-weighted cross entropy. A final mini-batch of one sample
// is dropped since batch statistics are undefined for it. Throws DivergenceError on a
// non-finite loss.
template <typename T>
std::vector<EpochRecord> train(Detector<T>& model, std::span<const LabeledSample> train_set,
                               std::span<const LabeledSample> test_set, std::span<const double> class_weights,
                               const TrainConfig& tc,
                               const std::function<void(const EpochRecord&)>& on_epoch = {});

// Eval-mode report; the loss uses `class_weights` (empty = unit weights).
template <typename T>
EvalReport evaluate(Detector<T>& model, std::span<const LabeledSample> test_set,
                    std::span<const double> class_weights = {}, bool flip = false);

// evaluate() on Doppler-mirrored test images.
template <typename T>
EvalReport evaluate_flipped(Detector<T>& model, std::span<const LabeledSample> test_set,
                            std::span<const double> class_weights = {}) {
  return evaluate(model, test_set, class_weights, true);
}

struct ClassDelta {
  std::size_t class_id = 0;
  double unflipped = 0.0;
  double flipped = 0.0;
  double delta = 0.0;  // flipped - unflipped
};

// Per-class accuracy change, most negative first (ties by class id).
std::vector<ClassDelta> flip_deltas(const EvalReport& unflipped, const EvalReport& flipped);

std::string report_csv(const EvalReport& report, std::span<const std::string> class_names = {});
// One cell per (true, predicted) pair, `cell` pixels wide, shaded by row-normalised count.
GrayImage render_confusion(const EvalReport& report, std::size_t cell = 16);

std::vector<std::string> default_class_names();

// ---- checkpoint ----

struct CheckpointInfo {
  DetectorConfig config;
  std::size_t rows = 0;
  std::size_t cols = 0;
  FeatureMode feature_mode = FeatureMode::kStandardizedDb;
  TrainConfig train;
  std::uint64_t init_seed = 0;
  std::vector<double> class_weights;
  // Train/test split the model was trained on, so evaluation can rebuild the held-out set.
  std::uint64_t split_seed = 0;
  double split_fraction = 0.8;

  bool operator==(const CheckpointInfo&) const = default;
};

struct Checkpoint {
  CheckpointInfo info;
  Detector<float> model;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const CheckpointInfo& info, Detector<float>& model);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes, const std::string& context = "checkpoint");
void save_checkpoint(const CheckpointInfo& info, Detector<float>& model, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace isac_atr
