// SPDX-License-Identifier: Apache-2.0
#include "isac_atr/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

#include "isac_atr/binary_io.hpp"
#include "isac_atr/errors.hpp"
#include "isac_atr/nn/loss.hpp"
#include "isac_atr/seeding.hpp"

namespace isac_atr {
namespace {

constexpr std::size_t kEvalBatch = 64;

bool odd(unsigned k) { return k % 2 == 1; }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void DetectorConfig::validate() const {
  if (blocks < 2 || blocks > 4) {
    throw ConfigError("blocks must lie in [2, 4], got " + std::to_string(blocks));
  }
  if (!odd(kernel) || !odd(first_kernel)) {
    throw ConfigError("conv kernels must be odd");
  }
  if (first_kernel != first_kernel_for(padding_factor)) {
    throw ConfigError("first kernel for F=" + std::to_string(padding_factor) + " must be " +
                      std::to_string(first_kernel_for(padding_factor)));
  }
  if (conv_stride == 0 || channels == 0 || pool_kernel == 0 || pool_stride == 0 || hidden == 0 ||
      head_grid == 0) {
    throw ConfigError("strides, kernels, widths and head grid must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw ConfigError("dropout must lie in [0, 1)");
  }
  if (classes < 2) {
    throw ConfigError("need at least two classes");
  }
}

unsigned first_kernel_for(unsigned padding_factor) {
  switch (padding_factor) {
    case 0:
      return 3;
    case 1:
      return 5;
    case 2:
      return 7;
    default:
      throw ConfigError("padding factor must be 0, 1 or 2 for the detector, got " +
                        std::to_string(padding_factor));
  }
}

DetectorConfig reference_config(unsigned padding_factor) {
  DetectorConfig cfg;
  cfg.padding_factor = padding_factor;
  cfg.first_kernel = first_kernel_for(padding_factor);
  if (padding_factor == 2) {
    cfg.blocks = 4;
    cfg.channels = 8;
  }
  return cfg;
}

DetectorConfig detector_from_config(const KeyValueConfig& kv) {
  kv.require_known({"blocks", "kernel", "first_kernel", "conv_stride", "channels", "pool_kernel", "pool_stride",
                    "hidden", "dropout", "f", "classes", "head_grid"});
  const auto f = static_cast<unsigned>(kv.get_uint("f", 0));
  DetectorConfig cfg = reference_config(f);
  const auto u = [&](const char* key, unsigned fallback) {
    const auto v = kv.get_uint(key, fallback);
    if (v > 1u << 20) {
      throw ConfigError(std::string(key) + " is out of range");
    }
    return static_cast<unsigned>(v);
  };
  cfg.blocks = u("blocks", cfg.blocks);
  cfg.kernel = u("kernel", cfg.kernel);
  cfg.first_kernel = u("first_kernel", cfg.first_kernel);
  cfg.conv_stride = u("conv_stride", cfg.conv_stride);
  cfg.channels = u("channels", cfg.channels);
  cfg.pool_kernel = u("pool_kernel", cfg.pool_kernel);
  cfg.pool_stride = u("pool_stride", cfg.pool_stride);
  cfg.hidden = u("hidden", cfg.hidden);
  cfg.dropout = kv.get_double("dropout", cfg.dropout);
  cfg.classes = u("classes", cfg.classes);
  cfg.head_grid = u("head_grid", cfg.head_grid);
  cfg.validate();
  return cfg;
}

KeyValueConfig detector_to_config(const DetectorConfig& cfg) {
  KeyValueConfig kv;
  kv.add("blocks", std::to_string(cfg.blocks));
  kv.add("kernel", std::to_string(cfg.kernel));
  kv.add("first_kernel", std::to_string(cfg.first_kernel));
  kv.add("conv_stride", std::to_string(cfg.conv_stride));
  kv.add("channels", std::to_string(cfg.channels));
  kv.add("pool_kernel", std::to_string(cfg.pool_kernel));
  kv.add("pool_stride", std::to_string(cfg.pool_stride));
  kv.add("hidden", std::to_string(cfg.hidden));
  kv.add("dropout", fmt(cfg.dropout));
  kv.add("f", std::to_string(cfg.padding_factor));
  kv.add("classes", std::to_string(cfg.classes));
  kv.add("head_grid", std::to_string(cfg.head_grid));
  return kv;
}

std::uint64_t forward_macs(const DetectorConfig& cfg, std::size_t rows, std::size_t cols) {
  std::uint64_t macs = 0;
  std::size_t h = rows;
  std::size_t w = cols;
  std::size_t in_c = FeatureTensor::kChannels;
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    const std::size_t k = cfg.block_kernel(b);
    const std::size_t out_c = cfg.block_channels(b);
    h = nn::window_output(h, k, cfg.conv_stride, k / 2);
    w = nn::window_output(w, k, cfg.conv_stride, k / 2);
    macs += std::uint64_t{h} * w * out_c * in_c * k * k;
    h = nn::window_output(h, cfg.pool_kernel, cfg.pool_stride, 0);
    w = nn::window_output(w, cfg.pool_kernel, cfg.pool_stride, 0);
    in_c = out_c;
  }
  macs += std::uint64_t{in_c} * cfg.head_grid * cfg.head_grid * cfg.hidden + std::uint64_t{cfg.hidden} * cfg.classes;
  return macs;
}

template <typename T>
Detector<T>::Detector(const DetectorConfig& cfg, std::size_t rows, std::size_t cols, std::uint64_t init_seed)
    : cfg_(cfg), rows_(rows), cols_(cols) {
  cfg_.validate();
  if (rows == 0 || cols == 0) {
    throw ConfigError("detector input must be non-empty");
  }
  std::mt19937_64 rng(init_seed);
  const nn::Shape input{1, FeatureTensor::kChannels, rows, cols};
  std::size_t in_c = FeatureTensor::kChannels;
  for (std::size_t b = 0; b < cfg_.blocks; ++b) {
    const std::size_t k = cfg_.block_kernel(b);
    const std::size_t out_c = cfg_.block_channels(b);
    auto& conv = net_.template add<nn::Conv2d<T>>(in_c, out_c, k, cfg_.conv_stride);
    nn::init_fan_in_uniform(conv.weight(), conv.bias(), in_c * k * k, rng);
    net_.template add<nn::BatchNorm2d<T>>(out_c);
    net_.template add<nn::ReLU<T>>();
    net_.template add<nn::MaxPool2d<T>>(cfg_.pool_kernel, cfg_.pool_stride);
    try {
      trunk_shape_ = net_.output_shape(input);
    } catch (const DimensionError& e) {
      throw InfeasibleError("block " + std::to_string(b + 1) + " of " + std::to_string(cfg_.blocks) + " on " +
                            std::to_string(rows) + "x" + std::to_string(cols) + " input: " + e.what());
    }
    in_c = out_c;
  }
  const std::size_t pooled = in_c * cfg_.head_grid * cfg_.head_grid;
  net_.template add<nn::AdaptiveAvgPool2d<T>>(cfg_.head_grid);
  auto& fc1 = net_.template add<nn::Dense<T>>(pooled, cfg_.hidden);
  nn::init_fan_in_uniform(fc1.weight(), fc1.bias(), pooled, rng);
  net_.template add<nn::ReLU<T>>();
  net_.template add<nn::Dropout<T>>(cfg_.dropout).reseed(derive_seed(init_seed, 1));
  auto& fc2 = net_.template add<nn::Dense<T>>(cfg_.hidden, cfg_.classes);
  nn::init_fan_in_uniform(fc2.weight(), fc2.bias(), cfg_.hidden, rng);
  net_.output_shape(input);
}

template class Detector<float>;
template class Detector<double>;

template <typename T>
nn::Tensor<T> make_batch(std::span<const LabeledSample> samples, std::span<const std::size_t> order, bool flip) {
  const std::size_t count = order.empty() ? samples.size() : order.size();
  if (count == 0) {
    throw ConfigError("empty batch");
  }
  const auto& first = samples[order.empty() ? 0 : order[0]].features;
  const nn::Shape shape{count, FeatureTensor::kChannels, first.rows, first.cols};
  nn::Tensor<T> x(shape);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& f = samples[order.empty() ? i : order[i]].features;
    if (f.rows != first.rows || f.cols != first.cols || f.data.size() != shape.sample_size()) {
      throw DimensionError("samples in a batch must share dimensions");
    }
    T* dst = x.sample(i);
    if (flip) {
      const FeatureTensor mirrored = hflip(f);
      std::copy(mirrored.data.begin(), mirrored.data.end(), dst);
    } else {
      std::copy(f.data.begin(), f.data.end(), dst);
    }
  }
  return x;
}

template nn::Tensor<float> make_batch(std::span<const LabeledSample>, std::span<const std::size_t>, bool);
template nn::Tensor<double> make_batch(std::span<const LabeledSample>, std::span<const std::size_t>, bool);

void TrainConfig::validate() const {
  if (batch_size < 2) {
    throw ConfigError("batch size must be at least 2");
  }
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be finite and non-negative");
  }
  if (epochs == 0) {
    throw ConfigError("epochs must be positive");
  }
}

std::size_t EvalReport::class_count(std::size_t truth) const {
  std::size_t n = 0;
  for (std::size_t p = 0; p < classes; ++p) {
    n += at(truth, p);
  }
  return n;
}

std::size_t EvalReport::total() const { return std::accumulate(confusion.begin(), confusion.end(), std::size_t{0}); }

namespace {

std::vector<std::uint16_t> labels_of(std::span<const LabeledSample> samples, std::span<const std::size_t> order) {
  std::vector<std::uint16_t> labels(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    labels[i] = samples[order[i]].label;
  }
  return labels;
}

double weight_sum(std::span<const std::uint16_t> labels, std::span<const double> weights) {
  double s = 0.0;
  for (auto y : labels) {
    s += weights.empty() ? 1.0 : weights[y];
  }
  return s;
}

template <typename T>
void reseed_dropout(nn::Sequential<T>& net, std::uint64_t seed) {
  for (std::size_t i = 0; i < net.size(); ++i) {
    if (auto* d = dynamic_cast<nn::Dropout<T>*>(&net.layer(i))) {
      d->reseed(derive_seed(seed, i));
    }
  }
}

}  // namespace

template <typename T>
EvalReport evaluate(Detector<T>& model, std::span<const LabeledSample> test_set, std::span<const double> class_weights,
                    bool flip) {
  if (test_set.empty()) {
    throw ConfigError("cannot evaluate on an empty test set");
  }
  const std::size_t classes = model.config().classes;
  if (!class_weights.empty() && class_weights.size() != classes) {
    throw ConfigError("expected " + std::to_string(classes) + " class weights");
  }
  EvalReport report;
  report.classes = classes;
  report.confusion.assign(classes * classes, 0);
  double loss_sum = 0.0;
  double weight_total = 0.0;
  std::vector<std::size_t> order;
  for (std::size_t start = 0; start < test_set.size(); start += kEvalBatch) {
    const std::size_t count = std::min(kEvalBatch, test_set.size() - start);
    order.resize(count);
    std::iota(order.begin(), order.end(), start);
    const auto labels = labels_of(test_set, order);
    const auto logits = model.logits(make_batch<T>(test_set, order, flip), nn::Mode::kEval);
    const double w = weight_sum(labels, class_weights);
    loss_sum += nn::softmax_weighted_ce<T>(logits, labels, class_weights, nullptr) * w;
    weight_total += w;
    for (std::size_t i = 0; i < count; ++i) {
      std::size_t best = 0;
      for (std::size_t c = 1; c < classes; ++c) {
        if (logits.at(i, c, 0, 0) > logits.at(i, best, 0, 0)) {
          best = c;
        }
      }
      ++report.confusion[labels[i] * classes + best];
    }
  }
  report.mean_loss = loss_sum / weight_total;
  std::size_t correct = 0;
  report.class_accuracy.assign(classes, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t c = 0; c < classes; ++c) {
    correct += report.at(c, c);
    const std::size_t n = report.class_count(c);
    if (n > 0) {
      report.class_accuracy[c] = static_cast<double>(report.at(c, c)) / static_cast<double>(n);
    }
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(test_set.size());
  return report;
}

std::uint64_t split_seed_for(std::uint64_t train_seed) { return derive_seed(train_seed, 0x5b1175ULL); }

std::uint64_t init_seed_for(std::uint64_t train_seed) { return derive_seed(train_seed, 0x1a17ULL); }

template <typename T>
std::vector<EpochRecord> train(Detector<T>& model, std::span<const LabeledSample> train_set,
                               std::span<const LabeledSample> test_set, std::span<const double> class_weights,
                               const TrainConfig& tc, const std::function<void(const EpochRecord&)>& on_epoch) {
  tc.validate();
  if (train_set.size() < 2) {
    throw ConfigError("training needs at least two samples");
  }
  auto& net = model.network();
  const auto params = net.params();
  reseed_dropout(net, derive_seed(tc.seed, 1));
  std::mt19937_64 shuffle_rng(derive_seed(tc.seed, 0));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<EpochRecord> history;
  nn::Tensor<T> grad;
  for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
      const std::size_t count = std::min(tc.batch_size, order.size() - start);
      if (count < 2) {
        continue;
      }
      const std::span<const std::size_t> idx(order.data() + start, count);
      const auto labels = labels_of(train_set, idx);
      net.zero_grad();
      const auto logits = net.forward(make_batch<T>(train_set, idx), nn::Mode::kTrain);
      const double loss = nn::softmax_weighted_ce(logits, labels, class_weights, &grad);
      if (!std::isfinite(loss)) {
        throw DivergenceError(epoch, "non-finite training loss at epoch " + std::to_string(epoch));
      }
      net.backward(grad);
      nn::sgd_step(params, tc.learning_rate);
      loss_sum += loss;
      ++batches;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(batches);
    if (test_set.empty()) {
      rec.test_loss = rec.test_accuracy = std::numeric_limits<double>::quiet_NaN();
    } else {
      const auto report = evaluate(model, test_set, class_weights);
      rec.test_loss = report.mean_loss;
      rec.test_accuracy = report.accuracy;
      if (!std::isfinite(rec.test_loss)) {
        throw DivergenceError(epoch, "non-finite test loss at epoch " + std::to_string(epoch));
      }
    }
    history.push_back(rec);
    if (on_epoch) {
      on_epoch(rec);
    }
  }
  return history;
}

template EvalReport evaluate(Detector<float>&, std::span<const LabeledSample>, std::span<const double>, bool);
template EvalReport evaluate(Detector<double>&, std::span<const LabeledSample>, std::span<const double>, bool);
template std::vector<EpochRecord> train(Detector<float>&, std::span<const LabeledSample>,
                                        std::span<const LabeledSample>, std::span<const double>, const TrainConfig&,
                                        const std::function<void(const EpochRecord&)>&);
template std::vector<EpochRecord> train(Detector<double>&, std::span<const LabeledSample>,
                                        std::span<const LabeledSample>, std::span<const double>, const TrainConfig&,
                                        const std::function<void(const EpochRecord&)>&);

std::vector<ClassDelta> flip_deltas(const EvalReport& unflipped, const EvalReport& flipped) {
  if (unflipped.classes != flipped.classes) {
    throw ConfigError("reports cover different class counts");
  }
  std::vector<ClassDelta> out;
  for (std::size_t c = 0; c < unflipped.classes; ++c) {
    const double a = unflipped.class_accuracy[c];
    const double b = flipped.class_accuracy[c];
    if (std::isnan(a) || std::isnan(b)) {
      continue;
    }
    out.push_back({c, a, b, b - a});
  }
  std::stable_sort(out.begin(), out.end(), [](const ClassDelta& x, const ClassDelta& y) { return x.delta < y.delta; });
  return out;
}

std::vector<std::string> default_class_names() {
  std::vector<std::string> names;
  for (const auto& spec : default_class_library()) {
    names.push_back(spec.name);
  }
  return names;
}

std::string report_csv(const EvalReport& report, std::span<const std::string> class_names) {
  std::ostringstream os;
  os.precision(10);
  os << "class,name,count,accuracy";
  for (std::size_t p = 0; p < report.classes; ++p) {
    os << ",pred_" << p;
  }
  os << '\n';
  for (std::size_t t = 0; t < report.classes; ++t) {
    os << t << ',' << (t < class_names.size() ? class_names[t] : std::to_string(t)) << ','
       << report.class_count(t) << ',' << report.class_accuracy[t];
    for (std::size_t p = 0; p < report.classes; ++p) {
      os << ',' << report.at(t, p);
    }
    os << '\n';
  }
  os << "overall,all," << report.total() << ',' << report.accuracy << '\n';
  os << "mean_loss,all," << report.total() << ',' << report.mean_loss << '\n';
  return os.str();
}

GrayImage render_confusion(const EvalReport& report, std::size_t cell) {
  if (cell == 0 || report.classes == 0) {
    throw ConfigError("confusion image needs a positive cell size");
  }
  GrayImage img;
  img.width = img.height = report.classes * cell;
  img.pixels.assign(img.width * img.height, 0);
  for (std::size_t t = 0; t < report.classes; ++t) {
    const std::size_t n = report.class_count(t);
    for (std::size_t p = 0; p < report.classes; ++p) {
      const double frac = n == 0 ? 0.0 : static_cast<double>(report.at(t, p)) / static_cast<double>(n);
      const auto v = static_cast<std::uint8_t>(std::lround(255.0 * frac));
      for (std::size_t y = 0; y < cell; ++y) {
        std::fill_n(img.pixels.begin() + static_cast<std::ptrdiff_t>((t * cell + y) * img.width + p * cell), cell, v);
      }
    }
  }
  return img;
}

// ---- checkpoint ----

namespace {

std::vector<nn::Tensor<float>*> state_tensors(Detector<float>& model) {
  std::vector<nn::Tensor<float>*> out;
  for (auto* p : model.network().params()) {
    out.push_back(&p->value);
  }
  for (auto* b : model.network().buffers()) {
    out.push_back(b);
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const CheckpointInfo& info, Detector<float>& model) {
  if (info.config != model.config() || info.rows != model.rows() || info.cols != model.cols()) {
    throw ConfigError("checkpoint info does not describe the model");
  }
  const auto& c = info.config;
  ByteWriter w;
  w.put_tag("IATM");
  w.put_u32(kCheckpointVersion);
  for (unsigned v : {c.blocks, c.kernel, c.first_kernel, c.conv_stride, c.channels, c.pool_kernel, c.pool_stride,
                     c.hidden}) {
    w.put_u32(v);
  }
  w.put_f64(c.dropout);
  w.put_u32(c.padding_factor);
  w.put_u32(c.classes);
  w.put_u32(c.head_grid);
  w.put_u32(static_cast<std::uint32_t>(info.rows));
  w.put_u32(static_cast<std::uint32_t>(info.cols));
  w.put_u8(static_cast<std::uint8_t>(info.feature_mode));
  w.put_u64(info.train.batch_size);
  w.put_f64(info.train.learning_rate);
  w.put_u64(info.train.epochs);
  w.put_u64(info.train.seed);
  w.put_u64(info.init_seed);
  w.put_u64(info.split_seed);
  w.put_f64(info.split_fraction);
  w.put_u32(static_cast<std::uint32_t>(info.class_weights.size()));
  for (double v : info.class_weights) {
    w.put_f64(v);
  }
  const auto tensors = state_tensors(model);
  w.put_u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto* t : tensors) {
    w.put_u32(static_cast<std::uint32_t>(t->size()));
    w.put_f32_array(t->values());
  }
  w.put_u32(crc32(w.tail(0)));
  return w.bytes();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes, const std::string& context) {
  if (bytes.size() < 8) {
    throw FormatError(context + ": truncated");
  }
  ByteReader r(bytes, context);
  r.expect_tag("IATM");
  const auto body = bytes.subspan(0, bytes.size() - 4);
  ByteReader trailer(bytes.subspan(bytes.size() - 4), context);
  if (trailer.get_u32() != crc32(body)) {
    throw FormatError(context + ": checksum mismatch");
  }
  const auto version = r.get_u32();
  if (version != kCheckpointVersion) {
    throw FormatError(context + ": unsupported checkpoint version " + std::to_string(version));
  }
  CheckpointInfo info;
  auto& c = info.config;
  for (unsigned* v : {&c.blocks, &c.kernel, &c.first_kernel, &c.conv_stride, &c.channels, &c.pool_kernel,
                      &c.pool_stride, &c.hidden}) {
    *v = r.get_u32();
  }
  c.dropout = r.get_f64();
  c.padding_factor = r.get_u32();
  c.classes = r.get_u32();
  c.head_grid = r.get_u32();
  info.rows = r.get_u32();
  info.cols = r.get_u32();
  const auto mode = r.get_u8();
  if (mode > 1) {
    throw FormatError(context + ": unknown feature mode");
  }
  info.feature_mode = static_cast<FeatureMode>(mode);
  info.train.batch_size = r.get_u64();
  info.train.learning_rate = r.get_f64();
  info.train.epochs = r.get_u64();
  info.train.seed = r.get_u64();
  info.init_seed = r.get_u64();
  info.split_seed = r.get_u64();
  info.split_fraction = r.get_f64();
  const auto weights = r.get_u32();
  if (weights > r.remaining() / 8) {
    throw FormatError(context + ": truncated");
  }
  info.class_weights.resize(weights);
  for (auto& v : info.class_weights) {
    v = r.get_f64();
  }
  std::optional<Detector<float>> model;
  try {
    model.emplace(info.config, info.rows, info.cols, info.init_seed);
  } catch (const Error& e) {
    throw FormatError(context + ": invalid architecture descriptor: " + e.what());
  }
  const auto tensors = state_tensors(*model);
  if (r.get_u32() != tensors.size()) {
    throw FormatError(context + ": tensor count does not match the architecture");
  }
  for (auto* t : tensors) {
    if (r.get_u32() != t->size()) {
      throw FormatError(context + ": tensor size does not match the architecture");
    }
    r.get_f32_array(t->values());
  }
  if (r.remaining() != 4) {
    throw FormatError(context + ": unexpected trailing bytes");
  }
  return Checkpoint{std::move(info), std::move(*model)};
}

void save_checkpoint(const CheckpointInfo& info, Detector<float>& model, const std::filesystem::path& path) {
  write_file_bytes(path, encode_checkpoint(info, model));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file_bytes(path), path.string());
}

}  // namespace isac_atr
