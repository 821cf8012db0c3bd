// SPDX-License-Identifier: Apache-2.0
#include "isac_atr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "isac_atr/binary_io.hpp"
#include "isac_atr/errors.hpp"
#include "isac_atr/parallel.hpp"
#include "isac_atr/seeding.hpp"

namespace isac_atr {
namespace {

class Draw {
 public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) {
    const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }
  std::size_t integer(std::size_t lo, std::size_t hi) {  // inclusive
    return lo + static_cast<std::size_t>(uniform(0.0, static_cast<double>(hi - lo + 1)));
  }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }
  double phase() { return uniform(-std::numbers::pi, std::numbers::pi); }

 private:
  std::mt19937_64 rng_;
};

// Frames are ~10 ms long; a "static" object still shows a small common Doppler offset from
// residual sway and oscillator drift between the transmitting and sniffing units.
constexpr double kStaticVelocitySpreadMps = 0.3;
constexpr double kClusterVelocityJitterMps = 0.05;

// Micro-Doppler of limbs: between standing foot (0) and swinging limb (~2.2x torso speed).
constexpr double kLimbSpeedRatioMax = 2.2;
constexpr double kLimbRangeSpreadM = 0.3;

double gait_speed(Draw& d) {
  return d.coin() ? d.uniform(kWalkMinMps, kWalkMaxMps) : d.uniform(kRunMinMps, kRunMaxMps);
}

void add_pedestrian(Scene& scene, Draw& d, double range, double velocity, double reflector_amplitude) {
  scene.scatterers.push_back({range, velocity, 1.0, d.phase()});
  const std::size_t limbs = d.integer(3, 5);
  for (std::size_t i = 0; i < limbs; ++i) {
    scene.scatterers.push_back({std::max(0.0, range + d.uniform(-kLimbRangeSpreadM, kLimbRangeSpreadM)),
                                velocity * d.uniform(0.0, kLimbSpeedRatioMax), d.uniform(0.15, 0.45),
                                d.phase()});
  }
  if (reflector_amplitude > 0.0) {
    scene.scatterers.push_back({range, velocity, reflector_amplitude, d.phase()});
  }
}

void add_cluster(Scene& scene, Draw& d, const ClassSpec& spec, double range, double velocity) {
  if (spec.dominant_amplitude > 0.0) {
    scene.scatterers.push_back({range, velocity, spec.dominant_amplitude, d.phase()});
  }
  const std::size_t count = d.integer(spec.min_scatterers, spec.max_scatterers);
  for (std::size_t i = 0; i < count; ++i) {
    scene.scatterers.push_back(
        {std::max(0.0, range + d.uniform(-0.5 * spec.extent_m, 0.5 * spec.extent_m)),
         velocity + d.uniform(-kClusterVelocityJitterMps, kClusterVelocityJitterMps),
         d.uniform(spec.min_amplitude, spec.max_amplitude), d.phase()});
  }
}

double pick_anchor(Draw& d, const ClassSpec& spec, std::size_t* index = nullptr) {
  if (spec.anchor_ranges_m.empty()) {
    throw ConfigError("class '" + spec.name + "' has no anchor range");
  }
  const std::size_t i = d.integer(0, spec.anchor_ranges_m.size() - 1);
  if (index != nullptr) {
    *index = i;
  }
  return spec.anchor_ranges_m[i] + d.uniform(-spec.range_jitter_m, spec.range_jitter_m);
}

ClassSpec make_spec(std::uint16_t id, std::string name, MotionModel motion) {
  ClassSpec s;
  s.class_id = id;
  s.name = std::move(name);
  s.motion = motion;
  return s;
}

std::vector<ClassSpec> build_library() {
  std::vector<ClassSpec> lib;

  auto person = make_spec(0, "person", MotionModel::kPedestrian);
  person.anchor_ranges_m = {11.0, 18.0};
  person.range_jitter_m = 2.0;
  lib.push_back(person);

  auto cabinet = make_spec(1, "cabinet", MotionModel::kStaticOrMoving);
  cabinet.anchor_ranges_m = {15.0};
  cabinet.range_jitter_m = 0.25;
  cabinet.min_scatterers = 8;
  cabinet.max_scatterers = 12;
  cabinet.extent_m = 2.0;
  cabinet.min_amplitude = 0.5;
  cabinet.max_amplitude = 1.5;
  cabinet.moving_fraction = 0.4;
  lib.push_back(cabinet);

  auto forklift = make_spec(2, "forklift", MotionModel::kStatic);
  forklift.anchor_ranges_m = {11.0};
  forklift.range_jitter_m = 0.25;
  forklift.min_scatterers = 5;
  forklift.max_scatterers = 10;
  forklift.extent_m = 2.5;
  forklift.min_amplitude = 0.3;
  forklift.max_amplitude = 1.5;
  lib.push_back(forklift);

  auto reflector = person;
  reflector.class_id = 3;
  reflector.name = "reflector";
  reflector.dominant_amplitude = 10.0;
  lib.push_back(reflector);

  lib.push_back(make_spec(4, "no_target", MotionModel::kEmpty));

  auto chair = make_spec(5, "chair", MotionModel::kStatic);
  chair.anchor_ranges_m = {15.0};
  chair.range_jitter_m = 0.25;
  chair.min_scatterers = 3;
  chair.max_scatterers = 5;
  chair.extent_m = 0.8;
  chair.min_amplitude = 0.05;
  chair.max_amplitude = 0.2;
  lib.push_back(chair);

  auto whiteboard = make_spec(6, "whiteboard", MotionModel::kStatic);
  whiteboard.anchor_ranges_m = {15.0};
  whiteboard.range_jitter_m = 0.25;
  whiteboard.min_scatterers = 2;
  whiteboard.max_scatterers = 3;
  whiteboard.extent_m = 0.4;
  whiteboard.min_amplitude = 0.05;
  whiteboard.max_amplitude = 0.2;
  whiteboard.dominant_amplitude = 1.0;
  lib.push_back(whiteboard);

  auto pair = make_spec(7, "two_people", MotionModel::kOpposingPair);
  pair.anchor_ranges_m = {3.0, 10.0, 14.0, 22.0};  // near start span, far start span
  lib.push_back(pair);
  return lib;
}

constexpr double kMovingCabinetMinRange = 11.0;
constexpr double kMovingCabinetMaxRange = 18.0;
constexpr double kPushMinMps = 0.3;
constexpr double kPushMaxMps = 1.2;

}  // namespace

const std::vector<ClassSpec>& default_class_library() {
  static const std::vector<ClassSpec> lib = build_library();
  return lib;
}

Scene make_scene(const ClassSpec& spec, std::uint64_t seed, double snr_db) {
  Draw d(seed);
  Scene scene;
  scene.class_id = spec.class_id;
  scene.snr_db = snr_db;
  scene.seed = derive_seed(seed, 1);
  switch (spec.motion) {
    case MotionModel::kEmpty:
      break;
    case MotionModel::kStatic: {
      const double range = pick_anchor(d, spec);
      add_cluster(scene, d, spec, range, d.uniform(-kStaticVelocitySpreadMps, kStaticVelocitySpreadMps));
      break;
    }
    case MotionModel::kStaticOrMoving: {
      if (d.coin(spec.moving_fraction)) {
        const double range = d.uniform(kMovingCabinetMinRange, kMovingCabinetMaxRange);
        const double speed = d.uniform(kPushMinMps, kPushMaxMps);
        add_cluster(scene, d, spec, range, d.coin() ? speed : -speed);
      } else {
        const double range = pick_anchor(d, spec);
        add_cluster(scene, d, spec, range, d.uniform(-kStaticVelocitySpreadMps, kStaticVelocitySpreadMps));
      }
      break;
    }
    case MotionModel::kPedestrian: {
      std::size_t anchor = 0;
      const double range = pick_anchor(d, spec, &anchor);
      // Outbound legs start at the near anchor, return legs at the far one.
      const double speed = gait_speed(d);
      add_pedestrian(scene, d, range, anchor == 0 ? speed : -speed, spec.dominant_amplitude);
      break;
    }
    case MotionModel::kOpposingPair: {
      const auto& a = spec.anchor_ranges_m;
      if (a.size() != 4) {
        throw ConfigError("opposing pair needs near and far start spans");
      }
      const double near = d.uniform(a[0], a[1]);
      const double far = d.uniform(a[2], a[3]);
      const double near_speed = gait_speed(d);
      const double far_speed = gait_speed(d);
      add_pedestrian(scene, d, near, near_speed, 0.0);
      add_pedestrian(scene, d, far, -far_speed, 0.0);
      break;
    }
  }
  return scene;
}

void DatasetManifest::validate() const {
  radio.validate();
  if (classes.empty() || classes.size() != counts.size()) {
    throw ConfigError("manifest needs one count per class (" + std::to_string(classes.size()) +
                      " classes, " + std::to_string(counts.size()) + " counts)");
  }
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) {
      throw ConfigError("manifest count for class " + std::to_string(i) + " must be positive");
    }
  }
  if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
    throw ConfigError("split_fraction must lie in (0, 1)");
  }
}

std::vector<std::size_t> proportional_counts(std::size_t total, std::span<const std::uint32_t> ratios) {
  const std::uint64_t denom = std::accumulate(ratios.begin(), ratios.end(), std::uint64_t{0});
  if (denom == 0) {
    throw ConfigError("proportional_counts: ratios sum to zero");
  }
  std::vector<std::size_t> counts(ratios.size());
  std::vector<std::uint64_t> remainders(ratios.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    const std::uint64_t scaled = static_cast<std::uint64_t>(total) * ratios[i];
    counts[i] = static_cast<std::size_t>(scaled / denom);
    remainders[i] = scaled % denom;
    assigned += counts[i];
  }
  std::vector<std::size_t> order(ratios.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t i = 0; assigned < total; ++i, ++assigned) {
    ++counts[order[i % order.size()]];
  }
  return counts;
}

DatasetManifest default_manifest(std::size_t total) {
  DatasetManifest m;
  m.counts = proportional_counts(total, kCampaignRatioBp);
  return m;
}

DatasetManifest manifest_from_config(const KeyValueConfig& cfg) {
  cfg.require_known({"preset", "f", "snr_db", "total", "counts", "split_fraction", "seed", "features"});
  DatasetManifest m = default_manifest(static_cast<std::size_t>(cfg.get_uint("total", 1600)));
  const std::string preset = cfg.get_string("preset", "desk");
  if (preset == "desk") {
    m.radio = desk_preset();
  } else if (preset == "full") {
    m.radio = full_scale_preset();
  } else {
    throw ConfigError("preset must be 'desk' or 'full', got '" + preset + "'");
  }
  const auto f = cfg.get_uint("f", 0);
  if (f > 8) {
    throw ConfigError("padding factor " + std::to_string(f) + " is out of range");
  }
  m.padding_factor = static_cast<unsigned>(f);
  m.snr_db = cfg.get_double("snr_db", 15.0);
  m.split_fraction = cfg.get_double("split_fraction", 0.8);
  m.seed = cfg.get_uint("seed", 1);
  const std::string features = cfg.get_string("features", "standardized");
  if (features == "standardized") {
    m.feature_mode = FeatureMode::kStandardizedDb;
  } else if (features == "raw") {
    m.feature_mode = FeatureMode::kRaw;
  } else {
    throw ConfigError("features must be 'standardized' or 'raw', got '" + features + "'");
  }
  if (cfg.has("counts")) {
    m.counts.clear();
    for (const auto& item : split_list(cfg.get_string("counts"))) {
      const auto v = parse_int(item, "counts");
      if (v <= 0) {
        throw ConfigError("counts must be positive");
      }
      m.counts.push_back(static_cast<std::size_t>(v));
    }
  }
  m.validate();
  return m;
}

KeyValueConfig manifest_to_config(const DatasetManifest& manifest) {
  KeyValueConfig cfg;
  cfg.add("preset", manifest.radio == full_scale_preset() ? "full" : "desk");
  cfg.add("f", std::to_string(manifest.padding_factor));
  std::ostringstream snr;
  snr.precision(17);
  snr << manifest.snr_db;
  cfg.add("snr_db", std::isinf(manifest.snr_db) ? "inf" : snr.str());
  std::size_t total = 0;
  std::string counts;
  for (std::size_t i = 0; i < manifest.counts.size(); ++i) {
    total += manifest.counts[i];
    counts += (i ? "," : "") + std::to_string(manifest.counts[i]);
  }
  cfg.add("total", std::to_string(total));
  cfg.add("counts", counts);
  std::ostringstream frac;
  frac.precision(17);
  frac << manifest.split_fraction;
  cfg.add("split_fraction", frac.str());
  cfg.add("seed", std::to_string(manifest.seed));
  cfg.add("features", manifest.feature_mode == FeatureMode::kRaw ? "raw" : "standardized");
  return cfg;
}

std::uint64_t sample_seed(std::uint64_t master, std::size_t index) { return derive_seed(master, index); }

double frame_snr_db(double reference_snr_db, double downlink_power_value) {
  if (std::isinf(reference_snr_db) || downlink_power_value <= 0.0) {
    return reference_snr_db;
  }
  return reference_snr_db + 10.0 * std::log10(downlink_power_value);
}

LabeledSample generate_sample(const ClassSpec& spec, const DatasetManifest& manifest, std::uint64_t seed) {
  Scene scene = make_scene(spec, seed, manifest.snr_db);
  ChannelMatrix frame = apply_tdd_mask(synthesize_channel(scene, manifest.radio));
  scene.snr_db = frame_snr_db(manifest.snr_db, downlink_power(frame));
  frame = add_noise(std::move(frame), scene.snr_db, scene.seed);
  LabeledSample sample;
  sample.features = extract_features(compute_periodogram(frame, manifest.padding_factor), manifest.feature_mode);
  sample.features.label = spec.class_id;
  sample.label = spec.class_id;
  sample.seed = seed;
  return sample;
}

Dataset generate_dataset(const DatasetManifest& manifest) {
  manifest.validate();
  const PaddedDims dims = padded_dims(manifest.radio.subcarriers, manifest.radio.symbols, manifest.padding_factor);
  Dataset ds;
  ds.radio = manifest.radio;
  ds.padding_factor = manifest.padding_factor;
  ds.rows = dims.rows;
  ds.cols = dims.cols;
  ds.feature_mode = manifest.feature_mode;

  std::vector<const ClassSpec*> spec_of;
  for (std::size_t c = 0; c < manifest.classes.size(); ++c) {
    spec_of.insert(spec_of.end(), manifest.counts[c], &manifest.classes[c]);
  }
  ds.samples.resize(spec_of.size());
  parallel_for(spec_of.size(), [&](std::size_t i) {
    ds.samples[i] = generate_sample(*spec_of[i], manifest, sample_seed(manifest.seed, i));
  });
  return ds;
}

std::size_t train_count_for(std::size_t class_size, double fraction) {
  const double exact = fraction * static_cast<double>(class_size);
  auto train = static_cast<std::size_t>(std::ceil(exact - 1e-9));
  return std::clamp<std::size_t>(train, 1, class_size - 1);
}

Split stratified_split(std::span<const LabeledSample> samples, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw SplitError("split fraction must lie in (0, 1)");
  }
  std::size_t max_label = 0;
  for (const auto& s : samples) {
    max_label = std::max<std::size_t>(max_label, s.label);
  }
  std::vector<std::vector<std::size_t>> by_class(samples.empty() ? 0 : max_label + 1);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    by_class[samples[i].label].push_back(i);
  }
  Split split;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    if (idx.empty()) {
      continue;
    }
    if (idx.size() < 2) {
      throw SplitError("class " + std::to_string(c) + " has fewer than 2 samples");
    }
    std::mt19937_64 rng(derive_seed(seed, c));
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t train = train_count_for(idx.size(), fraction);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      (k < train ? split.train : split.test).push_back(samples[idx[k]]);
    }
  }
  return split;
}

std::vector<std::size_t> class_counts(std::span<const LabeledSample> samples, std::size_t num_classes) {
  std::vector<std::size_t> counts(num_classes, 0);
  for (const auto& s : samples) {
    if (s.label >= num_classes) {
      throw ConfigError("label " + std::to_string(s.label) + " out of range");
    }
    ++counts[s.label];
  }
  return counts;
}

std::vector<double> class_weights_from_counts(std::span<const std::size_t> counts) {
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  const double classes = static_cast<double>(counts.size());
  std::vector<double> w(counts.size());
  for (std::size_t t = 0; t < counts.size(); ++t) {
    if (counts[t] == 0) {
      const auto& lib = default_class_library();
      const std::string name = t < lib.size() ? " (" + lib[t].name + ")" : "";
      throw ConfigError("class " + std::to_string(t) + name + " is missing from the training set");
    }
    w[t] = total / (classes * static_cast<double>(counts[t]));
  }
  return w;
}

std::vector<double> class_weights(std::span<const LabeledSample> train, std::size_t num_classes) {
  const auto counts = class_counts(train, num_classes);
  return class_weights_from_counts(counts);
}

// ---- binary format ----

std::vector<std::uint8_t> encode_dataset(const Dataset& ds) {
  ByteWriter w;
  w.put_tag("IATR");
  w.put_u32(kDatasetVersion);
  w.put_f64(ds.radio.carrier_hz);
  w.put_f64(ds.radio.subcarrier_spacing_hz);
  w.put_u32(static_cast<std::uint32_t>(ds.radio.subcarriers));
  w.put_u32(static_cast<std::uint32_t>(ds.radio.symbols));
  w.put_f64(ds.radio.symbol_time_s);
  w.put_f64(ds.radio.cp_time_s);
  w.put_f64(ds.radio.total_symbol_time_s);
  w.put_u32(static_cast<std::uint32_t>(ds.radio.tdd.period_symbols));
  w.put_u32(static_cast<std::uint32_t>(ds.radio.tdd.dl_symbols));
  w.put_u32(ds.padding_factor);
  w.put_u32(static_cast<std::uint32_t>(ds.rows));
  w.put_u32(static_cast<std::uint32_t>(ds.cols));
  w.put_u32(static_cast<std::uint32_t>(FeatureTensor::kChannels));
  w.put_u8(static_cast<std::uint8_t>(ds.feature_mode));
  w.put_u64(ds.samples.size());
  w.put_u32(crc32(w.tail(0)));
  const std::size_t payload = FeatureTensor::kChannels * ds.rows * ds.cols;
  for (const auto& s : ds.samples) {
    if (s.features.data.size() != payload || s.features.rows != ds.rows || s.features.cols != ds.cols) {
      throw DimensionError("sample feature tensor does not match the dataset dimensions");
    }
    const std::size_t start = w.size();
    w.put_u16(s.label);
    w.put_u64(s.seed);
    w.put_f32_array(s.features.data);
    w.put_u32(crc32(w.tail(start)));
  }
  return w.bytes();
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes, const std::string& context) {
  ByteReader r(bytes, context);
  r.expect_tag("IATR");
  const auto version = r.get_u32();
  if (version != kDatasetVersion) {
    throw FormatError(context + ": unsupported dataset version " + std::to_string(version));
  }
  Dataset ds;
  ds.radio.carrier_hz = r.get_f64();
  ds.radio.subcarrier_spacing_hz = r.get_f64();
  ds.radio.subcarriers = r.get_u32();
  ds.radio.symbols = r.get_u32();
  ds.radio.symbol_time_s = r.get_f64();
  ds.radio.cp_time_s = r.get_f64();
  ds.radio.total_symbol_time_s = r.get_f64();
  ds.radio.tdd.period_symbols = r.get_u32();
  ds.radio.tdd.dl_symbols = r.get_u32();
  ds.padding_factor = r.get_u32();
  ds.rows = r.get_u32();
  ds.cols = r.get_u32();
  const auto channels = r.get_u32();
  const auto mode = r.get_u8();
  const auto count = r.get_u64();
  const std::size_t header_end = r.position();
  if (r.get_u32() != crc32(r.slice(0, header_end))) {
    throw FormatError(context + ": header checksum mismatch");
  }
  if (channels != FeatureTensor::kChannels || mode > 1) {
    throw FormatError(context + ": unsupported channel count or feature mode");
  }
  ds.feature_mode = static_cast<FeatureMode>(mode);
  try {
    ds.radio.validate();
    if (padded_dims(ds.radio.subcarriers, ds.radio.symbols, ds.padding_factor) != PaddedDims{ds.rows, ds.cols}) {
      throw FormatError(context + ": stored dimensions disagree with the radio header");
    }
  } catch (const ConfigError& e) {
    throw FormatError(context + ": invalid radio header: " + e.what());
  } catch (const SizingError& e) {
    throw FormatError(context + ": invalid radio header: " + e.what());
  }
  const std::size_t payload = FeatureTensor::kChannels * ds.rows * ds.cols;
  const std::size_t record = 2 + 8 + 4 * payload + 4;
  if (count > r.remaining() / record) {
    throw FormatError(context + ": truncated (header announces " + std::to_string(count) + " samples)");
  }
  ds.samples.resize(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const std::size_t start = r.position();
    auto& s = ds.samples[i];
    s.label = r.get_u16();
    s.seed = r.get_u64();
    s.features = FeatureTensor(ds.rows, ds.cols, ds.feature_mode);
    r.get_f32_array(s.features.data);
    const std::size_t end = r.position();
    if (r.get_u32() != crc32(r.slice(start, end))) {
      throw FormatError(context + ": checksum mismatch in record " + std::to_string(i));
    }
    s.features.label = s.label;
  }
  if (r.remaining() != 0) {
    throw FormatError(context + ": " + std::to_string(r.remaining()) + " trailing bytes");
  }
  return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  write_file_bytes(path, encode_dataset(dataset));
}

Dataset load_dataset(const std::filesystem::path& path) {
  return decode_dataset(read_file_bytes(path), path.string());
}

}  // namespace isac_atr
