// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "isac_atr/kv_config.hpp"
#include "isac_atr/periodogram.hpp"
#include "isac_atr/waveform.hpp"

namespace isac_atr {

inline constexpr std::size_t kNumClasses = 8;

// Share of each class in the measurement campaign, in hundredths of a percent.
inline constexpr std::array<std::uint32_t, kNumClasses> kCampaignRatioBp = {1958, 1248, 803, 2555,
                                                                           846,  614,  577, 1399};

enum class MotionModel : std::uint8_t {
  kEmpty,           // no reflector in the area
  kStatic,          // rigid cluster at rest
  kStaticOrMoving,  // rest or a slow push in either direction
  kPedestrian,      // walking/running person: receding from the near anchor, returning at the far one
  kOpposingPair,    // two pedestrians closing on each other
};

struct ClassSpec {
  std::uint16_t class_id = 0;
  std::string name;
  MotionModel motion = MotionModel::kStatic;
  std::vector<double> anchor_ranges_m;
  double range_jitter_m = 0.0;
  // Rigid clusters: scatterer count and range extent.
  std::size_t min_scatterers = 1;
  std::size_t max_scatterers = 1;
  double extent_m = 0.0;
  double min_amplitude = 1.0;
  double max_amplitude = 1.0;
  // Strong point reflector added at the cluster/torso centre (0 = none).
  double dominant_amplitude = 0.0;
  // kStaticOrMoving: fraction of frames in motion.
  double moving_fraction = 0.0;
};

// The eight campaign classes: person, cabinet, forklift, reflector, no target, chair,
// whiteboard, two people.
const std::vector<ClassSpec>& default_class_library();

// Velocity ranges of the gait model, m/s.
inline constexpr double kWalkMinMps = 0.8;
inline constexpr double kWalkMaxMps = 2.0;
inline constexpr double kRunMinMps = 2.5;
inline constexpr double kRunMaxMps = 5.0;

// Deterministic scene draw for one frame of `spec`.
Scene make_scene(const ClassSpec& spec, std::uint64_t seed, double snr_db);

struct DatasetManifest {
  std::vector<ClassSpec> classes = default_class_library();
  std::vector<std::size_t> counts;  // per class, > 0
  RadioConfig radio = desk_preset();
  unsigned padding_factor = 0;
  // Per-element SNR of a unit-amplitude reflector. The noise floor is the same in every frame,
  // so weak targets sit closer to it than strong ones.
  double snr_db = 15.0;
  double split_fraction = 0.8;
  std::uint64_t seed = 1;
  FeatureMode feature_mode = FeatureMode::kStandardizedDb;

  void validate() const;
};

// Largest-remainder apportionment of `total` over integer ratios; ties go to the lower index.
std::vector<std::size_t> proportional_counts(std::size_t total, std::span<const std::uint32_t> ratios);

// Desk-scale default: 1600 frames at 64 x 64, F = 0, campaign class proportions.
DatasetManifest default_manifest(std::size_t total = 1600);

// Keys: preset (desk|full), f, snr_db, total, counts (comma list), split_fraction, seed,
// features (standardized|raw).
DatasetManifest manifest_from_config(const KeyValueConfig& cfg);
KeyValueConfig manifest_to_config(const DatasetManifest& manifest);

struct LabeledSample {
  FeatureTensor features;
  std::uint16_t label = 0;
  std::uint64_t seed = 0;

  bool operator==(const LabeledSample&) const = default;
};

struct Dataset {
  RadioConfig radio;
  unsigned padding_factor = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  FeatureMode feature_mode = FeatureMode::kStandardizedDb;
  std::vector<LabeledSample> samples;

  bool operator==(const Dataset&) const = default;
};

// Per-sample seed of frame `index` (counter-mode split of the manifest seed).
std::uint64_t sample_seed(std::uint64_t master, std::size_t index);

// Per-frame SNR (relative to the frame's own downlink power) that realises the reference SNR's
// absolute noise floor.
double frame_snr_db(double reference_snr_db, double downlink_power);

LabeledSample generate_sample(const ClassSpec& spec, const DatasetManifest& manifest, std::uint64_t seed);
Dataset generate_dataset(const DatasetManifest& manifest);

struct Split {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> test;
};

// Per-class shuffled split with ceil(fraction * n_t) training samples (at most n_t - 1).
Split stratified_split(std::span<const LabeledSample> samples, double fraction, std::uint64_t seed);
std::size_t train_count_for(std::size_t class_size, double fraction);

// w_t = S / (T * S_t).
std::vector<double> class_weights_from_counts(std::span<const std::size_t> counts);
std::vector<double> class_weights(std::span<const LabeledSample> train, std::size_t num_classes = kNumClasses);
std::vector<std::size_t> class_counts(std::span<const LabeledSample> samples,
                                      std::size_t num_classes = kNumClasses);

inline constexpr std::uint32_t kDatasetVersion = 1;

std::vector<std::uint8_t> encode_dataset(const Dataset& dataset);
Dataset decode_dataset(std::span<const std::uint8_t> bytes, const std::string& context = "dataset");
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace isac_atr
