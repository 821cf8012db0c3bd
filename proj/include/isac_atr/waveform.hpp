// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include "isac_atr/kv_config.hpp"
#include "isac_atr/radio.hpp"

namespace isac_atr {

// Subcarriers along rows, OFDM symbols along columns.
using ComplexMatrix = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr std::size_t kDefaultMemoryBudgetBytes = std::size_t{2} << 30;

// Passing this as the SNR disables noise injection.
inline constexpr double kNoiseless = std::numeric_limits<double>::infinity();

struct Scatterer {
  double range_m = 0.0;
  double velocity_mps = 0.0;  // positive = receding
  double amplitude = 1.0;
  double phase_rad = 0.0;

  bool operator==(const Scatterer&) const = default;
};

struct Scene {
  std::size_t class_id = 0;
  std::vector<Scatterer> scatterers;
  double snr_db = 15.0;
  std::uint64_t seed = 0;

  bool operator==(const Scene&) const = default;
};

struct ChannelMatrix {
  ComplexMatrix data;
  RadioConfig config;
  bool mask_applied = false;
};

void validate_scene(const Scene& scene, std::size_t num_classes);

// Round-trip delay 2R/c.
double round_trip_delay_s(const Scatterer& s);
// Monostatic Doppler 2 v f_c / c.
double doppler_shift_hz(const Scatterer& s, const RadioConfig& cfg);

// H[k,l] = sum_p a_p e^{j phi_p} e^{-j 2 pi k df tau_p} e^{+j 2 pi fD_p l Ts}.
ChannelMatrix synthesize_channel(const Scene& scene, const RadioConfig& config,
                                 std::size_t memory_budget_bytes = kDefaultMemoryBudgetBytes);

// Zeroes the uplink columns of every TDD period.
ChannelMatrix apply_tdd_mask(ChannelMatrix h);

// Mean |H|^2 over downlink columns (0 for an all-zero channel).
double downlink_power(const ChannelMatrix& h);

// Adds circularly-symmetric Gaussian noise to downlink columns at the given per-element SNR
// relative to the mean downlink power (taken as 1 for an all-zero channel).
ChannelMatrix add_noise(ChannelMatrix h, double snr_db, std::uint64_t seed);

// H = Y / X elementwise. Zero pilots are only tolerated on uplink symbols, where H is set to 0.
ChannelMatrix estimate_channel(const ComplexMatrix& received, const ComplexMatrix& transmitted,
                               const RadioConfig& config);

// synthesize -> mask -> noise, as used for dataset frames.
ChannelMatrix simulate_frame(const Scene& scene, const RadioConfig& config,
                             std::size_t memory_budget_bytes = kDefaultMemoryBudgetBytes);

// Scene files:
//   class_id = 0
//   snr_db = 15          # or inf
//   seed = 42
//   scatterer = <range_m> <velocity_mps> <amplitude> <phase_rad>   (repeatable)
Scene scene_from_config(const KeyValueConfig& cfg);
KeyValueConfig scene_to_config(const Scene& scene);
Scene load_scene(const std::filesystem::path& path);

}  // namespace isac_atr
