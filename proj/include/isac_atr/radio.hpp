// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

namespace isac_atr {

inline constexpr double kSpeedOfLight = 299792458.0;

// Downlink/uplink schedule repeating every `period_symbols` OFDM symbols. The first
// `dl_symbols` of each period are downlink and carry the sensing signal.
struct TddPattern {
  std::size_t period_symbols = 140;
  std::size_t dl_symbols = 104;

  bool is_downlink(std::size_t symbol) const noexcept {
    return symbol % period_symbols < dl_symbols;
  }
  std::size_t ul_symbols() const noexcept { return period_symbols - dl_symbols; }
  void validate() const;

  bool operator==(const TddPattern&) const = default;
};

struct RadioConfig {
  double carrier_hz = 27.4e9;
  double subcarrier_spacing_hz = 120e3;
  std::size_t subcarriers = 1584;
  std::size_t symbols = 1120;
  double symbol_time_s = 8.33e-6;
  double cp_time_s = 0.59e-6;
  double total_symbol_time_s = 8.92e-6;
  TddPattern tdd;

  double bandwidth_hz() const noexcept {
    return static_cast<double>(subcarriers) * subcarrier_spacing_hz;
  }
  std::size_t downlink_symbol_count() const noexcept;

  // Throws ConfigError on any violated invariant.
  void validate() const;

  bool operator==(const RadioConfig&) const = default;
};

// The 5G FR2 numerology-3 testbed: 1584 x 1120, 140-symbol TDD period with 104 DL symbols.
RadioConfig full_scale_preset();

// 64 x 64 reduction of the full-scale frame. Subcarriers and symbols are decimated so the
// occupied bandwidth (190.08 MHz), the frame length (9.99 ms) and the eight TDD periods per
// frame are preserved: 64 subcarriers at 2.97 MHz, 64 symbols of 156.1 us, period 8 with 6 DL.
RadioConfig desk_preset();

// Range of one delay bin and velocity of one Doppler bin for an N' x M' periodogram.
double range_per_bin_m(const RadioConfig& cfg, std::size_t padded_subcarriers);
double velocity_per_bin_mps(const RadioConfig& cfg, std::size_t padded_symbols);

}  // namespace isac_atr
