// SPDX-License-Identifier: Apache-2.0
#include "isac_atr/radio.hpp"

#include <cmath>
#include <string>

#include "isac_atr/errors.hpp"

namespace isac_atr {

void TddPattern::validate() const {
  if (period_symbols == 0 || dl_symbols == 0 || dl_symbols > period_symbols) {
    throw ConfigError("TDD pattern needs 0 < dl_symbols <= period_symbols, got dl=" +
                      std::to_string(dl_symbols) + " period=" + std::to_string(period_symbols));
  }
}

std::size_t RadioConfig::downlink_symbol_count() const noexcept {
  std::size_t count = 0;
  for (std::size_t l = 0; l < symbols; ++l) {
    count += tdd.is_downlink(l) ? 1 : 0;
  }
  return count;
}

void RadioConfig::validate() const {
  if (subcarriers == 0 || symbols == 0) {
    throw ConfigError("radio config needs at least one subcarrier and one symbol");
  }
  if (!(carrier_hz > 0.0) || !(subcarrier_spacing_hz > 0.0) || !(symbol_time_s > 0.0) ||
      !(cp_time_s >= 0.0)) {
    throw ConfigError("radio config times and frequencies must be positive");
  }
  if (std::abs(total_symbol_time_s - (symbol_time_s + cp_time_s)) >
      1e-12 * std::abs(total_symbol_time_s)) {
    throw ConfigError("total symbol time must equal symbol time plus cyclic prefix");
  }
  tdd.validate();
  if (symbols % tdd.period_symbols != 0) {
    throw ConfigError("symbol count " + std::to_string(symbols) +
                      " is not a multiple of the TDD period " + std::to_string(tdd.period_symbols));
  }
}

RadioConfig full_scale_preset() {
  RadioConfig cfg;
  cfg.carrier_hz = 27.4e9;
  cfg.subcarrier_spacing_hz = 120e3;
  cfg.subcarriers = 1584;
  cfg.symbols = 1120;
  cfg.symbol_time_s = 8.33e-6;
  cfg.cp_time_s = 0.59e-6;
  cfg.total_symbol_time_s = 8.92e-6;
  cfg.tdd = TddPattern{140, 104};
  return cfg;
}

RadioConfig desk_preset() {
  const RadioConfig full = full_scale_preset();
  const double subcarrier_step = static_cast<double>(full.subcarriers) / 64.0;  // 24.75
  const double symbol_step = static_cast<double>(full.symbols) / 64.0;          // 17.5
  RadioConfig cfg;
  cfg.carrier_hz = full.carrier_hz;
  cfg.subcarrier_spacing_hz = full.subcarrier_spacing_hz * subcarrier_step;
  cfg.subcarriers = 64;
  cfg.symbols = 64;
  cfg.symbol_time_s = full.symbol_time_s * symbol_step;
  cfg.cp_time_s = full.cp_time_s * symbol_step;
  cfg.total_symbol_time_s = cfg.symbol_time_s + cfg.cp_time_s;
  cfg.tdd = TddPattern{8, 6};
  return cfg;
}

double range_per_bin_m(const RadioConfig& cfg, std::size_t padded_subcarriers) {
  return kSpeedOfLight / (2.0 * static_cast<double>(padded_subcarriers) * cfg.subcarrier_spacing_hz);
}

double velocity_per_bin_mps(const RadioConfig& cfg, std::size_t padded_symbols) {
  const double doppler_bin_hz =
      1.0 / (static_cast<double>(padded_symbols) * cfg.total_symbol_time_s);
  return doppler_bin_hz * kSpeedOfLight / (2.0 * cfg.carrier_hz);
}

}  // namespace isac_atr
