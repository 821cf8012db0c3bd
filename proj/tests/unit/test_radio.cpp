#include <cmath>

#include "doctest.h"
#include "isac_atr/errors.hpp"
#include "isac_atr/radio.hpp"

using namespace isac_atr;

TEST_CASE("full-scale preset matches the testbed numerology") {
  const auto cfg = full_scale_preset();
  CHECK(cfg.carrier_hz == 27.4e9);
  CHECK(cfg.subcarrier_spacing_hz == 120e3);
  CHECK(cfg.subcarriers == 1584);
  CHECK(cfg.symbols == 1120);
  CHECK(cfg.tdd.period_symbols == 140);
  CHECK(cfg.tdd.dl_symbols == 104);
  CHECK(cfg.tdd.ul_symbols() == 36);
  CHECK(cfg.downlink_symbol_count() == 8 * 104);
  CHECK(cfg.bandwidth_hz() == doctest::Approx(190.08e6));
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("desk preset keeps bandwidth, frame length and period count") {
  const auto full = full_scale_preset();
  const auto desk = desk_preset();
  CHECK_NOTHROW(desk.validate());
  CHECK(desk.subcarriers == 64);
  CHECK(desk.symbols == 64);
  CHECK(desk.bandwidth_hz() == doctest::Approx(full.bandwidth_hz()).epsilon(1e-12));
  const double full_frame = static_cast<double>(full.symbols) * full.total_symbol_time_s;
  const double desk_frame = static_cast<double>(desk.symbols) * desk.total_symbol_time_s;
  CHECK(desk_frame == doctest::Approx(full_frame).epsilon(1e-3));
  CHECK(desk.symbols / desk.tdd.period_symbols == full.symbols / full.tdd.period_symbols);
  CHECK(desk.carrier_hz == full.carrier_hz);
}

TEST_CASE("bin sizes follow c/(2 B') and lambda/(2 T_s M')") {
  const auto desk = desk_preset();
  const double dr = range_per_bin_m(desk, 64);
  CHECK(dr == doctest::Approx(kSpeedOfLight / (2.0 * 64 * desk.subcarrier_spacing_hz)));
  CHECK(dr == doctest::Approx(0.7886).epsilon(1e-3));
  const double dv = velocity_per_bin_mps(desk, 64);
  CHECK(dv == doctest::Approx(kSpeedOfLight / desk.carrier_hz / (2.0 * desk.total_symbol_time_s * 64)));
  CHECK(dv == doctest::Approx(0.5476).epsilon(2e-3));
}

TEST_CASE("radio validation rejects inconsistent configs") {
  auto cfg = desk_preset();
  cfg.total_symbol_time_s *= 1.01;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = desk_preset();
  cfg.symbols = 60;  // not a whole number of TDD periods
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = desk_preset();
  cfg.tdd.dl_symbols = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = desk_preset();
  cfg.subcarriers = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("TDD pattern marks the first dl_symbols of each period") {
  TddPattern tdd{8, 6};
  for (std::size_t s = 0; s < 32; ++s) {
    CHECK(tdd.is_downlink(s) == (s % 8 < 6));
  }
}
