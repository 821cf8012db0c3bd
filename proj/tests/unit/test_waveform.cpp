#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "isac_atr/errors.hpp"
#include "isac_atr/waveform.hpp"

using namespace isac_atr;

namespace {

Scene one_target(double range, double velocity, double amplitude = 1.0, double phase = 0.0) {
  Scene s;
  s.scatterers.push_back({range, velocity, amplitude, phase});
  return s;
}

}  // namespace

TEST_CASE("delay and Doppler of a point scatterer") {
  const Scatterer s{15.0, 2.0, 1.0, 0.0};
  CHECK(round_trip_delay_s(s) == doctest::Approx(30.0 / 299792458.0).epsilon(1e-15));
  const auto cfg = desk_preset();
  CHECK(doppler_shift_hz(s, cfg) == doctest::Approx(4.0 * 27.4e9 / 299792458.0).epsilon(1e-15));
}

TEST_CASE("synthesized channel matches the closed form element by element") {
  const auto cfg = desk_preset();
  Scene scene;
  scene.scatterers = {{11.3, 1.7, 0.8, 0.4}, {17.9, -3.1, 0.3, -1.2}};
  const auto h = synthesize_channel(scene, cfg);
  CHECK_FALSE(h.mask_applied);
  REQUIRE(h.data.rows() == 64);
  REQUIRE(h.data.cols() == 64);
  const double two_pi = 2.0 * std::numbers::pi;
  double worst = 0.0;
  for (int k = 0; k < 64; k += 7) {
    for (int l = 0; l < 64; l += 5) {
      std::complex<double> expect{0.0, 0.0};
      for (const auto& s : scene.scatterers) {
        const double tau = 2.0 * s.range_m / 299792458.0;
        const double fd = 2.0 * s.velocity_mps * cfg.carrier_hz / 299792458.0;
        expect += s.amplitude * std::exp(std::complex<double>(0.0, s.phase_rad)) *
                  std::exp(std::complex<double>(0.0, -two_pi * k * cfg.subcarrier_spacing_hz * tau)) *
                  std::exp(std::complex<double>(0.0, two_pi * fd * l * cfg.total_symbol_time_s));
      }
      worst = std::max(worst, std::abs(expect - h.data(k, l)));
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("empty scene gives an all-zero channel") {
  const auto h = synthesize_channel(Scene{}, desk_preset());
  CHECK(h.data.norm() == 0.0);
}

TEST_CASE("memory budget guards synthesis") {
  CHECK_THROWS_AS(synthesize_channel(one_target(10, 0), full_scale_preset(), 1 << 20), SizingError);
}

TEST_CASE("TDD mask zeroes uplink columns exactly once") {
  const auto cfg = desk_preset();
  auto h = apply_tdd_mask(synthesize_channel(one_target(12, 1), cfg));
  CHECK(h.mask_applied);
  for (int l = 0; l < 64; ++l) {
    const bool dl = l % 8 < 6;
    CHECK((h.data.col(l).norm() > 0) == dl);
  }
  CHECK_THROWS_AS(apply_tdd_mask(h), ConfigError);
}

TEST_CASE("infinite SNR is the identity") {
  const auto h = apply_tdd_mask(synthesize_channel(one_target(12, 1), desk_preset()));
  const auto n = add_noise(h, kNoiseless, 5);
  CHECK(n.data == h.data);
}

TEST_CASE("noise variance on an empty scene at 0 dB is one") {
  auto cfg = desk_preset();
  cfg.subcarriers = 256;
  cfg.symbols = 256;
  const auto h = add_noise(apply_tdd_mask(synthesize_channel(Scene{}, cfg)), 0.0, 42);
  double power = 0.0;
  std::size_t count = 0;
  for (int l = 0; l < 256; ++l) {
    if (l % 8 < 6) {
      power += h.data.col(l).squaredNorm();
      count += 256;
    } else {
      CHECK(h.data.col(l).norm() == 0.0);  // uplink stays silent
    }
  }
  CHECK(power / static_cast<double>(count) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("noise scales with the downlink signal power and is seeded") {
  const auto cfg = desk_preset();
  const auto clean = apply_tdd_mask(synthesize_channel(one_target(12, 1, 3.0), cfg));
  const double p = downlink_power(clean);
  CHECK(p == doctest::Approx(9.0));
  const auto a = add_noise(clean, 10.0, 7);
  const auto b = add_noise(clean, 10.0, 7);
  const auto c = add_noise(clean, 10.0, 8);
  CHECK(a.data == b.data);
  CHECK(a.data != c.data);
  const double noise = downlink_power(ChannelMatrix{a.data - clean.data, cfg, true});
  CHECK(noise == doctest::Approx(0.9).epsilon(0.1));
}

TEST_CASE("channel estimation divides received by transmitted symbols") {
  const auto cfg = desk_preset();
  const auto h = apply_tdd_mask(synthesize_channel(one_target(9, -2), cfg));
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> qpsk(0, 3);
  ComplexMatrix x(64, 64);
  for (int k = 0; k < 64; ++k) {
    for (int l = 0; l < 64; ++l) {
      x(k, l) = std::polar(1.0, std::numbers::pi / 4 + std::numbers::pi / 2 * qpsk(rng));
    }
  }
  const ComplexMatrix y = h.data.cwiseProduct(x);
  const auto est = estimate_channel(y, x, cfg);
  CHECK((est.data - h.data).norm() < 1e-12);

  ComplexMatrix xz = x;
  xz(5, 9) = 0.0;  // symbol 9 is downlink
  try {
    estimate_channel(y, xz, cfg);
    FAIL("expected a division error");
  } catch (const DivisionError& e) {
    CHECK(e.row() == 5);
    CHECK(e.col() == 9);
  }
  ComplexMatrix xu = x;
  xu(5, 6) = 0.0;  // symbol 6 is uplink
  const auto ok = estimate_channel(y, xu, cfg);
  CHECK(ok.data(5, 6) == std::complex<double>(0.0, 0.0));
}

TEST_CASE("simulate_frame is deterministic per seed") {
  auto scene = one_target(14, 1.2);
  scene.seed = 77;
  const auto a = simulate_frame(scene, desk_preset());
  const auto b = simulate_frame(scene, desk_preset());
  CHECK(a.data == b.data);
  CHECK(a.mask_applied);
}

TEST_CASE("scene files round trip") {
  Scene scene;
  scene.class_id = 3;
  scene.snr_db = 12.5;
  scene.seed = 99;
  scene.scatterers = {{11.0, 1.25, 1.0, 0.5}, {11.2, 2.5, 0.25, -0.125}};
  const auto back = scene_from_config(scene_to_config(scene));
  CHECK(back == scene);

  auto inf_scene = scene;
  inf_scene.snr_db = kNoiseless;
  CHECK(std::isinf(scene_from_config(scene_to_config(inf_scene)).snr_db));

  CHECK_THROWS_AS(scene_from_config(KeyValueConfig::parse("class_id = 0\nscatterer = 1 2\n")), ConfigError);
  CHECK_THROWS_AS(scene_from_config(KeyValueConfig::parse("class_id = 0\nbogus = 1\n")), ConfigError);
}
