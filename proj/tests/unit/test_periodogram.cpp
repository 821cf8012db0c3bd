#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "isac_atr/errors.hpp"
#include "isac_atr/periodogram.hpp"
#include "oracles.hpp"

using namespace isac_atr;

namespace {

ChannelMatrix random_channel(const RadioConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  ChannelMatrix h{ComplexMatrix(cfg.subcarriers, cfg.symbols), cfg, false};
  for (Eigen::Index i = 0; i < h.data.size(); ++i) {
    h.data.data()[i] = {normal(rng), normal(rng)};
  }
  return h;
}

RadioConfig small_config(std::size_t n, std::size_t m) {
  auto cfg = desk_preset();
  cfg.subcarriers = n;
  cfg.symbols = m;
  return cfg;
}

double rel_diff(const ComplexMatrix& a, const ComplexMatrix& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("padded dimensions are next powers of two shifted by F") {
  CHECK(padded_dims(64, 64, 0) == PaddedDims{64, 64});
  CHECK(padded_dims(64, 64, 1) == PaddedDims{128, 128});
  CHECK(padded_dims(64, 64, 2) == PaddedDims{256, 256});
  CHECK(padded_dims(1584, 1120, 0) == PaddedDims{2048, 2048});
  CHECK(padded_dims(1584, 1120, 2) == PaddedDims{8192, 8192});
  CHECK(padded_dims(48, 40, 0) == PaddedDims{64, 64});
  CHECK(padded_dims(1, 1, 0) == PaddedDims{1, 1});
  CHECK_THROWS_AS(padded_dims(0, 4, 0), ConfigError);
}

TEST_CASE("fast periodogram equals the direct double sum") {
  SUBCASE("64 x 64, F = 0") {
    const auto h = random_channel(desk_preset(), 1);
    const auto p = compute_periodogram(h, 0);
    CHECK(rel_diff(p.data, oracle::direct_periodogram(h.data, 64, 64)) < 1e-9);
  }
  SUBCASE("non-power-of-two input with padding, F = 1") {
    const auto h = random_channel(small_config(12, 16), 2);
    const auto p = compute_periodogram(h, 1);
    REQUIRE(p.rows() == 32);
    REQUIRE(p.cols() == 32);
    CHECK(rel_diff(p.data, oracle::direct_periodogram(h.data, 32, 32)) < 1e-9);
  }
}

TEST_CASE("Parseval: sum |P|^2 = sum |H|^2 / (M'N')") {
  for (unsigned f = 0; f <= 2; ++f) {
    const auto h = random_channel(small_config(24, 16), 10 + f);
    const auto p = compute_periodogram(h, f);
    const double lhs = p.data.squaredNorm();
    const double rhs = h.data.squaredNorm() / static_cast<double>(p.rows() * p.cols());
    CHECK(std::abs(lhs - rhs) / rhs < 1e-9);
  }
}

TEST_CASE("a single scatterer peaks at the analytic delay-Doppler bin") {
  const auto cfg = desk_preset();
  Scene scene;
  scene.scatterers = {{15.0, 2.0, 1.0, 0.3}};
  const auto p = compute_periodogram(synthesize_channel(scene, cfg), 0);
  Eigen::Index n = 0, m = 0;
  p.data.cwiseAbs().maxCoeff(&n, &m);
  const double tau = 2.0 * 15.0 / kSpeedOfLight;
  const double fd = 2.0 * 2.0 * cfg.carrier_hz / kSpeedOfLight;
  CHECK(n == std::lround(tau * cfg.subcarrier_spacing_hz * 64));
  CHECK(m == std::lround(fd * cfg.total_symbol_time_s * 64));
  CHECK(p.delay_per_bin_s() == doctest::Approx(1.0 / (64 * cfg.subcarrier_spacing_hz)));
  CHECK(p.doppler_per_bin_hz() == doctest::Approx(1.0 / (64 * cfg.total_symbol_time_s)));
}

TEST_CASE("memory budget guards the padded transform") {
  const auto h = random_channel(desk_preset(), 3);
  CHECK_THROWS_AS(compute_periodogram(h, 2, 1024), SizingError);
}

TEST_CASE("centred and natural Doppler columns are inverse") {
  for (std::size_t cols : {1u, 2u, 8u, 64u}) {
    for (std::size_t m = 0; m < cols; ++m) {
      CHECK(natural_column(centered_column(m, cols), cols) == m);
    }
  }
  CHECK(centered_column(0, 64) == 32);
  CHECK(centered_column(63, 64) == 31);
}

TEST_CASE("standardized features: zero-mean unit-variance magnitude, phase over pi") {
  const auto h = random_channel(desk_preset(), 4);
  const auto p = compute_periodogram(h, 0);
  const auto t = extract_features(p);
  REQUIRE(t.rows == 64);
  REQUIRE(t.data.size() == 2 * 64 * 64);
  double mean = 0, var = 0;
  for (float v : t.channel(0)) mean += v;
  mean /= 4096;
  for (float v : t.channel(0)) var += (v - mean) * (v - mean);
  var /= 4096;
  CHECK(std::abs(mean) < 1e-5);
  CHECK(var == doctest::Approx(1.0).epsilon(1e-5));
  for (float v : t.channel(1)) {
    CHECK(v >= -1.0f);
    CHECK(v <= 1.0f);
  }
  // column placement: natural column 0 lands in the centre
  const auto v = p.data(5, 0);
  CHECK(t.at(5, 32, 1) == doctest::Approx(std::arg(v) / std::numbers::pi));
}

TEST_CASE("raw features keep magnitude and phase untransformed") {
  const auto p = compute_periodogram(random_channel(desk_preset(), 5), 0);
  const auto t = extract_features(p, FeatureMode::kRaw);
  CHECK(t.mode == FeatureMode::kRaw);
  const auto v = p.data(7, 3);
  CHECK(t.at(7, centered_column(3, 64), 0) == static_cast<float>(std::abs(v)));
  CHECK(t.at(7, centered_column(3, 64), 1) == static_cast<float>(std::arg(v)));
}

TEST_CASE("a flat map standardizes to zeros") {
  const auto p = compute_periodogram(ChannelMatrix{ComplexMatrix::Zero(64, 64), desk_preset(), false}, 0);
  const auto t = extract_features(p);
  for (float v : t.channel(0)) CHECK(v == 0.0f);
}

TEST_CASE("hflip mirrors the Doppler axis and is an involution") {
  const auto t = extract_features(compute_periodogram(random_channel(desk_preset(), 6), 0));
  const auto f = hflip(t);
  CHECK(f.at(3, 0, 0) == t.at(3, 63, 0));
  CHECK(f.at(9, 10, 1) == t.at(9, 53, 1));
  CHECK(hflip(f) == t);
}

TEST_CASE("rendering: 60 dB range under the peak, P5 output") {
  Scene scene;
  scene.scatterers = {{12.0, 0.0, 1.0, 0.0}};
  const auto p = compute_periodogram(synthesize_channel(scene, desk_preset()), 0);
  const auto img = render_image(p);
  CHECK(img.width == 64);
  CHECK(img.height == 64);
  CHECK(*std::max_element(img.pixels.begin(), img.pixels.end()) == 255);

  const auto black = render_image(compute_periodogram(ChannelMatrix{ComplexMatrix::Zero(64, 64), desk_preset(), false}, 0));
  CHECK(std::all_of(black.pixels.begin(), black.pixels.end(), [](auto v) { return v == 0; }));

  const auto path = std::filesystem::temp_directory_path() / "isac_atr_render_test.pgm";
  render(p, path);
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  std::size_t w = 0, h = 0, maxv = 0;
  in >> magic >> w >> h >> maxv;
  CHECK(magic == "P5");
  CHECK(w == 64);
  CHECK(h == 64);
  CHECK(maxv == 255);
  CHECK(std::filesystem::file_size(path) == 13 + 64 * 64);
  std::filesystem::remove(path);
}
