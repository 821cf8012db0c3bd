// SPDX-License-Identifier: Apache-2.0
#include "isac_atr/waveform.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "isac_atr/errors.hpp"

namespace isac_atr {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_budget(std::size_t rows, std::size_t cols, std::size_t budget, const char* what) {
  const std::size_t elements = rows * cols;
  if (rows != 0 && elements / rows != cols) {
    throw SizingError(std::string(what) + ": dimension overflow");
  }
  if (elements > budget / sizeof(std::complex<double>)) {
    throw SizingError(std::string(what) + ": " + std::to_string(rows) + "x" + std::to_string(cols) +
                      " complex matrix exceeds the memory budget of " + std::to_string(budget) +
                      " bytes");
  }
}

}  // namespace

void validate_scene(const Scene& scene, std::size_t num_classes) {
  if (scene.class_id >= num_classes) {
    throw ConfigError("scene class_id " + std::to_string(scene.class_id) + " out of range");
  }
  for (const auto& s : scene.scatterers) {
    if (!(s.range_m >= 0.0) || !(s.amplitude >= 0.0) || !std::isfinite(s.velocity_mps) ||
        !std::isfinite(s.phase_rad)) {
      throw ConfigError("scatterer needs range >= 0, amplitude >= 0 and finite velocity/phase");
    }
  }
}

double round_trip_delay_s(const Scatterer& s) { return 2.0 * s.range_m / kSpeedOfLight; }

double doppler_shift_hz(const Scatterer& s, const RadioConfig& cfg) {
  return 2.0 * s.velocity_mps * cfg.carrier_hz / kSpeedOfLight;
}

ChannelMatrix synthesize_channel(const Scene& scene, const RadioConfig& config,
                                 std::size_t memory_budget_bytes) {
  config.validate();
  check_budget(config.subcarriers, config.symbols, memory_budget_bytes, "synthesize_channel");
  const auto n = static_cast<Eigen::Index>(config.subcarriers);
  const auto m = static_cast<Eigen::Index>(config.symbols);

  ChannelMatrix h{ComplexMatrix::Zero(n, m), config, false};
  Eigen::VectorXcd delay_ramp(n);
  Eigen::RowVectorXcd doppler_ramp(m);
  for (const auto& s : scene.scatterers) {
    const double tau = round_trip_delay_s(s);
    const double fd = doppler_shift_hz(s, config);
    for (Eigen::Index k = 0; k < n; ++k) {
      delay_ramp[k] = std::polar(1.0, -kTwoPi * static_cast<double>(k) * config.subcarrier_spacing_hz * tau);
    }
    const std::complex<double> gain = std::polar(s.amplitude, s.phase_rad);
    for (Eigen::Index l = 0; l < m; ++l) {
      doppler_ramp[l] = gain * std::polar(1.0, kTwoPi * fd * static_cast<double>(l) * config.total_symbol_time_s);
    }
    h.data.noalias() += delay_ramp * doppler_ramp;
  }
  return h;
}

ChannelMatrix apply_tdd_mask(ChannelMatrix h) {
  if (h.mask_applied) {
    throw ConfigError("TDD mask already applied");
  }
  const auto& tdd = h.config.tdd;
  tdd.validate();
  if (static_cast<std::size_t>(h.data.cols()) % tdd.period_symbols != 0) {
    throw ConfigError("symbol count " + std::to_string(h.data.cols()) +
                      " is not a multiple of the TDD period " + std::to_string(tdd.period_symbols));
  }
  for (Eigen::Index l = 0; l < h.data.cols(); ++l) {
    if (!tdd.is_downlink(static_cast<std::size_t>(l))) {
      h.data.col(l).setZero();
    }
  }
  h.mask_applied = true;
  return h;
}

double downlink_power(const ChannelMatrix& h) {
  const auto& tdd = h.config.tdd;
  double power = 0.0;
  std::size_t count = 0;
  for (Eigen::Index l = 0; l < h.data.cols(); ++l) {
    if (tdd.is_downlink(static_cast<std::size_t>(l))) {
      power += h.data.col(l).squaredNorm();
      count += static_cast<std::size_t>(h.data.rows());
    }
  }
  return count > 0 ? power / static_cast<double>(count) : 0.0;
}

ChannelMatrix add_noise(ChannelMatrix h, double snr_db, std::uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0.0) {
    return h;
  }
  const auto& tdd = h.config.tdd;
  double power = downlink_power(h);
  if (power == 0.0) {
    power = 1.0;
  }
  const double variance = power / std::pow(10.0, snr_db / 10.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
  for (Eigen::Index l = 0; l < h.data.cols(); ++l) {
    if (!tdd.is_downlink(static_cast<std::size_t>(l))) {
      continue;
    }
    for (Eigen::Index k = 0; k < h.data.rows(); ++k) {
      const double re = normal(rng);
      const double im = normal(rng);
      h.data(k, l) += std::complex<double>(re, im);
    }
  }
  return h;
}

ChannelMatrix estimate_channel(const ComplexMatrix& received, const ComplexMatrix& transmitted,
                               const RadioConfig& config) {
  if (received.rows() != transmitted.rows() || received.cols() != transmitted.cols()) {
    throw DimensionError("estimate_channel: received and transmitted frames differ in shape");
  }
  if (static_cast<std::size_t>(received.rows()) != config.subcarriers ||
      static_cast<std::size_t>(received.cols()) != config.symbols) {
    throw DimensionError("estimate_channel: frame shape does not match the radio config");
  }
  ChannelMatrix h{ComplexMatrix(received.rows(), received.cols()), config, false};
  for (Eigen::Index l = 0; l < received.cols(); ++l) {
    const bool downlink = config.tdd.is_downlink(static_cast<std::size_t>(l));
    for (Eigen::Index k = 0; k < received.rows(); ++k) {
      const auto x = transmitted(k, l);
      if (x == std::complex<double>(0.0, 0.0)) {
        if (downlink) {
          throw DivisionError(static_cast<std::size_t>(k), static_cast<std::size_t>(l));
        }
        h.data(k, l) = 0.0;
      } else {
        h.data(k, l) = received(k, l) / x;
      }
    }
  }
  return h;
}

ChannelMatrix simulate_frame(const Scene& scene, const RadioConfig& config,
                             std::size_t memory_budget_bytes) {
  return add_noise(apply_tdd_mask(synthesize_channel(scene, config, memory_budget_bytes)),
                   scene.snr_db, scene.seed);
}

Scene scene_from_config(const KeyValueConfig& cfg) {
  cfg.require_known({"class_id", "snr_db", "seed", "scatterer"});
  Scene scene;
  scene.class_id = static_cast<std::size_t>(cfg.get_uint("class_id"));
  scene.snr_db = cfg.get_double("snr_db", 15.0);
  scene.seed = cfg.get_uint("seed", 0);
  for (const auto& line : cfg.get_all("scatterer")) {
    std::istringstream fields(line);
    std::string r, v, a, p;
    if (!(fields >> r >> v >> a >> p)) {
      throw ConfigError("scatterer needs 'range velocity amplitude phase', got '" + line + "'");
    }
    scene.scatterers.push_back({parse_double(r, "scatterer range"), parse_double(v, "scatterer velocity"),
                                parse_double(a, "scatterer amplitude"), parse_double(p, "scatterer phase")});
  }
  return scene;
}

KeyValueConfig scene_to_config(const Scene& scene) {
  KeyValueConfig cfg;
  cfg.add("class_id", std::to_string(scene.class_id));
  std::ostringstream snr;
  snr.precision(17);
  snr << scene.snr_db;
  cfg.add("snr_db", std::isinf(scene.snr_db) ? "inf" : snr.str());
  cfg.add("seed", std::to_string(scene.seed));
  for (const auto& s : scene.scatterers) {
    std::ostringstream line;
    line.precision(17);
    line << s.range_m << ' ' << s.velocity_mps << ' ' << s.amplitude << ' ' << s.phase_rad;
    cfg.add("scatterer", line.str());
  }
  return cfg;
}

Scene load_scene(const std::filesystem::path& path) {
  return scene_from_config(KeyValueConfig::load(path));
}

}  // namespace isac_atr
