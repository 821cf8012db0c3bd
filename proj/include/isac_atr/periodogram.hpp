// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "isac_atr/waveform.hpp"

namespace isac_atr {

struct PaddedDims {
  std::size_t rows = 0;  // N', delay bins
  std::size_t cols = 0;  // M', Doppler bins

  bool operator==(const PaddedDims&) const = default;
};

// N' = 2^(ceil(log2 N) + F), M' = 2^(ceil(log2 M) + F).
PaddedDims padded_dims(std::size_t subcarriers, std::size_t symbols, unsigned padding_factor);

// Delay-Doppler map. Row n is a delay bin, column m a Doppler bin in natural DFT order
// (zero Doppler at column 0).
struct Periodogram {
  ComplexMatrix data;
  unsigned padding_factor = 0;
  RadioConfig config;

  std::size_t rows() const { return static_cast<std::size_t>(data.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(data.cols()); }
  double delay_per_bin_s() const;
  double doppler_per_bin_hz() const;
};

// P[n,m] = 1/(M'N') sum_k (sum_l Hpad[k,l] e^{-j2pi lm/M'}) e^{+j2pi kn/N'}: a forward DFT
// across symbols followed by an inverse DFT across subcarriers, both via FFTW.
Periodogram compute_periodogram(const ChannelMatrix& h, unsigned padding_factor,
                                std::size_t memory_budget_bytes = kDefaultMemoryBudgetBytes);

// Column of the zero-Doppler-centred view holding natural Doppler column `natural`.
inline std::size_t centered_column(std::size_t natural, std::size_t cols) {
  return (natural + cols / 2) % cols;
}
inline std::size_t natural_column(std::size_t centered, std::size_t cols) {
  return (centered + cols - cols / 2) % cols;
}

enum class FeatureMode : std::uint8_t {
  kStandardizedDb = 0,  // 10 log10(|P|^2 + eps) standardized per sample, phase / pi
  kRaw = 1,             // |P| and arg(P) untransformed
};

inline constexpr double kLogFloor = 1e-12;

// Two-channel delay x Doppler image, stored channel-major ([c][n][m]). Doppler columns are in
// the zero-Doppler-centred order used by the figures and the flip transform.
struct FeatureTensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  FeatureMode mode = FeatureMode::kStandardizedDb;
  std::vector<float> data;
  std::optional<std::uint16_t> label;

  static constexpr std::size_t kChannels = 2;

  FeatureTensor() = default;
  FeatureTensor(std::size_t rows, std::size_t cols, FeatureMode mode)
      : rows(rows), cols(cols), mode(mode), data(kChannels * rows * cols, 0.0f) {}

  float& at(std::size_t n, std::size_t m, std::size_t c) { return data[(c * rows + n) * cols + m]; }
  float at(std::size_t n, std::size_t m, std::size_t c) const {
    return data[(c * rows + n) * cols + m];
  }
  std::span<const float> channel(std::size_t c) const {
    return std::span<const float>(data).subspan(c * rows * cols, rows * cols);
  }

  bool operator==(const FeatureTensor&) const = default;
};

FeatureTensor extract_features(const Periodogram& p, FeatureMode mode = FeatureMode::kStandardizedDb);

// Mirrors the Doppler axis: out[n, m, c] = in[n, M'-1-m, c].
FeatureTensor hflip(const FeatureTensor& t);

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  std::uint8_t at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
};

inline constexpr double kRenderDynamicRangeDb = 60.0;

// dB magnitude, delay down the rows, centred Doppler across the columns, 60 dB below peak
// mapped to black.
GrayImage render_image(const Periodogram& p);
// Min-max scaled grayscale of one feature channel.
GrayImage render_feature(const FeatureTensor& t, std::size_t channel);
void write_pgm(const GrayImage& image, const std::filesystem::path& path);
void render(const Periodogram& p, const std::filesystem::path& path);

}  // namespace isac_atr
