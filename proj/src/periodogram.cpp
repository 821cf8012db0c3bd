// SPDX-License-Identifier: Apache-2.0
#include "isac_atr/periodogram.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "isac_atr/errors.hpp"

namespace isac_atr {
namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

class FftwPlan {
 public:
  explicit FftwPlan(fftw_plan plan) : plan_(plan) {
    if (plan_ == nullptr) {
      throw Error(ErrorCode::kInternal, "FFTW failed to create a plan");
    }
  }
  ~FftwPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;

  void execute() const { fftw_execute(plan_); }

 private:
  fftw_plan plan_;
};

}  // namespace

PaddedDims padded_dims(std::size_t subcarriers, std::size_t symbols, unsigned padding_factor) {
  if (subcarriers == 0 || symbols == 0) {
    throw ConfigError("padded_dims needs N, M >= 1");
  }
  const auto pad = [&](std::size_t n) {
    const std::size_t base = std::bit_ceil(n);
    if (padding_factor >= 63 || base > (std::size_t{1} << (63 - padding_factor))) {
      throw SizingError("padded dimension overflows for padding factor " +
                        std::to_string(padding_factor));
    }
    return base << padding_factor;
  };
  return {pad(subcarriers), pad(symbols)};
}

double Periodogram::delay_per_bin_s() const {
  return 1.0 / (static_cast<double>(rows()) * config.subcarrier_spacing_hz);
}

double Periodogram::doppler_per_bin_hz() const {
  return 1.0 / (static_cast<double>(cols()) * config.total_symbol_time_s);
}

Periodogram compute_periodogram(const ChannelMatrix& h, unsigned padding_factor,
                                std::size_t memory_budget_bytes) {
  const auto n = static_cast<std::size_t>(h.data.rows());
  const auto m = static_cast<std::size_t>(h.data.cols());
  const PaddedDims dims = padded_dims(n, m, padding_factor);
  const std::size_t elements = dims.rows * dims.cols;
  if (elements / dims.rows != dims.cols ||
      elements > memory_budget_bytes / sizeof(std::complex<double>)) {
    throw SizingError("periodogram " + std::to_string(dims.rows) + "x" + std::to_string(dims.cols) +
                      " for F=" + std::to_string(padding_factor) + " exceeds the memory budget of " +
                      std::to_string(memory_budget_bytes) + " bytes");
  }
  if (!h.data.allFinite()) {
    throw ConfigError("compute_periodogram: channel contains non-finite values");
  }

  // Column-major N' x M' buffer: element (k, l) at k + l * N'.
  FftwBuffer buffer(fftw_alloc_complex(elements));
  if (!buffer) {
    throw SizingError("cannot allocate periodogram buffer");
  }
  auto* cplx = reinterpret_cast<std::complex<double>*>(buffer.get());
  std::fill(cplx, cplx + elements, std::complex<double>(0.0, 0.0));
  for (std::size_t l = 0; l < m; ++l) {
    std::memcpy(cplx + l * dims.rows, h.data.col(static_cast<Eigen::Index>(l)).data(),
                n * sizeof(std::complex<double>));
  }

  std::unique_ptr<FftwPlan> doppler;
  std::unique_ptr<FftwPlan> delay;
  {
    std::lock_guard lock(planner_mutex());
    const int doppler_len = static_cast<int>(dims.cols);
    const int delay_len = static_cast<int>(dims.rows);
    // Forward DFT along each of the N occupied subcarrier rows (rows >= N are zero).
    doppler = std::make_unique<FftwPlan>(fftw_plan_many_dft(
        1, &doppler_len, static_cast<int>(n), buffer.get(), nullptr, static_cast<int>(dims.rows), 1,
        buffer.get(), nullptr, static_cast<int>(dims.rows), 1, FFTW_FORWARD, FFTW_ESTIMATE));
    // Inverse DFT down each Doppler column.
    delay = std::make_unique<FftwPlan>(fftw_plan_many_dft(
        1, &delay_len, static_cast<int>(dims.cols), buffer.get(), nullptr, 1, delay_len,
        buffer.get(), nullptr, 1, delay_len, FFTW_BACKWARD, FFTW_ESTIMATE));
  }
  doppler->execute();
  delay->execute();

  Periodogram p;
  p.padding_factor = padding_factor;
  p.config = h.config;
  p.data = Eigen::Map<const ComplexMatrix>(cplx, static_cast<Eigen::Index>(dims.rows),
                                           static_cast<Eigen::Index>(dims.cols));
  p.data *= 1.0 / static_cast<double>(elements);
  return p;
}

FeatureTensor extract_features(const Periodogram& p, FeatureMode mode) {
  const std::size_t rows = p.rows();
  const std::size_t cols = p.cols();
  FeatureTensor t(rows, cols, mode);
  std::vector<double> magnitude(rows * cols);
  for (std::size_t m = 0; m < cols; ++m) {
    const std::size_t c = centered_column(m, cols);
    for (std::size_t n = 0; n < rows; ++n) {
      const auto v = p.data(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
      const double phase = std::arg(v);
      if (mode == FeatureMode::kRaw) {
        magnitude[n * cols + c] = std::abs(v);
        t.at(n, c, 1) = static_cast<float>(phase);
      } else {
        magnitude[n * cols + c] = 10.0 * std::log10(std::norm(v) + kLogFloor);
        t.at(n, c, 1) = static_cast<float>(phase / std::numbers::pi);
      }
    }
  }
  if (mode == FeatureMode::kStandardizedDb) {
    double mean = 0.0;
    for (double v : magnitude) {
      mean += v;
    }
    mean /= static_cast<double>(magnitude.size());
    double var = 0.0;
    for (double v : magnitude) {
      var += (v - mean) * (v - mean);
    }
    var /= static_cast<double>(magnitude.size());
    const double scale = var > 1e-20 ? 1.0 / std::sqrt(var) : 0.0;
    for (double& v : magnitude) {
      v = (v - mean) * scale;
    }
  }
  for (std::size_t i = 0; i < magnitude.size(); ++i) {
    t.data[i] = static_cast<float>(magnitude[i]);
  }
  return t;
}

FeatureTensor hflip(const FeatureTensor& t) {
  FeatureTensor out = t;
  for (std::size_t c = 0; c < FeatureTensor::kChannels; ++c) {
    for (std::size_t n = 0; n < t.rows; ++n) {
      for (std::size_t m = 0; m < t.cols; ++m) {
        out.at(n, m, c) = t.at(n, t.cols - 1 - m, c);
      }
    }
  }
  return out;
}

GrayImage render_image(const Periodogram& p) {
  GrayImage img;
  img.height = p.rows();
  img.width = p.cols();
  img.pixels.assign(img.width * img.height, 0);
  double peak = 0.0;
  for (Eigen::Index i = 0; i < p.data.size(); ++i) {
    peak = std::max(peak, std::norm(p.data.data()[i]));
  }
  if (peak == 0.0) {
    return img;
  }
  const double peak_db = 10.0 * std::log10(peak);
  for (std::size_t n = 0; n < img.height; ++n) {
    for (std::size_t c = 0; c < img.width; ++c) {
      const double power = std::norm(p.data(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(natural_column(c, img.width))));
      if (power <= 0.0) {
        continue;
      }
      const double rel = (10.0 * std::log10(power) - peak_db + kRenderDynamicRangeDb) / kRenderDynamicRangeDb;
      img.pixels[n * img.width + c] =
          static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(rel, 0.0, 1.0)));
    }
  }
  return img;
}

GrayImage render_feature(const FeatureTensor& t, std::size_t channel) {
  GrayImage img;
  img.height = t.rows;
  img.width = t.cols;
  img.pixels.assign(img.width * img.height, 0);
  const auto values = t.channel(channel);
  if (values.empty()) {
    return img;
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double span = static_cast<double>(*hi) - static_cast<double>(*lo);
  if (span <= 0.0) {
    return img;
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double rel = (static_cast<double>(values[i]) - *lo) / span;
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * rel));
  }
  return img;
}

void write_pgm(const GrayImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
  if (!out) {
    throw IoError("write failed for " + path.string());
  }
}

void render(const Periodogram& p, const std::filesystem::path& path) {
  write_pgm(render_image(p), path);
}

}  // namespace isac_atr
