// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "isac_atr/dataset.hpp"
#include "isac_atr/model.hpp"

namespace isac_atr {

struct SearchSpace {
  std::vector<unsigned> blocks = {2, 3, 4};
  std::vector<unsigned> kernels = {7, 5, 3};
  std::vector<unsigned> conv_strides = {2, 1};
  std::vector<unsigned> channels = {16, 8, 4};
  std::vector<unsigned> pool_kernels = {2, 1};
  std::vector<unsigned> pool_strides = {2, 1};
  std::vector<unsigned> hidden = {16, 32, 64};
  std::vector<double> dropout = {0.8, 0.5};
  unsigned head_grid = DetectorConfig::kDefaultHeadGrid;

  void validate() const;
};

// One independent uniform draw per field; the first kernel follows the padding factor.
DetectorConfig sample_config(const SearchSpace& space, unsigned padding_factor, std::mt19937_64& rng);

enum class TrialStatus : std::uint8_t { kOk, kInfeasible, kDiverged };
std::string to_string(TrialStatus status);

struct TrialRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool injected = false;
  DetectorConfig config;
  TrialStatus status = TrialStatus::kOk;
  double test_loss = 0.0;
  double test_accuracy = 0.0;
  std::size_t param_count = 0;
  std::uint64_t forward_macs = 0;
  std::string note;           // reason for a non-ok status
  double wall_seconds = 0.0;  // kept out of the ledger so it stays reproducible
};

// Total order on ok trials: lower loss, then fewer parameters, then lower seed, then index.
bool ranks_before(const TrialRecord& a, const TrialRecord& b);
// Indices of ok trials in rank order.
std::vector<std::size_t> rank_trials(const std::vector<TrialRecord>& trials);

// Forward multiply-accumulates per sample above which a desk-scale trial is rejected as
// infeasible (about 8x the reference F = 0 detector on 64 x 64 inputs).
inline constexpr std::uint64_t kDeskMacBudget = 50'000'000;

struct SearchOptions {
  unsigned padding_factor = 0;
  std::size_t trials = 16;
  std::uint64_t seed = 1;
  TrainConfig train = {32, 0.001, 15, 1};  // the seed field is replaced per trial
  std::uint64_t max_forward_macs = kDeskMacBudget;  // 0 = unlimited
  std::size_t workers = 0;                          // 0 = hardware concurrency
  // Recorded in the trial checkpoints; the caller builds the split itself.
  std::uint64_t split_seed = 0;
  double split_fraction = 0.8;
  // Evaluated ahead of the sampled trials, e.g. a reference architecture.
  std::vector<DetectorConfig> injected;
};

struct SearchResult {
  std::vector<TrialRecord> trials;  // in trial-index order
  std::vector<std::size_t> ranking;
  std::size_t winner = 0;
  CheckpointInfo winner_info;
  std::vector<std::uint8_t> winner_checkpoint;  // encoded IATM bytes
};

// Seed of trial `index`; the detector init and training streams are split from it.
std::uint64_t trial_seed(std::uint64_t master, std::size_t index);

// Trains every trial on split.train, scores it by final class-weighted test loss and keeps
// the winner's checkpoint. Throws InfeasibleError if no trial finishes.
SearchResult run_search(const SearchSpace& space, const Dataset& dataset, const Split& split,
                        const SearchOptions& options,
                        const std::function<void(const TrialRecord&)>& on_trial = {});

std::string ledger_csv(const SearchResult& result);
std::string timings_csv(const SearchResult& result);

}  // namespace isac_atr
