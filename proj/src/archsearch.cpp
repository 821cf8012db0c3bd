// SPDX-License-Identifier: Apache-2.0
#include "isac_atr/archsearch.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <sstream>

#include "isac_atr/errors.hpp"
#include "isac_atr/parallel.hpp"
#include "isac_atr/seeding.hpp"

namespace isac_atr {
namespace {

template <typename V>
const V& pick(const std::vector<V>& options, std::mt19937_64& rng) {
  return options[rng() % options.size()];
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void SearchSpace::validate() const {
  if (blocks.empty() || kernels.empty() || conv_strides.empty() || channels.empty() || pool_kernels.empty() ||
      pool_strides.empty() || hidden.empty() || dropout.empty()) {
    throw ConfigError("every search-space field needs at least one option");
  }
}

DetectorConfig sample_config(const SearchSpace& space, unsigned padding_factor, std::mt19937_64& rng) {
  space.validate();
  DetectorConfig cfg;
  cfg.blocks = pick(space.blocks, rng);
  cfg.kernel = pick(space.kernels, rng);
  cfg.conv_stride = pick(space.conv_strides, rng);
  cfg.channels = pick(space.channels, rng);
  cfg.pool_kernel = pick(space.pool_kernels, rng);
  cfg.pool_stride = pick(space.pool_strides, rng);
  cfg.hidden = pick(space.hidden, rng);
  cfg.dropout = pick(space.dropout, rng);
  cfg.padding_factor = padding_factor;
  cfg.first_kernel = first_kernel_for(padding_factor);
  cfg.head_grid = space.head_grid;
  return cfg;
}

std::string to_string(TrialStatus status) {
  switch (status) {
    case TrialStatus::kOk:
      return "ok";
    case TrialStatus::kInfeasible:
      return "infeasible";
    case TrialStatus::kDiverged:
      return "diverged";
  }
  return "unknown";
}

bool ranks_before(const TrialRecord& a, const TrialRecord& b) {
  if (a.test_loss != b.test_loss) {
    return a.test_loss < b.test_loss;
  }
  if (a.param_count != b.param_count) {
    return a.param_count < b.param_count;
  }
  if (a.seed != b.seed) {
    return a.seed < b.seed;
  }
  return a.index < b.index;
}

std::vector<std::size_t> rank_trials(const std::vector<TrialRecord>& trials) {
  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (trials[i].status == TrialStatus::kOk) {
      ok.push_back(i);
    }
  }
  std::sort(ok.begin(), ok.end(), [&](std::size_t a, std::size_t b) { return ranks_before(trials[a], trials[b]); });
  return ok;
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t index) { return derive_seed(master, index); }

SearchResult run_search(const SearchSpace& space, const Dataset& dataset, const Split& split,
                        const SearchOptions& options, const std::function<void(const TrialRecord&)>& on_trial) {
  space.validate();
  options.train.validate();
  if (dataset.padding_factor != options.padding_factor) {
    throw ConfigError("dataset was generated at F=" + std::to_string(dataset.padding_factor) +
                      " but the search targets F=" + std::to_string(options.padding_factor));
  }
  if (split.train.empty() || split.test.empty()) {
    throw SplitError("search needs non-empty train and test sets");
  }
  const auto weights = class_weights(split.train, kNumClasses);

  const std::size_t total = options.injected.size() + options.trials;
  SearchResult result;
  result.trials.resize(total);
  std::vector<std::vector<std::uint8_t>> checkpoints(total);
  std::vector<CheckpointInfo> infos(total);
  std::mutex report_mutex;

  parallel_for(
      total,
      [&](std::size_t i) {
        const auto t0 = std::chrono::steady_clock::now();
        TrialRecord& rec = result.trials[i];
        rec.index = i;
        rec.seed = trial_seed(options.seed, i);
        rec.injected = i < options.injected.size();
        if (rec.injected) {
          rec.config = options.injected[i];
        } else {
          std::mt19937_64 rng(derive_seed(rec.seed, 0));
          rec.config = sample_config(space, options.padding_factor, rng);
        }
        rec.forward_macs = forward_macs(rec.config, dataset.rows, dataset.cols);
        CheckpointInfo info;
        info.config = rec.config;
        info.rows = dataset.rows;
        info.cols = dataset.cols;
        info.feature_mode = dataset.feature_mode;
        info.train = options.train;
        info.train.seed = derive_seed(rec.seed, 2);
        info.init_seed = derive_seed(rec.seed, 1);
        info.class_weights = weights;
        info.split_seed = options.split_seed;
        info.split_fraction = options.split_fraction;
        try {
          Detector<float> model(rec.config, dataset.rows, dataset.cols, info.init_seed);
          rec.param_count = model.param_count();
          if (options.max_forward_macs != 0 && rec.forward_macs > options.max_forward_macs) {
            throw InfeasibleError("forward cost " + std::to_string(rec.forward_macs) + " MAC exceeds the budget of " +
                                  std::to_string(options.max_forward_macs));
          }
          const auto history = train(model, split.train, split.test, weights, info.train);
          rec.test_loss = history.back().test_loss;
          rec.test_accuracy = history.back().test_accuracy;
          rec.status = TrialStatus::kOk;
          checkpoints[i] = encode_checkpoint(info, model);
          infos[i] = std::move(info);
        } catch (const InfeasibleError& e) {
          rec.status = TrialStatus::kInfeasible;
          rec.note = e.what();
        } catch (const DivergenceError& e) {
          rec.status = TrialStatus::kDiverged;
          rec.note = e.what();
        }
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (on_trial) {
          std::lock_guard lock(report_mutex);
          on_trial(rec);
        }
      },
      options.workers == 0 ? default_workers() : options.workers);

  result.ranking = rank_trials(result.trials);
  if (result.ranking.empty()) {
    throw InfeasibleError("search failed: none of the " + std::to_string(total) + " trials finished");
  }
  result.winner = result.ranking.front();
  result.winner_info = infos[result.winner];
  result.winner_checkpoint = std::move(checkpoints[result.winner]);
  return result;
}

std::string ledger_csv(const SearchResult& result) {
  std::vector<std::size_t> rank_of(result.trials.size(), 0);
  for (std::size_t r = 0; r < result.ranking.size(); ++r) {
    rank_of[result.ranking[r]] = r + 1;
  }
  std::ostringstream os;
  os << "index,seed,injected,blocks,kernel,first_kernel,conv_stride,channels,pool_kernel,pool_stride,hidden,"
        "dropout,f,head_grid,status,test_loss,test_accuracy,params,forward_macs,rank\n";
  for (const auto& t : result.trials) {
    const auto& c = t.config;
    const bool ok = t.status == TrialStatus::kOk;
    os << t.index << ',' << t.seed << ',' << (t.injected ? 1 : 0) << ',' << c.blocks << ',' << c.kernel << ','
       << c.first_kernel << ',' << c.conv_stride << ',' << c.channels << ',' << c.pool_kernel << ',' << c.pool_stride
       << ',' << c.hidden << ',' << g17(c.dropout) << ',' << c.padding_factor << ',' << c.head_grid << ','
       << to_string(t.status) << ',' << (ok ? g17(t.test_loss) : "") << ',' << (ok ? g17(t.test_accuracy) : "")
       << ',' << t.param_count << ',' << t.forward_macs << ',' << (ok ? std::to_string(rank_of[t.index]) : "")
       << '\n';
  }
  return os.str();
}

std::string timings_csv(const SearchResult& result) {
  std::ostringstream os;
  os << "index,wall_seconds,note\n";
  for (const auto& t : result.trials) {
    std::string note = t.note;
    std::replace(note.begin(), note.end(), ',', ';');
    std::replace(note.begin(), note.end(), '\n', ' ');
    os << t.index << ',' << g17(t.wall_seconds) << ',' << note << '\n';
  }
  return os.str();
}

}  // namespace isac_atr
