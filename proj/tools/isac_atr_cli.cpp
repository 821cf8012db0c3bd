// SPDX-License-Identifier: Apache-2.0
// isac-atr: dataset generation, training, evaluation, search, rendering and inspection.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "isac_atr/archsearch.hpp"
#include "isac_atr/binary_io.hpp"
#include "isac_atr/dataset.hpp"
#include "isac_atr/errors.hpp"
#include "isac_atr/kv_config.hpp"
#include "isac_atr/model.hpp"
#include "isac_atr/periodogram.hpp"
#include "isac_atr/seeding.hpp"
#include "isac_atr/waveform.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace isac_atr;

namespace {

constexpr const char* kVersion = "1.0.0";

struct Common {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> f;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> trials;
  bool full_scale = false;
  bool raw_features = false;
  bool quiet = false;
};

const char* code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kInfeasible: return "infeasible";
    case ErrorCode::kDiverged: return "diverged";
    case ErrorCode::kSizing: return "sizing";
    case ErrorCode::kInternal: return "internal";
  }
  return "internal";
}

std::string one_line(std::string text) {
  std::replace(text.begin(), text.end(), '\n', ' ');
  std::replace(text.begin(), text.end(), '\r', ' ');
  return text;
}

int fail(ErrorCode code, const std::string& what) {
  std::fprintf(stderr, "error: %s: %s\n", code_name(code), one_line(what).c_str());
  return static_cast<int>(code);
}

void log(const Common& c, const std::string& line) {
  if (!c.quiet) {
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
  }
}

fs::path prepare_out(const Common& c) {
  const fs::path out(c.out);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) {
    throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  f << text;
  if (!f) {
    throw IoError("write failed for " + path.string());
  }
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json kv_json(const KeyValueConfig& cfg) {
  json j = json::object();
  for (const auto& [k, v] : cfg.entries()) {
    if (j.contains(k)) {
      if (!j[k].is_array()) {
        j[k] = json::array({j[k]});
      }
      j[k].push_back(v);
    } else {
      j[k] = v;
    }
  }
  return j;
}

json train_json(const TrainConfig& tc) {
  return {{"batch_size", tc.batch_size}, {"learning_rate", tc.learning_rate}, {"epochs", tc.epochs},
          {"seed", tc.seed}};
}

// Resolved parameters of a run; the timestamp lives only here.
void write_run_manifest(const fs::path& out, const std::string& command, json params, json outputs) {
  json j;
  j["tool"] = "isac-atr";
  j["version"] = kVersion;
  j["command"] = command;
  j["created_utc"] = utc_now();
  j["parameters"] = std::move(params);
  j["outputs"] = std::move(outputs);
  write_text(out / "run_manifest.json", j.dump(2) + "\n");
}

KeyValueConfig load_optional_config(const std::string& path) {
  return path.empty() ? KeyValueConfig{} : KeyValueConfig::load(path);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string epochs_csv(const std::vector<EpochRecord>& records) {
  std::ostringstream os;
  os << "epoch,train_loss,test_loss,test_accuracy\n";
  for (const auto& r : records) {
    os << r.epoch << ',' << fmt(r.train_loss) << ',' << fmt(r.test_loss) << ',' << fmt(r.test_accuracy) << '\n';
  }
  return os.str();
}

// ---- gen ----

int cmd_gen(const Common& c, std::size_t total) {
  KeyValueConfig cfg = load_optional_config(c.config);
  if (total > 0) {
    cfg.set("total", std::to_string(total));
  }
  if (c.seed) {
    cfg.set("seed", std::to_string(*c.seed));
  }
  if (c.f) {
    cfg.set("f", std::to_string(*c.f));
  }
  if (c.full_scale) {
    cfg.set("preset", "full");
  }
  if (c.raw_features) {
    cfg.set("features", "raw");
  }
  const DatasetManifest manifest = manifest_from_config(cfg);
  const fs::path out = prepare_out(c);
  log(c, "generating " + std::to_string(std::accumulate(manifest.counts.begin(), manifest.counts.end(),
                                                        std::size_t{0})) +
             " frames");
  const Dataset ds = generate_dataset(manifest);
  save_dataset(ds, out / "dataset.iatr");
  const KeyValueConfig resolved = manifest_to_config(manifest);
  resolved.save(out / "dataset.cfg");
  write_run_manifest(out, "gen", kv_json(resolved), {"dataset.iatr", "dataset.cfg"});
  log(c, "wrote " + (out / "dataset.iatr").string() + " (" + std::to_string(ds.rows) + " x " +
             std::to_string(ds.cols) + ", " + std::to_string(ds.samples.size()) + " samples)");
  return 0;
}

// ---- train ----

DetectorConfig resolve_detector(const Common& c, const Dataset& ds) {
  KeyValueConfig cfg = load_optional_config(c.config);
  cfg.set("f", std::to_string(ds.padding_factor));
  if (c.f && *c.f != ds.padding_factor) {
    throw ConfigError("--f " + std::to_string(*c.f) + " does not match the dataset's F = " +
                      std::to_string(ds.padding_factor));
  }
  return detector_from_config(cfg);
}

int cmd_train(const Common& c, const std::string& dataset_path, double fraction) {
  const Dataset ds = load_dataset(dataset_path);
  const DetectorConfig dc = resolve_detector(c, ds);
  TrainConfig tc;
  if (c.epochs) {
    tc.epochs = *c.epochs;
  }
  if (c.seed) {
    tc.seed = *c.seed;
  }
  tc.validate();
  const std::uint64_t split_seed = split_seed_for(tc.seed);
  const Split split = stratified_split(ds.samples, fraction, split_seed);
  const std::vector<double> weights = class_weights(split.train, dc.classes);
  const std::uint64_t init_seed = init_seed_for(tc.seed);
  Detector<float> model(dc, ds.rows, ds.cols, init_seed);
  const fs::path out = prepare_out(c);
  log(c, "training " + std::to_string(model.param_count()) + " parameters on " +
             std::to_string(split.train.size()) + " frames, testing on " + std::to_string(split.test.size()));
  const auto records = train(model, split.train, split.test, weights, tc, [&](const EpochRecord& r) {
    char line[128];
    std::snprintf(line, sizeof line, "epoch %zu train_loss %.6f test_loss %.6f test_accuracy %.4f", r.epoch,
                  r.train_loss, r.test_loss, r.test_accuracy);
    log(c, line);
  });
  CheckpointInfo info{dc, ds.rows, ds.cols, ds.feature_mode, tc, init_seed, weights, split_seed, fraction};
  save_checkpoint(info, model, out / "model.iatm");
  write_text(out / "epochs.csv", epochs_csv(records));
  detector_to_config(dc).save(out / "detector.cfg");
  json params = {{"dataset", dataset_path},
                 {"split_fraction", fraction},
                 {"split_seed", split_seed},
                 {"detector", kv_json(detector_to_config(dc))},
                 {"train", train_json(tc)},
                 {"init_seed", init_seed}};
  write_run_manifest(out, "train", std::move(params), {"model.iatm", "epochs.csv", "detector.cfg"});
  if (!records.empty()) {
    log(c, "final test_loss " + fmt(records.back().test_loss));
  }
  return 0;
}

// ---- eval / flip-eval ----

struct Loaded {
  Checkpoint checkpoint;
  Dataset dataset;
  Split split;
};

Loaded load_for_eval(const std::string& checkpoint_path, const std::string& dataset_path) {
  Checkpoint ck = load_checkpoint(checkpoint_path);
  Dataset ds = load_dataset(dataset_path);
  if (ds.rows != ck.info.rows || ds.cols != ck.info.cols) {
    throw ConfigError("dataset is " + std::to_string(ds.rows) + " x " + std::to_string(ds.cols) +
                      " but the checkpoint expects " + std::to_string(ck.info.rows) + " x " +
                      std::to_string(ck.info.cols));
  }
  Split split = stratified_split(ds.samples, ck.info.split_fraction, ck.info.split_seed);
  return {std::move(ck), std::move(ds), std::move(split)};
}

std::span<const LabeledSample> eval_set(const Loaded& l, bool all) {
  return all ? std::span<const LabeledSample>(l.dataset.samples) : std::span<const LabeledSample>(l.split.test);
}

int cmd_eval(const Common& c, const std::string& checkpoint_path, const std::string& dataset_path,
             bool all) {
  Loaded l = load_for_eval(checkpoint_path, dataset_path);
  const auto set = eval_set(l, all);
  const EvalReport report = evaluate(l.checkpoint.model, set, l.checkpoint.info.class_weights);
  const fs::path out = prepare_out(c);
  const auto names = default_class_names();
  write_text(out / "report.csv", report_csv(report, names));
  write_pgm(render_confusion(report), out / "confusion.pgm");
  json params = {{"checkpoint", checkpoint_path}, {"dataset", dataset_path},
                 {"split_seed", l.checkpoint.info.split_seed}, {"split_fraction", l.checkpoint.info.split_fraction},
                 {"subset", all ? "all" : "test"}};
  write_run_manifest(out, "eval", std::move(params), {"report.csv", "confusion.pgm"});
  std::printf("samples %zu\naccuracy %s\ntest_loss %s\n", report.total(), fmt(report.accuracy).c_str(),
              fmt(report.mean_loss).c_str());
  return 0;
}

int cmd_flip_eval(const Common& c, const std::string& checkpoint_path, const std::string& dataset_path,
                  bool all) {
  Loaded l = load_for_eval(checkpoint_path, dataset_path);
  const auto set = eval_set(l, all);
  const auto& w = l.checkpoint.info.class_weights;
  const EvalReport plain = evaluate(l.checkpoint.model, set, w);
  const EvalReport flipped = evaluate_flipped(l.checkpoint.model, set, w);
  const auto deltas = flip_deltas(plain, flipped);
  const auto names = default_class_names();
  const fs::path out = prepare_out(c);
  write_text(out / "report.csv", report_csv(plain, names));
  write_text(out / "report_flipped.csv", report_csv(flipped, names));
  write_pgm(render_confusion(plain), out / "confusion.pgm");
  write_pgm(render_confusion(flipped), out / "confusion_flipped.pgm");
  std::ostringstream os;
  os << "class,name,unflipped,flipped,delta\n";
  for (const auto& d : deltas) {
    const std::string name = d.class_id < names.size() ? names[d.class_id] : std::to_string(d.class_id);
    os << d.class_id << ',' << name << ',' << fmt(d.unflipped) << ',' << fmt(d.flipped) << ',' << fmt(d.delta)
       << '\n';
  }
  write_text(out / "flip_deltas.csv", os.str());
  json params = {{"checkpoint", checkpoint_path}, {"dataset", dataset_path},
                 {"split_seed", l.checkpoint.info.split_seed}, {"split_fraction", l.checkpoint.info.split_fraction},
                 {"subset", all ? "all" : "test"}};
  write_run_manifest(out, "flip-eval", std::move(params),
                     {"report.csv", "report_flipped.csv", "confusion.pgm", "confusion_flipped.pgm",
                      "flip_deltas.csv"});
  std::printf("accuracy %s flipped %s\n", fmt(plain.accuracy).c_str(), fmt(flipped.accuracy).c_str());
  for (const auto& d : deltas) {
    const std::string name = d.class_id < names.size() ? names[d.class_id] : std::to_string(d.class_id);
    std::printf("%-12s %7.4f -> %7.4f  delta %+8.4f\n", name.c_str(), d.unflipped, d.flipped, d.delta);
  }
  return 0;
}

// ---- search ----

int cmd_search(const Common& c, const std::string& dataset_path, double fraction, bool full_budget,
               bool inject_reference, std::size_t workers) {
  const Dataset ds = load_dataset(dataset_path);
  if (c.f && *c.f != ds.padding_factor) {
    throw ConfigError("--f " + std::to_string(*c.f) + " does not match the dataset's F = " +
                      std::to_string(ds.padding_factor));
  }
  SearchOptions opt;
  opt.padding_factor = ds.padding_factor;
  if (full_budget) {
    opt.trials = 80;
    opt.train.epochs = 50;
    opt.max_forward_macs = 0;
  }
  if (c.trials) {
    opt.trials = *c.trials;
  }
  if (c.epochs) {
    opt.train.epochs = *c.epochs;
  }
  if (c.seed) {
    opt.seed = *c.seed;
  }
  opt.workers = workers;
  if (inject_reference) {
    opt.injected.push_back(reference_config(ds.padding_factor));
  }
  SearchSpace space;
  if (!c.config.empty()) {
    const KeyValueConfig cfg = KeyValueConfig::load(c.config);
    cfg.require_known({"head_grid", "max_forward_macs"});
    space.head_grid = static_cast<unsigned>(cfg.get_uint("head_grid", space.head_grid));
    opt.max_forward_macs = cfg.get_uint("max_forward_macs", opt.max_forward_macs);
  }
  space.validate();
  opt.split_seed = split_seed_for(opt.seed);
  opt.split_fraction = fraction;
  const Split split = stratified_split(ds.samples, fraction, opt.split_seed);
  const fs::path out = prepare_out(c);
  log(c, "searching " + std::to_string(opt.trials + opt.injected.size()) + " trials of " +
             std::to_string(opt.train.epochs) + " epochs");
  const SearchResult result = run_search(space, ds, split, opt, [&](const TrialRecord& t) {
    char line[160];
    std::snprintf(line, sizeof line, "trial %zu %s loss %.6f accuracy %.4f params %zu", t.index,
                  to_string(t.status).c_str(), t.test_loss, t.test_accuracy, t.param_count);
    log(c, line);
  });
  write_text(out / "ledger.csv", ledger_csv(result));
  write_text(out / "timings.csv", timings_csv(result));
  write_file_bytes(out / "best.iatm", result.winner_checkpoint);
  detector_to_config(result.winner_info.config).save(out / "best.cfg");
  json params = {{"dataset", dataset_path},
                 {"split_fraction", fraction},
                 {"trials", opt.trials},
                 {"injected", opt.injected.size()},
                 {"seed", opt.seed},
                 {"train", train_json(opt.train)},
                 {"max_forward_macs", opt.max_forward_macs},
                 {"head_grid", space.head_grid}};
  write_run_manifest(out, "search", std::move(params), {"ledger.csv", "timings.csv", "best.iatm", "best.cfg"});
  const TrialRecord& w = result.trials[result.winner];
  std::printf("winner trial %zu test_loss %s accuracy %s params %zu\n", w.index, fmt(w.test_loss).c_str(),
              fmt(w.test_accuracy).c_str(), w.param_count);
  return 0;
}

// ---- render ----

int cmd_render(const Common& c, const std::string& dataset_path, const std::string& scene_path,
               std::size_t index, std::size_t count) {
  const fs::path out = prepare_out(c);
  json outputs = json::array();
  json params;
  if (!scene_path.empty()) {
    Scene scene = load_scene(scene_path);
    if (c.seed) {
      scene.seed = *c.seed;
    }
    const RadioConfig radio = c.full_scale ? full_scale_preset() : desk_preset();
    const unsigned f = c.f.value_or(0);
    const ChannelMatrix h = simulate_frame(scene, radio);
    const Periodogram p = compute_periodogram(h, f);
    render(p, out / "periodogram.pgm");
    outputs.push_back("periodogram.pgm");
    const FeatureTensor t = extract_features(p, c.raw_features ? FeatureMode::kRaw : FeatureMode::kStandardizedDb);
    write_pgm(render_feature(t, 0), out / "magnitude.pgm");
    write_pgm(render_feature(t, 1), out / "phase.pgm");
    outputs.push_back("magnitude.pgm");
    outputs.push_back("phase.pgm");
    params = {{"scene", kv_json(scene_to_config(scene))}, {"f", f}, {"preset", c.full_scale ? "full" : "desk"}};
  } else if (!dataset_path.empty()) {
    const Dataset ds = load_dataset(dataset_path);
    if (index >= ds.samples.size()) {
      throw ConfigError("index " + std::to_string(index) + " out of range (" + std::to_string(ds.samples.size()) +
                        " samples)");
    }
    const std::size_t end = std::min(ds.samples.size(), index + std::max<std::size_t>(count, 1));
    for (std::size_t i = index; i < end; ++i) {
      const auto& s = ds.samples[i];
      const std::string stem = "sample_" + std::to_string(i) + "_class_" + std::to_string(s.label);
      write_pgm(render_feature(s.features, 0), out / (stem + "_magnitude.pgm"));
      write_pgm(render_feature(s.features, 1), out / (stem + "_phase.pgm"));
      outputs.push_back(stem + "_magnitude.pgm");
      outputs.push_back(stem + "_phase.pgm");
    }
    params = {{"dataset", dataset_path}, {"index", index}, {"count", end - index}};
  } else {
    throw ConfigError("render needs --dataset or --scene");
  }
  write_run_manifest(out, "render", std::move(params), outputs);
  log(c, "wrote " + std::to_string(outputs.size()) + " images to " + out.string());
  return 0;
}

// ---- inspect ----

std::string feature_mode_name(FeatureMode m) { return m == FeatureMode::kRaw ? "raw" : "standardized"; }

int cmd_inspect(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  if (bytes.size() < 4) {
    throw FormatError(path + ": too short to identify");
  }
  const std::string magic(bytes.begin(), bytes.begin() + 4);
  if (magic == "IATR") {
    const Dataset ds = decode_dataset(bytes, path);
    const auto counts = class_counts(ds.samples);
    std::printf("format IATR\nversion %u\nrows %zu\ncols %zu\nf %u\nfeatures %s\nsubcarriers %zu\nsymbols %zu\n"
                "samples %zu\n",
                kDatasetVersion, ds.rows, ds.cols, ds.padding_factor, feature_mode_name(ds.feature_mode).c_str(),
                ds.radio.subcarriers, ds.radio.symbols, ds.samples.size());
    const auto names = default_class_names();
    for (std::size_t k = 0; k < counts.size(); ++k) {
      std::printf("class %zu %s %zu\n", k, k < names.size() ? names[k].c_str() : "?", counts[k]);
    }
    return 0;
  }
  if (magic == "IATM") {
    Checkpoint ck = decode_checkpoint(bytes, path);
    std::printf("format IATM\nversion %u\nrows %zu\ncols %zu\nfeatures %s\nparams %zu\ninit_seed %llu\n",
                kCheckpointVersion, ck.info.rows, ck.info.cols, feature_mode_name(ck.info.feature_mode).c_str(),
                ck.model.param_count(), static_cast<unsigned long long>(ck.info.init_seed));
    std::printf("%s", detector_to_config(ck.info.config).to_string().c_str());
    std::printf("batch_size %zu\nlearning_rate %s\nepochs %zu\ntrain_seed %llu\n", ck.info.train.batch_size,
                fmt(ck.info.train.learning_rate).c_str(), ck.info.train.epochs,
                static_cast<unsigned long long>(ck.info.train.seed));
    return 0;
  }
  if (magic.substr(0, 2) == "P5") {
    std::istringstream is(std::string(bytes.begin(), bytes.begin() + std::min<std::size_t>(bytes.size(), 64)));
    std::string tag;
    std::size_t w = 0;
    std::size_t h = 0;
    int maxval = 0;
    is >> tag >> w >> h >> maxval;
    if (!is) {
      throw FormatError(path + ": malformed P5 header");
    }
    std::printf("format P5\nwidth %zu\nheight %zu\nmaxval %d\n", w, h, maxval);
    return 0;
  }
  throw FormatError(path + ": unknown file type");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"isac-atr: synthetic ISAC radar frames, delay-Doppler features and CNN target recognition"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.footer(
      "Exit codes: 0 ok, 1 usage, 2 config, 3 io, 4 format/checksum, 5 infeasible, 6 diverged, 7 sizing, "
      "8 internal.\nErrors are printed as a single line: error: <kind>: <message>");

  Common c;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", c.config, "key = value configuration file");
    sub->add_option("--out", c.out, "output directory")->capture_default_str();
    sub->add_option("--seed", c.seed, "master seed");
    sub->add_option("--f", c.f, "padding factor")->check(CLI::IsMember({0u, 1u, 2u}));
    sub->add_flag("-q,--quiet", c.quiet, "suppress progress output");
  };

  std::size_t total = 0;
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset (dataset.iatr)");
  add_common(gen);
  gen->add_option("--total", total, "total frames (default 1600, campaign proportions)");
  gen->add_flag("--full-scale", c.full_scale, "full-scale radio dimensions");
  gen->add_flag("--raw-features", c.raw_features, "store untransformed magnitude/phase features");

  std::string dataset;
  std::string checkpoint;
  double fraction = 0.8;
  bool all = false;

  auto* tr = app.add_subcommand("train", "train a detector (model.iatm, epochs.csv)");
  add_common(tr);
  tr->add_option("--dataset", dataset, "dataset file")->required();
  tr->add_option("--epochs", c.epochs, "training epochs (default 50)");
  tr->add_option("--split", fraction, "training fraction per class")->capture_default_str();

  const auto add_eval = [&](CLI::App* sub) {
    add_common(sub);
    sub->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    sub->add_option("--dataset", dataset, "dataset file")->required();
    sub->add_flag("--all", all, "evaluate every sample instead of the held-out split");
  };
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint (report.csv, confusion.pgm)");
  add_eval(ev);
  auto* fe = app.add_subcommand("flip-eval", "evaluate on original and Doppler-mirrored test frames");
  add_eval(fe);

  bool full_budget = false;
  bool inject_reference = false;
  std::size_t workers = 0;
  auto* se = app.add_subcommand("search", "random architecture search (ledger.csv, best.iatm, best.cfg)");
  add_common(se);
  se->add_option("--dataset", dataset, "dataset file")->required();
  se->add_option("--trials", c.trials, "sampled trials (default 16)");
  se->add_option("--epochs", c.epochs, "epochs per trial (default 15)");
  se->add_option("--split", fraction, "training fraction per class")->capture_default_str();
  se->add_option("--workers", workers, "concurrent trials (0 = hardware threads)");
  se->add_flag("--full-budget", full_budget, "80 trials of 50 epochs without a compute cap");
  se->add_flag("--inject-reference", inject_reference, "also train the reference architecture for F");

  std::string scene;
  std::size_t index = 0;
  std::size_t count = 1;
  auto* re = app.add_subcommand("render", "write P5 images of a scene or dataset frames");
  add_common(re);
  re->add_option("--dataset", dataset, "dataset file");
  re->add_option("--scene", scene, "scene configuration file");
  re->add_option("--index", index, "first dataset sample");
  re->add_option("--count", count, "number of dataset samples");
  re->add_flag("--full-scale", c.full_scale, "full-scale radio dimensions (scene mode)");
  re->add_flag("--raw-features", c.raw_features, "untransformed feature images (scene mode)");

  std::string file;
  auto* in = app.add_subcommand("inspect", "print the header of a dataset, checkpoint or image");
  in->add_option("file", file, "artifact to inspect")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: usage: %s\n", one_line(e.what()).c_str());
    return 1;
  }

  try {
    if (gen->parsed()) return cmd_gen(c, total);
    if (tr->parsed()) return cmd_train(c, dataset, fraction);
    if (ev->parsed()) return cmd_eval(c, checkpoint, dataset, all);
    if (fe->parsed()) return cmd_flip_eval(c, checkpoint, dataset, all);
    if (se->parsed()) return cmd_search(c, dataset, fraction, full_budget, inject_reference, workers);
    if (re->parsed()) return cmd_render(c, dataset, scene, index, count);
    if (in->parsed()) return cmd_inspect(file);
  } catch (const Error& e) {
    return fail(e.code(), e.what());
  } catch (const std::bad_alloc&) {
    return fail(ErrorCode::kSizing, "out of memory");
  } catch (const std::exception& e) {
    return fail(ErrorCode::kInternal, e.what());
  }
  return 1;
}
