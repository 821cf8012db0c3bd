// SPDX-License-Identifier: Apache-2.0
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <complex>
#include <cstring>
#include <memory>

#include "isac_atr/archsearch.hpp"
#include "isac_atr/dataset.hpp"
#include "isac_atr/errors.hpp"
#include "isac_atr/model.hpp"
#include "isac_atr/periodogram.hpp"
#include "isac_atr/radio.hpp"
#include "isac_atr/waveform.hpp"

namespace py = pybind11;
using namespace isac_atr;

namespace {

using ComplexArray = py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>;
using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

ComplexArray to_numpy(const ComplexMatrix& m) {
  ComplexArray out({static_cast<py::ssize_t>(m.rows()), static_cast<py::ssize_t>(m.cols())});
  auto v = out.mutable_unchecked<2>();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      v(r, c) = m(r, c);
    }
  }
  return out;
}

ChannelMatrix to_channel(const ComplexArray& a, const RadioConfig& radio, bool mask_applied) {
  if (a.ndim() != 2) {
    throw ConfigError("channel must be a 2-D array");
  }
  ChannelMatrix h;
  h.config = radio;
  h.mask_applied = mask_applied;
  h.data.resize(a.shape(0), a.shape(1));
  auto v = a.unchecked<2>();
  for (py::ssize_t r = 0; r < a.shape(0); ++r) {
    for (py::ssize_t c = 0; c < a.shape(1); ++c) {
      h.data(r, c) = v(r, c);
    }
  }
  return h;
}

FloatArray features_to_numpy(const FeatureTensor& t) {
  FloatArray out({static_cast<py::ssize_t>(FeatureTensor::kChannels), static_cast<py::ssize_t>(t.rows),
                  static_cast<py::ssize_t>(t.cols)});
  std::memcpy(out.mutable_data(), t.data.data(), t.data.size() * sizeof(float));
  return out;
}

FeatureTensor features_from_numpy(const FloatArray& a, FeatureMode mode) {
  if (a.ndim() != 3 || a.shape(0) != static_cast<py::ssize_t>(FeatureTensor::kChannels)) {
    throw ConfigError("features must have shape (2, rows, cols)");
  }
  FeatureTensor t(a.shape(1), a.shape(2), mode);
  std::memcpy(t.data.data(), a.data(), t.data.size() * sizeof(float));
  return t;
}

FloatArray dataset_features(const Dataset& ds) {
  FloatArray out({static_cast<py::ssize_t>(ds.samples.size()), static_cast<py::ssize_t>(FeatureTensor::kChannels),
                  static_cast<py::ssize_t>(ds.rows), static_cast<py::ssize_t>(ds.cols)});
  float* dst = out.mutable_data();
  const std::size_t per = FeatureTensor::kChannels * ds.rows * ds.cols;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    std::memcpy(dst + i * per, ds.samples[i].features.data.data(), per * sizeof(float));
  }
  return out;
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["accuracy"] = r.accuracy;
  d["mean_loss"] = r.mean_loss;
  d["class_accuracy"] = r.class_accuracy;
  py::array_t<std::size_t> conf({static_cast<py::ssize_t>(r.classes), static_cast<py::ssize_t>(r.classes)});
  std::memcpy(conf.mutable_data(), r.confusion.data(), r.confusion.size() * sizeof(std::size_t));
  d["confusion"] = conf;
  return d;
}

struct PyModel {
  CheckpointInfo info;
  std::unique_ptr<Detector<float>> model;
};

void register_errors(py::module_& m) {
  static py::exception<Error> base(m, "IsacAtrError");
  static py::exception<ConfigError> config(m, "ConfigError", base.ptr());
  static py::exception<IoError> io(m, "IoError", base.ptr());
  static py::exception<FormatError> format(m, "FormatError", base.ptr());
  static py::exception<InfeasibleError> infeasible(m, "InfeasibleError", base.ptr());
  static py::exception<DivergenceError> diverged(m, "DivergenceError", base.ptr());
  static py::exception<SizingError> sizing(m, "SizingError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) {
        std::rethrow_exception(p);
      }
    } catch (const ConfigError& e) {
      PyErr_SetString(config.ptr(), e.what());
    } catch (const DimensionError& e) {
      PyErr_SetString(config.ptr(), e.what());
    } catch (const SplitError& e) {
      PyErr_SetString(config.ptr(), e.what());
    } catch (const IoError& e) {
      PyErr_SetString(io.ptr(), e.what());
    } catch (const FormatError& e) {
      PyErr_SetString(format.ptr(), e.what());
    } catch (const InfeasibleError& e) {
      PyErr_SetString(infeasible.ptr(), e.what());
    } catch (const DivergenceError& e) {
      PyErr_SetString(diverged.ptr(), e.what());
    } catch (const SizingError& e) {
      PyErr_SetString(sizing.ptr(), e.what());
    } catch (const Error& e) {
      PyErr_SetString(base.ptr(), e.what());
    }
  });
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "ISAC radar target recognition core";
  register_errors(m);

  py::class_<TddPattern>(m, "TddPattern")
      .def(py::init<>())
      .def_readwrite("period_symbols", &TddPattern::period_symbols)
      .def_readwrite("dl_symbols", &TddPattern::dl_symbols)
      .def("is_downlink", &TddPattern::is_downlink);

  py::class_<RadioConfig>(m, "RadioConfig")
      .def(py::init<>())
      .def_readwrite("carrier_hz", &RadioConfig::carrier_hz)
      .def_readwrite("subcarrier_spacing_hz", &RadioConfig::subcarrier_spacing_hz)
      .def_readwrite("subcarriers", &RadioConfig::subcarriers)
      .def_readwrite("symbols", &RadioConfig::symbols)
      .def_readwrite("symbol_time_s", &RadioConfig::symbol_time_s)
      .def_readwrite("total_symbol_time_s", &RadioConfig::total_symbol_time_s)
      .def_readwrite("tdd", &RadioConfig::tdd)
      .def_property_readonly("bandwidth_hz", &RadioConfig::bandwidth_hz)
      .def("validate", &RadioConfig::validate);
  m.def("desk_preset", &desk_preset);
  m.def("full_scale_preset", &full_scale_preset);
  m.def("range_per_bin_m", &range_per_bin_m, py::arg("radio"), py::arg("padded_subcarriers"));
  m.def("velocity_per_bin_mps", &velocity_per_bin_mps, py::arg("radio"), py::arg("padded_symbols"));

  py::class_<Scatterer>(m, "Scatterer")
      .def(py::init([](double range, double velocity, double amplitude, double phase) {
             return Scatterer{range, velocity, amplitude, phase};
           }),
           py::arg("range_m"), py::arg("velocity_mps") = 0.0, py::arg("amplitude") = 1.0, py::arg("phase_rad") = 0.0)
      .def_readwrite("range_m", &Scatterer::range_m)
      .def_readwrite("velocity_mps", &Scatterer::velocity_mps)
      .def_readwrite("amplitude", &Scatterer::amplitude)
      .def_readwrite("phase_rad", &Scatterer::phase_rad);

  py::class_<Scene>(m, "Scene")
      .def(py::init([](std::size_t class_id, std::vector<Scatterer> scatterers, double snr_db, std::uint64_t seed) {
             return Scene{class_id, std::move(scatterers), snr_db, seed};
           }),
           py::arg("class_id") = 0, py::arg("scatterers") = std::vector<Scatterer>{}, py::arg("snr_db") = 15.0,
           py::arg("seed") = 0)
      .def_readwrite("class_id", &Scene::class_id)
      .def_readwrite("scatterers", &Scene::scatterers)
      .def_readwrite("snr_db", &Scene::snr_db)
      .def_readwrite("seed", &Scene::seed);
  m.def("load_scene", &load_scene, py::arg("path"));

  m.def(
      "synthesize_channel",
      [](const Scene& s, const RadioConfig& r) { return to_numpy(synthesize_channel(s, r).data); },
      py::arg("scene"), py::arg("radio"));
  m.def(
      "apply_tdd_mask",
      [](const ComplexArray& h, const RadioConfig& r) { return to_numpy(apply_tdd_mask(to_channel(h, r, false)).data); },
      py::arg("channel"), py::arg("radio"));
  m.def(
      "add_noise",
      [](const ComplexArray& h, const RadioConfig& r, double snr_db, std::uint64_t seed) {
        return to_numpy(add_noise(to_channel(h, r, true), snr_db, seed).data);
      },
      py::arg("channel"), py::arg("radio"), py::arg("snr_db"), py::arg("seed"));
  m.def(
      "simulate_frame", [](const Scene& s, const RadioConfig& r) { return to_numpy(simulate_frame(s, r).data); },
      py::arg("scene"), py::arg("radio"));

  m.def(
      "padded_dims",
      [](std::size_t n, std::size_t mm, unsigned f) {
        const auto d = padded_dims(n, mm, f);
        return py::make_tuple(d.rows, d.cols);
      },
      py::arg("subcarriers"), py::arg("symbols"), py::arg("padding_factor"));
  m.def(
      "compute_periodogram",
      [](const ComplexArray& h, const RadioConfig& r, unsigned f) {
        return to_numpy(compute_periodogram(to_channel(h, r, true), f).data);
      },
      py::arg("channel"), py::arg("radio"), py::arg("padding_factor") = 0);
  m.def(
      "extract_features",
      [](const ComplexArray& p, const RadioConfig& r, unsigned f, bool raw) {
        Periodogram pg;
        pg.data = to_channel(p, r, true).data;
        pg.config = r;
        pg.padding_factor = f;
        return features_to_numpy(extract_features(pg, raw ? FeatureMode::kRaw : FeatureMode::kStandardizedDb));
      },
      py::arg("periodogram"), py::arg("radio"), py::arg("padding_factor") = 0, py::arg("raw") = false);
  m.def(
      "hflip",
      [](const FloatArray& t) { return features_to_numpy(hflip(features_from_numpy(t, FeatureMode::kStandardizedDb))); },
      py::arg("features"));
  m.def(
      "render_periodogram",
      [](const ComplexArray& p, const RadioConfig& r, const std::filesystem::path& path) {
        Periodogram pg;
        pg.data = to_channel(p, r, true).data;
        pg.config = r;
        render(pg, path);
      },
      py::arg("periodogram"), py::arg("radio"), py::arg("path"));

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("rows", &Dataset::rows)
      .def_readonly("cols", &Dataset::cols)
      .def_readonly("padding_factor", &Dataset::padding_factor)
      .def_readonly("radio", &Dataset::radio)
      .def("__len__", [](const Dataset& d) { return d.samples.size(); })
      .def_property_readonly("features", &dataset_features)
      .def_property_readonly("labels",
                             [](const Dataset& d) {
                               std::vector<std::uint16_t> out;
                               for (const auto& s : d.samples) out.push_back(s.label);
                               return out;
                             })
      .def_property_readonly("seeds",
                             [](const Dataset& d) {
                               std::vector<std::uint64_t> out;
                               for (const auto& s : d.samples) out.push_back(s.seed);
                               return out;
                             })
      .def("__eq__", [](const Dataset& a, const Dataset& b) { return a == b; })
      .def("save", [](const Dataset& d, const std::filesystem::path& p) { save_dataset(d, p); }, py::arg("path"));

  m.def(
      "generate_dataset",
      [](std::size_t total, std::uint64_t seed, unsigned f, double snr_db, bool raw) {
        auto manifest = default_manifest(total);
        manifest.seed = seed;
        manifest.padding_factor = f;
        manifest.snr_db = snr_db;
        manifest.feature_mode = raw ? FeatureMode::kRaw : FeatureMode::kStandardizedDb;
        py::gil_scoped_release release;
        return generate_dataset(manifest);
      },
      py::arg("total") = 1600, py::arg("seed") = 1, py::arg("padding_factor") = 0, py::arg("snr_db") = 15.0,
      py::arg("raw") = false);
  m.def("load_dataset", [](const std::filesystem::path& p) { return load_dataset(p); }, py::arg("path"));
  m.def(
      "proportional_counts",
      [](std::size_t total) { return proportional_counts(total, kCampaignRatioBp); }, py::arg("total"));
  m.def(
      "class_weights_from_counts", [](const std::vector<std::size_t>& c) { return class_weights_from_counts(c); },
      py::arg("counts"));
  m.def("train_count_for", &train_count_for, py::arg("class_size"), py::arg("fraction"));
  m.def("class_names", &default_class_names);

  py::class_<DetectorConfig>(m, "DetectorConfig")
      .def(py::init<>())
      .def_readwrite("blocks", &DetectorConfig::blocks)
      .def_readwrite("kernel", &DetectorConfig::kernel)
      .def_readwrite("first_kernel", &DetectorConfig::first_kernel)
      .def_readwrite("conv_stride", &DetectorConfig::conv_stride)
      .def_readwrite("channels", &DetectorConfig::channels)
      .def_readwrite("pool_kernel", &DetectorConfig::pool_kernel)
      .def_readwrite("pool_stride", &DetectorConfig::pool_stride)
      .def_readwrite("hidden", &DetectorConfig::hidden)
      .def_readwrite("dropout", &DetectorConfig::dropout)
      .def_readwrite("padding_factor", &DetectorConfig::padding_factor)
      .def_readwrite("classes", &DetectorConfig::classes)
      .def_readwrite("head_grid", &DetectorConfig::head_grid)
      .def("validate", &DetectorConfig::validate)
      .def("__eq__", [](const DetectorConfig& a, const DetectorConfig& b) { return a == b; });
  m.def("reference_config", &reference_config, py::arg("padding_factor") = 0);
  m.def("forward_macs", &forward_macs, py::arg("config"), py::arg("rows"), py::arg("cols"));

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init([](std::size_t batch, double lr, std::size_t epochs, std::uint64_t seed) {
             return TrainConfig{batch, lr, epochs, seed};
           }),
           py::arg("batch_size") = 32, py::arg("learning_rate") = 0.001, py::arg("epochs") = 50, py::arg("seed") = 1)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("seed", &TrainConfig::seed);

  py::class_<PyModel>(m, "Detector")
      .def(py::init([](const DetectorConfig& cfg, std::size_t rows, std::size_t cols, std::uint64_t seed) {
             auto p = std::make_unique<PyModel>();
             p->model = std::make_unique<Detector<float>>(cfg, rows, cols, seed);
             p->info.config = cfg;
             p->info.rows = rows;
             p->info.cols = cols;
             p->info.init_seed = seed;
             return p;
           }),
           py::arg("config"), py::arg("rows"), py::arg("cols"), py::arg("init_seed") = 1)
      .def_property_readonly("config", [](const PyModel& p) { return p.info.config; })
      .def_property_readonly("param_count", [](PyModel& p) { return p.model->param_count(); })
      .def(
          "logits",
          [](PyModel& p, const FloatArray& x) {
            if (x.ndim() != 4) {
              throw ConfigError("input must have shape (batch, 2, rows, cols)");
            }
            nn::Shape shape{static_cast<std::size_t>(x.shape(0)), static_cast<std::size_t>(x.shape(1)),
                            static_cast<std::size_t>(x.shape(2)), static_cast<std::size_t>(x.shape(3))};
            std::vector<float> data(x.data(), x.data() + shape.size());
            const auto y = p.model->logits(nn::Tensor<float>(shape, std::move(data)), nn::Mode::kEval);
            FloatArray out({static_cast<py::ssize_t>(y.shape().n), static_cast<py::ssize_t>(y.shape().c)});
            std::memcpy(out.mutable_data(), y.values().data(), y.size() * sizeof(float));
            return out;
          },
          py::arg("features"))
      .def(
          "train",
          [](PyModel& p, const Dataset& ds, const TrainConfig& tc, double fraction, std::uint64_t split_seed) {
            const Split split = stratified_split(ds.samples, fraction, split_seed);
            p.info.class_weights = class_weights(split.train, p.info.config.classes);
            p.info.train = tc;
            p.info.feature_mode = ds.feature_mode;
            p.info.split_seed = split_seed;
            p.info.split_fraction = fraction;
            std::vector<EpochRecord> history;
            {
              py::gil_scoped_release release;
              history = train(*p.model, split.train, split.test, p.info.class_weights, tc);
            }
            py::list out;
            for (const auto& r : history) {
              out.append(py::dict(py::arg("epoch") = r.epoch, py::arg("train_loss") = r.train_loss,
                                  py::arg("test_loss") = r.test_loss, py::arg("test_accuracy") = r.test_accuracy));
            }
            return out;
          },
          py::arg("dataset"), py::arg("train_config"), py::arg("fraction") = 0.8, py::arg("split_seed") = 1)
      .def(
          "evaluate",
          [](PyModel& p, const Dataset& ds, bool flip, bool all) {
            const Split split = stratified_split(ds.samples, p.info.split_fraction, p.info.split_seed);
            const std::span<const LabeledSample> set =
                all ? std::span<const LabeledSample>(ds.samples) : std::span<const LabeledSample>(split.test);
            return report_dict(evaluate(*p.model, set, p.info.class_weights, flip));
          },
          py::arg("dataset"), py::arg("flip") = false, py::arg("all") = false)
      .def("save", [](PyModel& p, const std::filesystem::path& path) { save_checkpoint(p.info, *p.model, path); },
           py::arg("path"));
  m.def(
      "load_checkpoint",
      [](const std::filesystem::path& path) {
        Checkpoint ck = load_checkpoint(path);
        auto p = std::make_unique<PyModel>();
        p->info = ck.info;
        p->model = std::make_unique<Detector<float>>(std::move(ck.model));
        return p;
      },
      py::arg("path"));
}
