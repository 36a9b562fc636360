#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "actsel/config.hpp"
#include "actsel/errors.hpp"
#include "actsel/harness.hpp"
#include "actsel/idx.hpp"
#include "actsel/metrics.hpp"
#include "actsel/mlp.hpp"
#include "actsel/optim.hpp"
#include "actsel/results.hpp"

namespace py = pybind11;
using namespace actsel;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() == 1) {
    Matrix m(1, static_cast<std::size_t>(a.shape(0)));
    std::memcpy(m.data(), a.data(), m.size() * sizeof(double));
    return m;
  }
  if (a.ndim() != 2) throw InputError("expected a 1-D or 2-D array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::memcpy(m.data(), a.data(), m.size() * sizeof(double));
  return m;
}

py::array_t<double> to_array(const Matrix& m) {
  py::array_t<double> a({m.rows(), m.cols()});
  std::memcpy(a.mutable_data(), m.data(), m.size() * sizeof(double));
  return a;
}

py::array_t<double> to_array(std::span<const double> v) {
  py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
  std::memcpy(a.mutable_data(), v.data(), v.size() * sizeof(double));
  return a;
}

std::vector<ClassId> to_labels(const py::array_t<int, py::array::c_style | py::array::forcecast>& labels) {
  return {labels.data(), labels.data() + labels.size()};
}

py::dict dataset_dict(const Dataset& d) {
  py::dict out;
  out["images"] = to_array(d.images);
  py::array_t<int> labels(static_cast<py::ssize_t>(d.size()));
  std::memcpy(labels.mutable_data(), d.labels.data(), d.size() * sizeof(int));
  out["labels"] = labels;
  return out;
}

Dataset to_dataset(const Array& images, const py::array_t<int, py::array::c_style | py::array::forcecast>& labels) {
  Dataset d{to_matrix(images), to_labels(labels)};
  d.validate();
  return d;
}

// Writable float64 view of a numpy array, updated in place.
std::span<double> writable(py::array& a) {
  if (!py::isinstance<py::array_t<double>>(a) || !(a.flags() & py::array::c_style)) {
    throw InputError("parameters must be C-contiguous float64 arrays");
  }
  return {static_cast<double*>(a.mutable_data()), static_cast<std::size_t>(a.size())};
}

std::string dumps(const py::object& obj) {
  return py::module_::import("json").attr("dumps")(obj).cast<std::string>();
}

py::object loads(const nlohmann::json& doc) {
  return py::module_::import("json").attr("loads")(doc.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Activation sparsity and selectivity of MLPs trained on MNIST";
  m.attr("__version__") = ACTSEL_VERSION;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<MetricError>(m, "MetricError", PyExc_ValueError);

  // metrics
  m.def("hoyer_row", [](const Array& c) { return hoyer_row(to_matrix(c).values()); }, py::arg("activations"));
  m.def("hoyer_sparsity", [](const Array& trace) { return hoyer_sparsity(to_matrix(trace)); }, py::arg("trace"),
        "Mean per-row Hoyer sparsity.");
  m.def("ccmas_from_class_means", [](const Array& means) { return ccmas_from_class_means(to_matrix(means).values()); },
        py::arg("class_means"));
  m.def(
      "ccmas_selectivity",
      [](const Array& trace, const py::array_t<int, py::array::c_style | py::array::forcecast>& labels) {
        const Selectivity s = ccmas_selectivity(to_matrix(trace), to_labels(labels));
        py::dict out;
        out["per_neuron"] = to_array(s.per_neuron);
        out["mean"] = s.mean;
        out["std"] = s.std;
        return out;
      },
      py::arg("trace"), py::arg("labels"));

  // optim
  py::class_<OptimizerConfig>(m, "OptimizerConfig")
      .def(py::init([](const std::string& kind) {
             const auto k = parse_optimizer_kind(kind);
             if (!k) throw ConfigError("unknown optimizer kind '" + kind + "'");
             return OptimizerConfig::defaults(*k);
           }),
           py::arg("kind"))
      .def_property_readonly("kind", [](const OptimizerConfig& c) { return std::string(to_string(c.kind)); })
      .def_readwrite("learning_rate", &OptimizerConfig::learning_rate)
      .def_readwrite("weight_decay", &OptimizerConfig::weight_decay)
      .def_readwrite("momentum", &OptimizerConfig::momentum)
      .def_readwrite("rho", &OptimizerConfig::rho)
      .def_readwrite("beta1", &OptimizerConfig::beta1)
      .def_readwrite("beta2", &OptimizerConfig::beta2)
      .def_readwrite("eps", &OptimizerConfig::eps)
      .def_readwrite("k", &OptimizerConfig::k)
      .def("validate", &OptimizerConfig::validate);

  py::class_<Optimizer>(m, "Optimizer")
      .def(py::init<OptimizerConfig>(), py::arg("config"))
      .def_property_readonly("config", &Optimizer::config)
      .def(
          "step",
          [](Optimizer& opt, std::vector<py::array> params, const std::vector<Array>& grads) {
            if (params.size() != grads.size()) throw InputError("params and grads differ in length");
            std::vector<std::span<double>> views;
            std::vector<std::span<const double>> gviews;
            for (std::size_t i = 0; i < params.size(); ++i) {
              views.push_back(writable(params[i]));
              gviews.emplace_back(grads[i].data(), static_cast<std::size_t>(grads[i].size()));
            }
            opt.step(views, gviews);
          },
          py::arg("params"), py::arg("grads"), "Updates the float64 parameter arrays in place.");
  m.def("fluctuation_scale", &fluctuation_scale, py::arg("learning_rate"), py::arg("momentum"),
        py::arg("dataset_size"), py::arg("batch_size"));

  // netcore
  py::class_<MlpModel>(m, "Mlp")
      .def(py::init([](const std::vector<std::size_t>& hidden, std::uint64_t seed) {
             Rng rng(seed);
             return MlpModel::initialized(mlp_layout(hidden), rng);
           }),
           py::arg("hidden_widths") = std::vector<std::size_t>{256}, py::arg("seed") = 0)
      .def_readonly("layer_sizes", &MlpModel::layer_sizes)
      .def_property_readonly("parameter_count", &MlpModel::parameter_count)
      .def_property_readonly("weights",
                             [](const MlpModel& model) {
                               py::list out;
                               for (const auto& w : model.weights) out.append(to_array(w));
                               return out;
                             })
      .def_property_readonly("biases",
                             [](const MlpModel& model) {
                               py::list out;
                               for (const auto& b : model.biases) out.append(to_array(b));
                               return out;
                             })
      .def(
          "forward",
          [](const MlpModel& model, const Array& x) {
            MlpModel capture = model;
            capture.capture_enabled = true;
            const ForwardResult r = forward(capture, to_matrix(x));
            py::list hidden;
            for (const auto& h : r.hidden_activations) hidden.append(to_array(h));
            return py::make_tuple(to_array(r.logits), hidden);
          },
          py::arg("x"), "Returns (logits, hidden activations).")
      .def(
          "backward",
          [](const MlpModel& model, const Array& x,
             const py::array_t<int, py::array::c_style | py::array::forcecast>& labels) {
            const Gradients g = backward(model, to_matrix(x), to_labels(labels));
            py::list weights, biases;
            for (const auto& w : g.weights) weights.append(to_array(w));
            for (const auto& b : g.biases) biases.append(to_array(b));
            return py::make_tuple(g.loss, weights, biases);
          },
          py::arg("x"), py::arg("labels"), "Returns (mean loss, weight gradients, bias gradients).")
      .def(
          "train_step",
          [](MlpModel& model, Optimizer& opt, const Array& x,
             const py::array_t<int, py::array::c_style | py::array::forcecast>& labels) {
            const Gradients g = backward(model, to_matrix(x), to_labels(labels));
            opt.step(model.parameter_views(), g.views());
            return g.loss;
          },
          py::arg("optimizer"), py::arg("x"), py::arg("labels"))
      .def(
          "evaluate",
          [](const MlpModel& model, const Array& images,
             const py::array_t<int, py::array::c_style | py::array::forcecast>& labels) {
            const Evaluation e = evaluate(model, to_dataset(images, labels), true);
            const auto layers = trace_metrics(e.trace);
            py::dict out;
            out["accuracy"] = e.accuracy;
            out["loss"] = e.loss;
            py::list per_layer;
            for (const auto& l : layers) {
              py::dict d;
              d["sparsity"] = l.sparsity;
              d["selectivity_mean"] = l.selectivity_mean;
              d["selectivity_std"] = l.selectivity_std;
              per_layer.append(d);
            }
            out["layers"] = per_layer;
            return out;
          },
          py::arg("images"), py::arg("labels"), "Accuracy, loss and per-layer metrics on a dataset.");

  // data
  m.def(
      "load_mnist",
      [](const std::filesystem::path& dir) {
        const MnistSplit split = load_mnist(dir);
        py::dict out;
        out["train"] = dataset_dict(split.train);
        out["test"] = dataset_dict(split.test);
        return out;
      },
      py::arg("dir"));

  // harness
  m.def("experiment_presets", &experiment_preset_names);
  m.def("sweep_presets", &sweep_preset_names);
  m.def(
      "resolve_config",
      [](const py::object& config) {
        const RunConfig run = py::isinstance<py::str>(config) ? load_run_config(config.cast<std::string>())
                                                               : parse_run_config(nlohmann::json::parse(dumps(config)));
        return loads(to_json(run));
      },
      py::arg("config"), "Validated config with every default filled in.");
  m.def(
      "run_experiment",
      [](const py::object& config, const std::filesystem::path& data_dir, std::optional<std::size_t> subsample,
         std::optional<std::size_t> epochs, std::optional<std::size_t> seeds, std::size_t threads) {
        RunConfig run = py::isinstance<py::str>(config) ? load_run_config(config.cast<std::string>())
                                                        : parse_run_config(nlohmann::json::parse(dumps(config)));
        ExperimentConfig& cfg = run.experiment;
        if (subsample) cfg.train_subsample = *subsample;
        if (epochs) cfg.epochs = *epochs;
        if (seeds) {
          cfg.seeds.clear();
          for (std::size_t i = 0; i < *seeds; ++i) cfg.seeds.push_back(i);
        }
        cfg.validate();
        MnistSplit split = load_mnist(data_dir);
        const TrainTestData data{std::move(split.train), std::move(split.test)};
        RunOptions options;
        options.threads = threads;
        std::vector<ExperimentResult> results;
        {
          py::gil_scoped_release release;
          if (run.sweep) {
            results = run_sweep(cfg, run.sweep->axis, run.sweep->values, data, options);
          } else {
            results.push_back(run_experiment(cfg, data, options));
          }
        }
        py::list out;
        for (const auto& r : results) {
          py::dict d = loads(summary_json(r));
          py::list rows;
          for (const auto& t : r.trials) {
            for (const auto& e : t.epochs) {
              py::dict row;
              row["seed"] = t.seed_index;
              row["epoch"] = e.epoch;
              row["diverged"] = e.diverged;
              for (const auto& [k, v] : epoch_quantities(e)) row[py::str(k)] = v;
              rows.append(row);
            }
          }
          d["epochs"] = rows;
          out.append(d);
        }
        return out;
      },
      py::arg("config"), py::arg("data_dir"), py::arg("subsample") = py::none(), py::arg("epochs") = py::none(),
      py::arg("seeds") = py::none(), py::arg("threads") = 0,
      "Runs an experiment (or sweep) and returns one summary per experiment.");
}
