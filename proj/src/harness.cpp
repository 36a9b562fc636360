#include "actsel/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "actsel/errors.hpp"
#include "actsel/mlp.hpp"
#include "actsel/random.hpp"

namespace actsel {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Tag for the subsample stream: depends on the seed index only, so every
// condition in a sweep trains on the same subset for a given seed.
constexpr std::uint64_t kSubsampleTag = 0x5b5a3d1e0c7f9a21ULL;

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> workers;
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  workers.clear();
  if (failure) std::rethrow_exception(failure);
}

EpochCallback serialized(const EpochCallback& cb) {
  if (!cb) return {};
  auto mutex = std::make_shared<std::mutex>();
  return [cb, mutex](const TrialRecord& t, const EpochRecord& e) {
    std::lock_guard lock(*mutex);
    cb(t, e);
  };
}

EpochMetrics missing_metrics(std::size_t hidden_layers) {
  EpochMetrics m;
  m.accuracy = kNaN;
  m.loss = kNaN;
  LayerMetrics nan_layer{kNaN, kNaN, kNaN, {}};
  m.layers.assign(hidden_layers, nan_layer);
  m.uniform = nan_layer;
  m.weighted = nan_layer;
  return m;
}

EpochMetrics measure(const MlpModel& model, const Dataset& data, const ExperimentConfig& cfg,
                     const TrialRecord& trial, std::size_t epoch, bool export_traces) {
  Evaluation eval = evaluate(model, data, true);
  EpochMetrics m;
  m.accuracy = eval.accuracy;
  m.loss = eval.loss;
  m.layers = trace_metrics(eval.trace);
  m.uniform = aggregate_uniform(m.layers);
  m.weighted = aggregate_weighted(m.layers, eval.trace);
  if (export_traces && cfg.trace_dir) {
    std::filesystem::create_directories(*cfg.trace_dir);
    for (std::size_t l = 0; l < eval.trace.layers.size(); ++l) {
      std::string file = cfg.name + "_seed" + std::to_string(trial.seed_index) + "_epoch" +
                         std::to_string(epoch) + "_layer" + std::to_string(l + 1) + ".trc";
      for (char& c : file) {
        if (c == '/' || c == '\\' || c == ' ') c = '_';
      }
      write_trace_layer(*cfg.trace_dir / file, eval.trace.layers[l], eval.trace.labels);
    }
  }
  return m;
}

bool model_finite(MlpModel& model) {
  for (auto view : model.parameter_views()) {
    if (!all_finite(view)) return false;
  }
  return true;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (name.empty()) throw ConfigError("name must not be empty");
  if (hidden_widths.empty() || hidden_widths.size() > kMaxHiddenLayers) {
    throw ConfigError("model.hidden_layers must be between 1 and " + std::to_string(kMaxHiddenLayers));
  }
  for (std::size_t w : hidden_widths) {
    if (w < 2) throw ConfigError("model.neurons must be at least 2 (Hoyer sparsity needs two neurons)");
  }
  if (epochs == 0) throw ConfigError("epochs must be at least 1");
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (train_subsample && *train_subsample == 0) throw ConfigError("train_subsample must be positive");
  optimizer.validate();
  schedule.validate();
}

TrialRecord run_trial(const ExperimentConfig& cfg, std::uint64_t seed_index, const TrainTestData& data,
                      const EpochCallback& on_epoch) {
  cfg.validate();
  TrialRecord trial;
  trial.seed_index = seed_index;
  trial.seed = trial_seed(cfg.name, seed_index);

  Dataset subset;
  const Dataset* train = &data.train;
  if (cfg.train_subsample) {
    subset = subsample(data.train, *cfg.train_subsample, derive_seed(kSubsampleTag, seed_index));
    train = &subset;
  }
  if (train->empty()) throw InputError("training set is empty");
  if (cfg.schedule.batch_size > train->size()) {
    throw ConfigError("schedule.batch_size " + std::to_string(cfg.schedule.batch_size) +
                      " exceeds the training set size " + std::to_string(train->size()));
  }

  // Fixed draw order from one generator: weights first, then the schedule seed.
  Rng rng(trial.seed);
  MlpModel model = MlpModel::initialized(mlp_layout(cfg.hidden_widths), rng);
  BatchSchedule schedule = cfg.schedule;
  schedule.seed = rng.next();
  Optimizer optimizer(cfg.optimizer);

  bool diverged = false;
  std::vector<std::size_t> batch_labels_idx;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochRecord record;
    record.epoch = epoch;
    if (!diverged) {
      const auto batches = make_epoch(schedule, *train, epoch - 1);
      double loss_sum = 0.0;
      std::vector<ClassId> labels;
      for (const auto& batch : batches) {
        const Matrix x = gather_rows(train->images, batch);
        labels.clear();
        for (std::size_t i : batch) labels.push_back(train->labels[i]);
        const Gradients grads = backward(model, x, labels);
        if (!std::isfinite(grads.loss)) {
          diverged = true;
          break;
        }
        loss_sum += grads.loss * static_cast<double>(batch.size());
        optimizer.step(model.parameter_views(), grads.views());
      }
      if (!diverged) {
        record.train_loss = loss_sum / static_cast<double>(train->size());
        diverged = !model_finite(model);
      }
      if (!diverged) {
        record.test = measure(model, data.test, cfg, trial, epoch, true);
        if (!std::isfinite(record.test.loss)) diverged = true;
      }
      if (!diverged && cfg.measure_train_set) {
        record.train = measure(model, *train, cfg, trial, epoch, false);
      }
    }
    if (diverged) {
      record.diverged = true;
      record.train_loss = kNaN;
      record.test = missing_metrics(cfg.hidden_widths.size());
      if (cfg.measure_train_set) record.train = missing_metrics(cfg.hidden_widths.size());
    }
    trial.epochs.push_back(std::move(record));
    if (on_epoch) on_epoch(trial, trial.epochs.back());
  }
  return trial;
}

Stat summarize(std::span<const double> values) {
  Stat s;
  double sum = 0.0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    sum += v;
    ++s.n;
  }
  if (s.n == 0) {
    s.mean = kNaN;
    s.stderr_ = kNaN;
    return s;
  }
  s.mean = sum / static_cast<double>(s.n);
  if (s.n < 2) return s;
  double sq = 0.0;
  for (double v : values) {
    if (!std::isnan(v)) sq += (v - s.mean) * (v - s.mean);
  }
  const double n = static_cast<double>(s.n);
  s.stderr_ = std::sqrt(sq / (n - 1.0)) / std::sqrt(n);
  s.stderr_defined = true;
  return s;
}

std::map<std::string, double> epoch_quantities(const EpochRecord& record) {
  std::map<std::string, double> q;
  auto add_metrics = [&q](const std::string& prefix, const EpochMetrics& m) {
    q[prefix + "accuracy"] = m.accuracy;
    q[prefix + "loss"] = m.loss;
    q[prefix + "sparsity"] = m.uniform.sparsity;
    q[prefix + "selectivity_mean"] = m.uniform.selectivity_mean;
    q[prefix + "selectivity_std"] = m.uniform.selectivity_std;
    q[prefix + "weighted_sparsity"] = m.weighted.sparsity;
    q[prefix + "weighted_selectivity_mean"] = m.weighted.selectivity_mean;
    q[prefix + "weighted_selectivity_std"] = m.weighted.selectivity_std;
    q[prefix + "accuracy_x_sparsity"] = m.accuracy * m.uniform.sparsity;
    q[prefix + "accuracy_x_selectivity"] = m.accuracy * m.uniform.selectivity_mean;
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      const std::string layer = prefix + "layer" + std::to_string(l + 1) + "_";
      q[layer + "sparsity"] = m.layers[l].sparsity;
      q[layer + "selectivity_mean"] = m.layers[l].selectivity_mean;
      q[layer + "selectivity_std"] = m.layers[l].selectivity_std;
    }
  };
  add_metrics("", record.test);
  q["train_loss"] = record.train_loss;
  if (record.train) {
    add_metrics("train_", *record.train);
    q.erase("train_loss");
    q["train_loss"] = record.train->loss;
    q["train_step_loss"] = record.train_loss;
  }
  return q;
}

std::vector<EpochSummary> aggregate_trials(std::span<const TrialRecord> trials) {
  std::vector<EpochSummary> out;
  if (trials.empty()) return out;
  const std::size_t epochs = trials.front().epochs.size();
  for (std::size_t e = 0; e < epochs; ++e) {
    EpochSummary summary;
    summary.epoch = e + 1;
    std::map<std::string, std::vector<double>> columns;
    for (const auto& trial : trials) {
      const EpochRecord& rec = trial.epochs.at(e);
      if (rec.diverged) ++summary.diverged_seeds;
      for (const auto& [name, value] : epoch_quantities(rec)) columns[name].push_back(value);
    }
    for (const auto& [name, values] : columns) summary.stats[name] = summarize(values);
    out.push_back(std::move(summary));
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const TrainTestData& data, const RunOptions& options) {
  cfg.validate();
  ExperimentResult result;
  result.config = cfg;
  result.trials.resize(cfg.seeds.size());
  const auto callback = serialized(options.on_epoch);
  parallel_for(cfg.seeds.size(), options.threads,
               [&](std::size_t i) { result.trials[i] = run_trial(cfg, cfg.seeds[i], data, callback); });
  result.epochs = aggregate_trials(result.trials);
  const std::size_t n = cfg.train_subsample.value_or(data.train.size());
  const double momentum = cfg.optimizer.kind == OptimizerKind::SGD || cfg.optimizer.kind == OptimizerKind::SGDMomentum
                              ? cfg.optimizer.momentum
                              : 0.0;
  result.fluctuation = fluctuation_scale(cfg.optimizer.learning_rate, momentum, n, cfg.schedule.batch_size);
  return result;
}

// ---- sweeps ---------------------------------------------------------------

namespace {

constexpr std::array<std::pair<SweepAxis, std::string_view>, 11> kAxisNames{{
    {SweepAxis::LearningRate, "learning_rate"},
    {SweepAxis::WeightDecay, "weight_decay"},
    {SweepAxis::Momentum, "momentum"},
    {SweepAxis::Rho, "rho"},
    {SweepAxis::BetasJoint, "betas_joint"},
    {SweepAxis::Beta1, "betas_lhs"},
    {SweepAxis::Beta2, "betas_rhs"},
    {SweepAxis::BatchSize, "batch_size"},
    {SweepAxis::HiddenLayers, "hidden_layers"},
    {SweepAxis::Neurons, "neurons"},
    {SweepAxis::ScheduleMode, "schedule_mode"},
}};

double as_number(const SweepValue& v, SweepAxis axis) {
  if (const double* d = std::get_if<double>(&v)) return *d;
  throw ConfigError("sweep axis " + std::string(to_string(axis)) + " takes numeric values");
}

std::size_t as_count(const SweepValue& v, SweepAxis axis) {
  const double d = as_number(v, axis);
  if (!(d >= 1.0) || d != std::floor(d)) {
    throw ConfigError("sweep axis " + std::string(to_string(axis)) + " takes positive integers");
  }
  return static_cast<std::size_t>(d);
}

std::vector<SweepValue> numbers(std::initializer_list<double> values) {
  return std::vector<SweepValue>(values.begin(), values.end());
}

std::vector<SweepValue> numbers(const std::vector<double>& values) {
  return std::vector<SweepValue>(values.begin(), values.end());
}

}  // namespace

std::string_view to_string(SweepAxis axis) {
  for (const auto& [a, name] : kAxisNames) {
    if (a == axis) return name;
  }
  return "unknown";
}

SweepAxis parse_sweep_axis(std::string_view text) {
  for (const auto& [a, name] : kAxisNames) {
    if (name == text) return a;
  }
  throw ConfigError("unknown sweep axis '" + std::string(text) + "'");
}

std::string format_sweep_value(const SweepValue& value) {
  if (const auto* s = std::get_if<std::string>(&value)) return *s;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", std::get<double>(value));
  return buf;
}

ExperimentConfig apply_sweep_value(const ExperimentConfig& base, SweepAxis axis, const SweepValue& value) {
  ExperimentConfig cfg = base;
  cfg.name = base.name + "/" + std::string(to_string(axis)) + "=" + format_sweep_value(value);
  switch (axis) {
    case SweepAxis::LearningRate:
      cfg.optimizer.learning_rate = as_number(value, axis);
      break;
    case SweepAxis::WeightDecay:
      cfg.optimizer.weight_decay = as_number(value, axis);
      break;
    case SweepAxis::Momentum:
      cfg.optimizer.momentum = as_number(value, axis);
      break;
    case SweepAxis::Rho:
      cfg.optimizer.rho = as_number(value, axis);
      break;
    case SweepAxis::BetasJoint:
      cfg.optimizer.beta1 = cfg.optimizer.beta2 = as_number(value, axis);
      break;
    case SweepAxis::Beta1:
      cfg.optimizer.beta1 = as_number(value, axis);
      break;
    case SweepAxis::Beta2:
      cfg.optimizer.beta2 = as_number(value, axis);
      break;
    case SweepAxis::BatchSize:
      cfg.schedule.batch_size = as_count(value, axis);
      break;
    case SweepAxis::HiddenLayers:
      cfg.hidden_widths.assign(as_count(value, axis), base.hidden_widths.front());
      break;
    case SweepAxis::Neurons:
      std::fill(cfg.hidden_widths.begin(), cfg.hidden_widths.end(), as_count(value, axis));
      break;
    case SweepAxis::ScheduleMode: {
      const auto* text = std::get_if<std::string>(&value);
      if (!text) throw ConfigError("sweep axis schedule_mode takes mode names");
      std::string_view mode_name = *text;
      std::size_t run_length = 0;
      if (const auto colon = mode_name.find(':'); colon != std::string_view::npos) {
        run_length = std::stoul(std::string(mode_name.substr(colon + 1)));
        mode_name = mode_name.substr(0, colon);
      }
      const auto mode = parse_schedule_mode(mode_name);
      if (!mode) throw ConfigError("unknown schedule mode '" + std::string(mode_name) + "'");
      cfg.schedule.mode = *mode;
      cfg.schedule.groups.clear();
      if (*mode == ScheduleMode::ConsecutiveRun) {
        cfg.schedule.batch_size = 1;
        cfg.schedule.run_length = run_length == 0 ? 1 : run_length;
      }
      break;
    }
  }
  cfg.validate();
  return cfg;
}

std::vector<ExperimentResult> run_sweep(const ExperimentConfig& base, SweepAxis axis,
                                        std::span<const SweepValue> values, const TrainTestData& data,
                                        const RunOptions& options) {
  std::vector<ExperimentConfig> configs;
  for (const auto& v : values) configs.push_back(apply_sweep_value(base, axis, v));

  // Flatten (point, seed) so every trial can run concurrently.
  std::vector<std::pair<std::size_t, std::size_t>> tasks;
  std::vector<ExperimentResult> results(configs.size());
  for (std::size_t p = 0; p < configs.size(); ++p) {
    results[p].config = configs[p];
    results[p].trials.resize(configs[p].seeds.size());
    for (std::size_t s = 0; s < configs[p].seeds.size(); ++s) tasks.emplace_back(p, s);
  }
  const auto callback = serialized(options.on_epoch);
  parallel_for(tasks.size(), options.threads, [&](std::size_t t) {
    const auto [p, s] = tasks[t];
    results[p].trials[s] = run_trial(configs[p], configs[p].seeds[s], data, callback);
  });
  for (auto& r : results) {
    r.epochs = aggregate_trials(r.trials);
    const std::size_t n = r.config.train_subsample.value_or(data.train.size());
    const auto kind = r.config.optimizer.kind;
    const double momentum =
        kind == OptimizerKind::SGD || kind == OptimizerKind::SGDMomentum ? r.config.optimizer.momentum : 0.0;
    r.fluctuation = fluctuation_scale(r.config.optimizer.learning_rate, momentum, n, r.config.schedule.batch_size);
  }
  return results;
}

std::vector<double> logspace(double lo, double hi, std::size_t count) {
  std::vector<double> out;
  if (count == 0) return out;
  if (count == 1) return {std::pow(10.0, lo)};
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) out.push_back(std::pow(10.0, lo + step * static_cast<double>(i)));
  return out;
}

SweepPreset sweep_preset(std::string_view name, OptimizerKind kind) {
  const auto decay_grid = numbers({0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.999});
  if (name == "weight_decay") return {SweepAxis::WeightDecay, numbers(logspace(-5, 1, 11))};
  if (name == "learning_rate") return {SweepAxis::LearningRate, numbers(logspace(-5, 3, 15))};
  if (name == "momentum") return {SweepAxis::Momentum, decay_grid};
  if (name == "rho") return {SweepAxis::Rho, decay_grid};
  const auto betas = numbers({1e-4, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.999});
  if (name == "betas") return {SweepAxis::BetasJoint, betas};
  if (name == "betas_lhs") return {SweepAxis::Beta1, betas};
  if (name == "betas_rhs") return {SweepAxis::Beta2, betas};
  if (name == "batch_size") return {SweepAxis::BatchSize, numbers({1, 5, 10, 50, 200, 500, 1000})};
  if (name == "neurons") return {SweepAxis::Neurons, numbers({64, 128, 256, 384, 512, 640, 768})};
  if (name == "hidden_layers") {
    const bool deep = kind == OptimizerKind::Adadelta || kind == OptimizerKind::Adam;
    return {SweepAxis::HiddenLayers, deep ? numbers({1, 2, 3, 4, 5}) : numbers({1, 2, 3, 4})};
  }
  if (name == "class_diversity") {
    return {SweepAxis::ScheduleMode, {std::string("single"), std::string("pair"), std::string("five"),
                                      std::string("random")}};
  }
  if (name == "consecutive") {
    return {SweepAxis::ScheduleMode,
            {std::string("consecutive:1"), std::string("consecutive:5"), std::string("consecutive:10")}};
  }
  if (name == "sorted") return {SweepAxis::ScheduleMode, {std::string("random"), std::string("sorted")}};
  throw ConfigError("unknown sweep preset '" + std::string(name) + "'");
}

std::vector<std::string> sweep_preset_names() {
  return {"weight_decay", "learning_rate", "momentum",      "rho",         "betas",  "betas_lhs", "betas_rhs",
          "batch_size",   "neurons",       "hidden_layers", "class_diversity", "consecutive", "sorted"};
}

std::optional<ExperimentConfig> experiment_preset(std::string_view name) {
  auto baseline = [](std::string preset_name, OptimizerKind kind) {
    ExperimentConfig cfg;
    cfg.name = std::move(preset_name);
    cfg.optimizer = OptimizerConfig::defaults(kind);
    cfg.schedule.batch_size = 50;
    return cfg;
  };
  constexpr std::array<std::pair<std::string_view, OptimizerKind>, 4> kBaselines{{
      {"sgd", OptimizerKind::SGD},
      {"adagrad", OptimizerKind::Adagrad},
      {"adadelta", OptimizerKind::Adadelta},
      {"adam", OptimizerKind::Adam},
  }};
  for (const auto& [opt, kind] : kBaselines) {
    if (name == "baseline-" + std::string(opt)) return baseline(std::string(name), kind);
    if (name == "sorted-" + std::string(opt)) {
      auto cfg = baseline(std::string(name), kind);
      cfg.schedule.mode = ScheduleMode::Sorted;
      cfg.epochs = 100;
      return cfg;
    }
  }
  if (name == "sgd_combined") {
    auto cfg = baseline("sgd_combined", OptimizerKind::SGD);
    cfg.schedule.batch_size = 1;
    cfg.optimizer.momentum = 0.9;
    return cfg;
  }
  if (name == "adam_combined") {
    auto cfg = baseline("adam_combined", OptimizerKind::Adam);
    cfg.schedule.mode = ScheduleMode::SingleClass;
    cfg.hidden_widths = {768};
    return cfg;
  }
  return std::nullopt;
}

std::vector<std::string> experiment_preset_names() {
  std::vector<std::string> names;
  for (const char* opt : {"sgd", "adagrad", "adadelta", "adam"}) names.push_back(std::string("baseline-") + opt);
  for (const char* opt : {"sgd", "adagrad", "adadelta", "adam"}) names.push_back(std::string("sorted-") + opt);
  names.push_back("sgd_combined");
  names.push_back("adam_combined");
  return names;
}

}  // namespace actsel
