#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "actsel/dataset.hpp"
#include "actsel/metrics.hpp"
#include "actsel/optim.hpp"
#include "actsel/schedule.hpp"

namespace actsel {

struct ExperimentConfig {
  std::string name;
  std::vector<std::size_t> hidden_widths{256};
  OptimizerConfig optimizer;
  BatchSchedule schedule;
  std::size_t epochs = 30;
  std::vector<std::uint64_t> seeds{0, 1, 2};  // seed indices
  std::optional<std::size_t> train_subsample;
  bool measure_train_set = false;
  std::optional<std::filesystem::path> trace_dir;

  // Throws ConfigError.
  void validate() const;
};

struct EpochMetrics {
  double accuracy = 0.0;
  double loss = 0.0;
  std::vector<LayerMetrics> layers;
  LayerMetrics uniform;
  LayerMetrics weighted;
};

// Metrics of a diverged epoch are NaN.
struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  bool diverged = false;
  double train_loss = 0.0;  // mean over the epoch's training steps
  EpochMetrics test;
  std::optional<EpochMetrics> train;
};

struct TrialRecord {
  std::uint64_t seed_index = 0;
  std::uint64_t seed = 0;  // derived from (experiment name, seed index)
  std::vector<EpochRecord> epochs;
};

struct TrainTestData {
  Dataset train;
  Dataset test;
};

using EpochCallback = std::function<void(const TrialRecord&, const EpochRecord&)>;

// Trains for cfg.epochs on the configured schedule; after every epoch runs a
// full test pass with activation capture and measures accuracy, per-layer
// Hoyer / CCMAS and both aggregates from that same pass. A non-finite loss
// marks the epoch and all later ones as diverged.
TrialRecord run_trial(const ExperimentConfig& cfg, std::uint64_t seed_index, const TrainTestData& data,
                      const EpochCallback& on_epoch = {});

// mean ± standard error across seeds; NaN (diverged) entries are excluded.
struct Stat {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
  bool stderr_defined = false;  // false when n < 2 (stderr reported as 0)
  bool missing() const { return n == 0; }
};

Stat summarize(std::span<const double> values);

// Scalar quantities extracted per (seed, epoch): accuracy, loss, train_loss,
// sparsity, selectivity_mean, selectivity_std (uniform aggregate),
// weighted_*, accuracy_x_sparsity, accuracy_x_selectivity, layerK_* and, when
// measured, train_*.
std::map<std::string, double> epoch_quantities(const EpochRecord& record);

struct EpochSummary {
  std::size_t epoch = 0;
  std::size_t diverged_seeds = 0;
  std::map<std::string, Stat> stats;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<TrialRecord> trials;
  std::vector<EpochSummary> epochs;
  double fluctuation = 0.0;  // η/(1−γ)(N/B − 1) for the training set used

  // Values extracted at the final epoch.
  const EpochSummary& last() const { return epochs.back(); }
};

std::vector<EpochSummary> aggregate_trials(std::span<const TrialRecord> trials);

struct RunOptions {
  std::size_t threads = 0;  // 0 → hardware concurrency
  EpochCallback on_epoch;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg, const TrainTestData& data,
                                const RunOptions& options = {});

// ---- sweeps ---------------------------------------------------------------

enum class SweepAxis {
  LearningRate,
  WeightDecay,
  Momentum,
  Rho,
  BetasJoint,
  Beta1,
  Beta2,
  BatchSize,
  HiddenLayers,
  Neurons,
  ScheduleMode,
};

std::string_view to_string(SweepAxis axis);
// Throws ConfigError for unknown names.
SweepAxis parse_sweep_axis(std::string_view text);

// Numbers for numeric axes; schedule modes as text ("single", "pair",
// "five", "random", "sorted", "consecutive:5").
using SweepValue = std::variant<double, std::string>;

std::string format_sweep_value(const SweepValue& value);

// Copy of base with one axis set; the name gets a "/axis=value" suffix.
ExperimentConfig apply_sweep_value(const ExperimentConfig& base, SweepAxis axis, const SweepValue& value);

std::vector<ExperimentResult> run_sweep(const ExperimentConfig& base, SweepAxis axis,
                                        std::span<const SweepValue> values, const TrainTestData& data,
                                        const RunOptions& options = {});

struct SweepPreset {
  SweepAxis axis;
  std::vector<SweepValue> values;
};

// Published grids: weight_decay, learning_rate, momentum, rho, betas,
// betas_lhs, betas_rhs, batch_size, neurons, hidden_layers,
// class_diversity, consecutive, sorted.
SweepPreset sweep_preset(std::string_view name, OptimizerKind kind);
std::vector<std::string> sweep_preset_names();

// Named experiment presets: baseline-{sgd,adagrad,adadelta,adam},
// sorted-{...}, sgd_combined, adam_combined.
std::optional<ExperimentConfig> experiment_preset(std::string_view name);
std::vector<std::string> experiment_preset_names();

// numpy.logspace(lo, hi, count)
std::vector<double> logspace(double lo, double hi, std::size_t count);

}  // namespace actsel
