#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "actsel/harness.hpp"

namespace actsel {

// One config file: an experiment, optionally expanded along a sweep axis.
struct RunConfig {
  ExperimentConfig experiment;
  struct Sweep {
    SweepAxis axis;
    std::vector<SweepValue> values;
  };
  std::optional<Sweep> sweep;

  // The experiments this config expands to, in order.
  std::vector<ExperimentConfig> expand() const;
};

// Keys:
//   preset        named experiment preset used as the base (optional)
//   name, epochs, seeds (count or list of indices), train_subsample,
//   measure_train_set, trace_dir
//   model         {hidden_layers, neurons} or {hidden_widths: [...]}
//   optimizer     {kind, learning_rate, weight_decay, momentum, rho,
//                  betas: [b1, b2], eps, k}
//   schedule      {mode, batch_size, run_length, groups}
//   sweep         {axis, values} or {preset, limit}
// Without a preset, name/model/optimizer/schedule/epochs/seeds are required.
// Throws ConfigError naming every offending field.
RunConfig parse_run_config(const nlohmann::json& doc);

// A file path, or a preset name when no such file exists. Throws ConfigError
// (including for malformed JSON).
RunConfig load_run_config(const std::string& path_or_preset);

nlohmann::json to_json(const ExperimentConfig& cfg);
nlohmann::json to_json(const RunConfig& cfg);

// sha256 of the canonical (sorted-key, compact) serialisation.
std::string config_hash(const nlohmann::json& doc);

}  // namespace actsel
