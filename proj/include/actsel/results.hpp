#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "actsel/harness.hpp"

namespace actsel {

// One row of the long-format per-epoch CSV. Per-layer rows carry the layer
// metrics; every row repeats the epoch-level accuracy and both aggregates.
struct EpochRow {
  std::string experiment;
  std::uint64_t seed = 0;  // seed index
  std::size_t epoch = 0;
  double accuracy = 0.0;
  std::size_t layer = 0;  // 1-based
  double sparsity = 0.0;
  double selectivity_mean = 0.0;
  double selectivity_std = 0.0;
  LayerMetrics uniform;
  LayerMetrics weighted;
  bool diverged = false;
  double loss = 0.0;
  double train_loss = 0.0;

  bool operator==(const EpochRow& other) const;  // NaN equals NaN
};

const std::vector<std::string>& epoch_csv_columns();

std::vector<EpochRow> epoch_rows(const std::string& experiment, const TrialRecord& trial, bool train_split = false);

void write_epoch_csv_header(std::ostream& out);
void write_epoch_rows(std::ostream& out, const std::vector<EpochRow>& rows);
// Throws ParseError naming the line.
std::vector<EpochRow> read_epoch_csv(std::istream& in);
std::vector<EpochRow> read_epoch_csv(const std::filesystem::path& path);

// Rows back into trial records, grouped by experiment (first-seen order).
struct ParsedExperiment {
  std::string name;
  std::vector<TrialRecord> trials;
};
std::vector<ParsedExperiment> trials_from_rows(const std::vector<EpochRow>& rows);

// Long-format plot table: experiment, epoch, quantity, mean, stderr, n.
void write_plot_csv(std::ostream& out, const std::string& experiment, const std::vector<EpochSummary>& epochs,
                    bool header);

// Last-epoch mean ± stderr for every quantity.
nlohmann::json summary_json(const ExperimentResult& result);

struct RunManifest {
  std::string config_hash;
  std::vector<std::uint64_t> seeds;
  std::string version;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> outputs;

  nlohmann::json to_json() const;
};

std::string utc_timestamp();

// %.17g; NaN as the empty string.
std::string format_double(double v);
double parse_double(const std::string& text);

}  // namespace actsel
