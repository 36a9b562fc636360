#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace actsel {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitData = 3 };

// --dir, else $ACTSEL_DATA_DIR, else the build-time default.
std::filesystem::path resolve_data_dir(const std::optional<std::filesystem::path>& flag);

struct RunArgs {
  std::string config;  // file path or preset name
  std::filesystem::path out;
  std::optional<std::size_t> seeds;
  std::optional<std::size_t> subsample;
  std::optional<std::size_t> epochs;
  std::size_t threads = 0;
  std::optional<std::filesystem::path> data_dir;
};

// Writes epochs.csv, plot.csv, summary.json, config.json and manifest.json
// (plus epochs_train.csv when the train set is measured) under out.
int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err);

struct ReportArgs {
  std::vector<std::filesystem::path> results;
  std::optional<std::filesystem::path> asserts;
  std::optional<std::filesystem::path> products;  // accuracy × metric CSV
};

// Exit 0 when every assertion passes or ties, 1 when any fails.
int cmd_report(const ReportArgs& args, std::ostream& out, std::ostream& err);

int cmd_data_fetch(const std::filesystem::path& dir, std::ostream& out, std::ostream& err);
int cmd_data_verify(const std::filesystem::path& dir, std::ostream& out, std::ostream& err);

}  // namespace actsel
