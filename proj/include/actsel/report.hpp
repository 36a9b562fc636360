#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "actsel/harness.hpp"
#include "actsel/results.hpp"

namespace actsel {

// Per-epoch summaries of every experiment found in the loaded result files.
struct ResultSet {
  std::map<std::string, std::vector<EpochSummary>> experiments;

  // Accepts run output directories (reads epochs.csv) or CSV files.
  void load(const std::filesystem::path& path);
  void add_rows(const std::vector<EpochRow>& rows);
  // Mean across seeds; epoch 0 means the last epoch. Throws InputError.
  double mean(const std::string& experiment, const std::string& quantity, std::size_t epoch = 0) const;
};

enum class Verdict { Pass, Fail, Tie };
std::string_view to_string(Verdict v);

// Assertion kinds, as JSON objects:
//   {"type": "compare", "metric": m, "a": {"experiment": x, "epoch": e},
//    "b": {...}, "expect": "greater" | "less"}
//   {"type": "monotone", "metric": m, "experiment": x, "direction":
//    "increasing" | "decreasing", "from": e0, "to": e1, "strict": bool}
// Epochs default to the last one ("from" defaults to 1). A monotone check
// compares the endpoints, or every consecutive pair when strict.
// Optional "name" and "tolerance" (absolute; default 0, within it → tie).
struct AssertionResult {
  std::string name;
  Verdict verdict = Verdict::Fail;
  std::string detail;
};

AssertionResult evaluate_assertion(const ResultSet& results, const nlohmann::json& assertion);
// Accepts {"assertions": [...]} or a bare list. Throws ConfigError.
std::vector<AssertionResult> evaluate_assertions(const ResultSet& results, const nlohmann::json& doc);

// Row-wise accuracy × aggregate metric products from per-epoch rows.
// Columns: experiment, seed, epoch, accuracy, sparsity, selectivity_mean,
// accuracy_x_sparsity, accuracy_x_selectivity.
void write_product_csv(std::ostream& out, const std::vector<EpochRow>& rows);

}  // namespace actsel
