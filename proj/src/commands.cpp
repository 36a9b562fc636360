#include "actsel/commands.hpp"

#include <cstdlib>
#include <fstream>
#include <ostream>

#include <spdlog/spdlog.h>

#include "actsel/config.hpp"
#include "actsel/errors.hpp"
#include "actsel/fetch.hpp"
#include "actsel/idx.hpp"
#include "actsel/report.hpp"
#include "actsel/results.hpp"

#ifndef ACTSEL_DEFAULT_DATA_DIR
#define ACTSEL_DEFAULT_DATA_DIR "data/mnist"
#endif

namespace actsel {

using nlohmann::json;

namespace {

bool is_data_error(const std::exception& e) {
  return dynamic_cast<const InputError*>(&e) || dynamic_cast<const FormatError*>(&e) ||
         dynamic_cast<const ConsistencyError*>(&e);
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream f(path);
  f << doc.dump(2) << '\n';
  if (!f) throw Error("cannot write " + path.string());
}

}  // namespace

std::filesystem::path resolve_data_dir(const std::optional<std::filesystem::path>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("ACTSEL_DATA_DIR"); env && *env) return env;
  return ACTSEL_DEFAULT_DATA_DIR;
}

int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err) {
  RunConfig run;
  std::vector<ExperimentConfig> experiments;
  try {
    run = load_run_config(args.config);
    ExperimentConfig& base = run.experiment;
    if (args.seeds) {
      if (*args.seeds == 0) throw ConfigError("--seeds must be positive");
      base.seeds.clear();
      for (std::size_t i = 0; i < *args.seeds; ++i) base.seeds.push_back(i);
    }
    if (args.subsample) base.train_subsample = *args.subsample;
    if (args.epochs) base.epochs = *args.epochs;
    base.validate();
    experiments = run.expand();
  } catch (const ConfigError& e) {
    err << e.what() << '\n';
    return kExitConfig;
  }

  TrainTestData data;
  const auto data_dir = resolve_data_dir(args.data_dir);
  try {
    MnistSplit split = load_mnist(data_dir);
    data.train = std::move(split.train);
    data.test = std::move(split.test);
    if (run.experiment.train_subsample && *run.experiment.train_subsample > data.train.size()) {
      throw ConfigError("train_subsample " + std::to_string(*run.experiment.train_subsample) +
                        " exceeds the training set size " + std::to_string(data.train.size()));
    }
  } catch (const ConfigError& e) {
    err << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  }

  RunManifest manifest;
  manifest.started_at = utc_timestamp();
  manifest.version = ACTSEL_VERSION;
  const json resolved = to_json(run);
  manifest.config_hash = config_hash(resolved);
  manifest.seeds = run.experiment.seeds;

  std::vector<ExperimentResult> results;
  try {
    RunOptions options;
    options.threads = args.threads;
    options.on_epoch = [](const TrialRecord& t, const EpochRecord& e) {
      spdlog::info("seed {} epoch {}: accuracy {:.4f} sparsity {:.4f} selectivity {:.4f}{}", t.seed_index, e.epoch,
                   e.test.accuracy, e.test.uniform.sparsity, e.test.uniform.selectivity_mean,
                   e.diverged ? " (diverged)" : "");
    };
    if (run.sweep) {
      results = run_sweep(run.experiment, run.sweep->axis, run.sweep->values, data, options);
    } else {
      results.push_back(run_experiment(experiments.front(), data, options));
    }
  } catch (const ConfigError& e) {
    err << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << (is_data_error(e) ? "data error: " : "error: ") << e.what() << '\n';
    return is_data_error(e) ? kExitData : kExitFailure;
  }

  try {
    std::filesystem::create_directories(args.out);
    const auto epochs_path = args.out / "epochs.csv";
    const auto plot_path = args.out / "plot.csv";
    const auto summary_path = args.out / "summary.json";
    const auto config_path = args.out / "config.json";
    {
      std::ofstream csv(epochs_path);
      write_epoch_csv_header(csv);
      for (const auto& r : results) {
        for (const auto& t : r.trials) write_epoch_rows(csv, epoch_rows(r.config.name, t));
      }
    }
    manifest.outputs.push_back(epochs_path.string());
    if (run.experiment.measure_train_set) {
      const auto train_path = args.out / "epochs_train.csv";
      std::ofstream csv(train_path);
      write_epoch_csv_header(csv);
      for (const auto& r : results) {
        for (const auto& t : r.trials) write_epoch_rows(csv, epoch_rows(r.config.name, t, true));
      }
      manifest.outputs.push_back(train_path.string());
    }
    {
      std::ofstream plot(plot_path);
      bool header = true;
      for (const auto& r : results) {
        write_plot_csv(plot, r.config.name, r.epochs, header);
        header = false;
      }
    }
    manifest.outputs.push_back(plot_path.string());
    json summary = json::array();
    for (const auto& r : results) summary.push_back(summary_json(r));
    write_json(summary_path, summary);
    manifest.outputs.push_back(summary_path.string());
    write_json(config_path, resolved);
    manifest.outputs.push_back(config_path.string());
    manifest.finished_at = utc_timestamp();
    write_json(args.out / "manifest.json", manifest.to_json());
  } catch (const std::exception& e) {
    err << "error writing results: " << e.what() << '\n';
    return kExitFailure;
  }

  for (const auto& r : results) {
    const auto& last = r.last().stats;
    out << r.config.name << ": accuracy " << last.at("accuracy").mean << " ± " << last.at("accuracy").stderr_
        << ", sparsity " << last.at("sparsity").mean << " ± " << last.at("sparsity").stderr_ << ", selectivity "
        << last.at("selectivity_mean").mean << " ± " << last.at("selectivity_mean").stderr_ << '\n';
  }
  return kExitOk;
}

int cmd_report(const ReportArgs& args, std::ostream& out, std::ostream& err) {
  if (args.results.empty()) {
    err << "report needs at least one result file\n";
    return kExitConfig;
  }
  ResultSet set;
  std::vector<EpochRow> all_rows;
  try {
    for (const auto& p : args.results) {
      const auto file = std::filesystem::is_directory(p) ? p / "epochs.csv" : p;
      if (!std::filesystem::exists(file)) throw InputError("result file not found: " + file.string());
      auto rows = read_epoch_csv(file);
      set.add_rows(rows);
      all_rows.insert(all_rows.end(), rows.begin(), rows.end());
    }
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return kExitData;
  }

  for (const auto& [name, epochs] : set.experiments) {
    const auto& s = epochs.back().stats;
    out << name << " (epoch " << epochs.back().epoch << "): accuracy " << s.at("accuracy").mean << ", sparsity "
        << s.at("sparsity").mean << ", selectivity " << s.at("selectivity_mean").mean << ", accuracy×sparsity "
        << s.at("accuracy_x_sparsity").mean << ", accuracy×selectivity " << s.at("accuracy_x_selectivity").mean
        << '\n';
  }

  if (args.products) {
    std::ofstream f(*args.products);
    write_product_csv(f, all_rows);
    if (!f) {
      err << "cannot write " << args.products->string() << '\n';
      return kExitFailure;
    }
  }

  if (!args.asserts) return kExitOk;
  std::vector<AssertionResult> verdicts;
  try {
    std::ifstream f(*args.asserts);
    if (!f) throw ConfigError("cannot open asserts file " + args.asserts->string());
    json doc;
    try {
      doc = json::parse(f);
    } catch (const json::parse_error& e) {
      throw ConfigError("malformed asserts file: " + std::string(e.what()));
    }
    verdicts = evaluate_assertions(set, doc);
  } catch (const ConfigError& e) {
    err << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return kExitData;
  }
  bool failed = false;
  for (const auto& v : verdicts) {
    out << to_string(v.verdict) << "  " << v.name << "  (" << v.detail << ")\n";
    failed = failed || v.verdict == Verdict::Fail;
  }
  return failed ? kExitFailure : kExitOk;
}

int cmd_data_fetch(const std::filesystem::path& dir, std::ostream& out, std::ostream& err) {
  try {
    FetchOptions options;
    options.log = [&out](const std::string& msg) { out << msg << '\n'; };
    fetch_mnist(dir, options);
  } catch (const std::exception& e) {
    err << "fetch failed: " << e.what() << '\n';
    return kExitData;
  }
  return cmd_data_verify(dir, out, err);
}

int cmd_data_verify(const std::filesystem::path& dir, std::ostream& out, std::ostream& err) {
  bool ok = true;
  for (const auto& entry : verify_mnist(dir)) {
    (entry.ok ? out : err) << (entry.ok ? "ok      " : "FAILED  ") << entry.stem << "  " << entry.count << "  "
                           << entry.message << '\n';
    ok = ok && entry.ok;
  }
  return ok ? kExitOk : kExitData;
}

}  // namespace actsel
