#include "actsel/results.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "actsel/errors.hpp"

namespace actsel {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool same(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

bool same(const LayerMetrics& a, const LayerMetrics& b) {
  return same(a.sparsity, b.sparsity) && same(a.selectivity_mean, b.selectivity_mean) &&
         same(a.selectivity_std, b.selectivity_std);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  // Only the experiment name can need quoting.
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

template <typename T>
T parse_unsigned(const std::string& text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError("expected an unsigned integer, got '" + text + "'");
  }
  return value;
}

}  // namespace

bool EpochRow::operator==(const EpochRow& o) const {
  return experiment == o.experiment && seed == o.seed && epoch == o.epoch && same(accuracy, o.accuracy) &&
         layer == o.layer && same(sparsity, o.sparsity) && same(selectivity_mean, o.selectivity_mean) &&
         same(selectivity_std, o.selectivity_std) && same(uniform, o.uniform) && same(weighted, o.weighted) &&
         diverged == o.diverged && same(loss, o.loss) && same(train_loss, o.train_loss);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& text) {
  if (text.empty()) return kNaN;
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size()) throw ParseError("expected a number, got '" + text + "'");
  return v;
}

const std::vector<std::string>& epoch_csv_columns() {
  static const std::vector<std::string> columns{
      "experiment",
      "seed",
      "epoch",
      "accuracy",
      "layer",
      "sparsity",
      "selectivity_mean",
      "selectivity_std",
      "aggregate_uniform_sparsity",
      "aggregate_uniform_selectivity_mean",
      "aggregate_uniform_selectivity_std",
      "aggregate_weighted_sparsity",
      "aggregate_weighted_selectivity_mean",
      "aggregate_weighted_selectivity_std",
      "diverged",
      "loss",
      "train_loss",
  };
  return columns;
}

std::vector<EpochRow> epoch_rows(const std::string& experiment, const TrialRecord& trial, bool train_split) {
  std::vector<EpochRow> rows;
  for (const auto& rec : trial.epochs) {
    if (train_split && !rec.train) continue;
    const EpochMetrics& m = train_split ? *rec.train : rec.test;
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      EpochRow row;
      row.experiment = experiment;
      row.seed = trial.seed_index;
      row.epoch = rec.epoch;
      row.accuracy = m.accuracy;
      row.layer = l + 1;
      row.sparsity = m.layers[l].sparsity;
      row.selectivity_mean = m.layers[l].selectivity_mean;
      row.selectivity_std = m.layers[l].selectivity_std;
      row.uniform = {m.uniform.sparsity, m.uniform.selectivity_mean, m.uniform.selectivity_std, {}};
      row.weighted = {m.weighted.sparsity, m.weighted.selectivity_mean, m.weighted.selectivity_std, {}};
      row.diverged = rec.diverged;
      row.loss = m.loss;
      row.train_loss = rec.train_loss;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_epoch_csv_header(std::ostream& out) {
  const auto& cols = epoch_csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
}

void write_epoch_rows(std::ostream& out, const std::vector<EpochRow>& rows) {
  for (const auto& r : rows) {
    out << quote(r.experiment) << ',' << r.seed << ',' << r.epoch << ',' << format_double(r.accuracy) << ','
        << r.layer << ',' << format_double(r.sparsity) << ',' << format_double(r.selectivity_mean) << ','
        << format_double(r.selectivity_std) << ',' << format_double(r.uniform.sparsity) << ','
        << format_double(r.uniform.selectivity_mean) << ',' << format_double(r.uniform.selectivity_std) << ','
        << format_double(r.weighted.sparsity) << ',' << format_double(r.weighted.selectivity_mean) << ','
        << format_double(r.weighted.selectivity_std) << ',' << (r.diverged ? 1 : 0) << ','
        << format_double(r.loss) << ',' << format_double(r.train_loss) << '\n';
  }
}

std::vector<EpochRow> read_epoch_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty results file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  const auto& cols = epoch_csv_columns();
  if (header != cols) throw ParseError("line 1: unexpected header '" + line + "'");

  std::vector<EpochRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    try {
      if (f.size() != cols.size()) {
        throw ParseError("expected " + std::to_string(cols.size()) + " fields, got " + std::to_string(f.size()));
      }
      EpochRow r;
      r.experiment = f[0];
      r.seed = parse_unsigned<std::uint64_t>(f[1]);
      r.epoch = parse_unsigned<std::size_t>(f[2]);
      r.accuracy = parse_double(f[3]);
      r.layer = parse_unsigned<std::size_t>(f[4]);
      r.sparsity = parse_double(f[5]);
      r.selectivity_mean = parse_double(f[6]);
      r.selectivity_std = parse_double(f[7]);
      r.uniform.sparsity = parse_double(f[8]);
      r.uniform.selectivity_mean = parse_double(f[9]);
      r.uniform.selectivity_std = parse_double(f[10]);
      r.weighted.sparsity = parse_double(f[11]);
      r.weighted.selectivity_mean = parse_double(f[12]);
      r.weighted.selectivity_std = parse_double(f[13]);
      if (f[14] != "0" && f[14] != "1") throw ParseError("diverged must be 0 or 1");
      r.diverged = f[14] == "1";
      r.loss = parse_double(f[15]);
      r.train_loss = parse_double(f[16]);
      rows.push_back(std::move(r));
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

std::vector<EpochRow> read_epoch_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return read_epoch_csv(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::vector<ParsedExperiment> trials_from_rows(const std::vector<EpochRow>& rows) {
  std::vector<ParsedExperiment> out;
  std::map<std::string, std::size_t> index;
  for (const auto& r : rows) {
    auto [it, inserted] = index.try_emplace(r.experiment, out.size());
    if (inserted) out.push_back({r.experiment, {}});
    auto& trials = out[it->second].trials;
    auto trial = std::find_if(trials.begin(), trials.end(), [&](const auto& t) { return t.seed_index == r.seed; });
    if (trial == trials.end()) {
      trials.push_back({r.seed, 0, {}});
      trial = std::prev(trials.end());
    }
    if (trial->epochs.empty() || trial->epochs.back().epoch != r.epoch) {
      EpochRecord rec;
      rec.epoch = r.epoch;
      rec.diverged = r.diverged;
      rec.train_loss = r.train_loss;
      rec.test.accuracy = r.accuracy;
      rec.test.loss = r.loss;
      rec.test.uniform = r.uniform;
      rec.test.weighted = r.weighted;
      trial->epochs.push_back(std::move(rec));
    }
    trial->epochs.back().test.layers.push_back({r.sparsity, r.selectivity_mean, r.selectivity_std, {}});
  }
  for (auto& e : out) {
    std::sort(e.trials.begin(), e.trials.end(),
              [](const TrialRecord& a, const TrialRecord& b) { return a.seed_index < b.seed_index; });
    const std::size_t epochs = e.trials.front().epochs.size();
    for (const auto& t : e.trials) {
      if (t.epochs.size() != epochs) {
        throw ParseError("experiment " + e.name + ": seeds have different epoch counts");
      }
    }
  }
  return out;
}

void write_plot_csv(std::ostream& out, const std::string& experiment, const std::vector<EpochSummary>& epochs,
                    bool header) {
  if (header) out << "experiment,epoch,quantity,mean,stderr,n,diverged_seeds\n";
  for (const auto& e : epochs) {
    for (const auto& [name, stat] : e.stats) {
      out << quote(experiment) << ',' << e.epoch << ',' << name << ',' << format_double(stat.mean) << ','
          << format_double(stat.stderr_) << ',' << stat.n << ',' << e.diverged_seeds << '\n';
    }
  }
}

json summary_json(const ExperimentResult& result) {
  json j;
  j["experiment"] = result.config.name;
  j["fluctuation_scale"] = result.fluctuation;
  if (result.epochs.empty()) return j;
  const EpochSummary& last = result.last();
  j["epoch"] = last.epoch;
  j["diverged_seeds"] = last.diverged_seeds;
  json metrics = json::object();
  for (const auto& [name, stat] : last.stats) {
    metrics[name] = {{"mean", stat.missing() ? json(nullptr) : json(stat.mean)},
                     {"stderr", stat.missing() ? json(nullptr) : json(stat.stderr_)},
                     {"n", stat.n},
                     {"stderr_defined", stat.stderr_defined}};
  }
  j["last_epoch"] = std::move(metrics);
  return j;
}

json RunManifest::to_json() const {
  return {{"config_hash", config_hash}, {"seeds", seeds},           {"version", version},
          {"started_at", started_at},   {"finished_at", finished_at}, {"outputs", outputs}};
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace actsel
