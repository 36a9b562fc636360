#include "actsel/report.hpp"

#include <cmath>
#include <ostream>

#include "actsel/errors.hpp"

namespace actsel {

using nlohmann::json;

void ResultSet::load(const std::filesystem::path& path) {
  const auto file = std::filesystem::is_directory(path) ? path / "epochs.csv" : path;
  if (!std::filesystem::exists(file)) throw InputError("result file not found: " + file.string());
  add_rows(read_epoch_csv(file));
}

void ResultSet::add_rows(const std::vector<EpochRow>& rows) {
  for (auto& parsed : trials_from_rows(rows)) {
    experiments[parsed.name] = aggregate_trials(parsed.trials);
  }
}

double ResultSet::mean(const std::string& experiment, const std::string& quantity, std::size_t epoch) const {
  const auto it = experiments.find(experiment);
  if (it == experiments.end()) throw InputError("no results for experiment '" + experiment + "'");
  const auto& epochs = it->second;
  if (epochs.empty()) throw InputError("experiment '" + experiment + "' has no epochs");
  const std::size_t e = epoch == 0 ? epochs.size() : epoch;
  if (e > epochs.size()) {
    throw InputError("experiment '" + experiment + "' has no epoch " + std::to_string(e));
  }
  const auto& stats = epochs[e - 1].stats;
  const auto q = stats.find(quantity);
  if (q == stats.end()) throw InputError("unknown quantity '" + quantity + "'");
  return q->second.mean;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass:
      return "pass";
    case Verdict::Fail:
      return "fail";
    case Verdict::Tie:
      return "tie";
  }
  return "fail";
}

namespace {

std::size_t epoch_of(const json& obj, const char* key, std::size_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (v.is_string() && v.get<std::string>() == "last") return 0;
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(std::string("assertion field '") + key + "' must be an epoch");
  }
  return v.get<std::size_t>();
}

std::string text_of(const json& obj, const char* key) {
  if (!obj.contains(key) || !obj.at(key).is_string()) {
    throw ConfigError(std::string("assertion field '") + key + "' is missing or not a string");
  }
  return obj.at(key).get<std::string>();
}

// Verdict for "x expected greater than y".
Verdict order(double x, double y, double tol) {
  if (std::isnan(x) || std::isnan(y)) return Verdict::Fail;
  if (std::fabs(x - y) <= tol) return Verdict::Tie;
  return x > y ? Verdict::Pass : Verdict::Fail;
}

std::string show(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string epoch_label(std::size_t e) { return e == 0 ? "last" : std::to_string(e); }

}  // namespace

AssertionResult evaluate_assertion(const ResultSet& results, const json& a) {
  if (!a.is_object()) throw ConfigError("assertion must be an object");
  const std::string type = text_of(a, "type");
  const std::string metric = text_of(a, "metric");
  const double tol = a.value("tolerance", 0.0);
  AssertionResult r;

  if (type == "compare") {
    if (!a.contains("a") || !a.contains("b")) throw ConfigError("compare assertion needs 'a' and 'b'");
    const std::string expect = a.value("expect", std::string("greater"));
    if (expect != "greater" && expect != "less") throw ConfigError("expect must be 'greater' or 'less'");
    const std::string xa = text_of(a.at("a"), "experiment");
    const std::string xb = text_of(a.at("b"), "experiment");
    const std::size_t ea = epoch_of(a.at("a"), "epoch", 0);
    const std::size_t eb = epoch_of(a.at("b"), "epoch", 0);
    const double va = results.mean(xa, metric, ea);
    const double vb = results.mean(xb, metric, eb);
    r.name = a.value("name", metric + ": " + xa + " " + expect + " than " + xb);
    r.verdict = expect == "greater" ? order(va, vb, tol) : order(vb, va, tol);
    r.detail = xa + "@" + epoch_label(ea) + "=" + show(va) + " vs " + xb + "@" + epoch_label(eb) + "=" + show(vb);
    return r;
  }

  if (type == "monotone") {
    const std::string x = text_of(a, "experiment");
    const std::string direction = a.value("direction", std::string("increasing"));
    if (direction != "increasing" && direction != "decreasing") {
      throw ConfigError("direction must be 'increasing' or 'decreasing'");
    }
    const auto it = results.experiments.find(x);
    if (it == results.experiments.end()) throw InputError("no results for experiment '" + x + "'");
    const std::size_t last = it->second.size();
    std::size_t from = epoch_of(a, "from", 1);
    std::size_t to = epoch_of(a, "to", 0);
    if (from == 0) from = last;
    if (to == 0) to = last;
    if (from >= to) throw ConfigError("monotone assertion needs from < to");
    const bool up = direction == "increasing";
    r.name = a.value("name", metric + " " + direction + " over " + x);
    std::vector<std::pair<std::size_t, std::size_t>> steps;
    if (a.value("strict", false)) {
      for (std::size_t e = from; e < to; ++e) steps.emplace_back(e, e + 1);
    } else {
      steps.emplace_back(from, to);
    }
    r.verdict = Verdict::Tie;
    for (const auto& [e0, e1] : steps) {
      const double v0 = results.mean(x, metric, e0);
      const double v1 = results.mean(x, metric, e1);
      const Verdict v = up ? order(v1, v0, tol) : order(v0, v1, tol);
      if (v == Verdict::Fail) {
        r.verdict = Verdict::Fail;
        r.detail = "epoch " + std::to_string(e0) + "=" + show(v0) + " -> epoch " + std::to_string(e1) + "=" + show(v1);
        return r;
      }
      if (v == Verdict::Pass) r.verdict = Verdict::Pass;
    }
    r.detail = "epoch " + std::to_string(from) + "=" + show(results.mean(x, metric, from)) + " -> epoch " +
               std::to_string(to) + "=" + show(results.mean(x, metric, to));
    return r;
  }
  throw ConfigError("unknown assertion type '" + type + "'");
}

std::vector<AssertionResult> evaluate_assertions(const ResultSet& results, const json& doc) {
  const json& list = doc.is_object() && doc.contains("assertions") ? doc.at("assertions") : doc;
  if (!list.is_array()) throw ConfigError("asserts file must hold a list of assertions");
  std::vector<AssertionResult> out;
  for (const auto& a : list) out.push_back(evaluate_assertion(results, a));
  return out;
}

void write_product_csv(std::ostream& out, const std::vector<EpochRow>& rows) {
  out << "experiment,seed,epoch,accuracy,sparsity,selectivity_mean,accuracy_x_sparsity,accuracy_x_selectivity\n";
  for (const auto& r : rows) {
    if (r.layer != 1) continue;  // epoch-level values repeat on every layer row
    std::string name = r.experiment;
    if (name.find_first_of(",\"") != std::string::npos) {
      std::string q = "\"";
      for (char c : name) q += c == '"' ? std::string("\"\"") : std::string(1, c);
      name = q + "\"";
    }
    out << name << ',' << r.seed << ',' << r.epoch << ',' << format_double(r.accuracy) << ','
        << format_double(r.uniform.sparsity) << ',' << format_double(r.uniform.selectivity_mean) << ','
        << format_double(r.accuracy * r.uniform.sparsity) << ','
        << format_double(r.accuracy * r.uniform.selectivity_mean) << '\n';
  }
}

}  // namespace actsel
