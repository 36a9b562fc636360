#include "actsel/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "actsel/compress.hpp"
#include "actsel/errors.hpp"

namespace actsel {

using nlohmann::json;

namespace {

// Collects field-level problems so one error lists all of them.
class Problems {
 public:
  void add(std::string field, std::string what) { items_.push_back(std::move(field) + ": " + std::move(what)); }
  bool empty() const { return items_.empty(); }
  void raise() const {
    if (items_.empty()) return;
    std::string msg = "invalid config:";
    for (const auto& p : items_) msg += "\n  " + p;
    throw ConfigError(msg);
  }

 private:
  std::vector<std::string> items_;
};

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed,
                Problems& problems) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!ok.contains(key)) problems.add(where.empty() ? key : where + "." + key, "unknown key");
  }
}

template <typename T>
void read_number(const json& obj, const char* key, const std::string& field, T& out, Problems& problems) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      problems.add(field, "expected a non-negative integer");
      return;
    }
    out = v.get<T>();
  } else {
    if (!v.is_number()) {
      problems.add(field, "expected a number");
      return;
    }
    out = v.get<T>();
  }
}

SweepValue sweep_value_from_json(const json& v, const std::string& field, Problems& problems) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return v.get<std::string>();
  problems.add(field, "sweep values must be numbers or schedule mode names");
  return 0.0;
}

void read_model(const json& m, ExperimentConfig& cfg, Problems& problems) {
  if (!m.is_object()) {
    problems.add("model", "expected an object");
    return;
  }
  check_keys(m, "model", {"hidden_layers", "neurons", "hidden_widths"}, problems);
  if (m.contains("hidden_widths")) {
    if (m.contains("hidden_layers") || m.contains("neurons")) {
      problems.add("model", "give either hidden_widths or hidden_layers/neurons");
    }
    const json& w = m.at("hidden_widths");
    if (!w.is_array() || w.empty()) {
      problems.add("model.hidden_widths", "expected a non-empty list");
      return;
    }
    cfg.hidden_widths.clear();
    for (const auto& x : w) {
      if (!x.is_number_integer() || x.get<long long>() <= 0) {
        problems.add("model.hidden_widths", "widths must be positive integers");
        return;
      }
      cfg.hidden_widths.push_back(x.get<std::size_t>());
    }
    return;
  }
  std::size_t layers = cfg.hidden_widths.size();
  std::size_t neurons = cfg.hidden_widths.empty() ? 256 : cfg.hidden_widths.front();
  read_number(m, "hidden_layers", "model.hidden_layers", layers, problems);
  read_number(m, "neurons", "model.neurons", neurons, problems);
  cfg.hidden_widths.assign(layers, neurons);
}

void read_optimizer(const json& o, ExperimentConfig& cfg, Problems& problems) {
  if (!o.is_object()) {
    problems.add("optimizer", "expected an object");
    return;
  }
  check_keys(o, "optimizer", {"kind", "learning_rate", "weight_decay", "momentum", "rho", "betas", "eps", "k"},
             problems);
  if (o.contains("kind")) {
    const json& k = o.at("kind");
    const auto kind = k.is_string() ? parse_optimizer_kind(k.get<std::string>()) : std::nullopt;
    if (!kind) {
      problems.add("optimizer.kind", "unknown optimizer " + k.dump());
    } else if (*kind != cfg.optimizer.kind) {
      cfg.optimizer = OptimizerConfig::defaults(*kind);
    }
  }
  OptimizerConfig& opt = cfg.optimizer;
  read_number(o, "learning_rate", "optimizer.learning_rate", opt.learning_rate, problems);
  read_number(o, "weight_decay", "optimizer.weight_decay", opt.weight_decay, problems);
  read_number(o, "momentum", "optimizer.momentum", opt.momentum, problems);
  read_number(o, "rho", "optimizer.rho", opt.rho, problems);
  read_number(o, "eps", "optimizer.eps", opt.eps, problems);
  read_number(o, "k", "optimizer.k", opt.k, problems);
  if (o.contains("betas")) {
    const json& b = o.at("betas");
    if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number()) {
      problems.add("optimizer.betas", "expected [beta1, beta2]");
    } else {
      opt.beta1 = b[0].get<double>();
      opt.beta2 = b[1].get<double>();
    }
  }
}

void read_schedule(const json& s, ExperimentConfig& cfg, Problems& problems) {
  if (!s.is_object()) {
    problems.add("schedule", "expected an object");
    return;
  }
  check_keys(s, "schedule", {"mode", "batch_size", "run_length", "groups"}, problems);
  BatchSchedule& sch = cfg.schedule;
  if (s.contains("mode")) {
    const json& m = s.at("mode");
    const auto mode = m.is_string() ? parse_schedule_mode(m.get<std::string>()) : std::nullopt;
    if (!mode) {
      problems.add("schedule.mode", "unknown mode " + m.dump());
    } else {
      sch.mode = *mode;
    }
  }
  read_number(s, "batch_size", "schedule.batch_size", sch.batch_size, problems);
  read_number(s, "run_length", "schedule.run_length", sch.run_length, problems);
  if (s.contains("groups")) {
    sch.groups.clear();
    const json& g = s.at("groups");
    bool ok = g.is_array();
    if (ok) {
      for (const auto& group : g) {
        if (!group.is_array()) {
          ok = false;
          break;
        }
        std::vector<ClassId> classes;
        for (const auto& c : group) {
          if (!c.is_number_integer()) {
            ok = false;
            break;
          }
          classes.push_back(c.get<ClassId>());
        }
        sch.groups.push_back(std::move(classes));
      }
    }
    if (!ok) problems.add("schedule.groups", "expected a list of lists of class ids");
  }
}

void read_sweep(const json& s, RunConfig& run, Problems& problems) {
  if (!s.is_object()) {
    problems.add("sweep", "expected an object");
    return;
  }
  check_keys(s, "sweep", {"axis", "values", "preset", "limit"}, problems);
  RunConfig::Sweep sweep{SweepAxis::LearningRate, {}};
  if (s.contains("preset")) {
    if (s.contains("axis") || s.contains("values")) problems.add("sweep", "give either preset or axis/values");
    try {
      SweepPreset preset = sweep_preset(s.at("preset").get<std::string>(), run.experiment.optimizer.kind);
      sweep.axis = preset.axis;
      sweep.values = std::move(preset.values);
    } catch (const std::exception& e) {
      problems.add("sweep.preset", e.what());
      return;
    }
  } else {
    if (!s.contains("axis")) problems.add("sweep.axis", "missing");
    if (!s.contains("values")) problems.add("sweep.values", "missing");
    if (!s.contains("axis") || !s.contains("values")) return;
    try {
      sweep.axis = parse_sweep_axis(s.at("axis").get<std::string>());
    } catch (const std::exception& e) {
      problems.add("sweep.axis", e.what());
      return;
    }
    const json& v = s.at("values");
    if (!v.is_array() || v.empty()) {
      problems.add("sweep.values", "expected a non-empty list");
      return;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
      sweep.values.push_back(sweep_value_from_json(v[i], "sweep.values[" + std::to_string(i) + "]", problems));
    }
  }
  if (s.contains("limit")) {
    std::size_t limit = 0;
    read_number(s, "limit", "sweep.limit", limit, problems);
    if (limit == 0) {
      problems.add("sweep.limit", "must be positive");
    } else if (limit < sweep.values.size()) {
      sweep.values.resize(limit);
    }
  }
  run.sweep = std::move(sweep);
}

}  // namespace

std::vector<ExperimentConfig> RunConfig::expand() const {
  if (!sweep) return {experiment};
  std::vector<ExperimentConfig> out;
  for (const auto& v : sweep->values) out.push_back(apply_sweep_value(experiment, sweep->axis, v));
  return out;
}

RunConfig parse_run_config(const json& doc) {
  Problems problems;
  if (!doc.is_object()) throw ConfigError("invalid config: top level must be an object");
  check_keys(doc, "",
             {"preset", "name", "model", "optimizer", "schedule", "epochs", "seeds", "train_subsample",
              "measure_train_set", "trace_dir", "sweep"},
             problems);

  RunConfig run;
  ExperimentConfig& cfg = run.experiment;
  bool from_preset = false;
  if (doc.contains("preset")) {
    const json& p = doc.at("preset");
    auto preset = p.is_string() ? experiment_preset(p.get<std::string>()) : std::nullopt;
    if (!preset) {
      problems.add("preset", "unknown preset " + p.dump());
    } else {
      cfg = *preset;
      from_preset = true;
    }
  }
  if (!from_preset) {
    for (const char* key : {"name", "model", "optimizer", "schedule", "epochs", "seeds"}) {
      if (!doc.contains(key)) problems.add(key, "missing");
    }
    if (doc.contains("optimizer") && doc.at("optimizer").is_object() && !doc.at("optimizer").contains("kind")) {
      problems.add("optimizer.kind", "missing");
    }
  }

  if (doc.contains("name")) {
    if (doc.at("name").is_string() && !doc.at("name").get<std::string>().empty()) {
      cfg.name = doc.at("name").get<std::string>();
    } else {
      problems.add("name", "expected a non-empty string");
    }
  }
  if (doc.contains("model")) read_model(doc.at("model"), cfg, problems);
  if (doc.contains("optimizer")) read_optimizer(doc.at("optimizer"), cfg, problems);
  if (doc.contains("schedule")) read_schedule(doc.at("schedule"), cfg, problems);
  read_number(doc, "epochs", "epochs", cfg.epochs, problems);
  if (doc.contains("seeds")) {
    const json& s = doc.at("seeds");
    if (s.is_number_integer() && s.get<long long>() > 0) {
      cfg.seeds.clear();
      for (std::uint64_t i = 0; i < s.get<std::uint64_t>(); ++i) cfg.seeds.push_back(i);
    } else if (s.is_array() && !s.empty() &&
               std::all_of(s.begin(), s.end(),
                           [](const json& x) { return x.is_number_integer() && x.get<long long>() >= 0; })) {
      cfg.seeds = s.get<std::vector<std::uint64_t>>();
    } else {
      problems.add("seeds", "expected a positive count or a list of seed indices");
    }
  }
  if (doc.contains("train_subsample")) {
    if (doc.at("train_subsample").is_null()) {
      cfg.train_subsample.reset();
    } else {
      std::size_t n = 0;
      read_number(doc, "train_subsample", "train_subsample", n, problems);
      cfg.train_subsample = n;
    }
  }
  if (doc.contains("measure_train_set")) {
    if (doc.at("measure_train_set").is_boolean()) {
      cfg.measure_train_set = doc.at("measure_train_set").get<bool>();
    } else {
      problems.add("measure_train_set", "expected true or false");
    }
  }
  if (doc.contains("trace_dir")) {
    if (doc.at("trace_dir").is_string()) {
      cfg.trace_dir = doc.at("trace_dir").get<std::string>();
    } else {
      problems.add("trace_dir", "expected a path string");
    }
  }
  problems.raise();

  // Range checks once the structure is sound.
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("invalid config:\n  ") + e.what());
  }
  if (doc.contains("sweep")) {
    read_sweep(doc.at("sweep"), run, problems);
    problems.raise();
    try {
      (void)run.expand();
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("invalid config:\n  sweep: ") + e.what());
    }
  }
  return run;
}

RunConfig load_run_config(const std::string& path_or_preset) {
  const std::filesystem::path path(path_or_preset);
  if (!std::filesystem::exists(path)) {
    if (auto preset = experiment_preset(path_or_preset)) return RunConfig{*preset, std::nullopt};
    throw ConfigError("config file not found and not a preset name: " + path_or_preset);
  }
  std::ifstream in(path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
  return parse_run_config(doc);
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["model"] = {{"hidden_widths", cfg.hidden_widths}};
  const OptimizerConfig& o = cfg.optimizer;
  j["optimizer"] = {{"kind", std::string(to_string(o.kind))},
                    {"learning_rate", o.learning_rate},
                    {"weight_decay", o.weight_decay},
                    {"momentum", o.momentum},
                    {"rho", o.rho},
                    {"betas", {o.beta1, o.beta2}},
                    {"eps", o.eps},
                    {"k", o.k}};
  j["schedule"] = {{"mode", std::string(to_string(cfg.schedule.mode))},
                   {"batch_size", cfg.schedule.batch_size},
                   {"run_length", cfg.schedule.run_length},
                   {"groups", cfg.schedule.groups}};
  j["epochs"] = cfg.epochs;
  j["seeds"] = cfg.seeds;
  j["train_subsample"] = cfg.train_subsample ? json(*cfg.train_subsample) : json(nullptr);
  j["measure_train_set"] = cfg.measure_train_set;
  if (cfg.trace_dir) j["trace_dir"] = cfg.trace_dir->string();
  return j;
}

json to_json(const RunConfig& cfg) {
  json j = to_json(cfg.experiment);
  if (cfg.sweep) {
    json values = json::array();
    for (const auto& v : cfg.sweep->values) {
      if (const double* d = std::get_if<double>(&v)) {
        values.push_back(*d);
      } else {
        values.push_back(std::get<std::string>(v));
      }
    }
    j["sweep"] = {{"axis", std::string(to_string(cfg.sweep->axis))}, {"values", values}};
  }
  return j;
}

std::string config_hash(const json& doc) {
  // nlohmann::json objects keep keys sorted, so dump() is canonical.
  const std::string text = doc.dump();
  return sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace actsel
