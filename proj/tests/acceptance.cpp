// Acceptance run: one PASS / FAIL / SKIP line per criterion.
//
//   actsel_acceptance            all criteria
//   actsel_acceptance 1 2 7      a subset
//
// ACTSEL_ACCEPTANCE_REPORT=<file> also writes the lines to that file.
// Exit status: 0 when nothing failed, 1 on any failure, 77 when the only
// problem is that MNIST is missing (ctest reports that as skipped).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "actsel/config.hpp"
#include "actsel/errors.hpp"
#include "actsel/harness.hpp"
#include "actsel/metrics.hpp"
#include "actsel/mlp.hpp"
#include "actsel/optim.hpp"
#include "actsel/results.hpp"
#include "actsel/schedule.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace actsel;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status = Status::Pass;
  std::string detail;
};

// Collects failed checks; the first few are reported.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (ok) return;
    ++failed_;
    if (failed_ <= 5) notes_.push_back(what);
  }
  Outcome outcome(const std::string& summary) const {
    std::ostringstream s;
    s << summary << " (" << total_ - failed_ << "/" << total_ << " checks)";
    for (const auto& n : notes_) s << "\n      " << n;
    return {failed_ == 0 ? Status::Pass : Status::Fail, s.str()};
  }

 private:
  std::size_t total_ = 0;
  std::size_t failed_ = 0;
  std::vector<std::string> notes_;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// ---- shared MNIST ------------------------------------------------------------

std::optional<TrainTestData>& mnist_cache() {
  static std::optional<TrainTestData> data;
  return data;
}

const TrainTestData* mnist() {
  auto& cache = mnist_cache();
  if (!cache && test::have_mnist()) {
    MnistSplit split = load_mnist(test::mnist_dir());
    cache = TrainTestData{std::move(split.train), std::move(split.test)};
  }
  return cache ? &*cache : nullptr;
}

Outcome no_mnist() { return {Status::Skip, "MNIST not found in " + test::mnist_dir().string()}; }

double last_mean(const ExperimentResult& r, const std::string& quantity) {
  return r.last().stats.at(quantity).mean;
}

std::string csv_bytes(const ExperimentResult& r) {
  std::ostringstream s;
  write_epoch_csv_header(s);
  for (const auto& t : r.trials) write_epoch_rows(s, epoch_rows(r.config.name, t));
  return s.str();
}

// ---- 1: metric properties ----------------------------------------------------

Outcome metric_properties() {
  constexpr double tol = 1e-12;
  constexpr int instances = 1000;
  Rng rng(101);
  Checks checks;

  for (int i = 0; i < instances; ++i) {
    const std::size_t n = 2 + rng.below(300);
    std::vector<double> c(n);
    for (double& v : c) v = rng.uniform01() < 0.3 ? 0.0 : rng.uniform(0.0, 1.0);
    c[rng.below(n)] = rng.uniform(0.01, 1.0);  // never all zero
    const double h = hoyer_row(c);
    checks.expect(h >= -tol && h <= 1.0 + tol, "hoyer out of [0,1]: " + sci(h));

    const double alpha = std::exp(rng.uniform(-10.0, 10.0));
    std::vector<double> scaled(c);
    for (double& v : scaled) v *= alpha;
    checks.expect(std::fabs(hoyer_row(scaled) - h) <= tol, "hoyer not scale invariant, n=" + std::to_string(n));

    std::vector<double> one_hot(n, 0.0);
    one_hot[rng.below(n)] = rng.uniform(0.01, 100.0);
    checks.expect(std::fabs(hoyer_row(one_hot) - 1.0) <= tol, "hoyer(one-hot) != 1");

    const std::vector<double> flat(n, rng.uniform(0.01, 100.0));
    checks.expect(std::fabs(hoyer_row(flat)) <= tol, "hoyer(uniform) != 0");

    std::vector<double> padded(c);
    padded.push_back(0.0);
    checks.expect(hoyer_row(padded) >= h - tol, "appending a zero column lowered sparsity");
  }

  for (int i = 0; i < instances; ++i) {
    const std::size_t samples = 30 + rng.below(50);
    const std::size_t neurons = 2 + rng.below(12);
    Matrix trace(samples, neurons);
    for (double& v : trace.values()) v = rng.uniform(1e-6, 1.0);
    std::vector<ClassId> labels(samples);
    for (std::size_t s = 0; s < samples; ++s) {
      labels[s] = static_cast<ClassId>(s < kNumClasses ? s : rng.below(kNumClasses));
    }
    const Selectivity sel = ccmas_selectivity(trace, labels);
    for (double s : sel.per_neuron) checks.expect(s >= 0.0 && s < 1.0, "ccmas out of [0,1): " + sci(s));

    // Consistent relabelling leaves every neuron's selectivity unchanged.
    std::vector<ClassId> perm(kNumClasses);
    for (std::size_t k = 0; k < kNumClasses; ++k) perm[k] = static_cast<ClassId>(k);
    rng.shuffle(std::span<ClassId>(perm));
    std::vector<ClassId> relabelled(samples);
    for (std::size_t s = 0; s < samples; ++s) relabelled[s] = perm[static_cast<std::size_t>(labels[s])];
    const Selectivity permuted = ccmas_selectivity(trace, relabelled);
    for (std::size_t k = 0; k < neurons; ++k) {
      checks.expect(std::fabs(permuted.per_neuron[k] - sel.per_neuron[k]) <= tol, "ccmas changed under relabelling");
    }

    // Shuffling rows together with their labels changes neither metric.
    std::vector<std::size_t> order(samples);
    for (std::size_t s = 0; s < samples; ++s) order[s] = s;
    rng.shuffle(std::span<std::size_t>(order));
    const Matrix shuffled = gather_rows(trace, order);
    std::vector<ClassId> shuffled_labels(samples);
    for (std::size_t s = 0; s < samples; ++s) shuffled_labels[s] = labels[order[s]];
    checks.expect(std::fabs(ccmas_selectivity(shuffled, shuffled_labels).mean - sel.mean) <= tol,
                  "ccmas changed under sample shuffling");
    checks.expect(std::fabs(hoyer_sparsity(shuffled) - hoyer_sparsity(trace)) <= tol,
                  "hoyer changed under sample shuffling");

    // A single layer is its own aggregate, both ways.
    if (i % 10 == 0) {
      ActivationTrace single{{trace}, labels};
      const auto layers = trace_metrics(single);
      const auto u = aggregate_uniform(layers);
      const auto w = aggregate_weighted(layers, single);
      checks.expect(u.sparsity == layers[0].sparsity && w.selectivity_mean == layers[0].selectivity_mean,
                    "single-layer aggregate differs from the layer");
    }
  }
  return checks.outcome("Hoyer and CCMAS properties on " + std::to_string(instances) + " instances each");
}

// ---- 2: optimizer oracle -----------------------------------------------------

Outcome optimizer_oracle() {
  constexpr double tol = 1e-12;
  Rng rng(202);
  Checks checks;
  double worst = 0.0;
  for (OptimizerKind kind : test::all_kinds()) {
    for (int run = 0; run < 100; ++run) {
      OptimizerConfig cfg = OptimizerConfig::defaults(kind);
      if (run % 2 == 1) cfg.weight_decay = rng.uniform(0.0, 0.1);
      if (kind == OptimizerKind::SGDMomentum) cfg.momentum = rng.uniform(0.0, 0.99);
      std::vector<double> theta{rng.uniform(-2.0, 2.0)};
      test::ScalarOracle oracle{cfg};
      double expected = theta[0];
      ParamState state = ParamState::zeros(1, kind);
      for (int t = 0; t < 10; ++t) {
        const std::vector<double> g{rng.uniform(-1.0, 1.0)};
        step(state, theta, apply_weight_decay(g, theta, cfg.weight_decay), cfg);
        expected = oracle.step(expected, g[0]);
        const double err = std::fabs(theta[0] - expected);
        worst = std::max(worst, err);
        checks.expect(err < tol, std::string(to_string(kind)) + " run " + std::to_string(run) + " step " +
                                     std::to_string(t) + ": error " + sci(err));
      }
    }

    // Zero-gradient fixed point from the initial state: θ and every buffer
    // stay put (Adam's counter aside). Warm momentum or EMA buffers would
    // keep decaying under a zero gradient.
    OptimizerConfig cfg = OptimizerConfig::defaults(kind);
    if (kind == OptimizerKind::SGDMomentum) cfg.momentum = 0.9;
    std::vector<double> theta(16);
    for (double& v : theta) v = rng.uniform(-1.0, 1.0);
    const auto theta_before = theta;
    ParamState state = ParamState::zeros(theta.size(), kind);
    const ParamState before = state;
    const std::vector<double> zero(theta.size(), 0.0);
    for (int t = 0; t < 10; ++t) step(state, theta, zero, cfg);
    const bool same = theta == theta_before && state.velocity == before.velocity && state.accum == before.accum &&
                      state.sq_update == before.sq_update && state.first == before.first &&
                      state.second == before.second;
    checks.expect(same, std::string(to_string(kind)) + ": zero gradient moved the state");
  }
  return checks.outcome("8 kinds x 100 trajectories x 10 steps, worst error " + sci(worst));
}

// ---- 3: gradient check ---------------------------------------------------------

Outcome gradient_check() {
  constexpr double h = 1e-5;
  constexpr double floor = 1e-6;
  Rng rng(303);
  MlpModel model = MlpModel::initialized(mlp_layout(std::vector<std::size_t>{16}), rng);
  const Dataset data = test::synthetic_dataset(1, kImagePixels, 304);  // 10 samples, one per class
  const Gradients grads = backward(model, data.images, data.labels);
  const auto analytic = grads.views();

  auto loss = [&]() { return *forward(model, data.images, data.labels).loss; };
  double worst = 0.0;
  std::size_t checked = 0;
  auto params = model.parameter_views();
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p].size(); ++i) {
      double& w = params[p][i];
      const double saved = w;
      w = saved + h;
      const double up = loss();
      w = saved - h;
      const double down = loss();
      w = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[p][i];
      const double rel = std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), floor});
      worst = std::max(worst, rel);
      ++checked;
    }
  }
  return {worst < 1e-4 ? Status::Pass : Status::Fail,
          "784-16-10, " + std::to_string(checked) + " parameters, max relative error " + sci(worst)};
}

// ---- 4 and 8: full-scale baselines ---------------------------------------------

struct Baseline {
  const char* preset;
  double min_accuracy;
  double sparsity;
  double selectivity;
};

constexpr double kBaselineTolerance = 0.08;
constexpr Baseline kBaselines[] = {
    {"baseline-sgd", 0.97, 0.238, 0.328},
    {"baseline-adam", 0.975, 0.315, 0.392},
};

std::optional<std::string>& sgd_baseline_csv() {
  static std::optional<std::string> csv;
  return csv;
}

ExperimentResult run_baseline(const char* preset, const TrainTestData& data) {
  RunOptions options;
  options.on_epoch = [](const TrialRecord& t, const EpochRecord& e) {
    spdlog::info("seed {} epoch {}: accuracy {:.4f}", t.seed_index, e.epoch, e.test.accuracy);
  };
  return run_experiment(*experiment_preset(preset), data, options);
}

Outcome baselines() {
  const TrainTestData* data = mnist();
  if (!data) return no_mnist();
  Checks checks;
  std::ostringstream summary;
  for (const Baseline& b : kBaselines) {
    const ExperimentResult r = run_baseline(b.preset, *data);
    if (std::string(b.preset) == "baseline-sgd") sgd_baseline_csv() = csv_bytes(r);
    const double acc = last_mean(r, "accuracy");
    const double sp = last_mean(r, "sparsity");
    const double sel = last_mean(r, "selectivity_mean");
    summary << "\n      " << b.preset << ": accuracy " << fmt(acc) << " (>= " << b.min_accuracy << "), sparsity "
            << fmt(sp) << " (" << b.sparsity << " +- " << kBaselineTolerance << "), selectivity " << fmt(sel) << " ("
            << b.selectivity << " +- " << kBaselineTolerance << ")";
    checks.expect(acc >= b.min_accuracy, std::string(b.preset) + " accuracy " + fmt(acc));
    checks.expect(std::fabs(sp - b.sparsity) <= kBaselineTolerance, std::string(b.preset) + " sparsity " + fmt(sp));
    checks.expect(std::fabs(sel - b.selectivity) <= kBaselineTolerance,
                  std::string(b.preset) + " selectivity " + fmt(sel));
    checks.expect(r.last().diverged_seeds == 0, std::string(b.preset) + " diverged");
  }
  return checks.outcome("full-scale baselines, 3 seeds, 30 epochs" + summary.str());
}

Outcome determinism() {
  const TrainTestData* data = mnist();
  if (!data) return no_mnist();
  if (!sgd_baseline_csv()) sgd_baseline_csv() = csv_bytes(run_baseline("baseline-sgd", *data));
  const std::string rerun = csv_bytes(run_baseline("baseline-sgd", *data));
  const bool same = rerun == *sgd_baseline_csv();
  return {same ? Status::Pass : Status::Fail,
          "baseline-sgd rerun, per-epoch CSV " + std::to_string(rerun.size()) + " bytes, " +
              (same ? "identical" : "differs")};
}

// ---- 5: desk-scale trends ------------------------------------------------------

ExperimentConfig desk(const char* preset, const std::string& name) {
  ExperimentConfig cfg = *experiment_preset(preset);
  cfg.name = name;
  cfg.train_subsample = 10000;
  cfg.epochs = 10;
  cfg.seeds = {0, 1, 2};
  return cfg;
}

Outcome trends() {
  const TrainTestData* data = mnist();
  if (!data) return no_mnist();
  Checks checks;
  std::ostringstream summary;
  auto run = [&](const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentResult r = run_experiment(cfg, *data);
    spdlog::info("{}: accuracy {:.4f} sparsity {:.4f} ({:.0f} s)", cfg.name, last_mean(r, "accuracy"),
                 last_mean(r, "sparsity"),
                 std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return r;
  };
  auto greater = [&](const std::string& what, double a, double b) {
    summary << "\n      " << what << ": " << fmt(a) << " > " << fmt(b) << (a > b ? "" : "  FAILED");
    checks.expect(a > b, what);
  };

  {
    ExperimentConfig small = desk("baseline-sgd", "sgd-batch1");
    small.schedule.batch_size = 1;
    ExperimentConfig large = desk("baseline-sgd", "sgd-batch1000");
    large.schedule.batch_size = 1000;
    greater("SGD sparsity, batch 1 vs 1000", last_mean(run(small), "sparsity"), last_mean(run(large), "sparsity"));
  }
  {
    const ExperimentResult r = run(desk("baseline-adagrad", "adagrad"));
    greater("Adagrad sparsity, epoch 1 vs epoch 10", r.epochs.front().stats.at("sparsity").mean,
            last_mean(r, "sparsity"));
  }
  for (const char* preset : {"baseline-sgd", "baseline-adagrad", "baseline-adadelta", "baseline-adam"}) {
    ExperimentConfig weak = desk(preset, std::string(preset) + "-wd1e-5");
    weak.optimizer.weight_decay = 1e-5;
    ExperimentConfig strong = desk(preset, std::string(preset) + "-wd10");
    strong.optimizer.weight_decay = 10.0;
    const ExperimentResult w = run(weak);
    const ExperimentResult s = run(strong);
    greater(std::string(preset) + " accuracy, wd 1e-5 vs 10", last_mean(w, "accuracy"), last_mean(s, "accuracy"));
    greater(std::string(preset) + " sparsity, wd 1e-5 vs 10", last_mean(w, "sparsity"), last_mean(s, "sparsity"));
  }
  {
    ExperimentConfig heavy = desk("baseline-sgd", "sgd-momentum0.9");
    heavy.optimizer.momentum = 0.9;
    const ExperimentConfig plain = desk("baseline-sgd", "sgd-momentum0");
    greater("SGD sparsity, momentum 0.9 vs 0", last_mean(run(heavy), "sparsity"), last_mean(run(plain), "sparsity"));
  }
  return checks.outcome("10000-sample subsample, 10 epochs, 3 seeds" + summary.str());
}

// ---- 6: sweep presets ------------------------------------------------------------

const char* sweep_base(const std::string& preset) {
  if (preset == "momentum") return "baseline-sgd";
  if (preset == "rho") return "baseline-adadelta";
  if (preset.starts_with("betas")) return "baseline-adam";
  if (preset == "hidden_layers" || preset == "neurons") return "baseline-adam";
  return "baseline-sgd";
}

Outcome sweep_presets() {
  Checks checks;
  const TrainTestData* real = mnist();
  const TrainTestData synthetic{test::synthetic_dataset(60, kImagePixels, 606),
                                test::synthetic_dataset(20, kImagePixels, 607)};
  const TrainTestData& data = real ? *real : synthetic;
  std::size_t points = 0;
  for (const std::string& name : sweep_preset_names()) {
    try {
      const nlohmann::json doc{{"preset", sweep_base(name)},
                               {"name", "sweep-" + name},
                               {"epochs", 1},
                               {"seeds", 1},
                               {"train_subsample", 600},
                               {"sweep", {{"preset", name}, {"limit", 2}}}};
      const RunConfig run = parse_run_config(doc);
      const auto expanded = run.expand();
      checks.expect(expanded.size() == 2, name + ": truncation did not give 2 points");
      for (const auto& cfg : expanded) cfg.validate();
      const auto results = run_sweep(run.experiment, run.sweep->axis, run.sweep->values, data);
      for (const auto& r : results) {
        ++points;
        checks.expect(r.epochs.size() == 1 && !r.last().stats.at("accuracy").missing(),
                      r.config.name + ": no metrics recorded");
      }
    } catch (const std::exception& e) {
      checks.expect(false, name + ": " + e.what());
    }
  }
  for (const std::string& name : experiment_preset_names()) {
    try {
      experiment_preset(name)->validate();
      checks.expect(true, name);
    } catch (const std::exception& e) {
      checks.expect(false, name + ": " + e.what());
    }
  }
  return checks.outcome(std::to_string(sweep_preset_names().size()) + " sweep presets, " + std::to_string(points) +
                        " points run on " + (real ? "MNIST" : "synthetic data"));
}

// ---- 7: scheduler invariants -----------------------------------------------------

Outcome scheduler_invariants() {
  Checks checks;
  Rng rng(707);
  std::vector<ClassId> labels(1000);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<ClassId>(i % kNumClasses);
  rng.shuffle(std::span<ClassId>(labels));

  std::vector<BatchSchedule> schedules;
  for (ScheduleMode mode : {ScheduleMode::Random, ScheduleMode::Sorted, ScheduleMode::SingleClass,
                            ScheduleMode::PairClass, ScheduleMode::FiveClass}) {
    for (std::size_t batch : {1u, 7u, 50u, 64u, 1000u}) schedules.push_back({mode, batch, 1, 0x5eed, {}});
  }
  for (std::size_t run : {1u, 5u, 10u}) schedules.push_back({ScheduleMode::ConsecutiveRun, 1, run, 0x5eed, {}});
  schedules.push_back({ScheduleMode::PairClass, 10, 1, 0x5eed, {{3, 7}, {0, 1}, {2, 4}, {5, 6}, {8, 9}}});
  schedules.push_back({ScheduleMode::FiveClass, 10, 1, 0x5eed, {{2, 4, 7, 8, 9}, {0, 1, 3, 5, 6}}});

  for (const BatchSchedule& s : schedules) {
    const std::string tag = std::string(to_string(s.mode)) + "/" + std::to_string(s.batch_size);
    const auto groups = s.effective_groups();
    for (std::size_t epoch = 0; epoch < 3; ++epoch) {
      const auto batches = make_epoch(s, labels, epoch);
      std::vector<std::size_t> seen;
      for (const auto& b : batches) {
        checks.expect(!b.empty() && b.size() <= s.batch_size, tag + ": batch size out of range");
        seen.insert(seen.end(), b.begin(), b.end());
        std::set<ClassId> distinct;
        for (std::size_t i : b) distinct.insert(labels[i]);
        if (s.mode == ScheduleMode::SingleClass || s.mode == ScheduleMode::PairClass ||
            s.mode == ScheduleMode::FiveClass) {
          const bool inside_group = std::any_of(groups.begin(), groups.end(), [&](const auto& g) {
            return std::all_of(distinct.begin(), distinct.end(),
                               [&](ClassId c) { return std::find(g.begin(), g.end(), c) != g.end(); });
          });
          checks.expect(inside_group, tag + ": batch mixes classes across groups");
        }
      }
      std::sort(seen.begin(), seen.end());
      bool coverage = seen.size() == labels.size();
      for (std::size_t i = 0; coverage && i < seen.size(); ++i) coverage = seen[i] == i;
      checks.expect(coverage, tag + ": epoch does not cover every sample exactly once");
      checks.expect(make_epoch(s, labels, epoch) == batches, tag + ": schedule is not deterministic");
      if (s.mode == ScheduleMode::Sorted) {
        std::vector<ClassId> order;
        for (const auto& b : batches)
          for (std::size_t i : b) order.push_back(labels[i]);
        checks.expect(std::is_sorted(order.begin(), order.end()), tag + ": sorted epoch out of order");
      }
    }
  }
  return checks.outcome(std::to_string(schedules.size()) + " schedules x 3 epochs on 1000 balanced samples");
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "-v") {
      spdlog::set_level(spdlog::level::info);
    } else {
      wanted.insert(std::stoi(arg));
    }
  }

  const std::vector<Criterion> criteria{
      {1, "metric properties", metric_properties},
      {2, "optimizer oracle", optimizer_oracle},
      {3, "gradient check", gradient_check},
      {4, "baseline reproduction", baselines},
      {5, "desk-scale trends", trends},
      {6, "sweep presets", sweep_presets},
      {7, "scheduler invariants", scheduler_invariants},
      {8, "determinism", determinism},
  };

  // ctest hides the output of passing tests; keep a copy when asked.
  std::ofstream report;
  if (const char* path = std::getenv("ACTSEL_ACCEPTANCE_REPORT"); path && *path) report.open(path);

  int failed = 0;
  int skipped = 0;
  for (const Criterion& c : criteria) {
    if (!wanted.empty() && !wanted.contains(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {Status::Fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const char* label = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
    char head[128];
    std::snprintf(head, sizeof head, "criterion %d %-22s %s  [%.1f s]  ", c.id, c.title, label, secs);
    std::printf("%s%s\n", head, o.detail.c_str());
    std::fflush(stdout);
    if (report) report << head << o.detail << std::endl;
    failed += o.status == Status::Fail;
    skipped += o.status == Status::Skip;
  }
  if (failed) return 1;
  return skipped ? 77 : 0;
}
