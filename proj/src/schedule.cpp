#include "actsel/schedule.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include "actsel/errors.hpp"
#include "actsel/random.hpp"

namespace actsel {

namespace {

constexpr std::array<std::pair<ScheduleMode, std::string_view>, 6> kModeNames{{
    {ScheduleMode::Random, "random"},
    {ScheduleMode::Sorted, "sorted"},
    {ScheduleMode::SingleClass, "single"},
    {ScheduleMode::PairClass, "pair"},
    {ScheduleMode::FiveClass, "five"},
    {ScheduleMode::ConsecutiveRun, "consecutive"},
}};

std::vector<Batch> chunk(std::span<const std::size_t> order, std::size_t batch_size) {
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t stop = std::min(order.size(), start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return batches;
}

std::vector<std::vector<std::size_t>> indices_by_class(std::span<const ClassId> labels) {
  std::vector<std::vector<std::size_t>> by_class(kNumClasses);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= kNumClasses) {
      throw InputError("label out of range in training set");
    }
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  return by_class;
}

}  // namespace

std::string_view to_string(ScheduleMode mode) {
  for (const auto& [m, name] : kModeNames) {
    if (m == mode) return name;
  }
  return "unknown";
}

std::optional<ScheduleMode> parse_schedule_mode(std::string_view text) {
  for (const auto& [m, name] : kModeNames) {
    if (name == text) return m;
  }
  return std::nullopt;
}

std::vector<std::vector<ClassId>> BatchSchedule::effective_groups() const {
  if (!groups.empty()) return groups;
  std::vector<std::vector<ClassId>> out;
  const int width = mode == ScheduleMode::PairClass ? 2 : mode == ScheduleMode::FiveClass ? 5 : 1;
  for (int start = 0; start < static_cast<int>(kNumClasses); start += width) {
    std::vector<ClassId> g(static_cast<std::size_t>(width));
    std::iota(g.begin(), g.end(), start);
    out.push_back(std::move(g));
  }
  return out;
}

void BatchSchedule::validate() const {
  if (batch_size == 0) throw ConfigError("schedule.batch_size must be at least 1");
  if (mode == ScheduleMode::ConsecutiveRun) {
    if (batch_size != 1) throw ConfigError("schedule: consecutive runs require batch_size = 1");
    if (run_length == 0) throw ConfigError("schedule.run_length must be at least 1");
  }
  if (!groups.empty()) {
    if (mode != ScheduleMode::PairClass && mode != ScheduleMode::FiveClass) {
      throw ConfigError("schedule.groups only applies to the pair and five modes");
    }
    std::array<int, kNumClasses> seen{};
    for (const auto& g : groups) {
      if (g.empty()) throw ConfigError("schedule.groups contains an empty group");
      for (ClassId c : g) {
        if (c < 0 || static_cast<std::size_t>(c) >= kNumClasses) {
          throw ConfigError("schedule.groups: class " + std::to_string(c) + " out of range");
        }
        ++seen[static_cast<std::size_t>(c)];
      }
    }
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      if (seen[c] != 1) {
        throw ConfigError("schedule.groups must partition the classes; class " + std::to_string(c) +
                          " appears " + std::to_string(seen[c]) + " times");
      }
    }
  }
}

bool BatchSchedule::uses_published_run_length() const {
  return run_length == 1 || run_length == 5 || run_length == 10;
}

std::vector<Batch> make_epoch(const BatchSchedule& schedule, std::span<const ClassId> labels,
                              std::size_t epoch_index) {
  schedule.validate();
  const std::size_t n = labels.size();
  if (n == 0) throw InputError("cannot schedule an empty training set");
  if (schedule.batch_size > n) {
    throw InputError("batch size " + std::to_string(schedule.batch_size) + " exceeds training set size " +
                     std::to_string(n));
  }
  Rng rng(derive_seed(schedule.seed, epoch_index));

  switch (schedule.mode) {
    case ScheduleMode::Random: {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      rng.shuffle(std::span<std::size_t>(order));
      return chunk(order, schedule.batch_size);
    }
    case ScheduleMode::Sorted: {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&labels](std::size_t a, std::size_t b) { return labels[a] < labels[b]; });
      return chunk(order, schedule.batch_size);
    }
    case ScheduleMode::SingleClass:
    case ScheduleMode::PairClass:
    case ScheduleMode::FiveClass: {
      const auto by_class = indices_by_class(labels);
      std::vector<Batch> batches;
      for (const auto& group : schedule.effective_groups()) {
        std::vector<std::size_t> pool;
        for (ClassId c : group) {
          const auto& members = by_class[static_cast<std::size_t>(c)];
          pool.insert(pool.end(), members.begin(), members.end());
        }
        rng.shuffle(std::span<std::size_t>(pool));
        auto group_batches = chunk(pool, schedule.batch_size);
        std::move(group_batches.begin(), group_batches.end(), std::back_inserter(batches));
      }
      rng.shuffle(std::span<Batch>(batches));
      return batches;
    }
    case ScheduleMode::ConsecutiveRun: {
      auto by_class = indices_by_class(labels);
      std::vector<Batch> runs;
      for (auto& members : by_class) {
        rng.shuffle(std::span<std::size_t>(members));
        auto class_runs = chunk(members, schedule.run_length);
        std::move(class_runs.begin(), class_runs.end(), std::back_inserter(runs));
      }
      rng.shuffle(std::span<Batch>(runs));
      std::vector<Batch> batches;
      batches.reserve(n);
      for (const auto& run : runs) {
        for (std::size_t i : run) batches.push_back(Batch{i});
      }
      return batches;
    }
  }
  throw InputError("unknown schedule mode");
}

}  // namespace actsel
