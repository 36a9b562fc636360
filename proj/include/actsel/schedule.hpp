#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "actsel/dataset.hpp"

namespace actsel {

enum class ScheduleMode { Random, Sorted, SingleClass, PairClass, FiveClass, ConsecutiveRun };

std::string_view to_string(ScheduleMode mode);
std::optional<ScheduleMode> parse_schedule_mode(std::string_view text);

// Rule for the composition and order of training batches within an epoch.
struct BatchSchedule {
  ScheduleMode mode = ScheduleMode::Random;
  std::size_t batch_size = 50;
  // Samples per same-label run; ConsecutiveRun only.
  std::size_t run_length = 1;
  std::uint64_t seed = 0;
  // Class groups for PairClass / FiveClass. Empty means the contiguous
  // default ({0,1},{2,3},... or {0..4},{5..9}).
  std::vector<std::vector<ClassId>> groups;

  // Throws ConfigError when the schedule is unusable.
  void validate() const;
  // Run lengths used in the published experiments are 1, 5 and 10.
  bool uses_published_run_length() const;
  std::vector<std::vector<ClassId>> effective_groups() const;
};

using Batch = std::vector<std::size_t>;

// Ordered batches of sample indices for one epoch. Every index appears in
// exactly one batch; (schedule, epoch_index) fully determine the result.
std::vector<Batch> make_epoch(const BatchSchedule& schedule, std::span<const ClassId> labels,
                              std::size_t epoch_index);

inline std::vector<Batch> make_epoch(const BatchSchedule& schedule, const Dataset& train,
                                     std::size_t epoch_index) {
  return make_epoch(schedule, train.labels, epoch_index);
}

}  // namespace actsel
