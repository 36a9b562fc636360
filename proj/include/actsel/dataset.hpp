#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "actsel/matrix.hpp"

namespace actsel {

inline constexpr std::size_t kNumClasses = 10;
inline constexpr std::size_t kImageSide = 28;
inline constexpr std::size_t kImagePixels = kImageSide * kImageSide;

using ClassId = int;

// Images (N × pixels, values in [0, 1]) paired with class ids.
struct Dataset {
  Matrix images;
  std::vector<ClassId> labels;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }

  // Throws ConsistencyError / InputError when the invariants do not hold.
  void validate() const;

  Dataset select(std::span<const std::size_t> indices) const;
};

// Per-class sample counts.
std::vector<std::size_t> class_counts(std::span<const ClassId> labels,
                                      std::size_t num_classes = kNumClasses);

// Stratified sample without replacement: each class receives its share of n
// by largest remainder, drawn uniformly within the class. Selected samples
// keep their original relative order.
Dataset subsample(const Dataset& train, std::size_t n, std::uint64_t seed);

}  // namespace actsel
