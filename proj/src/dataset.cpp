#include "actsel/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "actsel/errors.hpp"
#include "actsel/random.hpp"

namespace actsel {

void Dataset::validate() const {
  if (images.rows() != labels.size()) {
    throw ConsistencyError("dataset has " + std::to_string(images.rows()) + " images but " +
                           std::to_string(labels.size()) + " labels");
  }
  for (double v : images.values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw InputError("pixel value outside [0, 1]");
  }
  for (ClassId y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= kNumClasses) {
      throw InputError("label " + std::to_string(y) + " outside 0..9");
    }
  }
}

Dataset Dataset::select(std::span<const std::size_t> indices) const {
  Dataset out;
  out.images = gather_rows(images, indices);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(labels[i]);
  return out;
}

std::vector<std::size_t> class_counts(std::span<const ClassId> labels, std::size_t num_classes) {
  std::vector<std::size_t> counts(num_classes, 0);
  for (ClassId y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) throw InputError("label out of range");
    ++counts[static_cast<std::size_t>(y)];
  }
  return counts;
}

Dataset subsample(const Dataset& train, std::size_t n, std::uint64_t seed) {
  const std::size_t total = train.size();
  if (n == 0) throw InputError("subsample size must be positive");
  if (n > total) {
    throw InputError("subsample size " + std::to_string(n) + " exceeds dataset size " +
                     std::to_string(total));
  }

  std::vector<std::vector<std::size_t>> by_class(kNumClasses);
  for (std::size_t i = 0; i < total; ++i) by_class[static_cast<std::size_t>(train.labels[i])].push_back(i);

  // Largest-remainder apportionment of n across classes.
  std::vector<std::size_t> quota(kNumClasses);
  std::vector<std::pair<std::size_t, std::size_t>> remainders;  // (remainder, class)
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const std::size_t scaled = n * by_class[c].size();
    quota[c] = scaled / total;
    assigned += quota[c];
    remainders.emplace_back(scaled % total, c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++quota[remainders[i].second];

  Rng rng(seed);
  std::vector<std::size_t> chosen;
  chosen.reserve(n);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    auto pool = by_class[c];
    rng.shuffle(std::span<std::size_t>(pool));
    chosen.insert(chosen.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(quota[c]));
  }
  std::sort(chosen.begin(), chosen.end());
  return train.select(chosen);
}

}  // namespace actsel
