#pragma once

#include <vector>

#include "actsel/dataset.hpp"
#include "actsel/matrix.hpp"

namespace actsel {

// Post-sigmoid hidden activations captured over one full pass of a dataset:
// one (samples × neurons) matrix per hidden layer, rows aligned with labels.
struct ActivationTrace {
  std::vector<Matrix> layers;
  std::vector<ClassId> labels;

  std::size_t samples() const { return labels.size(); }
};

}  // namespace actsel
