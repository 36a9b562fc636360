#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "actsel/dataset.hpp"
#include "actsel/matrix.hpp"
#include "actsel/random.hpp"
#include "actsel/trace.hpp"

namespace actsel {

inline constexpr std::size_t kMaxHiddenLayers = 5;

// Feed-forward network: sigmoid hidden layers, linear output read through
// softmax / cross-entropy. weights[i] is layer_sizes[i+1] × layer_sizes[i].
struct MlpModel {
  std::vector<std::size_t> layer_sizes;
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
  bool capture_enabled = false;

  // Zero weights and biases.
  explicit MlpModel(std::vector<std::size_t> sizes);

  // Weights and biases uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], drawn
  // layer by layer (weights row-major, then biases) from rng.
  static MlpModel initialized(std::vector<std::size_t> sizes, Rng& rng);

  std::size_t hidden_layers() const { return layer_sizes.size() - 2; }
  std::size_t input_size() const { return layer_sizes.front(); }
  std::size_t output_size() const { return layer_sizes.back(); }
  std::size_t parameter_count() const;

  // W0, b0, W1, b1, ... in a fixed order shared with Gradients::views().
  std::vector<std::span<double>> parameter_views();
};

// {input, hidden..., classes}
std::vector<std::size_t> mlp_layout(std::span<const std::size_t> hidden_widths,
                                    std::size_t input = kImagePixels,
                                    std::size_t classes = kNumClasses);

struct ForwardResult {
  Matrix logits;                        // batch × classes
  std::vector<Matrix> hidden_activations;  // empty unless capture is enabled
  std::optional<double> loss;           // mean cross-entropy, when labels given
};

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
  double loss = 0.0;  // mean cross-entropy of the batch the gradient came from

  std::vector<std::span<const double>> views() const;
};

ForwardResult forward(const MlpModel& model, const Matrix& batch,
                      std::span<const ClassId> labels = {});

// d(mean cross-entropy)/d(parameters) by backpropagation.
Gradients backward(const MlpModel& model, const Matrix& batch, std::span<const ClassId> labels);

// Row-wise softmax of the logits.
Matrix softmax(const Matrix& logits);

// Mean cross-entropy via log-sum-exp with max subtraction.
double cross_entropy(const Matrix& logits, std::span<const ClassId> labels);

// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

double accuracy(const MlpModel& model, const Dataset& data);

// One full pass over a dataset in fixed-size chunks: accuracy, mean loss and
// (when capture is requested) the hidden-activation trace from the same pass.
struct Evaluation {
  double accuracy = 0.0;
  double loss = 0.0;
  ActivationTrace trace;
};

Evaluation evaluate(const MlpModel& model, const Dataset& data, bool capture,
                    std::size_t chunk = 1000);

}  // namespace actsel
