#include "actsel/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "actsel/errors.hpp"

namespace actsel {

namespace {

void add_bias(Matrix& z, const std::vector<double>& bias) {
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
  }
}

void check_labels(std::span<const ClassId> labels, std::size_t rows, std::size_t classes) {
  if (labels.size() != rows) {
    throw InputError("label count " + std::to_string(labels.size()) + " does not match batch rows " +
                     std::to_string(rows));
  }
  for (ClassId y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw InputError("label " + std::to_string(y) + " outside 0.." + std::to_string(classes - 1));
    }
  }
}

void check_input(const MlpModel& model, const Matrix& batch) {
  if (batch.cols() != model.input_size()) {
    throw ShapeError("input width " + std::to_string(batch.cols()) + " does not match model input " +
                     std::to_string(model.input_size()));
  }
}

// Hidden activations for every layer plus output logits.
struct Pass {
  std::vector<Matrix> hidden;
  Matrix logits;
};

Pass run_layers(const MlpModel& model, const Matrix& batch) {
  Pass pass;
  const std::size_t layers = model.weights.size();
  pass.hidden.reserve(layers - 1);
  const Matrix* input = &batch;
  for (std::size_t l = 0; l + 1 < layers; ++l) {
    Matrix z = matmul_nt(*input, model.weights[l]);
    add_bias(z, model.biases[l]);
    for (double& v : z.values()) v = sigmoid(v);
    pass.hidden.push_back(std::move(z));
    input = &pass.hidden.back();
  }
  pass.logits = matmul_nt(*input, model.weights.back());
  add_bias(pass.logits, model.biases.back());
  return pass;
}

double log_sum_exp(std::span<const double> row) {
  const double m = *std::max_element(row.begin(), row.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : row) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace

MlpModel::MlpModel(std::vector<std::size_t> sizes) : layer_sizes(std::move(sizes)) {
  if (layer_sizes.size() < 3) throw InputError("an MLP needs input, at least one hidden and an output layer");
  if (layer_sizes.size() - 2 > kMaxHiddenLayers) {
    throw InputError("at most " + std::to_string(kMaxHiddenLayers) + " hidden layers are supported");
  }
  for (std::size_t s : layer_sizes) {
    if (s == 0) throw InputError("layer sizes must be positive");
  }
  for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
    weights.emplace_back(layer_sizes[i + 1], layer_sizes[i]);
    biases.emplace_back(layer_sizes[i + 1], 0.0);
  }
}

MlpModel MlpModel::initialized(std::vector<std::size_t> sizes, Rng& rng) {
  MlpModel model(std::move(sizes));
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(model.layer_sizes[l]));
    for (double& w : model.weights[l].values()) w = rng.uniform(-bound, bound);
    for (double& b : model.biases[l]) b = rng.uniform(-bound, bound);
  }
  return model;
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

std::vector<std::span<double>> MlpModel::parameter_views() {
  std::vector<std::span<double>> views;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    views.push_back(weights[l].values());
    views.push_back(biases[l]);
  }
  return views;
}

std::vector<std::span<const double>> Gradients::views() const {
  std::vector<std::span<const double>> out;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    out.push_back(weights[l].values());
    out.push_back(biases[l]);
  }
  return out;
}

std::vector<std::size_t> mlp_layout(std::span<const std::size_t> hidden_widths, std::size_t input,
                                    std::size_t classes) {
  std::vector<std::size_t> sizes{input};
  sizes.insert(sizes.end(), hidden_widths.begin(), hidden_widths.end());
  sizes.push_back(classes);
  return sizes;
}

Matrix softmax(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto in = logits.row(r);
    auto out = p.row(r);
    const double lse = log_sum_exp(in);
    for (std::size_t c = 0; c < in.size(); ++c) out[c] = std::exp(in[c] - lse);
  }
  return p;
}

double cross_entropy(const Matrix& logits, std::span<const ClassId> labels) {
  check_labels(labels, logits.rows(), logits.cols());
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    total += log_sum_exp(row) - row[static_cast<std::size_t>(labels[r])];
  }
  return total / static_cast<double>(logits.rows());
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

ForwardResult forward(const MlpModel& model, const Matrix& batch, std::span<const ClassId> labels) {
  check_input(model, batch);
  Pass pass = run_layers(model, batch);
  ForwardResult result;
  if (!labels.empty()) result.loss = cross_entropy(pass.logits, labels);
  result.logits = std::move(pass.logits);
  if (model.capture_enabled) result.hidden_activations = std::move(pass.hidden);
  return result;
}

Gradients backward(const MlpModel& model, const Matrix& batch, std::span<const ClassId> labels) {
  check_input(model, batch);
  check_labels(labels, batch.rows(), model.output_size());
  if (batch.rows() == 0) throw InputError("backward on an empty batch");

  Pass pass = run_layers(model, batch);
  const std::size_t layers = model.weights.size();
  const double inv_batch = 1.0 / static_cast<double>(batch.rows());

  Gradients grads;
  grads.weights.resize(layers);
  grads.biases.resize(layers);
  grads.loss = cross_entropy(pass.logits, labels);

  // Output error: (softmax − onehot) / batch.
  Matrix delta = softmax(pass.logits);
  for (std::size_t r = 0; r < delta.rows(); ++r) {
    delta(r, static_cast<std::size_t>(labels[r])) -= 1.0;
  }
  for (double& v : delta.values()) v *= inv_batch;

  for (std::size_t l = layers; l-- > 0;) {
    const Matrix& input = l == 0 ? batch : pass.hidden[l - 1];
    // (inputᵀ δ)ᵀ sums in the same order as δᵀ input and lets the kernel
    // skip zero input pixels.
    grads.weights[l] = l == 0 ? transpose(matmul_tn(input, delta)) : matmul_tn(delta, input);
    auto& gb = grads.biases[l];
    gb.assign(delta.cols(), 0.0);
    for (std::size_t r = 0; r < delta.rows(); ++r) {
      const auto row = delta.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) gb[c] += row[c];
    }
    if (l == 0) break;
    Matrix upstream = matmul(delta, model.weights[l]);
    const Matrix& h = pass.hidden[l - 1];
    const auto hv = h.values();
    auto uv = upstream.values();
    for (std::size_t i = 0; i < uv.size(); ++i) uv[i] *= hv[i] * (1.0 - hv[i]);
    delta = std::move(upstream);
  }
  return grads;
}

Evaluation evaluate(const MlpModel& model, const Dataset& data, bool capture, std::size_t chunk) {
  if (data.empty()) throw InputError("evaluation on an empty dataset");
  if (chunk == 0) chunk = data.size();
  check_input(model, data.images);

  Evaluation eval;
  const std::size_t hidden = model.hidden_layers();
  if (capture) {
    eval.trace.labels = data.labels;
    for (std::size_t l = 0; l < hidden; ++l) {
      eval.trace.layers.emplace_back(data.size(), model.layer_sizes[l + 1]);
    }
  }

  std::size_t correct = 0;
  double loss_sum = 0.0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += chunk) {
    const std::size_t stop = std::min(data.size(), start + chunk);
    idx.resize(stop - start);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = start + i;
    const Matrix batch = gather_rows(data.images, idx);
    Pass pass = run_layers(model, batch);
    const std::span<const ClassId> labels(data.labels.data() + start, stop - start);
    for (std::size_t r = 0; r < pass.logits.rows(); ++r) {
      if (static_cast<ClassId>(argmax(pass.logits.row(r))) == labels[r]) ++correct;
    }
    loss_sum += cross_entropy(pass.logits, labels) * static_cast<double>(stop - start);
    if (capture) {
      for (std::size_t l = 0; l < hidden; ++l) {
        const Matrix& h = pass.hidden[l];
        std::copy(h.values().begin(), h.values().end(), eval.trace.layers[l].row(start).data());
      }
    }
  }
  eval.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  eval.loss = loss_sum / static_cast<double>(data.size());
  return eval;
}

double accuracy(const MlpModel& model, const Dataset& data) {
  return evaluate(model, data, false).accuracy;
}

}  // namespace actsel
