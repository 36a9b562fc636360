#include "actsel/metrics.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "actsel/errors.hpp"

namespace actsel {

namespace {

constexpr char kTraceMagic[8] = {'A', 'C', 'T', 'T', 'R', 'C', '0', '1'};

void put_u64(std::ofstream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::ifstream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw FormatError("trace file: truncated header");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

}  // namespace

double hoyer_row(std::span<const double> c) {
  const std::size_t n = c.size();
  if (n < 2) throw InputError("Hoyer sparsity needs at least two neurons (got " + std::to_string(n) + ")");
  double l1 = 0.0;
  double l2sq = 0.0;
  for (double v : c) {
    if (v < 0.0) throw InputError("Hoyer sparsity requires non-negative activations");
    l1 += v;
    l2sq += v * v;
  }
  if (l2sq == 0.0) {
    spdlog::warn("Hoyer sparsity of an all-zero activation row is taken as 1");
    return 1.0;
  }
  const double root_n = std::sqrt(static_cast<double>(n));
  // Rounding can leave a uniform row a hair below 0.
  return std::clamp((root_n - l1 / std::sqrt(l2sq)) / (root_n - 1.0), 0.0, 1.0);
}

double hoyer_sparsity(const Matrix& trace_layer) {
  if (trace_layer.rows() == 0) throw InputError("Hoyer sparsity of an empty trace");
  if (trace_layer.cols() < 2) {
    throw InputError("Hoyer sparsity needs at least two neurons (got " + std::to_string(trace_layer.cols()) + ")");
  }
  double total = 0.0;
  for (std::size_t r = 0; r < trace_layer.rows(); ++r) total += hoyer_row(trace_layer.row(r));
  return total / static_cast<double>(trace_layer.rows());
}

double ccmas_from_class_means(std::span<const double> class_means) {
  if (class_means.size() < 2) throw InputError("CCMAS needs at least two classes");
  double sum = 0.0;
  for (double v : class_means) sum += v;
  const double u_max = *std::max_element(class_means.begin(), class_means.end());
  const double u_rest = (sum - u_max) / static_cast<double>(class_means.size() - 1);
  return (u_max - u_rest) / (u_max + u_rest + kSelectivityEps);
}

Selectivity ccmas_selectivity(const Matrix& trace_layer, std::span<const ClassId> labels,
                              std::size_t num_classes) {
  if (labels.size() != trace_layer.rows()) {
    throw InputError("trace has " + std::to_string(trace_layer.rows()) + " rows but " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t neurons = trace_layer.cols();
  Matrix sums(num_classes, neurons);
  std::vector<std::size_t> counts(num_classes, 0);
  for (std::size_t r = 0; r < trace_layer.rows(); ++r) {
    const ClassId y = labels[r];
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) throw InputError("label out of range");
    const auto row = trace_layer.row(r);
    auto acc = sums.row(static_cast<std::size_t>(y));
    for (std::size_t j = 0; j < neurons; ++j) acc[j] += row[j];
    ++counts[static_cast<std::size_t>(y)];
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) {
      throw MetricError("class " + std::to_string(c) + " has no samples; its mean activation is undefined");
    }
  }

  Selectivity out;
  out.per_neuron.resize(neurons);
  std::vector<double> means(num_classes);
  for (std::size_t j = 0; j < neurons; ++j) {
    for (std::size_t c = 0; c < num_classes; ++c) means[c] = sums(c, j) / static_cast<double>(counts[c]);
    out.per_neuron[j] = ccmas_from_class_means(means);
  }
  if (neurons == 0) return out;
  double total = 0.0;
  for (double s : out.per_neuron) total += s;
  out.mean = total / static_cast<double>(neurons);
  double sq = 0.0;
  for (double s : out.per_neuron) sq += (s - out.mean) * (s - out.mean);
  out.std = std::sqrt(sq / static_cast<double>(neurons));
  return out;
}

LayerMetrics layer_metrics(const Matrix& trace_layer, std::span<const ClassId> labels) {
  LayerMetrics m;
  m.sparsity = hoyer_sparsity(trace_layer);
  Selectivity sel = ccmas_selectivity(trace_layer, labels);
  m.selectivity_mean = sel.mean;
  m.selectivity_std = sel.std;
  m.per_neuron_selectivity = std::move(sel.per_neuron);
  return m;
}

std::vector<LayerMetrics> trace_metrics(const ActivationTrace& trace) {
  std::vector<LayerMetrics> out;
  out.reserve(trace.layers.size());
  for (const auto& layer : trace.layers) out.push_back(layer_metrics(layer, trace.labels));
  return out;
}

LayerMetrics aggregate_uniform(std::span<const LayerMetrics> per_layer) {
  if (per_layer.empty()) throw InputError("cannot aggregate an empty list of layers");
  LayerMetrics agg;
  for (const auto& m : per_layer) {
    agg.sparsity += m.sparsity;
    agg.selectivity_mean += m.selectivity_mean;
    agg.selectivity_std += m.selectivity_std;
  }
  const double n = static_cast<double>(per_layer.size());
  agg.sparsity /= n;
  agg.selectivity_mean /= n;
  agg.selectivity_std /= n;
  return agg;
}

std::vector<double> activation_totals(const ActivationTrace& trace) {
  std::vector<double> totals;
  for (const auto& layer : trace.layers) {
    double s = 0.0;
    for (double v : layer.values()) s += v;
    totals.push_back(s);
  }
  return totals;
}

LayerMetrics aggregate_weighted(std::span<const LayerMetrics> per_layer, std::span<const double> totals) {
  if (per_layer.empty()) throw InputError("cannot aggregate an empty list of layers");
  if (totals.size() != per_layer.size()) {
    throw InputError("activation totals cover " + std::to_string(totals.size()) + " layers, metrics cover " +
                     std::to_string(per_layer.size()));
  }
  double grand = 0.0;
  for (double t : totals) {
    if (t < 0.0 || !std::isfinite(t)) throw MetricError("activation totals must be finite and non-negative");
    grand += t;
  }
  if (grand == 0.0) throw MetricError("all layers have zero total activation; weights are undefined");
  LayerMetrics agg;
  for (std::size_t k = 0; k < per_layer.size(); ++k) {
    const double w = totals[k] / grand;
    agg.sparsity += w * per_layer[k].sparsity;
    agg.selectivity_mean += w * per_layer[k].selectivity_mean;
    agg.selectivity_std += w * per_layer[k].selectivity_std;
  }
  return agg;
}

LayerMetrics aggregate_weighted(std::span<const LayerMetrics> per_layer, const ActivationTrace& trace) {
  const auto totals = activation_totals(trace);
  return aggregate_weighted(per_layer, totals);
}

void write_trace_layer(const std::filesystem::path& path, const Matrix& layer, std::span<const ClassId> labels) {
  static_assert(std::endian::native == std::endian::little, "trace export assumes a little-endian host");
  if (labels.size() != layer.rows()) throw InputError("trace export: label count does not match rows");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(kTraceMagic, sizeof kTraceMagic);
  put_u64(out, layer.rows());
  put_u64(out, layer.cols());
  for (ClassId y : labels) out.put(static_cast<char>(y));
  out.write(reinterpret_cast<const char*>(layer.data()), static_cast<std::streamsize>(layer.size() * sizeof(double)));
  if (!out) throw InputError("short write to " + path.string());
}

TraceLayerFile read_trace_layer(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kTraceMagic, 8) != 0) {
    throw FormatError(path.string() + ": not an activation trace file");
  }
  const std::uint64_t rows = get_u64(in);
  const std::uint64_t cols = get_u64(in);
  TraceLayerFile file;
  std::string labels(rows, '\0');
  if (!in.read(labels.data(), static_cast<std::streamsize>(rows))) throw FormatError("trace file: truncated labels");
  for (char c : labels) file.labels.push_back(static_cast<unsigned char>(c));
  file.activations = Matrix(rows, cols);
  if (!in.read(reinterpret_cast<char*>(file.activations.data()),
               static_cast<std::streamsize>(rows * cols * sizeof(double)))) {
    throw FormatError("trace file: truncated activations");
  }
  return file;
}

}  // namespace actsel
