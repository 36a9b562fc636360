#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "actsel/dataset.hpp"
#include "actsel/matrix.hpp"
#include "actsel/trace.hpp"

namespace actsel {

// Added to the CCMAS denominator.
inline constexpr double kSelectivityEps = 1e-7;

struct LayerMetrics {
  double sparsity = 0.0;
  double selectivity_mean = 0.0;
  double selectivity_std = 0.0;
  std::vector<double> per_neuron_selectivity;  // empty for aggregates
};

// Hoyer sparsity of one activation vector:
//   (√N − Σc / √(Σc²)) / (√N − 1)
// 1 for one-hot, 0 for uniform. An all-zero vector is treated as maximally
// sparse (1) and logs a warning.
double hoyer_row(std::span<const double> activations);

// Mean of the per-sample (per-row) Hoyer sparsity over a trace layer.
double hoyer_sparsity(const Matrix& trace_layer);

// CCMAS selectivity from one neuron's class-conditional mean activations:
//   (u_max − u_−max) / (u_max + u_−max + ε), u_−max = mean of the other classes.
double ccmas_from_class_means(std::span<const double> class_means);

struct Selectivity {
  std::vector<double> per_neuron;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation across neurons
};

// Throws MetricError naming the first class with no samples.
Selectivity ccmas_selectivity(const Matrix& trace_layer, std::span<const ClassId> labels,
                              std::size_t num_classes = kNumClasses);

LayerMetrics layer_metrics(const Matrix& trace_layer, std::span<const ClassId> labels);
std::vector<LayerMetrics> trace_metrics(const ActivationTrace& trace);

// Arithmetic mean of each metric across layers.
LayerMetrics aggregate_uniform(std::span<const LayerMetrics> per_layer);

// Sum of all activation values in each layer of the trace.
std::vector<double> activation_totals(const ActivationTrace& trace);

// Σ_k ratio_k · metric_k with ratio_k = total_k / Σ totals.
LayerMetrics aggregate_weighted(std::span<const LayerMetrics> per_layer, std::span<const double> totals);
LayerMetrics aggregate_weighted(std::span<const LayerMetrics> per_layer, const ActivationTrace& trace);

// Binary trace export, one file per (epoch, layer):
//   8-byte magic "ACTTRC01", u64 samples, u64 neurons (little endian),
//   one label byte per sample, then samples × neurons little-endian f64.
void write_trace_layer(const std::filesystem::path& path, const Matrix& layer,
                       std::span<const ClassId> labels);

struct TraceLayerFile {
  Matrix activations;
  std::vector<ClassId> labels;
};
TraceLayerFile read_trace_layer(const std::filesystem::path& path);

}  // namespace actsel
