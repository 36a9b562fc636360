#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace actsel {

enum class OptimizerKind { SGD, SGDMomentum, Adagrad, RMSProp, Adadelta, Adam, AdagradSq, AdadeltaSq };

std::string_view to_string(OptimizerKind kind);
std::optional<OptimizerKind> parse_optimizer_kind(std::string_view text);

// Hyper-parameters for every update rule; each rule reads only its own.
//   SGD / SGDMomentum: learning_rate, momentum
//   Adagrad, AdagradSq: learning_rate, eps (+ k)
//   RMSProp:            learning_rate, rho (decay of the squared-gradient EMA), eps
//   Adadelta, AdadeltaSq: learning_rate, rho, eps (+ k)
//   Adam:               learning_rate, beta1, beta2, eps
// weight_decay applies to all of them as coupled L2 on the gradient.
struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::SGD;
  double learning_rate = 0.1;
  double weight_decay = 0.0;
  double momentum = 0.0;
  double rho = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double k = 1.0;

  // Baseline learning rates and the usual framework defaults for the rest.
  static OptimizerConfig defaults(OptimizerKind kind);

  // Throws ConfigError for out-of-range values.
  void validate() const;
};

// Per-parameter accumulators, zero-initialised, shaped like the parameter.
// Only the buffers the rule needs are allocated.
struct ParamState {
  std::vector<double> velocity;    // SGD momentum
  std::vector<double> accum;       // Adagrad G, RMSProp G, Adadelta E[g²]
  std::vector<double> sq_update;   // Adadelta E[Δθ²]
  std::vector<double> first;       // Adam p
  std::vector<double> second;      // Adam q
  std::uint64_t steps = 0;         // Adam t

  static ParamState zeros(std::size_t size, OptimizerKind kind);
};

// g + λθ
std::vector<double> apply_weight_decay(std::span<const double> grad, std::span<const double> theta,
                                       double weight_decay);

// Single-parameter update rules. theta is updated in place; grad must
// already include any weight decay.
void step_sgd(ParamState& state, std::span<double> theta, std::span<const double> grad,
              const OptimizerConfig& cfg);
void step_adagrad(ParamState& state, std::span<double> theta, std::span<const double> grad,
                  const OptimizerConfig& cfg);
void step_rmsprop(ParamState& state, std::span<double> theta, std::span<const double> grad,
                  const OptimizerConfig& cfg);
void step_adadelta(ParamState& state, std::span<double> theta, std::span<const double> grad,
                   const OptimizerConfig& cfg);
void step_adam(ParamState& state, std::span<double> theta, std::span<const double> grad,
               const OptimizerConfig& cfg);
void step_adagrad_sq(ParamState& state, std::span<double> theta, std::span<const double> grad,
                     const OptimizerConfig& cfg);
void step_adadelta_sq(ParamState& state, std::span<double> theta, std::span<const double> grad,
                      const OptimizerConfig& cfg);

// Dispatch on cfg.kind.
void step(ParamState& state, std::span<double> theta, std::span<const double> grad,
          const OptimizerConfig& cfg);

// Owns one ParamState per parameter tensor, keyed by position.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) { cfg_.validate(); }

  const OptimizerConfig& config() const { return cfg_; }
  const std::vector<ParamState>& states() const { return states_; }

  // Applies weight decay, then the update rule, to every parameter.
  void step(const std::vector<std::span<double>>& params,
            const std::vector<std::span<const double>>& grads);

 private:
  OptimizerConfig cfg_;
  std::vector<ParamState> states_;
  std::vector<double> scratch_;
};

// η/(1−γ)·(N/B − 1): the predicted scale of SGD noise.
double fluctuation_scale(double learning_rate, double momentum, std::size_t dataset_size,
                         std::size_t batch_size);

}  // namespace actsel
