#include "actsel/optim.hpp"

#include <array>
#include <cmath>
#include <string>
#include <utility>

#include "actsel/errors.hpp"

namespace actsel {

namespace {

constexpr std::array<std::pair<OptimizerKind, std::string_view>, 8> kKindNames{{
    {OptimizerKind::SGD, "sgd"},
    {OptimizerKind::SGDMomentum, "sgd_momentum"},
    {OptimizerKind::Adagrad, "adagrad"},
    {OptimizerKind::RMSProp, "rmsprop"},
    {OptimizerKind::Adadelta, "adadelta"},
    {OptimizerKind::Adam, "adam"},
    {OptimizerKind::AdagradSq, "adagrad_sq"},
    {OptimizerKind::AdadeltaSq, "adadelta_sq"},
}};

void check_shapes(std::span<double> theta, std::span<const double> grad, const std::vector<double>& buffer) {
  if (theta.size() != grad.size() || buffer.size() != theta.size()) {
    throw ShapeError("optimizer: parameter, gradient and state sizes differ");
  }
}

bool in_unit(double v) { return v >= 0.0 && v < 1.0; }

}  // namespace

std::string_view to_string(OptimizerKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<OptimizerKind> parse_optimizer_kind(std::string_view text) {
  for (const auto& [k, name] : kKindNames) {
    if (name == text) return k;
  }
  return std::nullopt;
}

OptimizerConfig OptimizerConfig::defaults(OptimizerKind kind) {
  OptimizerConfig cfg;
  cfg.kind = kind;
  switch (kind) {
    case OptimizerKind::SGD:
      cfg.learning_rate = 0.1;
      break;
    case OptimizerKind::SGDMomentum:
      cfg.learning_rate = 0.1;
      cfg.momentum = 0.9;
      break;
    case OptimizerKind::Adagrad:
    case OptimizerKind::AdagradSq:
      cfg.learning_rate = 0.1;
      cfg.eps = 1e-10;
      break;
    case OptimizerKind::RMSProp:
      cfg.learning_rate = 0.01;
      cfg.rho = 0.99;
      cfg.eps = 1e-8;
      break;
    case OptimizerKind::Adadelta:
    case OptimizerKind::AdadeltaSq:
      cfg.learning_rate = 1.0;
      cfg.rho = 0.9;
      cfg.eps = 1e-6;
      break;
    case OptimizerKind::Adam:
      cfg.learning_rate = 0.001;
      cfg.beta1 = 0.9;
      cfg.beta2 = 0.999;
      cfg.eps = 1e-8;
      break;
  }
  return cfg;
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("optimizer.learning_rate must be a positive finite number");
  }
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    throw ConfigError("optimizer.weight_decay must be non-negative");
  }
  if (!in_unit(momentum)) throw ConfigError("optimizer.momentum must lie in [0, 1)");
  if (!in_unit(rho)) throw ConfigError("optimizer.rho must lie in [0, 1)");
  if (!in_unit(beta1) || !in_unit(beta2)) throw ConfigError("optimizer.betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("optimizer.eps must be positive");
  if (!(k > 0.0)) throw ConfigError("optimizer.k must be positive");
}

ParamState ParamState::zeros(std::size_t size, OptimizerKind kind) {
  ParamState s;
  switch (kind) {
    case OptimizerKind::SGD:
    case OptimizerKind::SGDMomentum:
      s.velocity.assign(size, 0.0);
      break;
    case OptimizerKind::Adagrad:
    case OptimizerKind::AdagradSq:
    case OptimizerKind::RMSProp:
      s.accum.assign(size, 0.0);
      break;
    case OptimizerKind::Adadelta:
    case OptimizerKind::AdadeltaSq:
      s.accum.assign(size, 0.0);
      s.sq_update.assign(size, 0.0);
      break;
    case OptimizerKind::Adam:
      s.first.assign(size, 0.0);
      s.second.assign(size, 0.0);
      break;
  }
  return s;
}

std::vector<double> apply_weight_decay(std::span<const double> grad, std::span<const double> theta,
                                       double weight_decay) {
  if (grad.size() != theta.size()) throw ShapeError("weight decay: gradient and parameter sizes differ");
  std::vector<double> out(grad.begin(), grad.end());
  if (weight_decay == 0.0) return out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += weight_decay * theta[i];
  return out;
}

void step_sgd(ParamState& state, std::span<double> theta, std::span<const double> grad,
              const OptimizerConfig& cfg) {
  const double lr = cfg.learning_rate;
  if (cfg.momentum == 0.0) {
    if (theta.size() != grad.size()) throw ShapeError("optimizer: parameter and gradient sizes differ");
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * grad[i];
    return;
  }
  if (state.velocity.empty()) state.velocity.assign(theta.size(), 0.0);
  check_shapes(theta, grad, state.velocity);
  auto& v = state.velocity;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    v[i] = cfg.momentum * v[i] + grad[i];
    theta[i] -= lr * v[i];
  }
}

void step_adagrad(ParamState& state, std::span<double> theta, std::span<const double> grad,
                  const OptimizerConfig& cfg) {
  check_shapes(theta, grad, state.accum);
  auto& G = state.accum;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    G[i] += grad[i] * grad[i];
    theta[i] -= cfg.learning_rate * grad[i] / (std::sqrt(G[i]) + cfg.eps);
  }
}

void step_rmsprop(ParamState& state, std::span<double> theta, std::span<const double> grad,
                  const OptimizerConfig& cfg) {
  check_shapes(theta, grad, state.accum);
  auto& G = state.accum;
  const double decay = cfg.rho;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    G[i] = decay * G[i] + (1.0 - decay) * grad[i] * grad[i];
    theta[i] -= cfg.learning_rate * grad[i] / (std::sqrt(G[i]) + cfg.eps);
  }
}

void step_adadelta(ParamState& state, std::span<double> theta, std::span<const double> grad,
                   const OptimizerConfig& cfg) {
  check_shapes(theta, grad, state.accum);
  check_shapes(theta, grad, state.sq_update);
  auto& Eg = state.accum;
  auto& Ex = state.sq_update;
  const double rho = cfg.rho;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    Eg[i] = rho * Eg[i] + (1.0 - rho) * grad[i] * grad[i];
    // Numerator uses the update EMA from the previous step.
    const double delta = -std::sqrt(Ex[i] + cfg.eps) / std::sqrt(Eg[i] + cfg.eps) * grad[i];
    theta[i] += cfg.learning_rate * delta;
    Ex[i] = rho * Ex[i] + (1.0 - rho) * delta * delta;
  }
}

void step_adam(ParamState& state, std::span<double> theta, std::span<const double> grad,
               const OptimizerConfig& cfg) {
  check_shapes(theta, grad, state.first);
  check_shapes(theta, grad, state.second);
  auto& p = state.first;
  auto& q = state.second;
  const double t = static_cast<double>(state.steps + 1);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    p[i] = cfg.beta1 * p[i] + (1.0 - cfg.beta1) * grad[i];
    q[i] = cfg.beta2 * q[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double p_hat = p[i] / correction1;
    const double q_hat = q[i] / correction2;
    theta[i] -= cfg.learning_rate * p_hat / (std::sqrt(q_hat) + cfg.eps);
  }
  ++state.steps;
}

void step_adagrad_sq(ParamState& state, std::span<double> theta, std::span<const double> grad,
                     const OptimizerConfig& cfg) {
  check_shapes(theta, grad, state.accum);
  auto& G = state.accum;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    G[i] += grad[i] * grad[i];
    theta[i] -= cfg.learning_rate * cfg.k * G[i] * G[i] * grad[i] / (std::sqrt(G[i]) + cfg.eps);
  }
}

void step_adadelta_sq(ParamState& state, std::span<double> theta, std::span<const double> grad,
                      const OptimizerConfig& cfg) {
  check_shapes(theta, grad, state.accum);
  check_shapes(theta, grad, state.sq_update);
  auto& Eg = state.accum;
  auto& Ex = state.sq_update;
  const double rho = cfg.rho;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    Eg[i] = rho * Eg[i] + (1.0 - rho) * grad[i] * grad[i];
    const double base = -std::sqrt(Ex[i] + cfg.eps) / std::sqrt(Eg[i] + cfg.eps) * grad[i];
    // Scaled by k·(E[g²])² using the freshly updated E[g²].
    const double delta = cfg.k * Eg[i] * Eg[i] * base;
    theta[i] += cfg.learning_rate * delta;
    Ex[i] = rho * Ex[i] + (1.0 - rho) * delta * delta;
  }
}

void step(ParamState& state, std::span<double> theta, std::span<const double> grad,
          const OptimizerConfig& cfg) {
  switch (cfg.kind) {
    case OptimizerKind::SGD:
    case OptimizerKind::SGDMomentum:
      return step_sgd(state, theta, grad, cfg);
    case OptimizerKind::Adagrad:
      return step_adagrad(state, theta, grad, cfg);
    case OptimizerKind::RMSProp:
      return step_rmsprop(state, theta, grad, cfg);
    case OptimizerKind::Adadelta:
      return step_adadelta(state, theta, grad, cfg);
    case OptimizerKind::Adam:
      return step_adam(state, theta, grad, cfg);
    case OptimizerKind::AdagradSq:
      return step_adagrad_sq(state, theta, grad, cfg);
    case OptimizerKind::AdadeltaSq:
      return step_adadelta_sq(state, theta, grad, cfg);
  }
}

void Optimizer::step(const std::vector<std::span<double>>& params,
                     const std::vector<std::span<const double>>& grads) {
  if (params.size() != grads.size()) throw ShapeError("optimizer: parameter and gradient lists differ");
  if (states_.empty()) {
    for (const auto& p : params) states_.push_back(ParamState::zeros(p.size(), cfg_.kind));
  }
  if (states_.size() != params.size()) throw ShapeError("optimizer: parameter list changed between steps");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (cfg_.weight_decay == 0.0) {
      actsel::step(states_[i], params[i], grads[i], cfg_);
    } else {
      scratch_ = apply_weight_decay(grads[i], params[i], cfg_.weight_decay);
      actsel::step(states_[i], params[i], scratch_, cfg_);
    }
  }
}

double fluctuation_scale(double learning_rate, double momentum, std::size_t dataset_size,
                         std::size_t batch_size) {
  if (batch_size == 0) throw InputError("fluctuation scale: batch size must be positive");
  if (batch_size > dataset_size) throw InputError("fluctuation scale: batch size exceeds dataset size");
  if (!(momentum < 1.0)) throw InputError("fluctuation scale: momentum must be below 1");
  return learning_rate / (1.0 - momentum) *
         (static_cast<double>(dataset_size) / static_cast<double>(batch_size) - 1.0);
}

}  // namespace actsel
