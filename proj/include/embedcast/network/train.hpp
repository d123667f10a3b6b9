#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "embedcast/embedding/patterns.hpp"
#include "embedcast/errors.hpp"
#include "embedcast/network/network.hpp"
#include "embedcast/random.hpp"

namespace embedcast::network {

struct TrainConfig {
  double eta = 0.1;
  double momentum = 0.0;
  std::size_t steps = 1'000'000;
  std::size_t batch_size = 1;
  std::size_t trace_every = 1000;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw InvalidConfig("eta must be finite and non-negative");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidConfig("momentum must be in [0, 1)");
    if (steps < 1) throw InvalidConfig("training steps must be >= 1");
    if (batch_size < 1) throw InvalidConfig("batch size must be >= 1");
    if (trace_every < 1) throw InvalidConfig("trace interval must be >= 1");
  }
};

// eta_n = eta / (1 + n / 10000)
inline double learning_rate(double eta, std::size_t step) {
  return eta / (1.0 + static_cast<double>(step) / 10000.0);
}

struct TrainResult {
  Network net;
  std::vector<double> loss_trace;  // mean per-sample loss of each trace_every-step block
  double final_mse = 0.0;          // over the full pattern set after training
};

inline double mean_squared_error(const Network& net, const PatternSet& patterns) {
  if (patterns.empty()) return 0.0;
  Activations act;
  double sum = 0.0;
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    const auto p = patterns[i];
    forward(net, p.input, act);
    const double e = act.output - p.target;
    sum += e * e;
  }
  return sum / static_cast<double>(patterns.size());
}

// Stochastic gradient descent with momentum (velocity form): each step samples
// batch_size patterns uniformly with replacement, averages their gradients and
// applies v <- momentum * v - eta_n * grad, theta <- theta + v.
inline TrainResult train(Network net, const PatternSet& patterns, const TrainConfig& cfg) {
  cfg.validate();
  if (patterns.empty()) throw ContractError("training needs at least one pattern");
  if (patterns.input_dim() != net.input_dim)
    throw ContractError("pattern dimension " + std::to_string(patterns.input_dim()) + " != network input " +
                        std::to_string(net.input_dim));

  Rng rng(cfg.seed);
  Gradients grad, vel;
  grad.resize_like(net);
  vel.resize_like(net);
  Activations act;
  TrainResult result;
  const auto last = static_cast<std::int64_t>(patterns.size()) - 1;
  const double batch_weight = 1.0 / static_cast<double>(cfg.batch_size);

  auto update = [&](std::vector<double>& theta, std::vector<double>& v, const std::vector<double>& g, double lr) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
      v[i] = cfg.momentum * v[i] - lr * g[i];
      theta[i] += v[i];
    }
  };

  double block_loss = 0.0;
  std::size_t block_count = 0;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    grad.resize_like(net);
    double loss = 0.0;
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      const auto p = patterns[static_cast<std::size_t>(rng.uniform_int(0, last))];
      loss += accumulate_gradients(net, p.input, p.target, act, grad, batch_weight);
    }
    loss *= batch_weight;
    if (!std::isfinite(loss)) throw DivergenceError(step, "training loss became non-finite");

    const double lr = learning_rate(cfg.eta, step);
    update(net.w1, vel.w1, grad.w1, lr);
    update(net.b1, vel.b1, grad.b1, lr);
    update(net.w2, vel.w2, grad.w2, lr);
    vel.b2 = cfg.momentum * vel.b2 - lr * grad.b2;
    net.b2 += vel.b2;

    block_loss += loss;
    if (++block_count == cfg.trace_every) {
      result.loss_trace.push_back(block_loss / static_cast<double>(block_count));
      block_loss = 0.0;
      block_count = 0;
    }
  }
  result.final_mse = mean_squared_error(net, patterns);
  if (!std::isfinite(result.final_mse)) throw DivergenceError(cfg.steps, "trained network produces non-finite output");
  result.net = std::move(net);
  return result;
}

}  // namespace embedcast::network
