#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "embedcast/errors.hpp"
#include "embedcast/grid.hpp"
#include "embedcast/random.hpp"

namespace embedcast::network {

enum class Activation { relu, logistic };

inline const char* to_string(Activation a) { return a == Activation::relu ? "relu" : "logistic"; }

inline Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "logistic") return Activation::logistic;
  throw InvalidConfig("unknown activation '" + s + "' (expected relu or logistic)");
}

inline double activate(Activation a, double z) {
  if (a == Activation::relu) return z > 0.0 ? z : 0.0;
  return 1.0 / (1.0 + std::exp(-z));
}

// Derivative expressed through the pre-activation z and output y = act(z).
// ReLU's subgradient at 0 is taken as 0.
inline double activate_derivative(Activation a, double z, double y) {
  if (a == Activation::relu) return z > 0.0 ? 1.0 : 0.0;
  return y * (1.0 - y);
}

// How uniform draws u in [0, 1) become initial weights.
enum class InitRule {
  shift_plus_scaled,   // w = shift + scale * u, with shift = beta_rng, scale = alpha_rng
  scaled_shifted,      // w = alpha_rng * (u + beta_rng), symmetric about 0 for beta_rng = -1/2
};

struct NetworkConfig {
  std::size_t input_dim = 1;
  std::size_t hidden = 10;
  Activation activation = Activation::relu;
  bool linear_output = false;
  double init_alpha = 1e-3;  // alpha_rng
  double init_beta = -0.5;   // beta_rng
  InitRule init_rule = InitRule::shift_plus_scaled;
  std::uint64_t seed = 1;

  void validate() const {
    if (input_dim < 1) throw InvalidConfig("network input_dim must be >= 1");
    if (hidden < 1) throw InvalidConfig("network hidden units must be >= 1");
    if (!std::isfinite(init_alpha) || !std::isfinite(init_beta)) throw InvalidConfig("init parameters must be finite");
  }
};

// One hidden layer: y = act_out(b2 + w2 . act(b1 + w1 x)).
struct Network {
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
  Activation activation = Activation::relu;
  bool linear_output = false;
  std::vector<double> w1;  // hidden x input_dim, row-major
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // hidden
  double b2 = 0.0;

  std::size_t parameter_count() const noexcept { return w1.size() + b1.size() + w2.size() + 1; }

  double output_activation(double z) const { return linear_output ? z : activate(activation, z); }
  double output_derivative(double z, double y) const {
    return linear_output ? 1.0 : activate_derivative(activation, z, y);
  }

  friend bool operator==(const Network&, const Network&) = default;
};

inline Network init_network(const NetworkConfig& cfg) {
  cfg.validate();
  Network net;
  net.input_dim = cfg.input_dim;
  net.hidden = cfg.hidden;
  net.activation = cfg.activation;
  net.linear_output = cfg.linear_output;
  Rng rng(cfg.seed);
  auto draw = [&] {
    const double u = rng.uniform();
    return cfg.init_rule == InitRule::shift_plus_scaled ? cfg.init_beta + cfg.init_alpha * u
                                                        : cfg.init_alpha * (u + cfg.init_beta);
  };
  net.w1.resize(cfg.hidden * cfg.input_dim);
  net.b1.resize(cfg.hidden);
  net.w2.resize(cfg.hidden);
  for (double& w : net.w1) w = draw();
  for (double& b : net.b1) b = draw();
  for (double& w : net.w2) w = draw();
  net.b2 = draw();
  return net;
}

// Scratch space for a forward pass; keeps training allocation-free.
struct Activations {
  std::vector<double> hidden_pre;
  std::vector<double> hidden_out;
  double output_pre = 0.0;
  double output = 0.0;
};

inline void forward(const Network& net, std::span<const double> x, Activations& act) {
  if (x.size() != net.input_dim)
    throw ContractError("input has " + std::to_string(x.size()) + " values, network expects " +
                        std::to_string(net.input_dim));
  act.hidden_pre.resize(net.hidden);
  act.hidden_out.resize(net.hidden);
  double z_out = net.b2;
  for (std::size_t h = 0; h < net.hidden; ++h) {
    const double* row = net.w1.data() + h * net.input_dim;
    double z = net.b1[h];
    for (std::size_t i = 0; i < net.input_dim; ++i) z += row[i] * x[i];
    act.hidden_pre[h] = z;
    act.hidden_out[h] = activate(net.activation, z);
    z_out += net.w2[h] * act.hidden_out[h];
  }
  act.output_pre = z_out;
  act.output = net.output_activation(z_out);
}

inline double forward(const Network& net, std::span<const double> x) {
  Activations act;
  forward(net, x, act);
  return act.output;
}

// Same layout as Network.
struct Gradients {
  std::vector<double> w1, b1, w2;
  double b2 = 0.0;

  void resize_like(const Network& net) {
    w1.assign(net.w1.size(), 0.0);
    b1.assign(net.b1.size(), 0.0);
    w2.assign(net.w2.size(), 0.0);
    b2 = 0.0;
  }
};

// Accumulates weight * d/dtheta (target - y)^2 into grad and returns the loss.
inline double accumulate_gradients(const Network& net, std::span<const double> x, double target, Activations& act,
                                   Gradients& grad, double weight = 1.0) {
  forward(net, x, act);
  const double err = act.output - target;
  const double delta_out = weight * 2.0 * err * net.output_derivative(act.output_pre, act.output);
  grad.b2 += delta_out;
  for (std::size_t h = 0; h < net.hidden; ++h) {
    grad.w2[h] += delta_out * act.hidden_out[h];
    const double delta_h =
        delta_out * net.w2[h] * activate_derivative(net.activation, act.hidden_pre[h], act.hidden_out[h]);
    if (delta_h == 0.0) continue;
    grad.b1[h] += delta_h;
    double* row = grad.w1.data() + h * net.input_dim;
    for (std::size_t i = 0; i < net.input_dim; ++i) row[i] += delta_h * x[i];
  }
  return err * err;
}

// Exact gradient of the squared error (target - forward(net, x))^2.
inline Gradients backprop_gradients(const Network& net, std::span<const double> x, double target) {
  Gradients grad;
  grad.resize_like(net);
  Activations act;
  accumulate_gradients(net, x, target, act, grad);
  return grad;
}

// Text format:
//   embedcast-network 1
//   input_dim <n> hidden <h> activation <relu|logistic> output <same|linear>
//   w1 values (row-major), b1, w2, b2, whitespace separated
inline void write_network(const Network& net, std::ostream& out) {
  out << "embedcast-network 1\n";
  out << "input_dim " << net.input_dim << " hidden " << net.hidden << " activation " << to_string(net.activation)
      << " output " << (net.linear_output ? "linear" : "same") << '\n';
  auto emit = [&](const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << format_double(v[i]);
    out << '\n';
  };
  emit(net.w1);
  emit(net.b1);
  emit(net.w2);
  out << format_double(net.b2) << '\n';
}

inline Network read_network(std::istream& in) {
  std::string magic, version;
  in >> magic >> version;
  if (magic != "embedcast-network" || version != "1") throw ParseError(1, "not an embedcast network file");
  std::string k1, k2, k3, k4, act, out_kind;
  Network net;
  in >> k1 >> net.input_dim >> k2 >> net.hidden >> k3 >> act >> k4 >> out_kind;
  if (!in || k1 != "input_dim" || k2 != "hidden" || k3 != "activation" || k4 != "output")
    throw ParseError(2, "malformed network header");
  net.activation = parse_activation(act);
  if (out_kind != "same" && out_kind != "linear") throw ParseError(2, "output must be same or linear");
  net.linear_output = out_kind == "linear";
  if (net.input_dim < 1 || net.hidden < 1) throw ParseError(2, "network dimensions must be positive");

  auto read_values = [&](std::vector<double>& v, std::size_t count, std::size_t line) {
    v.resize(count);
    std::string token;
    for (double& x : v) {
      if (!(in >> token) || !parse_double(token, x) || !std::isfinite(x))
        throw ParseError(line, "expected " + std::to_string(count) + " finite values");
    }
  };
  read_values(net.w1, net.hidden * net.input_dim, 3);
  read_values(net.b1, net.hidden, 4);
  read_values(net.w2, net.hidden, 5);
  std::vector<double> b2;
  read_values(b2, 1, 6);
  net.b2 = b2[0];
  return net;
}

}  // namespace embedcast::network
