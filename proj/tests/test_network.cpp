#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "embedcast/embedding/patterns.hpp"
#include "embedcast/errors.hpp"
#include "embedcast/network/network.hpp"
#include "embedcast/network/train.hpp"
#include "embedcast/random.hpp"

using namespace embedcast;
using namespace embedcast::network;

namespace {

Network random_net(std::size_t in, std::size_t hidden, Activation act, std::uint64_t seed, double scale = 1.0) {
  NetworkConfig c;
  c.input_dim = in;
  c.hidden = hidden;
  c.activation = act;
  c.init_rule = InitRule::scaled_shifted;
  c.init_alpha = 2.0 * scale;
  c.init_beta = -0.5;
  c.seed = seed;
  return init_network(c);
}

double loss_at(const Network& net, std::span<const double> x, double t) {
  const double e = t - forward(net, x);
  return e * e;
}

void check_gradients(const Network& net, const std::vector<double>& x, double target, double h, double rel) {
  const Gradients g = backprop_gradients(net, x, target);
  auto central = [&](auto&& param_ref) {
    Network plus = net, minus = net;
    param_ref(plus) += h;
    param_ref(minus) -= h;
    return (loss_at(plus, x, target) - loss_at(minus, x, target)) / (2.0 * h);
  };
  auto compare = [&](double analytic, double numeric, const char* what, std::size_t i) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    EXPECT_LE(std::abs(analytic - numeric) / scale, rel) << what << "[" << i << "] " << analytic << " vs " << numeric;
  };
  for (std::size_t i = 0; i < net.w1.size(); ++i)
    compare(g.w1[i], central([i](Network& n) -> double& { return n.w1[i]; }), "w1", i);
  for (std::size_t i = 0; i < net.b1.size(); ++i)
    compare(g.b1[i], central([i](Network& n) -> double& { return n.b1[i]; }), "b1", i);
  for (std::size_t i = 0; i < net.w2.size(); ++i)
    compare(g.w2[i], central([i](Network& n) -> double& { return n.w2[i]; }), "w2", i);
  compare(g.b2, central([](Network& n) -> double& { return n.b2; }), "b2", 0);
}

}  // namespace

TEST(Init, ZeroParametersGiveZeroNetwork) {
  NetworkConfig c;
  c.input_dim = 4;
  c.init_alpha = 0.0;
  c.init_beta = 0.0;
  const Network n = init_network(c);
  for (double w : n.w1) EXPECT_EQ(w, 0.0);
  for (double w : n.b1) EXPECT_EQ(w, 0.0);
  for (double w : n.w2) EXPECT_EQ(w, 0.0);
  EXPECT_EQ(n.b2, 0.0);
}

TEST(Init, ShiftPlusScaledRange) {
  NetworkConfig c;
  c.input_dim = 12;
  c.hidden = 10;
  c.init_alpha = 1e-3;
  c.init_beta = -0.5;
  const Network n = init_network(c);
  auto in_range = [](double w) { return w >= -0.5 && w < -0.499; };
  for (double w : n.w1) EXPECT_TRUE(in_range(w)) << w;
  for (double w : n.b1) EXPECT_TRUE(in_range(w)) << w;
  for (double w : n.w2) EXPECT_TRUE(in_range(w)) << w;
  EXPECT_TRUE(in_range(n.b2));
}

TEST(Init, ScaledShiftedIsCentred) {
  NetworkConfig c;
  c.input_dim = 50;
  c.hidden = 40;
  c.init_rule = InitRule::scaled_shifted;
  c.init_alpha = 1e-3;
  c.init_beta = -0.5;
  const Network n = init_network(c);
  double sum = 0.0;
  for (double w : n.w1) {
    EXPECT_GE(w, -0.5e-3);
    EXPECT_LT(w, 0.5e-3);
    sum += w;
  }
  EXPECT_LT(std::abs(sum / static_cast<double>(n.w1.size())), 0.05e-3);
}

TEST(Init, SameSeedSameNetwork) {
  NetworkConfig c;
  c.input_dim = 7;
  c.seed = 99;
  EXPECT_EQ(init_network(c), init_network(c));
  NetworkConfig d = c;
  d.seed = 100;
  EXPECT_FALSE(init_network(c) == init_network(d));
}

TEST(Init, InvalidDimensions) {
  NetworkConfig c;
  c.input_dim = 0;
  EXPECT_THROW(init_network(c), InvalidConfig);
  c.input_dim = 1;
  c.hidden = 0;
  EXPECT_THROW(init_network(c), InvalidConfig);
}

TEST(Forward, ZeroNetwork) {
  NetworkConfig c;
  c.input_dim = 3;
  c.init_alpha = 0.0;
  c.init_beta = 0.0;
  const std::vector<double> x{1.0, -2.0, 3.0};
  EXPECT_EQ(forward(init_network(c), x), 0.0);
  c.activation = Activation::logistic;
  EXPECT_EQ(forward(init_network(c), x), 0.5);
}

TEST(Forward, HandBuiltRelu) {
  Network n;
  n.input_dim = 2;
  n.hidden = 1;
  n.activation = Activation::relu;
  n.w1 = {0.5, -1.0};
  n.b1 = {0.25};
  n.w2 = {2.0};
  n.b2 = -0.5;
  // hidden = relu(0.25 + 0.5*3 - 1*1) = 0.75; output = relu(-0.5 + 2*0.75) = 1.0
  EXPECT_DOUBLE_EQ(forward(n, std::vector<double>{3.0, 1.0}), 1.0);
  // hidden = relu(0.25 + 0 - 2) = 0; output = relu(-0.5) = 0
  EXPECT_EQ(forward(n, std::vector<double>{0.0, 2.0}), 0.0);
  n.linear_output = true;
  EXPECT_EQ(forward(n, std::vector<double>{0.0, 2.0}), -0.5);
}

TEST(Forward, DimensionMismatch) {
  const Network n = random_net(3, 2, Activation::relu, 1);
  EXPECT_THROW(forward(n, std::vector<double>{1.0, 2.0}), ContractError);
}

TEST(Backprop, LogisticMatchesCentralDifferences) {
  Rng rng(17);
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    const std::size_t in = 1 + static_cast<std::size_t>(rng.uniform_int(0, 8));
    const std::size_t hidden = 1 + static_cast<std::size_t>(rng.uniform_int(0, 6));
    const Network net = random_net(in, hidden, Activation::logistic, trial + 1);
    std::vector<double> x(in);
    for (double& v : x) v = 4.0 * rng.uniform() - 2.0;
    check_gradients(net, x, rng.uniform(), 1e-6, 1e-5);
  }
}

TEST(Backprop, ReluAwayFromKinksAndLinearOutput) {
  Rng rng(23);
  int checked = 0;
  for (std::uint64_t trial = 0; trial < 200 && checked < 100; ++trial) {
    Network net = random_net(5, 4, Activation::relu, trial + 7);
    net.linear_output = trial % 2 == 1;
    std::vector<double> x(5);
    for (double& v : x) v = 4.0 * rng.uniform() - 2.0;
    Activations act;
    forward(net, x, act);
    bool near_kink = std::abs(act.output_pre) < 1e-3 && !net.linear_output;
    for (double z : act.hidden_pre) near_kink = near_kink || std::abs(z) < 1e-3;
    if (near_kink) continue;
    check_gradients(net, x, 3.0 * rng.uniform() - 1.0, 1e-6, 1e-5);
    ++checked;
  }
  EXPECT_GE(checked, 100);
}

TEST(Backprop, ZeroErrorGivesZeroGradient) {
  const Network net = random_net(4, 3, Activation::logistic, 5);
  const std::vector<double> x{0.1, 0.2, -0.3, 0.4};
  const Gradients g = backprop_gradients(net, x, forward(net, x));
  for (double v : g.w1) EXPECT_EQ(v, 0.0);
  for (double v : g.b1) EXPECT_EQ(v, 0.0);
  for (double v : g.w2) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(g.b2, 0.0);
}

TEST(Backprop, DeadReluUnitsHaveNoInputGradient) {
  NetworkConfig c;
  c.input_dim = 4;
  c.hidden = 5;
  c.init_alpha = 1e-3;
  c.init_beta = -0.5;
  const Network net = init_network(c);  // every weight near -0.5
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  const Gradients g = backprop_gradients(net, x, 5.0);
  for (double v : g.w1) EXPECT_EQ(v, 0.0);
}

TEST(LearningRate, Schedule) {
  EXPECT_EQ(learning_rate(0.1, 0), 0.1);
  EXPECT_EQ(learning_rate(0.1, 10000), 0.05);
  EXPECT_EQ(learning_rate(0.3, 10000), 0.15);
  EXPECT_LT(learning_rate(0.1, 20000), learning_rate(0.1, 19999));
}

TEST(Train, MemorizesSinglePattern) {
  PatternSet set(3);
  auto in = set.append(0.8, 0, 0);
  in[0] = 0.2;
  in[1] = -0.4;
  in[2] = 0.9;
  TrainConfig t;
  t.eta = 0.5;
  t.steps = 200000;
  const auto r = train(random_net(3, 4, Activation::logistic, 3, 0.5), set, t);
  EXPECT_LT(r.final_mse, 1e-6);
  EXPECT_EQ(r.loss_trace.size(), 200u);
}

TEST(Train, ZeroEtaLeavesNetworkUnchanged) {
  PatternSet set(2);
  auto in = set.append(1.0, 0, 0);
  in[0] = 1.0;
  in[1] = 2.0;
  const Network start = random_net(2, 3, Activation::relu, 4);
  TrainConfig t;
  t.eta = 0.0;
  t.steps = 100;
  EXPECT_EQ(train(start, set, t).net, start);
}

TEST(Train, LearnsLinearMap) {
  // target = 0.5 + 0.3 x0 - 0.2 x1 + 0.1 x2 on positive inputs.
  Rng rng(31);
  PatternSet set(3);
  for (int i = 0; i < 100; ++i) {
    double x[3];
    for (double& v : x) v = rng.uniform();
    auto in = set.append(0.5 + 0.3 * x[0] - 0.2 * x[1] + 0.1 * x[2], 0, 0);
    std::copy(x, x + 3, in.begin());
  }
  NetworkConfig c;
  c.input_dim = 3;
  c.hidden = 10;
  c.linear_output = true;
  c.init_rule = InitRule::scaled_shifted;
  c.init_alpha = 0.5;
  c.seed = 2;
  TrainConfig t;
  t.eta = 0.05;
  t.momentum = 0.5;
  t.steps = 300000;
  const auto r = train(init_network(c), set, t);
  EXPECT_LT(r.final_mse, 1e-4);
  EXPECT_EQ(r.net.parameter_count(), init_network(c).parameter_count());
}

TEST(Train, DeterministicGivenSeeds) {
  PatternSet set(2);
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    auto in = set.append(rng.uniform(), 0, 0);
    in[0] = rng.uniform();
    in[1] = rng.uniform();
  }
  TrainConfig t;
  t.steps = 5000;
  t.seed = 9;
  const Network start = random_net(2, 5, Activation::logistic, 6);
  const auto a = train(start, set, t);
  const auto b = train(start, set, t);
  EXPECT_EQ(a.net, b.net);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
}

TEST(Train, DivergenceReportsStep) {
  PatternSet set(1);
  auto in = set.append(1e3, 0, 0);
  in[0] = 1e3;
  Network net = random_net(1, 2, Activation::relu, 1);
  net.linear_output = true;
  TrainConfig t;
  t.eta = 10.0;
  t.steps = 1000;
  try {
    train(net, set, t);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_LT(e.step(), 1000u);
  }
}

TEST(Train, Preconditions) {
  PatternSet empty(2);
  EXPECT_THROW(train(random_net(2, 2, Activation::relu, 1), empty, {}), ContractError);
  PatternSet set(3);
  set.append(0.0, 0, 0);
  EXPECT_THROW(train(random_net(2, 2, Activation::relu, 1), set, {}), ContractError);
  TrainConfig bad;
  bad.momentum = 1.0;
  EXPECT_THROW(train(random_net(3, 2, Activation::relu, 1), set, bad), InvalidConfig);
}

TEST(Serialization, RoundTripExact) {
  for (Activation a : {Activation::relu, Activation::logistic}) {
    Network n = random_net(6, 5, a, 12, 3.0);
    n.linear_output = a == Activation::relu;
    n.b2 = 1.0 / 3.0;
    std::stringstream io;
    write_network(n, io);
    EXPECT_EQ(read_network(io), n);
  }
}

TEST(Serialization, RejectsMalformed) {
  std::istringstream wrong_magic("something 1\n");
  EXPECT_THROW(read_network(wrong_magic), ParseError);
  std::istringstream truncated("embedcast-network 1\ninput_dim 2 hidden 1 activation relu output same\n0.1 0.2\n");
  EXPECT_THROW(read_network(truncated), ParseError);
  std::istringstream bad_act("embedcast-network 1\ninput_dim 1 hidden 1 activation tanh output same\n0\n0\n0\n0\n");
  EXPECT_THROW(read_network(bad_act), InvalidConfig);
}
