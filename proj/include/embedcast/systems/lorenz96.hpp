#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "embedcast/errors.hpp"
#include "embedcast/grid.hpp"
#include "embedcast/random.hpp"

namespace embedcast::systems {

// Classical fourth-order Runge-Kutta step for x' = rhs(x).
template <typename Rhs>
std::vector<double> rk4_step(Rhs&& rhs, std::span<const double> state, double dt) {
  const std::size_t n = state.size();
  std::vector<double> tmp(n);

  const std::vector<double> k1 = rhs(state);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = state[i] + 0.5 * dt * k1[i];
  const std::vector<double> k2 = rhs(std::span<const double>(tmp));
  for (std::size_t i = 0; i < n; ++i) tmp[i] = state[i] + 0.5 * dt * k2[i];
  const std::vector<double> k3 = rhs(std::span<const double>(tmp));
  for (std::size_t i = 0; i < n; ++i) tmp[i] = state[i] + dt * k3[i];
  const std::vector<double> k4 = rhs(std::span<const double>(tmp));

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = state[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

// dx_j/dt = (x_{j+1} - x_{j-2}) x_{j-1} - x_j + F, indices cyclic.
inline std::vector<double> lorenz96_rhs(std::span<const double> x, double forcing) {
  const std::size_t n = x.size();
  if (n < 4) throw ContractError("lorenz96 needs at least 4 sites");
  std::vector<double> dx(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double xp1 = x[(j + 1) % n];
    const double xm1 = x[(j + n - 1) % n];
    const double xm2 = x[(j + n - 2) % n];
    dx[j] = (xp1 - xm2) * xm1 - x[j] + forcing;
  }
  return dx;
}

struct Lorenz96Config {
  std::size_t sites = 40;
  double forcing = 5.0;
  double dt = 0.05;
  std::size_t steps = 531;
  std::size_t burn_in = 0;
  // Explicit initial state; when empty the state is F + perturbation * (u - 1/2)
  // with u drawn per site from the seeded generator.
  std::vector<double> initial_state;
  double perturbation = 0.01;
  std::uint64_t seed = 1;

  void validate() const {
    if (sites < 4) throw InvalidConfig("lorenz96 needs at least 4 sites");
    if (!(dt > 0.0)) throw InvalidConfig("lorenz96 dt must be positive");
    if (steps < 1) throw InvalidConfig("lorenz96 needs at least 1 step");
    if (!initial_state.empty() && initial_state.size() != sites)
      throw InvalidConfig("lorenz96 initial_state length must equal sites");
  }
};

inline Grid simulate_lorenz96(const Lorenz96Config& cfg) {
  cfg.validate();
  std::vector<double> x = cfg.initial_state;
  if (x.empty()) {
    Rng rng(cfg.seed);
    x.resize(cfg.sites);
    for (double& xi : x) xi = cfg.forcing + cfg.perturbation * (rng.uniform() - 0.5);
  }
  auto rhs = [&](std::span<const double> s) { return lorenz96_rhs(s, cfg.forcing); };
  auto advance = [&](std::size_t step) {
    x = rk4_step(rhs, x, cfg.dt);
    for (double xi : x)
      if (!(std::abs(xi) <= 1e6)) throw DivergenceError(step, "lorenz96 diverged");
  };

  for (std::size_t step = 0; step < cfg.burn_in; ++step) advance(step + 1);

  Grid grid(cfg.steps, cfg.sites);
  grid.time_step = cfg.dt;
  grid.space_label = "site";
  for (std::size_t n = 0; n < cfg.steps; ++n) {
    if (n > 0) advance(cfg.burn_in + n);
    std::copy(x.begin(), x.end(), grid.row(n).begin());
  }
  return grid;
}

}  // namespace embedcast::systems
