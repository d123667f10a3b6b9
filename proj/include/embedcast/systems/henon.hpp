#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "embedcast/errors.hpp"
#include "embedcast/grid.hpp"
#include "embedcast/random.hpp"

namespace embedcast::systems {

struct HenonLatticeConfig {
  std::size_t sites = 100;
  std::size_t steps = 531;
  std::uint64_t seed = 1;
  std::size_t burn_in = 0;
  double boundary_u = 0.5;
  double boundary_v = 0.0;

  void validate() const {
    if (sites < 3) throw InvalidConfig("henon lattice needs at least 3 sites");
    if (steps < 1) throw InvalidConfig("henon lattice needs at least 1 step");
  }
};

struct HenonState {
  double u;
  double v;
};

// One site of the diffusively coupled Henon lattice.
constexpr HenonState henon_local_update(double u_left, double u_center, double u_right, double v) {
  const double coupled = 0.5 * u_center + 0.25 * (u_left + u_right);
  return {1.0 - 1.45 * coupled * coupled + 0.3 * v, u_center};
}

// Returns the u field. Row 0 is the state after burn_in updates of the random
// initial condition; the two edge sites are pinned to the boundary values.
inline Grid simulate_henon(const HenonLatticeConfig& cfg) {
  cfg.validate();
  const std::size_t m_count = cfg.sites;
  std::vector<double> u(m_count), v(m_count);
  Rng rng(cfg.seed);
  for (std::size_t m = 1; m + 1 < m_count; ++m) u[m] = rng.uniform();
  for (std::size_t m = 1; m + 1 < m_count; ++m) v[m] = rng.uniform();
  u.front() = u.back() = cfg.boundary_u;
  v.front() = v.back() = cfg.boundary_v;

  std::vector<double> u_next(m_count), v_next(m_count);
  auto advance = [&](std::size_t step) {
    u_next.front() = u_next.back() = cfg.boundary_u;
    v_next.front() = v_next.back() = cfg.boundary_v;
    for (std::size_t m = 1; m + 1 < m_count; ++m) {
      const auto s = henon_local_update(u[m - 1], u[m], u[m + 1], v[m]);
      if (!(std::abs(s.u) <= 1e6)) throw DivergenceError(step, "henon lattice diverged");
      u_next[m] = s.u;
      v_next[m] = s.v;
    }
    u.swap(u_next);
    v.swap(v_next);
  };

  for (std::size_t step = 0; step < cfg.burn_in; ++step) advance(step + 1);

  Grid grid(cfg.steps, m_count);
  grid.space_label = "site";
  for (std::size_t n = 0; n < cfg.steps; ++n) {
    if (n > 0) advance(cfg.burn_in + n);
    std::copy(u.begin(), u.end(), grid.row(n).begin());
  }
  return grid;
}

}  // namespace embedcast::systems
