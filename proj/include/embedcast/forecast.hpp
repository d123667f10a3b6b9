#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "embedcast/embedding/patterns.hpp"
#include "embedcast/errors.hpp"
#include "embedcast/grid.hpp"
#include "embedcast/network/network.hpp"

namespace embedcast {

struct ForecastResult {
  std::optional<Grid> predicted;  // horizon x M; empty when horizon == 0
  std::size_t horizon = 0;
  FeatureParams params;
  BoundaryPolicy boundary = BoundaryPolicy::wrap;
};

// Closed-loop rollout from the end of train_tail. Each new slice is predicted
// from the rolling history (tail rows, then earlier predictions); sites the
// skip policy cannot stencil keep their previous value.
inline ForecastResult forecast(const network::Network& net, const Grid& train_tail, const FeatureParams& params,
                               std::size_t horizon, BoundaryPolicy boundary) {
  params.validate();
  if (net.input_dim != params.input_dim())
    throw ContractError("network input_dim " + std::to_string(net.input_dim) + " != stencil size " +
                        std::to_string(params.input_dim()));
  if (train_tail.rows() < params.history() + 1)
    throw RangeError("forecast needs at least J*L + 1 = " + std::to_string(params.history() + 1) +
                     " tail rows, got " + std::to_string(train_tail.rows()));

  ForecastResult result;
  result.horizon = horizon;
  result.params = params;
  result.boundary = boundary;
  if (horizon == 0) return result;

  const std::size_t cols = train_tail.cols();
  const std::size_t keep = params.history() + 1;
  // history[i] is slice (tail_start + i); only the last J*L + 1 slices are needed.
  std::vector<std::vector<double>> history;
  for (std::size_t n = train_tail.rows() - keep; n < train_tail.rows(); ++n) {
    const auto r = train_tail.row(n);
    history.emplace_back(r.begin(), r.end());
  }

  Grid predicted(horizon, cols);
  predicted.time_step = train_tail.time_step;
  predicted.space_label = train_tail.space_label;
  std::vector<double> input(params.input_dim());
  network::Activations act;
  for (std::size_t h = 0; h < horizon; ++h) {
    const std::size_t now = history.size() - 1;
    auto row_of = [&](std::size_t n) { return std::span<const double>(history[n]); };
    std::vector<double> next(cols);
    for (std::size_t m = 0; m < cols; ++m) {
      if (!embedding::site_admissible(m, cols, params, boundary)) {
        next[m] = history[now][m];
        continue;
      }
      embedding::fill_input(row_of, now, m, cols, params, boundary, input);
      network::forward(net, input, act);
      next[m] = act.output;
    }
    std::copy(next.begin(), next.end(), predicted.row(h).begin());
    history.erase(history.begin());
    history.push_back(std::move(next));
  }
  result.predicted = std::move(predicted);
  return result;
}

}  // namespace embedcast
