#pragma once

#include <algorithm>
#include <cstddef>

#include "embedcast/embedding/false_neighbors.hpp"
#include "embedcast/embedding/mutual_information.hpp"
#include "embedcast/embedding/patterns.hpp"
#include "embedcast/errors.hpp"
#include "embedcast/grid.hpp"

namespace embedcast::embedding {

struct SelectionConfig {
  std::size_t bins = 16;
  std::size_t max_temporal_lag = 60;  // clipped below N/2
  std::size_t max_spatial_lag = 20;   // clipped below M/2
  double plateau_drop = 0.5;
  std::size_t plateau_window = 3;
  bool lag_zero_is_maximum = false;
  FNNConfig fnn;
  double fnn_threshold = 0.01;

  void validate() const {
    if (bins < 2) throw InvalidConfig("selection bins must be >= 2");
    if (max_temporal_lag < 2 || max_spatial_lag < 2) throw InvalidConfig("selection max lags must be >= 2");
    if (!(plateau_drop > 0.0 && plateau_drop <= 1.0)) throw InvalidConfig("plateau_drop must be in (0, 1]");
    if (plateau_window < 1) throw InvalidConfig("plateau_window must be >= 1");
    if (fnn.max_dim < 2) throw InvalidConfig("fnn max_dim must be >= 2");
    // a_tol = inf disables the attractor-size test
    if (!(fnn.r_tol > 0.0) || !(fnn.a_tol > 0.0)) throw InvalidConfig("fnn tolerances must be positive");
    if (!(fnn_threshold > 0.0 && fnn_threshold < 1.0)) throw InvalidConfig("fnn threshold must be in (0, 1)");
  }
};

// Chosen parameters plus the profiles they were read from.
struct SelectionResult {
  FeatureParams params;
  MIProfile temporal_mi;
  MIProfile spatial_mi;
  FNNProfile temporal_fnn;
  FNNProfile spatial_fnn;
  std::size_t temporal_embedding_dim = 0;
  std::size_t spatial_embedding_dim = 0;
};

// L* and K* from the first minima of the averaged MI profiles; J* and I* from
// the false-neighbour embedding dimensions d_t and d_s. The stencil holds J+1
// temporal and 2I+1 spatial coordinates, so J* = d_t - 1 and I* = ceil((d_s - 1)/2).
inline SelectionResult select_features(const Grid& train, const SelectionConfig& cfg) {
  cfg.validate();
  SelectionResult r;
  // Each lagged pair keeps at least 2*bins samples and the lag stays below half the line.
  auto lag_cap = [&](std::size_t requested, std::size_t length) -> std::size_t {
    const std::size_t by_bins = length > 2 * cfg.bins ? length - 2 * cfg.bins : 0;
    return std::min({requested, (length - 1) / 2, by_bins});
  };
  const std::size_t t_lag = lag_cap(cfg.max_temporal_lag, train.rows());
  const std::size_t s_lag = lag_cap(cfg.max_spatial_lag, train.cols());
  if (t_lag < 2 || s_lag < 2) throw RangeError("training grid too small for mutual information profiles");

  r.temporal_mi = temporal_mi_profile(train, t_lag, cfg.bins);
  r.spatial_mi = spatial_mi_profile(train, s_lag, cfg.bins);
  r.params.temporal_lag = first_minimum(r.temporal_mi, cfg.plateau_drop, cfg.plateau_window, cfg.lag_zero_is_maximum);
  r.params.spatial_lag = first_minimum(r.spatial_mi, cfg.plateau_drop, cfg.plateau_window, cfg.lag_zero_is_maximum);

  auto fnn_for = [&](Axis axis, std::size_t lag, std::size_t length) {
    FNNConfig fc = cfg.fnn;
    // Keep at least a handful of delay vectors per line.
    while (fc.max_dim > 1 && length < fc.max_dim * lag + 8) --fc.max_dim;
    return false_nearest_neighbors(train, axis, lag, fc);
  };
  r.temporal_fnn = fnn_for(Axis::temporal, r.params.temporal_lag, train.rows());
  r.spatial_fnn = fnn_for(Axis::spatial, r.params.spatial_lag, train.cols());

  r.temporal_embedding_dim = embedding_dimension(r.temporal_fnn, cfg.fnn_threshold);
  r.spatial_embedding_dim = embedding_dimension(r.spatial_fnn, cfg.fnn_threshold);
  if (r.temporal_embedding_dim == 0)
    throw SelectionFailure("temporal false-neighbour fraction never fell below threshold; raise fnn max_dim");
  if (r.spatial_embedding_dim == 0)
    throw SelectionFailure("spatial false-neighbour fraction never fell below threshold; raise fnn max_dim");

  r.params.temporal_depth = r.temporal_embedding_dim - 1;
  r.params.spatial_halfwidth = r.spatial_embedding_dim / 2;  // == ceil((d - 1) / 2)
  return r;
}

}  // namespace embedcast::embedding
