#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "embedcast/embedding/mutual_information.hpp"
#include "embedcast/errors.hpp"
#include "embedcast/grid.hpp"

namespace embedcast::embedding {

struct FNNConfig {
  std::size_t max_dim = 8;
  double r_tol = 15.0;  // next-coordinate distance ratio
  double a_tol = 2.0;   // total distance relative to the series standard deviation
};

// false_fraction[i] belongs to embedding dimension dims[i] = i + 1.
struct FNNProfile {
  Axis axis = Axis::temporal;
  std::size_t lag = 1;
  std::vector<std::size_t> dims;
  std::vector<double> false_fraction;
  bool degenerate = false;  // every line was constant
};

namespace detail {

inline double population_stddev(std::span<const double> x) {
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(x.size()));
}

// Fraction of false nearest neighbours of one scalar series at dimension dim.
// Delay vectors are (x_i, x_{i+lag}, ..., x_{i+(dim-1)lag}); the coordinate
// added at dim+1 is x_{i+dim*lag}.
inline double false_fraction_1d(std::span<const double> x, std::size_t lag, std::size_t dim, double r_tol,
                                double a_tol, double stddev) {
  const std::size_t points = x.size() - dim * lag;
  std::size_t false_count = 0;
  for (std::size_t i = 0; i < points; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t nearest = i;
    for (std::size_t j = 0; j < points; ++j) {
      if (j == i) continue;
      double d2 = 0.0;
      for (std::size_t k = 0; k < dim && d2 < best; ++k) {
        const double diff = x[i + k * lag] - x[j + k * lag];
        d2 += diff * diff;
      }
      if (d2 < best) {
        best = d2;
        nearest = j;
      }
    }
    const double extra = std::abs(x[i + dim * lag] - x[nearest + dim * lag]);
    const double r_d = std::sqrt(best);
    bool is_false;
    if (r_d > 0.0) {
      is_false = extra / r_d > r_tol;
    } else {
      is_false = extra > 0.0;
    }
    if (!is_false && stddev > 0.0) is_false = std::sqrt(best + extra * extra) / stddev > a_tol;
    if (is_false) ++false_count;
  }
  return static_cast<double>(false_count) / static_cast<double>(points);
}

}  // namespace detail

// False nearest neighbour profile for one scalar series.
inline FNNProfile false_nearest_neighbors(std::span<const double> series, std::size_t lag, const FNNConfig& cfg) {
  if (lag < 1) throw RangeError("fnn lag must be >= 1");
  if (cfg.max_dim < 1) throw RangeError("fnn max_dim must be >= 1");
  if (series.size() < cfg.max_dim * lag + 2)
    throw RangeError("fnn needs more than max_dim*lag+1 samples, got " + std::to_string(series.size()));
  FNNProfile profile;
  profile.lag = lag;
  const double sd = detail::population_stddev(series);
  profile.degenerate = !(sd > 0.0);
  for (std::size_t d = 1; d <= cfg.max_dim; ++d) {
    profile.dims.push_back(d);
    profile.false_fraction.push_back(
        profile.degenerate ? 0.0 : detail::false_fraction_1d(series, lag, d, cfg.r_tol, cfg.a_tol, sd));
  }
  return profile;
}

// Per-line profiles along the chosen axis, averaged over non-constant lines.
inline FNNProfile false_nearest_neighbors(const Grid& grid, Axis axis, std::size_t lag, const FNNConfig& cfg) {
  const std::size_t lines = axis == Axis::temporal ? grid.cols() : grid.rows();
  const std::size_t length = axis == Axis::temporal ? grid.rows() : grid.cols();
  if (lag < 1) throw RangeError("fnn lag must be >= 1");
  if (length < cfg.max_dim * lag + 2)
    throw RangeError(std::string(to_string(axis)) + " fnn needs more than max_dim*lag+1 samples per line, got " +
                     std::to_string(length));

  FNNProfile profile;
  profile.axis = axis;
  profile.lag = lag;
  for (std::size_t d = 1; d <= cfg.max_dim; ++d) profile.dims.push_back(d);
  profile.false_fraction.assign(cfg.max_dim, 0.0);

  std::size_t used = 0;
  std::vector<double> line;
  for (std::size_t l = 0; l < lines; ++l) {
    if (axis == Axis::temporal) {
      line = grid.column(l);
    } else {
      const auto r = grid.row(l);
      line.assign(r.begin(), r.end());
    }
    const auto one = false_nearest_neighbors(line, lag, cfg);
    if (one.degenerate) continue;
    for (std::size_t i = 0; i < cfg.max_dim; ++i) profile.false_fraction[i] += one.false_fraction[i];
    ++used;
  }
  profile.degenerate = used == 0;
  if (used)
    for (double& f : profile.false_fraction) f /= static_cast<double>(used);
  return profile;
}

// Smallest dimension whose false fraction is below threshold; 0 when none is.
inline std::size_t embedding_dimension(const FNNProfile& profile, double threshold) {
  for (std::size_t i = 0; i < profile.false_fraction.size(); ++i)
    if (profile.false_fraction[i] < threshold) return profile.dims[i];
  return 0;
}

}  // namespace embedcast::embedding
