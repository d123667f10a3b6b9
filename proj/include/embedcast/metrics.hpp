#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "embedcast/embedding/patterns.hpp"
#include "embedcast/errors.hpp"
#include "embedcast/grid.hpp"

namespace embedcast::metrics {

struct SSIMConfig {
  std::size_t window = 8;
  double k1 = 0.01;
  double k2 = 0.03;

  void validate() const {
    if (window < 1) throw InvalidConfig("ssim window must be >= 1");
    if (!(k1 > 0.0) || !(k2 > 0.0)) throw InvalidConfig("ssim k1 and k2 must be positive");
  }
};

// Mean structural similarity over every window x window block (stride 1) with
// uniform weights. The dynamic range R is max - min over both grids together;
// C1 = (k1 R)^2, C2 = (k2 R)^2.
inline double ssim(const Grid& a, const Grid& b, const SSIMConfig& cfg = {}) {
  cfg.validate();
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ContractError("ssim needs grids of identical shape");
  const std::size_t w = cfg.window;
  if (w > a.rows() || w > a.cols())
    throw ContractError("ssim window " + std::to_string(w) + " exceeds grid " + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()));

  const auto [a_lo, a_hi] = std::minmax_element(a.values().begin(), a.values().end());
  const auto [b_lo, b_hi] = std::minmax_element(b.values().begin(), b.values().end());
  const double range = std::max(*a_hi, *b_hi) - std::min(*a_lo, *b_lo);
  if (range == 0.0) return 1.0;  // both grids are the same constant
  const double c1 = (cfg.k1 * range) * (cfg.k1 * range);
  const double c2 = (cfg.k2 * range) * (cfg.k2 * range);

  const double count = static_cast<double>(w * w);
  double total = 0.0;
  std::size_t windows = 0;
  for (std::size_t n0 = 0; n0 + w <= a.rows(); ++n0) {
    for (std::size_t m0 = 0; m0 + w <= a.cols(); ++m0) {
      double sa = 0.0, sb = 0.0;
      for (std::size_t n = n0; n < n0 + w; ++n)
        for (std::size_t m = m0; m < m0 + w; ++m) {
          sa += a(n, m);
          sb += b(n, m);
        }
      const double mu_a = sa / count;
      const double mu_b = sb / count;
      double vaa = 0.0, vbb = 0.0, vab = 0.0;
      for (std::size_t n = n0; n < n0 + w; ++n)
        for (std::size_t m = m0; m < m0 + w; ++m) {
          const double da = a(n, m) - mu_a;
          const double db = b(n, m) - mu_b;
          vaa += da * da;
          vbb += db * db;
          vab += da * db;
        }
      vaa /= count;
      vbb /= count;
      vab /= count;
      const double num = (2.0 * mu_a * mu_b + c1) * (2.0 * vab + c2);
      const double den = (mu_a * mu_a + mu_b * mu_b + c1) * (vaa + vbb + c2);
      total += num / den;
      ++windows;
    }
  }
  return total / static_cast<double>(windows);
}

inline double distance_euclidean(const FeatureParams& p, const FeatureParams& q) {
  auto sq = [](std::size_t x, std::size_t y) {
    const double d = static_cast<double>(x) - static_cast<double>(y);
    return d * d;
  };
  return std::sqrt(sq(p.spatial_halfwidth, q.spatial_halfwidth) + sq(p.temporal_depth, q.temporal_depth) +
                   sq(p.spatial_lag, q.spatial_lag) + sq(p.temporal_lag, q.temporal_lag));
}

inline double distance_manhattan(const FeatureParams& p, const FeatureParams& q) {
  auto ad = [](std::size_t x, std::size_t y) { return std::abs(static_cast<double>(x) - static_cast<double>(y)); };
  return ad(p.spatial_halfwidth, q.spatial_halfwidth) + ad(p.temporal_depth, q.temporal_depth) +
         ad(p.spatial_lag, q.spatial_lag) + ad(p.temporal_lag, q.temporal_lag);
}

}  // namespace embedcast::metrics
