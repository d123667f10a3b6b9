#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "embedcast/errors.hpp"
#include "embedcast/grid.hpp"

namespace embedcast {

// Geometry of the space-time input stencil around s^n_m.
struct FeatureParams {
  std::size_t spatial_halfwidth = 0;  // I: neighbours on each side
  std::size_t temporal_depth = 0;     // J: past slices
  std::size_t spatial_lag = 1;        // K
  std::size_t temporal_lag = 1;       // L

  std::size_t input_dim() const noexcept { return (2 * spatial_halfwidth + 1) * (temporal_depth + 1); }
  std::size_t history() const noexcept { return temporal_depth * temporal_lag; }
  std::size_t reach() const noexcept { return spatial_halfwidth * spatial_lag; }

  void validate() const {
    if (spatial_lag < 1) throw InvalidConfig("spatial lag K must be >= 1");
    if (temporal_lag < 1) throw InvalidConfig("temporal lag L must be >= 1");
  }

  friend bool operator==(const FeatureParams&, const FeatureParams&) = default;
};

inline std::string to_string(const FeatureParams& p) {
  return "(I=" + std::to_string(p.spatial_halfwidth) + ", J=" + std::to_string(p.temporal_depth) +
         ", K=" + std::to_string(p.spatial_lag) + ", L=" + std::to_string(p.temporal_lag) + ")";
}

enum class BoundaryPolicy {
  wrap,   // periodic domain
  skip,   // sites whose stencil leaves the grid produce no input
  clamp,  // out-of-range sites read the nearest edge value
};

inline const char* to_string(BoundaryPolicy b) {
  switch (b) {
    case BoundaryPolicy::wrap: return "wrap";
    case BoundaryPolicy::skip: return "skip";
    case BoundaryPolicy::clamp: return "clamp";
  }
  return "?";
}

namespace embedding {

// Resolves spatial index m + offset under the boundary policy; nullopt when skipped.
inline std::optional<std::size_t> resolve_site(std::ptrdiff_t site, std::size_t cols, BoundaryPolicy boundary) {
  const auto m_count = static_cast<std::ptrdiff_t>(cols);
  if (site >= 0 && site < m_count) return static_cast<std::size_t>(site);
  switch (boundary) {
    case BoundaryPolicy::wrap: return static_cast<std::size_t>(((site % m_count) + m_count) % m_count);
    case BoundaryPolicy::clamp: return site < 0 ? std::size_t{0} : cols - 1;
    case BoundaryPolicy::skip: return std::nullopt;
  }
  return std::nullopt;
}

// True when every stencil column of site m exists under the policy.
inline bool site_admissible(std::size_t m, std::size_t cols, const FeatureParams& p, BoundaryPolicy boundary) {
  if (boundary != BoundaryPolicy::skip) return true;
  return m >= p.reach() && m + p.reach() < cols;
}

// Writes x(s^n_m) into out, laid out as out[j*(2I+1) + (i+I)] = s^{n-jL}_{m+iK}.
// `rows(n)` supplies slice n; the caller guarantees n >= J*L and admissibility.
template <typename RowAccess>
void fill_input(RowAccess&& rows, std::size_t n, std::size_t m, std::size_t cols, const FeatureParams& p,
                BoundaryPolicy boundary, std::span<double> out) {
  const auto width = 2 * p.spatial_halfwidth + 1;
  const auto halfwidth = static_cast<std::ptrdiff_t>(p.spatial_halfwidth);
  const auto lag = static_cast<std::ptrdiff_t>(p.spatial_lag);
  for (std::size_t j = 0; j <= p.temporal_depth; ++j) {
    const std::span<const double> slice = rows(n - j * p.temporal_lag);
    for (std::ptrdiff_t i = -halfwidth; i <= halfwidth; ++i) {
      const auto site = resolve_site(static_cast<std::ptrdiff_t>(m) + i * lag, cols, boundary);
      out[j * width + static_cast<std::size_t>(i + halfwidth)] = slice[*site];
    }
  }
}

}  // namespace embedding

// One training pair: input x(s^n_m) and target s^{n+1}_m.
struct FeaturePattern {
  std::span<const double> input;
  double target;
  std::size_t n;
  std::size_t m;
};

// Pattern collection stored as a flat row-major input matrix.
class PatternSet {
 public:
  PatternSet() = default;
  explicit PatternSet(std::size_t input_dim) : dim_(input_dim) {}

  std::size_t size() const noexcept { return targets_.size(); }
  bool empty() const noexcept { return targets_.empty(); }
  std::size_t input_dim() const noexcept { return dim_; }

  FeaturePattern operator[](std::size_t i) const {
    return {std::span<const double>(inputs_.data() + i * dim_, dim_), targets_[i], origin_n_[i], origin_m_[i]};
  }

  std::span<double> append(double target, std::size_t n, std::size_t m) {
    inputs_.resize(inputs_.size() + dim_);
    targets_.push_back(target);
    origin_n_.push_back(n);
    origin_m_.push_back(m);
    return {inputs_.data() + inputs_.size() - dim_, dim_};
  }

  std::span<const double> targets() const noexcept { return targets_; }

 private:
  std::size_t dim_ = 0;
  std::vector<double> inputs_;
  std::vector<double> targets_;
  std::vector<std::size_t> origin_n_, origin_m_;
};

// One pattern per admissible (n, m), n from J*L to N-2 (0-based), ordered by n then m.
inline PatternSet build_patterns(const Grid& grid, const FeatureParams& p, BoundaryPolicy boundary) {
  p.validate();
  const std::size_t rows = grid.rows();
  const std::size_t cols = grid.cols();
  if (p.history() + 1 > rows - 1 || rows < 2)
    throw RangeError("J*L = " + std::to_string(p.history()) + " leaves no target rows in a grid of " +
                     std::to_string(rows) + " rows (need J*L + 2 <= N)");
  if (boundary == BoundaryPolicy::skip && 2 * p.reach() >= cols)
    throw RangeError("I*K = " + std::to_string(p.reach()) + " leaves no admissible site in " + std::to_string(cols) +
                     " columns under skip policy");

  PatternSet set(p.input_dim());
  auto row_of = [&](std::size_t n) { return grid.row(n); };
  for (std::size_t n = p.history(); n + 1 < rows; ++n) {
    for (std::size_t m = 0; m < cols; ++m) {
      if (!embedding::site_admissible(m, cols, p, boundary)) continue;
      auto input = set.append(grid(n + 1, m), n, m);
      embedding::fill_input(row_of, n, m, cols, p, boundary, input);
    }
  }
  return set;
}

}  // namespace embedcast
