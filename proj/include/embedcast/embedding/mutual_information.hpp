#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "embedcast/errors.hpp"
#include "embedcast/grid.hpp"

namespace embedcast::embedding {

enum class Axis { temporal, spatial };

inline const char* to_string(Axis axis) { return axis == Axis::temporal ? "temporal" : "spatial"; }

struct MutualInformation {
  double bits = 0.0;
  bool degenerate = false;  // at least one input had zero range
};

namespace detail {

// Equal-width bin index over [lo, lo + range]; the maximum lands in the last bin.
inline std::vector<std::size_t> bin_indices(std::span<const double> x, std::size_t bins, bool& degenerate) {
  const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  const double lo = *lo_it;
  const double range = *hi_it - lo;
  std::vector<std::size_t> idx(x.size(), 0);
  if (!(range > 0.0)) {
    degenerate = true;
    return idx;
  }
  const double scale = static_cast<double>(bins) / range;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto b = static_cast<std::size_t>((x[i] - lo) * scale);
    idx[i] = std::min(b, bins - 1);
  }
  return idx;
}

// Sums in ascending order so the result does not depend on term order.
inline double ordered_sum(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double total = 0.0;
  for (double t : terms) total += t;
  return total;
}

}  // namespace detail

// Shannon entropy (bits) of x under the same equal-width binning used for MI.
inline double binned_entropy(std::span<const double> x, std::size_t bins) {
  if (bins < 1 || x.empty()) throw ContractError("binned_entropy needs bins >= 1 and non-empty input");
  bool degenerate = false;
  const auto idx = detail::bin_indices(x, bins, degenerate);
  if (degenerate) return 0.0;
  std::vector<std::size_t> counts(bins, 0);
  for (auto i : idx) ++counts[i];
  const double total = static_cast<double>(x.size());
  std::vector<double> terms;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    terms.push_back(p * -std::log2(p));
  }
  return detail::ordered_sum(terms);
}

// Histogram estimate of I(a; b) in bits over a bins x bins joint table, each
// axis binned over its own range. Symmetric in (a, b) bit for bit.
inline MutualInformation mutual_information(std::span<const double> a, std::span<const double> b, std::size_t bins) {
  if (bins < 1) throw ContractError("mutual_information needs bins >= 1");
  if (a.size() != b.size()) throw ContractError("mutual_information inputs differ in length");
  if (a.size() < 2 * bins) throw RangeError("mutual_information needs at least 2*bins samples");

  MutualInformation result;
  const auto ia = detail::bin_indices(a, bins, result.degenerate);
  const auto ib = detail::bin_indices(b, bins, result.degenerate);
  if (result.degenerate) return result;

  std::vector<std::size_t> joint(bins * bins, 0), ca(bins, 0), cb(bins, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++joint[ia[i] * bins + ib[i]];
    ++ca[ia[i]];
    ++cb[ib[i]];
  }
  const double total = static_cast<double>(a.size());
  std::vector<double> terms;
  terms.reserve(bins * 2);
  for (std::size_t x = 0; x < bins; ++x) {
    for (std::size_t y = 0; y < bins; ++y) {
      const auto c = joint[x * bins + y];
      if (c == 0) continue;
      const double p = static_cast<double>(c) / total;
      const double pa = static_cast<double>(ca[x]) / total;
      const double pb = static_cast<double>(cb[y]) / total;
      terms.push_back(p * (std::log2(p) - (std::log2(pa) + std::log2(pb))));
    }
  }
  result.bits = std::max(detail::ordered_sum(terms), 0.0);
  return result;
}

// Average mutual information against lag. mi_bits[i] belongs to lags[i] = i + 1.
struct MIProfile {
  Axis axis = Axis::temporal;
  std::vector<std::size_t> lags;
  std::vector<double> mi_bits;
  std::vector<bool> degenerate;  // every line was constant at this lag
};

// For each lag, MI between each line and its lagged copy, averaged over the
// non-degenerate lines (sites for the temporal axis, time slices for spatial).
inline MIProfile mi_profile(const Grid& grid, Axis axis, std::size_t max_lag, std::size_t bins) {
  const std::size_t length = axis == Axis::temporal ? grid.rows() : grid.cols();
  const std::size_t lines = axis == Axis::temporal ? grid.cols() : grid.rows();
  if (max_lag < 1 || 2 * max_lag >= length)
    throw RangeError(std::string(to_string(axis)) + " max_lag must satisfy 1 <= max_lag < " +
                     std::to_string(length) + "/2");
  if (length - max_lag < 2 * bins)
    throw RangeError(std::string(to_string(axis)) + " axis too short for " + std::to_string(bins) +
                     " bins at lag " + std::to_string(max_lag));

  std::vector<std::vector<double>> series(lines);
  for (std::size_t l = 0; l < lines; ++l) {
    if (axis == Axis::temporal) {
      series[l] = grid.column(l);
    } else {
      const auto r = grid.row(l);
      series[l].assign(r.begin(), r.end());
    }
  }

  MIProfile profile;
  profile.axis = axis;
  for (std::size_t lag = 1; lag <= max_lag; ++lag) {
    double sum = 0.0;
    std::size_t used = 0;
    for (const auto& s : series) {
      const std::span<const double> all(s);
      const auto mi = mutual_information(all.first(length - lag), all.subspan(lag), bins);
      if (mi.degenerate) continue;
      sum += mi.bits;
      ++used;
    }
    profile.lags.push_back(lag);
    profile.mi_bits.push_back(used ? sum / static_cast<double>(used) : 0.0);
    profile.degenerate.push_back(used == 0);
  }
  return profile;
}

inline MIProfile temporal_mi_profile(const Grid& grid, std::size_t max_lag, std::size_t bins) {
  return mi_profile(grid, Axis::temporal, max_lag, bins);
}

inline MIProfile spatial_mi_profile(const Grid& grid, std::size_t max_lag, std::size_t bins) {
  return mi_profile(grid, Axis::spatial, max_lag, bins);
}

// Smallest lag at a strict local minimum. Without one, the smallest lag whose
// value has dropped to plateau_drop * mi(1) and then stays within 5% over the
// following plateau_window lags.
//
// With lag_zero_is_maximum the profile is read as starting from lag 0, where
// the MI equals the entropy and bounds every other lag; lag 1 then counts as a
// minimum whenever mi(1) < mi(2).
inline std::size_t first_minimum(const MIProfile& profile, double plateau_drop = 0.5, std::size_t plateau_window = 3,
                                 bool lag_zero_is_maximum = false) {
  const auto& mi = profile.mi_bits;
  if (mi.empty()) throw ContractError("first_minimum needs a non-empty profile");
  if (lag_zero_is_maximum && mi.size() > 1 && mi[0] < mi[1]) return profile.lags[0];
  for (std::size_t i = 1; i + 1 < mi.size(); ++i)
    if (mi[i - 1] > mi[i] && mi[i] < mi[i + 1]) return profile.lags[i];

  for (std::size_t i = 0; i + plateau_window < mi.size(); ++i) {
    if (mi[i] > plateau_drop * mi[0]) continue;
    double worst = 0.0;
    for (std::size_t k = 1; k <= plateau_window; ++k) {
      const double change = mi[i] > 0.0 ? std::abs(mi[i + k] - mi[i]) / mi[i] : (mi[i + k] == 0.0 ? 0.0 : 1.0);
      worst = std::max(worst, change);
    }
    if (worst < 0.05) return profile.lags[i];
  }
  throw SelectionFailure(std::string(to_string(profile.axis)) +
                         " mutual information has no minimum or plateau; widen max_lag");
}

}  // namespace embedcast::embedding
