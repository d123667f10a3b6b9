#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "embedcast/errors.hpp"

namespace embedcast {

// Shortest decimal text that parses back to the identical double.
inline std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

inline bool parse_double(std::string_view text, double& out) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

// N x M scalar field s^n_m, time-major: row n is the spatial slice at time n.
class Grid {
 public:
  Grid() = default;

  Grid(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {
    if (rows == 0 || cols == 0) throw ContractError("grid must have at least one row and one column");
  }

  Grid(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (rows == 0 || cols == 0) throw ContractError("grid must have at least one row and one column");
    if (values_.size() != rows * cols) throw ContractError("grid value count does not match shape");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return values_.empty(); }

  double operator()(std::size_t n, std::size_t m) const noexcept { return values_[n * cols_ + m]; }
  double& operator()(std::size_t n, std::size_t m) noexcept { return values_[n * cols_ + m]; }

  std::span<const double> row(std::size_t n) const { return {values_.data() + n * cols_, cols_}; }
  std::span<double> row(std::size_t n) { return {values_.data() + n * cols_, cols_}; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  // Physical time between rows; 1 for maps.
  double time_step = 1.0;
  std::string space_label;

  // Column m as a contiguous time series.
  std::vector<double> column(std::size_t m) const {
    std::vector<double> out(rows_);
    for (std::size_t n = 0; n < rows_; ++n) out[n] = (*this)(n, m);
    return out;
  }

  // Rows [first, first + count).
  Grid slice_rows(std::size_t first, std::size_t count) const {
    if (count == 0 || first + count > rows_) throw RangeError("row slice outside grid");
    Grid out(count, cols_,
             std::vector<double>(values_.begin() + static_cast<std::ptrdiff_t>(first * cols_),
                                 values_.begin() + static_cast<std::ptrdiff_t>((first + count) * cols_)));
    out.time_step = time_step;
    out.space_label = space_label;
    return out;
  }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.values_ == b.values_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

struct SplitGrid {
  Grid train;
  Grid test;
};

// Train receives the first n_train rows, test the remainder.
inline SplitGrid split(const Grid& grid, std::size_t n_train) {
  if (n_train < 1 || n_train >= grid.rows())
    throw RangeError("n_train must satisfy 1 <= n_train < " + std::to_string(grid.rows()) + ", got " +
                     std::to_string(n_train));
  return {grid.slice_rows(0, n_train), grid.slice_rows(n_train, grid.rows() - n_train)};
}

enum class NormalizerKind { linear, logarithmic };

// linear:      x -> shift + x / scale
// logarithmic: x -> shift + ln(1 + x) / scale
struct Normalizer {
  NormalizerKind kind = NormalizerKind::linear;
  double shift = 0.0;  // alpha_nor
  double scale = 1.0;  // beta_nor

  void validate() const {
    if (scale == 0.0 || !std::isfinite(scale) || !std::isfinite(shift))
      throw InvalidConfig("normalizer scale must be finite and nonzero");
  }

  double forward(double x) const {
    if (kind == NormalizerKind::linear) return shift + x / scale;
    if (!(x > -1.0)) throw DomainError("logarithmic normalizer needs x > -1, got " + format_double(x));
    return shift + std::log1p(x) / scale;
  }

  double inverse(double y) const {
    if (kind == NormalizerKind::linear) return (y - shift) * scale;
    return std::expm1((y - shift) * scale);
  }
};

inline Grid normalize(const Grid& grid, const Normalizer& norm) {
  norm.validate();
  Grid out = grid;
  for (double& v : out.values()) v = norm.forward(v);
  return out;
}

inline Grid denormalize(const Grid& grid, const Normalizer& norm) {
  norm.validate();
  Grid out = grid;
  for (double& v : out.values()) v = norm.inverse(v);
  return out;
}

// Grid text format: one time slice per line, comma-separated values,
// lines starting with '#' and blank lines ignored.
inline Grid parse_grid(std::istream& in) {
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    const auto first = view.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || view[first] == '#') continue;
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
      const auto comma = view.find(',', start);
      const auto token = view.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      double value = 0.0;
      if (!parse_double(token, value)) throw ParseError(line_no, "non-numeric token '" + std::string(token) + "'");
      if (!std::isfinite(value)) throw ParseError(line_no, "non-finite value");
      values.push_back(value);
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (rows == 0) {
      cols = count;
    } else if (count != cols) {
      throw ParseError(line_no, "row has " + std::to_string(count) + " values, expected " + std::to_string(cols));
    }
    ++rows;
  }
  if (rows == 0) throw ParseError(line_no, "grid file contains no data rows");
  return Grid(rows, cols, std::move(values));
}

inline Grid read_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open grid file " + path);
  return parse_grid(in);
}

inline void write_grid(const Grid& grid, std::ostream& out) {
  for (std::size_t n = 0; n < grid.rows(); ++n) {
    for (std::size_t m = 0; m < grid.cols(); ++m) {
      if (m) out << ',';
      out << format_double(grid(n, m));
    }
    out << '\n';
  }
}

inline void write_grid(const Grid& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write grid file " + path);
  write_grid(grid, out);
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace embedcast
