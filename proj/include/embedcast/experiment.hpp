#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "embedcast/embedding/patterns.hpp"
#include "embedcast/errors.hpp"
#include "embedcast/forecast.hpp"
#include "embedcast/grid.hpp"
#include "embedcast/metrics.hpp"
#include "embedcast/network/train.hpp"
#include "embedcast/random.hpp"

namespace embedcast::experiment {

enum class TrialStatus { ok, diverged, infeasible };

inline const char* to_string(TrialStatus s) {
  switch (s) {
    case TrialStatus::ok: return "ok";
    case TrialStatus::diverged: return "diverged";
    case TrialStatus::infeasible: return "infeasible";
  }
  return "?";
}

inline TrialStatus parse_status(const std::string& s) {
  if (s == "ok") return TrialStatus::ok;
  if (s == "diverged") return TrialStatus::diverged;
  if (s == "infeasible") return TrialStatus::infeasible;
  throw InvalidConfig("unknown trial status '" + s + "'");
}

struct TrialRecord {
  std::size_t trial = 0;
  FeatureParams params;
  double d_e = 0.0;
  double d_manhattan = 0.0;
  double ssim = std::nan("");
  double train_mse = std::nan("");
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;
  TrialStatus status = TrialStatus::ok;

  // Equality on everything except wall time, which is not reproducible.
  bool same_outcome(const TrialRecord& o) const {
    auto same = [](double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; };
    return trial == o.trial && params == o.params && same(d_e, o.d_e) && same(d_manhattan, o.d_manhattan) &&
           same(ssim, o.ssim) && same(train_mse, o.train_mse) && seed == o.seed && status == o.status;
  }
};

// Everything a trial needs besides the feature parameters.
struct TrialSetup {
  network::NetworkConfig net;  // input_dim is overwritten per trial
  network::TrainConfig train;
  Normalizer normalizer;
  BoundaryPolicy boundary = BoundaryPolicy::skip;
  metrics::SSIMConfig ssim;
  FeatureParams optimal;
};

// The artifacts of one trial, for callers that want more than the record.
struct TrialOutputs {
  TrialRecord record;
  std::optional<network::TrainResult> trained;
  std::optional<Grid> forecast;  // denormalized
};

// normalize -> patterns -> init + train -> closed-loop forecast over the test
// horizon -> denormalize -> SSIM against the test grid. Failures become statuses.
inline TrialOutputs run_trial_detailed(const Grid& train, const Grid& test, const FeatureParams& params,
                                       const TrialSetup& setup, std::uint64_t trial_seed) {
  const auto start = std::chrono::steady_clock::now();
  TrialOutputs out;
  TrialRecord& rec = out.record;
  rec.params = params;
  rec.seed = trial_seed;
  rec.d_e = metrics::distance_euclidean(params, setup.optimal);
  rec.d_manhattan = metrics::distance_manhattan(params, setup.optimal);

  auto finish = [&] {
    rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
  };

  const bool feasible = params.spatial_lag >= 1 && params.temporal_lag >= 1 &&
                        params.history() + 2 <= train.rows() &&
                        (setup.boundary != BoundaryPolicy::skip || 2 * params.reach() < train.cols());
  if (!feasible) {
    rec.status = TrialStatus::infeasible;
    return finish();
  }

  try {
    const Grid norm_train = normalize(train, setup.normalizer);
    const PatternSet patterns = build_patterns(norm_train, params, setup.boundary);

    network::NetworkConfig net_cfg = setup.net;
    net_cfg.input_dim = params.input_dim();
    net_cfg.seed = mix_seed(trial_seed, 0);
    network::TrainConfig train_cfg = setup.train;
    train_cfg.seed = mix_seed(trial_seed, 1);

    auto trained = network::train(network::init_network(net_cfg), patterns, train_cfg);
    rec.train_mse = trained.final_mse;

    auto fc = forecast(trained.net, norm_train, params, test.rows(), setup.boundary);
    Grid predicted = denormalize(*fc.predicted, setup.normalizer);
    if (!predicted.all_finite()) throw DivergenceError(0, "forecast left the normalizer's invertible range");
    rec.ssim = metrics::ssim(predicted, test, setup.ssim);
    rec.status = TrialStatus::ok;
    out.trained = std::move(trained);
    out.forecast = std::move(predicted);
  } catch (const DivergenceError&) {
    rec.status = TrialStatus::diverged;
    rec.ssim = std::nan("");
  } catch (const DomainError&) {
    rec.status = TrialStatus::diverged;
    rec.ssim = std::nan("");
  }
  return finish();
}

inline TrialRecord run_trial(const Grid& train, const Grid& test, const FeatureParams& params,
                             const TrialSetup& setup, std::uint64_t trial_seed) {
  return run_trial_detailed(train, test, params, setup, trial_seed).record;
}

struct IntRange {
  std::size_t lo = 0;
  std::size_t hi = 0;
  bool contains(std::size_t v) const noexcept { return v >= lo && v <= hi; }
};

struct SweepConfig {
  std::size_t trials = 200;
  IntRange halfwidth{0, 5};  // I
  IntRange depth{0, 8};      // J
  IntRange spatial_lag{1, 12};
  IntRange temporal_lag{1, 0};  // hi == 0: use 2 * L*
  std::uint64_t master_seed = 1;
  std::size_t workers = 1;
  TrialSetup setup;

  // temporal_lag upper bound after defaults and clipping so that J_min * L fits the training rows.
  IntRange effective_temporal_lag(std::size_t train_rows) const {
    IntRange r = temporal_lag;
    if (r.hi == 0) r.hi = std::max<std::size_t>(2 * setup.optimal.temporal_lag, r.lo);
    const std::size_t j_min = std::max<std::size_t>(depth.lo, 1);
    const std::size_t cap = train_rows > 2 ? (train_rows - 2) / j_min : 1;
    r.hi = std::max(r.lo, std::min(r.hi, cap));
    return r;
  }

  void validate() const {
    if (trials < 1) throw InvalidConfig("sweep trials must be >= 1");
    for (const IntRange* r : {&halfwidth, &depth, &spatial_lag})
      if (r->lo > r->hi) throw InvalidConfig("sweep range is empty");
    if (temporal_lag.hi != 0 && temporal_lag.lo > temporal_lag.hi) throw InvalidConfig("sweep L range is empty");
    if (spatial_lag.lo < 1 || temporal_lag.lo < 1) throw InvalidConfig("sweep lags must start at >= 1");
    if (workers < 1) throw InvalidConfig("sweep workers must be >= 1");
  }
};

// Parameters and seed of trial i depend only on (master_seed, i), so any
// subset of trials can be rerun or resumed independently.
inline std::pair<FeatureParams, std::uint64_t> sample_trial(const SweepConfig& sweep, std::size_t train_rows,
                                                            std::size_t index) {
  Rng rng(mix_seed(sweep.master_seed, 2 * index));
  const IntRange l_range = sweep.effective_temporal_lag(train_rows);
  auto pick = [&](const IntRange& r) {
    return static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(r.lo), static_cast<std::int64_t>(r.hi)));
  };
  FeatureParams p;
  p.spatial_halfwidth = pick(sweep.halfwidth);
  p.temporal_depth = pick(sweep.depth);
  p.spatial_lag = pick(sweep.spatial_lag);
  p.temporal_lag = pick(l_range);
  return {p, mix_seed(sweep.master_seed, 2 * index + 1)};
}

inline const char* records_header() {
  return "trial,I,J,K,L,d_e,d_manhattan,ssim,train_mse,wall_time_s,seed,status";
}

inline std::string format_record(const TrialRecord& r) {
  std::ostringstream out;
  out << r.trial << ',' << r.params.spatial_halfwidth << ',' << r.params.temporal_depth << ',' << r.params.spatial_lag
      << ',' << r.params.temporal_lag << ',' << format_double(r.d_e) << ',' << format_double(r.d_manhattan) << ','
      << format_double(r.ssim) << ',' << format_double(r.train_mse) << ',' << format_double(r.wall_time_s) << ','
      << r.seed << ',' << to_string(r.status);
  return out.str();
}

inline TrialRecord parse_record(const std::string& line, std::size_t line_no) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) f.push_back(tok);
  if (f.size() != 12) throw ParseError(line_no, "record needs 12 fields, got " + std::to_string(f.size()));
  auto as_size = [&](const std::string& s) -> std::uint64_t {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError(line_no, "bad integer '" + s + "'");
    return v;
  };
  auto as_double = [&](const std::string& s) {
    double v = 0.0;
    if (!parse_double(s, v)) throw ParseError(line_no, "bad number '" + s + "'");
    return v;
  };
  TrialRecord r;
  r.trial = as_size(f[0]);
  r.params.spatial_halfwidth = as_size(f[1]);
  r.params.temporal_depth = as_size(f[2]);
  r.params.spatial_lag = as_size(f[3]);
  r.params.temporal_lag = as_size(f[4]);
  r.d_e = as_double(f[5]);
  r.d_manhattan = as_double(f[6]);
  r.ssim = as_double(f[7]);
  r.train_mse = as_double(f[8]);
  r.wall_time_s = as_double(f[9]);
  r.seed = as_size(f[10]);
  try {
    r.status = parse_status(f[11]);
  } catch (const InvalidConfig& e) {
    throw ParseError(line_no, e.what());
  }
  return r;
}

inline std::vector<TrialRecord> read_records(std::istream& in) {
  std::vector<TrialRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.rfind("trial,", 0) == 0) continue;
    out.push_back(parse_record(line, line_no));
  }
  return out;
}

inline std::vector<TrialRecord> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) return {};
  return read_records(in);
}

inline void write_records(const std::vector<TrialRecord>& records, std::ostream& out) {
  out << records_header() << '\n';
  for (const auto& r : records) out << format_record(r) << '\n';
}

// Runs the sweep; when records_path is non-empty, records already present in
// that file are kept and skipped, and new ones are appended as they finish.
inline std::vector<TrialRecord> run_sweep(const SplitGrid& data, const SweepConfig& sweep,
                                          const std::string& records_path = {}) {
  sweep.validate();
  std::map<std::size_t, TrialRecord> done;
  std::ofstream appender;
  if (!records_path.empty()) {
    for (auto& r : read_records(records_path))
      if (r.trial < sweep.trials) done.emplace(r.trial, r);
    const bool fresh = done.empty();
    appender.open(records_path, fresh ? std::ios::trunc : std::ios::app);
    if (!appender) throw std::runtime_error("cannot write records file " + records_path);
    if (fresh) appender << records_header() << '\n' << std::flush;
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < sweep.trials; ++i)
    if (!done.count(i)) pending.push_back(i);

  std::mutex mutex;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  auto worker = [&] {
    try {
      while (true) {
        const std::size_t slot = next.fetch_add(1);
        if (slot >= pending.size()) return;
        const std::size_t index = pending[slot];
        const auto [params, seed] = sample_trial(sweep, data.train.rows(), index);
        TrialRecord rec = run_trial(data.train, data.test, params, sweep.setup, seed);
        rec.trial = index;
        std::lock_guard lock(mutex);
        if (failure) return;
        if (appender.is_open()) {
          appender << format_record(rec) << '\n' << std::flush;
          if (!appender) throw std::runtime_error("write failed for " + records_path);
        }
        done.emplace(index, rec);
      }
    } catch (...) {
      std::lock_guard lock(mutex);
      if (!failure) failure = std::current_exception();
      next = pending.size();
    }
  };

  const std::size_t threads = std::min(sweep.workers, std::max<std::size_t>(pending.size(), 1));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<TrialRecord> out;
  out.reserve(done.size());
  for (auto& [i, r] : done) out.push_back(r);
  return out;
}

struct SummaryBin {
  double de_lo = 0.0;
  double de_hi = 0.0;
  std::size_t count = 0;
  double median_ssim = std::nan("");
  double max_ssim = std::nan("");
};

struct Summary {
  std::vector<SummaryBin> bins;
  std::optional<TrialRecord> best;  // highest SSIM among ok records
};

inline double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

// Bins ok records by d_e into [k*width, (k+1)*width).
inline Summary summarize(const std::vector<TrialRecord>& records, double bin_width = 1.0) {
  Summary s;
  std::map<std::size_t, std::vector<double>> by_bin;
  for (const auto& r : records) {
    if (r.status != TrialStatus::ok) continue;
    by_bin[static_cast<std::size_t>(std::floor(r.d_e / bin_width))].push_back(r.ssim);
    if (!s.best || r.ssim > s.best->ssim || (r.ssim == s.best->ssim && r.d_e < s.best->d_e)) s.best = r;
  }
  for (auto& [k, values] : by_bin) {
    SummaryBin b;
    b.de_lo = static_cast<double>(k) * bin_width;
    b.de_hi = static_cast<double>(k + 1) * bin_width;
    b.count = values.size();
    b.max_ssim = *std::max_element(values.begin(), values.end());
    b.median_ssim = median(std::move(values));
    s.bins.push_back(b);
  }
  return s;
}

inline void write_summary(const Summary& s, std::ostream& out) {
  out << "de_bin_lo,de_bin_hi,count,median_ssim,max_ssim\n";
  for (const auto& b : s.bins)
    out << format_double(b.de_lo) << ',' << format_double(b.de_hi) << ',' << b.count << ','
        << format_double(b.median_ssim) << ',' << format_double(b.max_ssim) << '\n';
}

// Writes the records CSV and the binned summary CSV, returns the summary.
inline Summary report(const std::vector<TrialRecord>& records, const std::string& records_path,
                      const std::string& summary_path, double bin_width = 1.0) {
  {
    std::ofstream out(records_path);
    if (!out) throw std::runtime_error("cannot write " + records_path);
    write_records(records, out);
  }
  Summary s = summarize(records, bin_width);
  std::ofstream out(summary_path);
  if (!out) throw std::runtime_error("cannot write " + summary_path);
  write_summary(s, out);
  return s;
}

}  // namespace embedcast::experiment
