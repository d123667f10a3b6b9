#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "embedcast/embedding/patterns.hpp"
#include "embedcast/embedding/selection.hpp"
#include "embedcast/errors.hpp"
#include "embedcast/experiment.hpp"
#include "embedcast/grid.hpp"
#include "embedcast/metrics.hpp"
#include "embedcast/network/network.hpp"
#include "embedcast/network/train.hpp"
#include "embedcast/systems/henon.hpp"
#include "embedcast/systems/kuramoto_sivashinsky.hpp"
#include "embedcast/systems/lorenz96.hpp"

namespace embedcast::config {

// Error tied to a config key; line is 0 when the key is missing altogether.
class ConfigError : public InvalidConfig {
 public:
  ConfigError(std::string key, std::size_t line, const std::string& what)
      : InvalidConfig(format(key, line, what)), key_(std::move(key)), line_(line) {}
  const std::string& key() const noexcept { return key_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& key, std::size_t line, const std::string& what) {
    std::string s = "config";
    if (line > 0) s += " line " + std::to_string(line);
    if (!key.empty()) s += " key '" + key + "'";
    return s + ": " + what;
  }
  std::string key_;
  std::size_t line_;
};

// Raw "[section]" + "key = value" document. Keys are stored as "section.key".
struct Document {
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };
  std::map<std::string, Entry> entries;
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline Document parse_document(std::istream& in) {
  Document doc;
  std::string section;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find_first_of("#;");
    const std::string text = trim(std::string_view(raw).substr(0, hash));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']' || text.size() < 3) throw ConfigError("", line, "malformed section header '" + text + "'");
      section = trim(std::string_view(text).substr(1, text.size() - 2));
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("", line, "expected key = value, got '" + text + "'");
    const std::string key = trim(std::string_view(text).substr(0, eq));
    const std::string value = trim(std::string_view(text).substr(eq + 1));
    if (key.empty()) throw ConfigError("", line, "empty key");
    if (section.empty()) throw ConfigError(key, line, "key outside any [section]");
    const std::string full = section + "." + key;
    if (doc.entries.count(full)) throw ConfigError(full, line, "duplicate key");
    doc.entries[full] = {value, line};
  }
  return doc;
}

struct FileSystemConfig {
  std::filesystem::path path;
};

struct ExperimentConfig {
  std::string system_kind;  // henon | lorenz96 | ks | file
  systems::HenonLatticeConfig henon;
  systems::Lorenz96Config lorenz96;
  systems::KSConfig ks;
  FileSystemConfig file;

  std::size_t n_train = 500;
  Normalizer normalizer;
  embedding::SelectionConfig selection;
  std::optional<FeatureParams> features;  // fixed (I, J, K, L); selection runs when absent
  network::NetworkConfig network;
  network::TrainConfig train;
  BoundaryPolicy boundary = BoundaryPolicy::wrap;
  metrics::SSIMConfig ssim;
  experiment::SweepConfig sweep;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "runs";

  // Setup shared by every trial of this experiment.
  experiment::TrialSetup trial_setup() const {
    experiment::TrialSetup s;
    s.net = network;
    s.train = train;
    s.normalizer = normalizer;
    s.boundary = boundary;
    s.ssim = ssim;
    return s;
  }
};

inline const std::vector<std::string>& required_keys() {
  static const std::vector<std::string> keys = {
      "system.kind",    "normalizer.kind",   "normalizer.alpha", "normalizer.beta",
      "network.hidden", "network.activation", "train.eta",        "train.steps"};
  return keys;
}

namespace detail {

class Reader {
 public:
  explicit Reader(const Document& doc) : doc_(doc) {}

  bool has(const std::string& key) const { return doc_.entries.count(key) > 0; }
  std::size_t line_of(const std::string& key) const {
    const auto it = doc_.entries.find(key);
    return it == doc_.entries.end() ? 0 : it->second.line;
  }

  const std::string* raw(const std::string& key) {
    const auto it = doc_.entries.find(key);
    if (it == doc_.entries.end()) return nullptr;
    used_.insert(key);
    return &it->second.value;
  }

  void real(const std::string& key, double& out) {
    const std::string* v = raw(key);
    if (!v) return;
    double x = 0.0;
    if (*v == "inf" || *v == "+inf") x = std::numeric_limits<double>::infinity();
    else if (!parse_double(*v, x)) fail(key, "expected a number, got '" + *v + "'");
    if (std::isnan(x)) fail(key, "NaN is not allowed");
    out = x;
  }

  template <class UInt>
  void count(const std::string& key, UInt& out) {
    const std::string* v = raw(key);
    if (!v) return;
    // Accept integral values written in scientific notation, such as 1e6.
    double x = 0.0;
    if (!parse_double(*v, x) || !std::isfinite(x) || x < 0.0 || x != std::floor(x) ||
        x > static_cast<double>(std::numeric_limits<UInt>::max()))
      fail(key, "expected a non-negative integer, got '" + *v + "'");
    out = static_cast<UInt>(x);
  }

  void seed(const std::string& key, std::uint64_t& out) {
    const std::string* v = raw(key);
    if (!v) return;
    std::uint64_t x = 0;
    const auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), x);
    if (ec != std::errc() || p != v->data() + v->size()) fail(key, "expected an unsigned 64-bit integer, got '" + *v + "'");
    out = x;
  }

  void boolean(const std::string& key, bool& out) {
    const std::string* v = raw(key);
    if (!v) return;
    if (*v == "true" || *v == "1" || *v == "yes") out = true;
    else if (*v == "false" || *v == "0" || *v == "no") out = false;
    else fail(key, "expected true or false, got '" + *v + "'");
  }

  std::string word(const std::string& key, const std::vector<std::string>& allowed, std::string fallback) {
    const std::string* v = raw(key);
    if (!v) return fallback;
    for (const auto& a : allowed)
      if (*v == a) return a;
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    fail(key, "expected one of {" + list + "}, got '" + *v + "'");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(key, line_of(key), what);
  }

  void reject_unused() const {
    for (const auto& [key, entry] : doc_.entries)
      if (!used_.count(key)) throw ConfigError(key, entry.line, "unknown key");
  }

 private:
  const Document& doc_;
  std::set<std::string> used_;
};

inline BoundaryPolicy to_boundary(const std::string& s) {
  if (s == "wrap") return BoundaryPolicy::wrap;
  if (s == "skip") return BoundaryPolicy::skip;
  return BoundaryPolicy::clamp;
}

}  // namespace detail

// base_dir resolves relative paths inside the file (system.path).
inline ExperimentConfig parse_config(const Document& doc, const std::filesystem::path& base_dir = {}) {
  std::vector<std::string> missing;
  for (const auto& k : required_keys())
    if (!doc.entries.count(k)) missing.push_back(k);
  if (!missing.empty()) {
    std::string list;
    for (const auto& k : missing) list += (list.empty() ? "" : ", ") + k;
    throw ConfigError(missing.front(), 0, "missing required keys: " + list);
  }

  detail::Reader r(doc);
  ExperimentConfig c;

  c.system_kind = r.word("system.kind", {"henon", "lorenz96", "ks", "file"}, "");
  if (c.system_kind == "henon") {
    r.count("system.sites", c.henon.sites);
    r.count("system.steps", c.henon.steps);
    r.seed("system.seed", c.henon.seed);
    r.count("system.burn_in", c.henon.burn_in);
    r.real("system.boundary_u", c.henon.boundary_u);
    r.real("system.boundary_v", c.henon.boundary_v);
  } else if (c.system_kind == "lorenz96") {
    r.count("system.sites", c.lorenz96.sites);
    r.real("system.forcing", c.lorenz96.forcing);
    r.real("system.dt", c.lorenz96.dt);
    r.count("system.steps", c.lorenz96.steps);
    r.count("system.burn_in", c.lorenz96.burn_in);
    r.real("system.perturbation", c.lorenz96.perturbation);
    r.seed("system.seed", c.lorenz96.seed);
  } else if (c.system_kind == "ks") {
    r.real("system.domain_length", c.ks.domain_length);
    r.real("system.dt", c.ks.dt);
    r.count("system.modes", c.ks.modes);
    r.count("system.steps", c.ks.steps);
    r.count("system.burn_in", c.ks.burn_in);
    r.real("system.x_origin", c.ks.x_origin);
    r.real("system.bump_amplitude", c.ks.bump_amplitude);
    r.real("system.bump_lo", c.ks.bump_lo);
    r.real("system.bump_hi", c.ks.bump_hi);
  } else {
    const std::string* p = r.raw("system.path");
    if (!p) throw ConfigError("system.path", r.line_of("system.kind"), "file systems need system.path");
    c.file.path = std::filesystem::path(*p);
    if (c.file.path.is_relative() && !base_dir.empty()) c.file.path = base_dir / c.file.path;
  }

  r.count("split.n_train", c.n_train);

  const std::string nk = r.word("normalizer.kind", {"linear", "logarithmic"}, "linear");
  c.normalizer.kind = nk == "linear" ? NormalizerKind::linear : NormalizerKind::logarithmic;
  r.real("normalizer.alpha", c.normalizer.shift);
  r.real("normalizer.beta", c.normalizer.scale);

  auto& s = c.selection;
  r.count("selection.bins", s.bins);
  r.count("selection.max_temporal_lag", s.max_temporal_lag);
  r.count("selection.max_spatial_lag", s.max_spatial_lag);
  r.real("selection.plateau_drop", s.plateau_drop);
  r.count("selection.plateau_window", s.plateau_window);
  r.boolean("selection.lag_zero_is_maximum", s.lag_zero_is_maximum);
  r.count("selection.fnn_max_dim", s.fnn.max_dim);
  r.real("selection.fnn_r_tol", s.fnn.r_tol);
  r.real("selection.fnn_a_tol", s.fnn.a_tol);
  r.real("selection.fnn_threshold", s.fnn_threshold);

  const bool any_feature = r.has("features.I") || r.has("features.J") || r.has("features.K") || r.has("features.L");
  if (any_feature) {
    for (const char* k : {"features.I", "features.J", "features.K", "features.L"})
      if (!r.has(k)) throw ConfigError(k, 0, "[features] needs all of I, J, K, L");
    FeatureParams p;
    r.count("features.I", p.spatial_halfwidth);
    r.count("features.J", p.temporal_depth);
    r.count("features.K", p.spatial_lag);
    r.count("features.L", p.temporal_lag);
    c.features = p;
  }

  auto& n = c.network;
  r.count("network.hidden", n.hidden);
  n.activation = network::parse_activation(r.word("network.activation", {"relu", "logistic"}, "relu"));
  n.linear_output = r.word("network.output", {"same", "linear"}, "same") == "linear";
  r.real("network.init_alpha", n.init_alpha);
  r.real("network.init_beta", n.init_beta);
  n.init_rule = r.word("network.init_rule", {"shift_plus_scaled", "scaled_shifted"}, "shift_plus_scaled") ==
                        "shift_plus_scaled"
                    ? network::InitRule::shift_plus_scaled
                    : network::InitRule::scaled_shifted;

  auto& t = c.train;
  r.real("train.eta", t.eta);
  r.real("train.momentum", t.momentum);
  r.count("train.steps", t.steps);
  r.count("train.batch_size", t.batch_size);
  r.count("train.trace_every", t.trace_every);

  c.boundary = detail::to_boundary(r.word("forecast.boundary", {"wrap", "skip", "clamp"}, "wrap"));

  r.count("ssim.window", c.ssim.window);
  r.real("ssim.k1", c.ssim.k1);
  r.real("ssim.k2", c.ssim.k2);

  auto& w = c.sweep;
  r.count("sweep.trials", w.trials);
  r.count("sweep.I_min", w.halfwidth.lo);
  r.count("sweep.I_max", w.halfwidth.hi);
  r.count("sweep.J_min", w.depth.lo);
  r.count("sweep.J_max", w.depth.hi);
  r.count("sweep.K_min", w.spatial_lag.lo);
  r.count("sweep.K_max", w.spatial_lag.hi);
  r.count("sweep.L_min", w.temporal_lag.lo);
  r.count("sweep.L_max", w.temporal_lag.hi);
  r.seed("sweep.master_seed", w.master_seed);
  r.count("sweep.workers", w.workers);

  r.seed("run.seed", c.seed);
  if (const std::string* o = r.raw("run.out_dir")) c.out_dir = *o;

  r.reject_unused();

  // Invariants of the target modules, reported against the responsible key.
  auto guard = [&](const std::string& key, auto&& check) {
    try {
      check();
    } catch (const InvalidConfig& e) {
      throw ConfigError(key, r.line_of(key), e.what());
    }
  };
  if (c.system_kind == "henon") guard("system.sites", [&] { c.henon.validate(); });
  if (c.system_kind == "lorenz96") guard("system.sites", [&] { c.lorenz96.validate(); });
  if (c.system_kind == "ks") guard("system.modes", [&] { c.ks.validate(); });
  if (c.n_train < 1) r.fail("split.n_train", "must be >= 1");
  guard("normalizer.beta", [&] { c.normalizer.validate(); });
  guard("selection.bins", [&] { c.selection.validate(); });
  if (c.features) guard("features.K", [&] { c.features->validate(); });
  guard("network.hidden", [&] { c.network.validate(); });
  if (!(c.train.eta > 0.0)) r.fail("train.eta", "must be positive");
  guard("train.momentum", [&] { c.train.validate(); });
  guard("ssim.window", [&] { c.ssim.validate(); });
  guard("sweep.trials", [&] { c.sweep.validate(); });
  return c;
}

inline ExperimentConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
  return parse_config(parse_document(in), base_dir);
}

inline ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  return parse_config(in, path.parent_path());
}

// Simulated or loaded full grid (train + test rows).
inline Grid load_system(const ExperimentConfig& c) {
  if (c.system_kind == "henon") return systems::simulate_henon(c.henon);
  if (c.system_kind == "lorenz96") return systems::simulate_lorenz96(c.lorenz96);
  if (c.system_kind == "ks") return systems::simulate_ks(c.ks);
  return read_grid(c.file.path);
}

// Applies a run-level seed override to the stochastic generators.
inline void apply_seed(ExperimentConfig& c, std::uint64_t seed) {
  c.seed = seed;
  c.henon.seed = seed;
  c.lorenz96.seed = seed;
}

}  // namespace embedcast::config
