#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "embedcast/config.hpp"
#include "embedcast/embedding/selection.hpp"
#include "embedcast/experiment.hpp"
#include "embedcast/forecast.hpp"
#include "embedcast/metrics.hpp"
#include "embedcast/network/network.hpp"
#include "embedcast/network/train.hpp"

namespace fs = std::filesystem;
using namespace embedcast;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string grid;
  std::string network;
  std::string records;
  std::size_t workers = 0;
  std::size_t trials = 0;
  std::size_t steps = 0;
};

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// <out_dir>/<8 hex digits of the config hash>-<UTC timestamp>
fs::path default_run_dir(const fs::path& config_path, const fs::path& base) {
  std::ostringstream name;
  name << std::hex << std::setw(8) << std::setfill('0') << (fnv1a(slurp(config_path)) & 0xffffffffu);
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  name << '-' << std::put_time(&tm, "%Y%m%d-%H%M%S");
  return base / name.str();
}

struct Context {
  config::ExperimentConfig cfg;
  fs::path run_dir;
};

Context load(const Options& o) {
  Context ctx;
  ctx.cfg = config::parse_config(fs::path(o.config));
  if (o.seed) config::apply_seed(ctx.cfg, *o.seed);
  if (o.workers) ctx.cfg.sweep.workers = o.workers;
  if (o.trials) ctx.cfg.sweep.trials = o.trials;
  if (o.steps) ctx.cfg.train.steps = o.steps;
  ctx.run_dir = o.out.empty() ? default_run_dir(o.config, ctx.cfg.out_dir) : fs::path(o.out);
  return ctx;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
}

SplitGrid load_split(const Context& ctx, const Options& o) {
  const Grid full = o.grid.empty() ? config::load_system(ctx.cfg) : read_grid(o.grid);
  return split(full, ctx.cfg.n_train);
}

FeatureParams resolve_params(const Context& ctx, const Grid& train) {
  if (ctx.cfg.features) return *ctx.cfg.features;
  return embedding::select_features(train, ctx.cfg.selection).params;
}

std::string describe(const FeatureParams& p) {
  std::ostringstream s;
  s << "I=" << p.spatial_halfwidth << " J=" << p.temporal_depth << " K=" << p.spatial_lag << " L=" << p.temporal_lag;
  return s.str();
}

void write_mi(const embedding::MIProfile& p, const fs::path& path) {
  std::ofstream out(path);
  out << "lag,mi_bits,degenerate\n";
  for (std::size_t i = 0; i < p.lags.size(); ++i)
    out << p.lags[i] << ',' << format_double(p.mi_bits[i]) << ',' << (p.degenerate[i] ? 1 : 0) << '\n';
}

void write_fnn(const embedding::FNNProfile& p, const fs::path& path) {
  std::ofstream out(path);
  out << "dim,false_fraction\n";
  for (std::size_t i = 0; i < p.dims.size(); ++i) out << p.dims[i] << ',' << format_double(p.false_fraction[i]) << '\n';
}

int cmd_generate(const Options& o) {
  const Context ctx = load(o);
  const Grid g = config::load_system(ctx.cfg);
  fs::path target = o.out.empty() ? ctx.run_dir / "grid.txt" : fs::path(o.out);
  if (target.has_parent_path()) ensure_dir(target.parent_path());
  write_grid(g, target.string());
  std::cout << "wrote " << g.rows() << "x" << g.cols() << " grid to " << target.string() << '\n';
  return 0;
}

int cmd_select(const Options& o) {
  const Context ctx = load(o);
  const SplitGrid data = load_split(ctx, o);
  const auto r = embedding::select_features(data.train, ctx.cfg.selection);
  ensure_dir(ctx.run_dir);
  write_mi(r.temporal_mi, ctx.run_dir / "temporal_mi.csv");
  write_mi(r.spatial_mi, ctx.run_dir / "spatial_mi.csv");
  write_fnn(r.temporal_fnn, ctx.run_dir / "temporal_fnn.csv");
  write_fnn(r.spatial_fnn, ctx.run_dir / "spatial_fnn.csv");
  {
    std::ofstream out(ctx.run_dir / "selection.txt");
    out << "I " << r.params.spatial_halfwidth << "\nJ " << r.params.temporal_depth << "\nK " << r.params.spatial_lag
        << "\nL " << r.params.temporal_lag << '\n';
  }
  std::cout << "I*=" << r.params.spatial_halfwidth << " J*=" << r.params.temporal_depth
            << " K*=" << r.params.spatial_lag << " L*=" << r.params.temporal_lag << '\n'
            << "profiles written to " << ctx.run_dir.string() << '\n';
  return 0;
}

int cmd_train(const Options& o) {
  const Context ctx = load(o);
  const SplitGrid data = load_split(ctx, o);
  const FeatureParams params = resolve_params(ctx, data.train);
  const Grid norm_train = normalize(data.train, ctx.cfg.normalizer);
  const PatternSet patterns = build_patterns(norm_train, params, ctx.cfg.boundary);

  network::NetworkConfig net_cfg = ctx.cfg.network;
  net_cfg.input_dim = params.input_dim();
  net_cfg.seed = mix_seed(ctx.cfg.seed, 0);
  network::TrainConfig train_cfg = ctx.cfg.train;
  train_cfg.seed = mix_seed(ctx.cfg.seed, 1);
  const auto result = network::train(network::init_network(net_cfg), patterns, train_cfg);

  ensure_dir(ctx.run_dir);
  {
    std::ofstream out(ctx.run_dir / "network.txt");
    network::write_network(result.net, out);
  }
  {
    std::ofstream out(ctx.run_dir / "loss_trace.csv");
    out << "step,mean_loss\n";
    for (std::size_t i = 0; i < result.loss_trace.size(); ++i)
      out << (i + 1) * train_cfg.trace_every << ',' << format_double(result.loss_trace[i]) << '\n';
  }
  std::cout << describe(params) << " patterns=" << patterns.size() << " train_mse=" << format_double(result.final_mse)
            << '\n'
            << "network written to " << (ctx.run_dir / "network.txt").string() << '\n';
  return 0;
}

int cmd_forecast(const Options& o) {
  const Context ctx = load(o);
  const SplitGrid data = load_split(ctx, o);
  const FeatureParams params = resolve_params(ctx, data.train);
  std::ifstream in(o.network);
  if (!in) throw std::runtime_error("cannot open network file " + o.network);
  const network::Network net = network::read_network(in);

  const Grid norm_train = normalize(data.train, ctx.cfg.normalizer);
  const auto fc = forecast(net, norm_train, params, data.test.rows(), ctx.cfg.boundary);
  const Grid predicted = denormalize(*fc.predicted, ctx.cfg.normalizer);
  const double s = metrics::ssim(predicted, data.test, ctx.cfg.ssim);

  ensure_dir(ctx.run_dir);
  write_grid(predicted, (ctx.run_dir / "forecast.txt").string());
  std::cout << describe(params) << " horizon=" << predicted.rows() << " ssim=" << format_double(s) << '\n'
            << "forecast written to " << (ctx.run_dir / "forecast.txt").string() << '\n';
  return 0;
}

int cmd_sweep(const Options& o) {
  Context ctx = load(o);
  const SplitGrid data = load_split(ctx, o);
  experiment::SweepConfig sweep = ctx.cfg.sweep;
  if (o.seed) sweep.master_seed = *o.seed;
  sweep.setup = ctx.cfg.trial_setup();
  sweep.setup.optimal = resolve_params(ctx, data.train);

  ensure_dir(ctx.run_dir);
  const fs::path records_path = ctx.run_dir / "records.csv";
  const auto records = experiment::run_sweep(data, sweep, records_path.string());
  const auto summary = experiment::report(records, records_path.string(), (ctx.run_dir / "summary.csv").string());
  std::size_t ok = 0;
  for (const auto& r : records) ok += r.status == experiment::TrialStatus::ok;
  std::cout << records.size() << " trials (" << ok << " ok), optimal " << describe(sweep.setup.optimal) << '\n';
  if (summary.best)
    std::cout << "best: trial " << summary.best->trial << ' ' << describe(summary.best->params)
              << " d_e=" << format_double(summary.best->d_e) << " ssim=" << format_double(summary.best->ssim) << '\n';
  std::cout << "records written to " << records_path.string() << '\n';
  return 0;
}

int cmd_report(const Options& o) {
  const auto records = experiment::read_records(o.records);
  const fs::path dir = o.out.empty() ? fs::path(o.records).parent_path() : fs::path(o.out);
  if (!dir.empty()) ensure_dir(dir);
  const auto summary = experiment::summarize(records);
  {
    std::ofstream out(dir / "summary.csv");
    if (!out) throw std::runtime_error("cannot write " + (dir / "summary.csv").string());
    experiment::write_summary(summary, out);
  }
  std::cout << records.size() << " records, " << summary.bins.size() << " d_e bins\n";
  if (summary.best)
    std::cout << "best: trial " << summary.best->trial << ' ' << describe(summary.best->params)
              << " d_e=" << format_double(summary.best->d_e) << " ssim=" << format_double(summary.best->ssim) << '\n';
  else
    std::cout << "no successful trials\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feature selection, training and forecasting for spatiotemporal grids"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool needs_config = true) {
    auto* c = sub->add_option("--config", o.config, "experiment config file");
    if (needs_config) c->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "run seed (generators, network init, sweep master seed)");
    sub->add_option("--out", o.out, "output path; defaults to a fresh run directory");
  };

  auto* gen = app.add_subcommand("generate", "simulate the configured system and write its grid");
  common(gen);
  auto* sel = app.add_subcommand("select", "estimate I*, J*, K*, L* and write the MI and FNN profiles");
  common(sel);
  sel->add_option("--grid", o.grid, "use this grid instead of the configured system")->check(CLI::ExistingFile);
  auto* trn = app.add_subcommand("train", "train a network on the training split");
  common(trn);
  trn->add_option("--grid", o.grid, "use this grid instead of the configured system")->check(CLI::ExistingFile);
  trn->add_option("--steps", o.steps, "override the number of training steps");
  auto* fct = app.add_subcommand("forecast", "closed-loop forecast over the test horizon and SSIM");
  common(fct);
  fct->add_option("--grid", o.grid, "use this grid instead of the configured system")->check(CLI::ExistingFile);
  fct->add_option("--network", o.network, "trained network file")->required()->check(CLI::ExistingFile);
  auto* swp = app.add_subcommand("sweep", "Monte Carlo sweep over (I, J, K, L)");
  common(swp);
  swp->add_option("--grid", o.grid, "use this grid instead of the configured system")->check(CLI::ExistingFile);
  swp->add_option("--workers", o.workers, "concurrent trials");
  swp->add_option("--trials", o.trials, "override the number of trials");
  swp->add_option("--steps", o.steps, "override the per-trial training steps");
  auto* rep = app.add_subcommand("report", "binned SSIM summary of a records file");
  common(rep, false);
  rep->add_option("--records", o.records, "records CSV")->required()->check(CLI::ExistingFile);

  if (argc < 2) {
    std::cerr << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*gen) return cmd_generate(o);
    if (*sel) return cmd_select(o);
    if (*trn) return cmd_train(o);
    if (*fct) return cmd_forecast(o);
    if (*swp) return cmd_sweep(o);
    if (*rep) return cmd_report(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
