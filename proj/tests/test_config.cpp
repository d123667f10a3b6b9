#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "embedcast/config.hpp"

using namespace embedcast;
using namespace embedcast::config;
namespace fs = std::filesystem;

namespace {

const fs::path presets = EMBEDCAST_PRESETS_DIR;

const char* minimal =
    "[system]\nkind = henon\n"
    "[normalizer]\nkind = linear\nalpha = 0\nbeta = 1\n"
    "[network]\nhidden = 3\nactivation = relu\n"
    "[train]\neta = 0.1\nsteps = 10\n";

ExperimentConfig parse_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

ConfigError capture(const std::string& text) {
  try {
    parse_text(text);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "expected ConfigError for:\n" << text;
  return ConfigError("", 0, "none");
}

}  // namespace

TEST(Presets, EveryPresetParses) {
  std::size_t count = 0;
  for (const auto& entry : fs::directory_iterator(presets)) {
    if (entry.path().extension() != ".cfg") continue;
    EXPECT_NO_THROW(parse_config(entry.path())) << entry.path();
    ++count;
  }
  EXPECT_GE(count, 4u);
}

TEST(Presets, HenonValues) {
  const auto c = parse_config(presets / "henon.cfg");
  EXPECT_EQ(c.system_kind, "henon");
  EXPECT_EQ(c.network.hidden, 10u);
  EXPECT_EQ(c.train.eta, 0.1);
  EXPECT_EQ(c.train.momentum, 0.0);
  EXPECT_EQ(c.train.steps, 1'000'000u);
  EXPECT_EQ(c.network.activation, network::Activation::relu);
  EXPECT_EQ(c.normalizer.shift, 2.947992);
  EXPECT_EQ(c.normalizer.scale, 0.515);
  ASSERT_TRUE(c.features.has_value());
  EXPECT_EQ(*c.features, (FeatureParams{1, 3, 2, 3}));
  EXPECT_EQ(c.boundary, BoundaryPolicy::skip);
  EXPECT_TRUE(std::isinf(c.selection.fnn.a_tol));
}

TEST(Presets, Lorenz96Values) {
  const auto c = parse_config(presets / "lorenz96.cfg");
  EXPECT_EQ(c.system_kind, "lorenz96");
  EXPECT_EQ(c.lorenz96.forcing, 5.0);
  EXPECT_EQ(c.lorenz96.dt, 0.05);
  EXPECT_EQ(c.train.steps, 100'000u);
  EXPECT_EQ(c.train.eta, 0.05);
  EXPECT_EQ(c.train.momentum, 0.001);
  EXPECT_EQ(*c.features, (FeatureParams{2, 2, 1, 9}));
}

TEST(Presets, KsAndSunspotValues) {
  const auto ks = parse_config(presets / "ks.cfg");
  EXPECT_EQ(ks.system_kind, "ks");
  EXPECT_EQ(*ks.features, (FeatureParams{1, 2, 2, 39}));
  EXPECT_EQ(ks.network.hidden, 50u);

  const auto sun = parse_config(presets / "sunspot.cfg");
  EXPECT_EQ(sun.system_kind, "file");
  EXPECT_EQ(sun.normalizer.kind, NormalizerKind::logarithmic);
  EXPECT_NE(sun.normalizer.scale, 0.0);
  EXPECT_EQ(sun.n_train, 1646u);
  EXPECT_EQ(sun.network.activation, network::Activation::logistic);
  EXPECT_TRUE(sun.file.path.is_absolute() || sun.file.path.string().find("presets") != std::string::npos);
}

TEST(Config, MinimalDocumentUsesDefaults) {
  const auto c = parse_text(minimal);
  EXPECT_EQ(c.n_train, 500u);
  EXPECT_FALSE(c.features.has_value());
  EXPECT_EQ(c.boundary, BoundaryPolicy::wrap);
  EXPECT_EQ(c.ssim.window, 8u);
  EXPECT_EQ(c.seed, 1u);
}

TEST(Config, EmptyFileListsRequiredKeys) {
  const ConfigError e = capture("");
  const std::string what = e.what();
  for (const auto& k : required_keys()) EXPECT_NE(what.find(k), std::string::npos) << k;
  EXPECT_EQ(e.line(), 0u);
}

TEST(Config, UnknownKeyNamesKeyAndLine) {
  const ConfigError e = capture(std::string(minimal) + "momentom = 0.5\n");
  EXPECT_EQ(e.key(), "train.momentom");
  EXPECT_EQ(e.line(), 13u);
  EXPECT_NE(std::string(e.what()).find("momentom"), std::string::npos);
}

TEST(Config, BadValuesNameKey) {
  EXPECT_EQ(capture(std::string(minimal) + "[forecast]\nboundary = reflect\n").key(), "forecast.boundary");
  EXPECT_EQ(capture(std::string(minimal) + "[ssim]\nwindow = -3\n").key(), "ssim.window");
  EXPECT_EQ(capture(std::string(minimal) + "[ssim]\nk1 = abc\n").key(), "ssim.k1");
  EXPECT_EQ(capture(std::string(minimal) + "[features]\nI = 1\nJ = 1\n").key(), "features.K");
}

TEST(Config, ZeroScaleNormalizerRejected) {
  const std::string text =
      "[system]\nkind = henon\n[normalizer]\nkind = logarithmic\nalpha = 10\nbeta = 0\n"
      "[network]\nhidden = 3\nactivation = relu\n[train]\neta = 0.1\nsteps = 10\n";
  const ConfigError e = capture(text);
  EXPECT_EQ(e.key(), "normalizer.beta");
  EXPECT_EQ(e.line(), 6u);
}

TEST(Config, MomentumOutOfRange) {
  EXPECT_EQ(capture(std::string(minimal) + "momentum = 1\n").key(), "train.momentum");
}

TEST(Document, SyntaxErrors) {
  std::istringstream no_equals("[system]\nkind henon\n");
  try {
    parse_document(no_equals);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream dup("[a]\nx = 1\nx = 2\n");
  try {
    parse_document(dup);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "a.x");
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Document, CommentsAndWhitespace) {
  std::istringstream in("# top\n[ s ]\n  k  =  v w  \n; other\n");
  const Document d = parse_document(in);
  ASSERT_EQ(d.entries.count("s.k"), 1u);
  EXPECT_EQ(d.entries.at("s.k").value, "v w");
  EXPECT_EQ(d.entries.at("s.k").line, 3u);
}

TEST(Config, SeedOverride) {
  auto c = parse_config(presets / "henon.cfg");
  apply_seed(c, 42);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_EQ(c.henon.seed, 42u);
}

TEST(Config, LoadSystemMatchesPresetShape) {
  const auto c = parse_config(presets / "lorenz96.cfg");
  const Grid g = load_system(c);
  EXPECT_EQ(g.rows(), 531u);
  EXPECT_EQ(g.cols(), 40u);
}
