// Copyright (c) 2026 The poivox Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "poivox/config.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

namespace {

using nlohmann::json;
using poivox::RunConfig;

TEST(RunConfig, DefaultsValidate) {
  RunConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.metric, "cosine");
  EXPECT_EQ(cfg.frontend.n_mels, 64);
}

TEST(RunConfig, JsonRoundTrip) {
  RunConfig cfg;
  cfg.seed = 99;
  cfg.metric = "neg-sq-euclid";
  cfg.strategies = {"ms"};
  cfg.frontend.n_mels = 80;
  cfg.reference.policy = "fixed-list";
  cfg.reference.fixed_size = 7;
  cfg.reference.fixed_ids = {"a", "b"};
  cfg.sweep.snr_db = {-5.0, 5.0};
  const RunConfig back = RunConfig::from_json(cfg.to_json());
  EXPECT_EQ(back.to_json().dump(), cfg.to_json().dump());
}

TEST(RunConfig, PartialJsonKeepsDefaults) {
  const auto cfg = RunConfig::from_json(json{{"metric", "neg-sq-euclid"}});
  EXPECT_EQ(cfg.metric, "neg-sq-euclid");
  EXPECT_EQ(cfg.frontend.fft_size, 512);
  EXPECT_EQ(cfg.audio.segment_s, 4.0);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(RunConfig, MixedEmbeddingSourcesRejected) {
  RunConfig cfg;
  cfg.embedding.source = "baseline";
  cfg.embedding.store_path = "somewhere.txt";
  EXPECT_THROW(cfg.validate(), poivox::ConfigError);

  cfg = RunConfig{};
  cfg.embedding.source = "store";
  cfg.embedding.store_path = "somewhere.txt";
  cfg.embedding.external_cmd = "tool";
  EXPECT_THROW(cfg.validate(), poivox::ConfigError);

  cfg = RunConfig{};
  cfg.embedding.source = "external";
  cfg.embedding.external_cmd = "tool";
  cfg.embedding.store_path = "somewhere.txt";
  EXPECT_THROW(cfg.validate(), poivox::ConfigError);

  cfg = RunConfig{};
  cfg.embedding.source = "store";  // store source without a path
  EXPECT_THROW(cfg.validate(), poivox::ConfigError);
}

TEST(RunConfig, RejectsBadValues) {
  RunConfig cfg;
  cfg.metric = "hamming";
  EXPECT_THROW(cfg.validate(), poivox::ConfigError);

  cfg = RunConfig{};
  cfg.strategies = {};
  EXPECT_THROW(cfg.validate(), poivox::ConfigError);

  cfg = RunConfig{};
  cfg.tdcf.c_fa = 0.0;
  EXPECT_THROW(cfg.validate(), poivox::ConfigError);

  cfg = RunConfig{};
  cfg.noise.kind = "file";  // needs a path
  EXPECT_THROW(cfg.validate(), poivox::ConfigError);

  cfg = RunConfig{};
  cfg.sweep.sizes = {0};
  EXPECT_THROW(cfg.validate(), poivox::ConfigError);

  cfg = RunConfig{};
  cfg.workers = 0;
  EXPECT_THROW(cfg.validate(), poivox::ConfigError);
}

TEST(RunConfig, FingerprintTracksComputationOnly) {
  RunConfig a;
  RunConfig b;
  b.out_dir = "elsewhere";  // execution environment
  b.workers = 16;
  EXPECT_EQ(a.fingerprint(), b.fingerprint());

  RunConfig c;
  c.seed = a.seed + 1;
  EXPECT_NE(a.fingerprint(), c.fingerprint());
  RunConfig d;
  d.frontend.n_mels = 80;
  EXPECT_NE(a.fingerprint(), d.fingerprint());
}

TEST(RunConfig, LoadErrorsAreDistinct) {
  EXPECT_THROW(RunConfig::load("/nonexistent/config.json"), poivox::IoError);
}

}  // namespace
