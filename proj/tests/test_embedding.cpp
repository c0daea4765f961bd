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

#include "poivox/embedding.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "poivox/rng.hpp"

namespace {

namespace fs = std::filesystem;

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / name).string();
}

poivox::Embedding vec(std::vector<double> values) {
  poivox::Embedding e;
  e.values = std::move(values);
  return e;
}

poivox::FeatureMatrix logmel_matrix(int frames, int bins, std::vector<double> values) {
  poivox::FeatureMatrix fm;
  fm.frames = frames;
  fm.bins = bins;
  fm.kind = poivox::FeatureKind::log_mel;
  fm.values = std::move(values);
  return fm;
}

TEST(L2Normalize, ThreeFourFive) {
  const auto e = poivox::l2_normalize(vec({3.0, 4.0}));
  EXPECT_DOUBLE_EQ(e.values[0], 0.6);
  EXPECT_DOUBLE_EQ(e.values[1], 0.8);
  EXPECT_TRUE(e.normalized);
}

TEST(L2Normalize, Idempotent) {
  poivox::Rng rng(61);
  for (int trial = 0; trial < 50; ++trial) {
    poivox::Embedding e;
    for (int i = 0; i < 16; ++i) e.values.push_back(rng.uniform(-5.0, 5.0));
    const auto once = poivox::l2_normalize(e);
    const auto twice = poivox::l2_normalize(once);
    for (std::size_t i = 0; i < once.values.size(); ++i) {
      ASSERT_NEAR(twice.values[i], once.values[i], 1e-12);
    }
    ASSERT_NEAR(poivox::l2_norm(once), 1.0, 1e-12);
  }
}

TEST(L2Normalize, ZeroVectorRejected) {
  EXPECT_THROW(poivox::l2_normalize(vec({0.0, 0.0})), poivox::DataError);
}

TEST(BaselineEmbed, ConstantMatrixHasOnlyMeanBlock) {
  const auto fm = logmel_matrix(10, 4, std::vector<double>(40, -3.5));
  const auto e = poivox::baseline_embed(fm);
  ASSERT_EQ(e.dim(), 12);
  for (int b = 0; b < 4; ++b) {
    EXPECT_NE(e.values[static_cast<std::size_t>(b)], 0.0);       // mean block
    EXPECT_EQ(e.values[static_cast<std::size_t>(4 + b)], 0.0);   // std block
    EXPECT_EQ(e.values[static_cast<std::size_t>(8 + b)], 0.0);   // delta block
  }
  EXPECT_NEAR(poivox::l2_norm(e), 1.0, 1e-12);
}

TEST(BaselineEmbed, DimIsThreeTimesBands) {
  poivox::Rng rng(62);
  std::vector<double> values;
  for (int i = 0; i < 20 * 64; ++i) values.push_back(rng.uniform(-20.0, 0.0));
  const auto e = poivox::baseline_embed(logmel_matrix(20, 64, values));
  EXPECT_EQ(e.dim(), 192);
}

TEST(BaselineEmbed, TilingInvariant) {
  poivox::Rng rng(63);
  const int frames = 37, bins = 8;
  std::vector<double> values;
  for (int i = 0; i < frames * bins; ++i) values.push_back(rng.uniform(-20.0, 0.0));
  const auto base = logmel_matrix(frames, bins, values);

  std::vector<double> tiled;
  for (int rep = 0; rep < 3; ++rep) tiled.insert(tiled.end(), values.begin(), values.end());
  const auto tripled = logmel_matrix(3 * frames, bins, tiled);

  const auto a = poivox::baseline_embed(base);
  const auto b = poivox::baseline_embed(tripled);
  ASSERT_EQ(a.dim(), b.dim());
  for (int i = 0; i < a.dim(); ++i) {
    ASSERT_NEAR(a.values[static_cast<std::size_t>(i)], b.values[static_cast<std::size_t>(i)],
                1e-6);
  }
}

TEST(BaselineEmbed, InputChecks) {
  EXPECT_THROW(poivox::baseline_embed(logmel_matrix(1, 4, std::vector<double>(4, 1.0))),
               poivox::DataError);
  poivox::FeatureMatrix power;
  power.frames = 5;
  power.bins = 4;
  power.kind = poivox::FeatureKind::power_spectrogram;
  power.values.assign(20, 1.0);
  EXPECT_THROW(poivox::baseline_embed(power), poivox::DataError);
}

TEST(Store, TextRoundTripIsBitExact) {
  poivox::Rng rng(64);
  poivox::EmbeddingStore store;
  for (int i = 0; i < 20; ++i) {
    poivox::Embedding e;
    for (int d = 0; d < 7; ++d) {
      e.values.push_back(rng.uniform(-1.0, 1.0) * std::pow(10.0, rng.uniform(-300.0, 3.0)));
    }
    store.insert("utt" + std::to_string(i), std::move(e));
  }
  const std::string path = temp_path("poivox_store_rt.txt");
  poivox::save_embedding_store(store, path);
  const auto back = poivox::load_embedding_store(path);
  ASSERT_EQ(back.size(), store.size());
  for (const auto& [id, e] : store.entries()) {
    const auto& loaded = back.get(id);
    ASSERT_EQ(loaded.dim(), e.dim());
    for (int d = 0; d < e.dim(); ++d) {
      ASSERT_EQ(loaded.values[static_cast<std::size_t>(d)],
                e.values[static_cast<std::size_t>(d)]);
    }
  }
  fs::remove(path);
}

TEST(Store, BinaryRoundTripIsBitExact) {
  poivox::Rng rng(65);
  poivox::EmbeddingStore store;
  for (int i = 0; i < 10; ++i) {
    poivox::Embedding e;
    for (int d = 0; d < 5; ++d) e.values.push_back(rng.gaussian());
    store.insert("u" + std::to_string(i), std::move(e));
  }
  const std::string path = temp_path("poivox_store_rt.bin");
  poivox::save_embedding_store_binary(store, path);
  const auto back = poivox::load_embedding_store_binary(path);
  ASSERT_EQ(back.size(), store.size());
  for (const auto& [id, e] : store.entries()) {
    ASSERT_EQ(back.get(id).values, e.values);
  }
  fs::remove(path);
}

TEST(Store, ParsesTwoRecords) {
  const std::string path = temp_path("poivox_store_two.txt");
  poivox::detail::write_file_bytes(path, "u1 2 1 0\nu2 2 0 1\n");
  const auto store = poivox::load_embedding_store(path);
  EXPECT_EQ(store.size(), 2u);
  EXPECT_EQ(store.dim(), 2);
  EXPECT_EQ(store.get("u1").values, (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(store.get("u2").values, (std::vector<double>{0.0, 1.0}));
  EXPECT_TRUE(store.get("u1").normalized);
  fs::remove(path);
}

TEST(Store, DistinctLoadErrors) {
  const std::string mismatch = temp_path("poivox_store_dim.txt");
  poivox::detail::write_file_bytes(mismatch, "u1 2 1 0\nu2 3 0 1 0\n");
  EXPECT_THROW(poivox::load_embedding_store(mismatch), poivox::DataError);

  const std::string dup = temp_path("poivox_store_dup.txt");
  poivox::detail::write_file_bytes(dup, "u1 2 1 0\nu1 2 0 1\n");
  EXPECT_THROW(poivox::load_embedding_store(dup), poivox::DataError);

  const std::string garbage = temp_path("poivox_store_garbage.txt");
  poivox::detail::write_file_bytes(garbage, "u1 2 1 zebra\n");
  EXPECT_THROW(poivox::load_embedding_store(garbage), poivox::FormatError);

  const std::string trailing = temp_path("poivox_store_trailing.txt");
  poivox::detail::write_file_bytes(trailing, "u1 2 1 0 7\n");
  EXPECT_THROW(poivox::load_embedding_store(trailing), poivox::FormatError);

  for (const auto& p : {mismatch, dup, garbage, trailing}) fs::remove(p);
}

TEST(Store, EmptyFileIsEmptyStore) {
  const std::string path = temp_path("poivox_store_empty.txt");
  poivox::detail::write_file_bytes(path, "");
  const auto store = poivox::load_embedding_store(path);
  EXPECT_TRUE(store.empty());
  EXPECT_THROW(store.get("anything"), poivox::DataError);
  fs::remove(path);
}

class ExternalExtractTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = temp_path("poivox_exchange");
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write_tool(const std::string& body) {
    const std::string path = dir_ + "/tool.sh";
    poivox::detail::write_file_bytes(path, "#!/bin/sh\n" + body);
    fs::permissions(path, fs::perms::owner_all, fs::perm_options::add);
    return path;
  }

  poivox::ExternalExtractorConfig config(const std::string& tool) {
    poivox::ExternalExtractorConfig cfg;
    cfg.command = tool;
    cfg.exchange_dir = dir_ + "/xch";
    cfg.timeout_s = 10.0;
    return cfg;
  }

  std::string dir_;
};

TEST_F(ExternalExtractTest, EchoesFixedVector) {
  const auto tool = write_tool("read id path < \"$1\"\necho \"$id 2 0.6 0.8\" > \"$2\"\n");
  const auto e = poivox::external_extract(config(tool), "uttA", "/dev/null");
  EXPECT_EQ(e.values, (std::vector<double>{0.6, 0.8}));
}

TEST_F(ExternalExtractTest, MissingRecordIsDataError) {
  const auto tool = write_tool("echo \"other 2 0 1\" > \"$2\"\n");
  EXPECT_THROW(poivox::external_extract(config(tool), "uttA", "/dev/null"), poivox::DataError);
}

TEST_F(ExternalExtractTest, NoResponseFileIsDataError) {
  const auto tool = write_tool("exit 0\n");
  EXPECT_THROW(poivox::external_extract(config(tool), "uttA", "/dev/null"), poivox::DataError);
}

TEST_F(ExternalExtractTest, DimensionMismatchIsDataError) {
  const auto tool = write_tool("read id path < \"$1\"\necho \"$id 3 1 2 3\" > \"$2\"\n");
  auto cfg = config(tool);
  cfg.expected_dim = 2;
  EXPECT_THROW(poivox::external_extract(cfg, "uttA", "/dev/null"), poivox::DataError);
}

TEST_F(ExternalExtractTest, NonzeroExitIsDataError) {
  const auto tool = write_tool("exit 3\n");
  EXPECT_THROW(poivox::external_extract(config(tool), "uttA", "/dev/null"), poivox::DataError);
}

TEST_F(ExternalExtractTest, SlowToolTimesOut) {
  const auto tool = write_tool("sleep 30\n");
  auto cfg = config(tool);
  cfg.timeout_s = 0.2;
  EXPECT_THROW(poivox::external_extract(cfg, "uttA", "/dev/null"), poivox::TimeoutError);
}

TEST(Sources, BaselineRequiresMelFrontend) {
  poivox::AudioPipeline pipeline;
  pipeline.frontend.n_mels = 0;
  EXPECT_THROW(poivox::BaselineEmbeddingSource{pipeline}, poivox::ConfigError);
}

TEST(Sources, StoreLookupByUtteranceId) {
  poivox::EmbeddingStore store;
  store.insert("u1", vec({1.0, 0.0}));
  poivox::StoreEmbeddingSource source(std::move(store));
  EXPECT_EQ(source.embed_utterance("u1", "ignored").values, (std::vector<double>{1.0, 0.0}));
  EXPECT_THROW(source.embed_utterance("u2", "ignored"), poivox::DataError);
  EXPECT_FALSE(source.is_audio_backed());
  EXPECT_THROW(source.canonical_waveform("x"), poivox::ConfigError);
}

}  // namespace
