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

#ifndef POIVOX_EMBEDDING_HPP_
#define POIVOX_EMBEDDING_HPP_

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include "poivox/error.hpp"
#include "poivox/frontend.hpp"
#include "poivox/waveform.hpp"

namespace poivox {

/// Fixed-length utterance representation in verification space.
struct Embedding {
  std::vector<double> values;
  bool normalized = false;

  int dim() const { return static_cast<int>(values.size()); }
};

inline double l2_norm(const Embedding& e) {
  double acc = 0.0;
  for (double v : e.values) acc += v * v;
  return std::sqrt(acc);
}

/// Unit-norm copy, direction preserved. Zero vectors are rejected.
inline Embedding l2_normalize(const Embedding& e) {
  const double norm = l2_norm(e);
  if (norm == 0.0) throw DataError("l2_normalize: zero vector");
  Embedding out;
  out.values.reserve(e.values.size());
  for (double v : e.values) out.values.push_back(v / norm);
  out.normalized = true;
  return out;
}

/// Deterministic spectral-statistics embedder: per-band mean, per-band
/// population standard deviation, and per-band mean absolute
/// frame-to-frame delta of a log-mel matrix, concatenated (dim =
/// 3 * n_mels) and L2-normalized. Deltas are taken cyclically so all
/// three statistics are exactly invariant to whole-number tiling of the
/// frame sequence.
inline Embedding baseline_embed(const FeatureMatrix& features) {
  if (features.kind != FeatureKind::log_mel) {
    throw DataError("baseline_embed: expects log-mel features");
  }
  if (features.frames < 2) {
    throw DataError("baseline_embed: need at least 2 frames");
  }
  const int frames = features.frames;
  const int bands = features.bins;

  Embedding e;
  e.values.assign(static_cast<std::size_t>(3) * bands, 0.0);
  for (int b = 0; b < bands; ++b) {
    double sum = 0.0;
    for (int t = 0; t < frames; ++t) sum += features.at(t, b);
    const double mean = sum / frames;

    double var = 0.0;
    double delta = 0.0;
    for (int t = 0; t < frames; ++t) {
      const double d = features.at(t, b) - mean;
      var += d * d;
      delta += std::abs(features.at((t + 1) % frames, b) - features.at(t, b));
    }
    e.values[static_cast<std::size_t>(b)] = mean;
    e.values[static_cast<std::size_t>(bands + b)] = std::sqrt(var / frames);
    e.values[static_cast<std::size_t>(2 * bands + b)] = delta / frames;
  }
  return l2_normalize(e);
}

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view token, const std::string& context) {
  double v = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw FormatError(context + ": cannot parse number '" + std::string(token) + "'");
  }
  return v;
}

inline long parse_long(std::string_view token, const std::string& context) {
  long v = 0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw FormatError(context + ": cannot parse integer '" + std::string(token) + "'");
  }
  return v;
}

}  // namespace detail

/// Immutable-after-load collection of embeddings keyed by utterance id.
/// All entries share one dimension.
class EmbeddingStore {
 public:
  void insert(const std::string& utterance_id, Embedding e) {
    if (entries_.count(utterance_id) != 0) {
      throw DataError("embedding store: duplicate id '" + utterance_id + "'");
    }
    if (!entries_.empty() && e.dim() != dim_) {
      throw DataError("embedding store: dimension mismatch for '" + utterance_id +
                      "' (got " + std::to_string(e.dim()) + ", store has " +
                      std::to_string(dim_) + ")");
    }
    dim_ = e.dim();
    entries_.emplace(utterance_id, std::move(e));
  }

  const Embedding* find(const std::string& utterance_id) const {
    const auto it = entries_.find(utterance_id);
    return it == entries_.end() ? nullptr : &it->second;
  }

  const Embedding& get(const std::string& utterance_id) const {
    const Embedding* e = find(utterance_id);
    if (e == nullptr) {
      throw DataError("embedding store: missing id '" + utterance_id + "'");
    }
    return *e;
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  int dim() const { return dim_; }
  const std::map<std::string, Embedding>& entries() const { return entries_; }

 private:
  std::map<std::string, Embedding> entries_;
  int dim_ = 0;
};

// Text exchange format, one record per line:
//   <utterance-id> <dim> <v1> <v2> ... <vdim>
// UTF-8, ids without whitespace, decimal floats (shortest round-trip
// form on write, so store round-trips are bit exact).

inline EmbeddingStore load_embedding_store(const std::string& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path);
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);

  EmbeddingStore store;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string context = path + ":" + std::to_string(lineno);
    std::istringstream ls(line);
    std::string id, token;
    if (!(ls >> id >> token)) throw FormatError(context + ": truncated record");
    const long dim = detail::parse_long(token, context);
    if (dim < 1) throw FormatError(context + ": bad dimension");
    Embedding e;
    e.values.reserve(static_cast<std::size_t>(dim));
    for (long i = 0; i < dim; ++i) {
      if (!(ls >> token)) throw FormatError(context + ": expected " + std::to_string(dim) + " values");
      e.values.push_back(detail::parse_double(token, context));
    }
    if (ls >> token) throw FormatError(context + ": trailing tokens");
    e.normalized = std::abs(l2_norm(e) - 1.0) <= 1e-6;
    store.insert(id, std::move(e));
  }
  return store;
}

inline void save_embedding_store(const EmbeddingStore& store, const std::string& path) {
  std::ostringstream out;
  for (const auto& [id, e] : store.entries()) {
    out << id << ' ' << e.dim();
    for (double v : e.values) out << ' ' << detail::format_double(v);
    out << '\n';
  }
  detail::write_file_bytes(path, out.str());
}

// Binary variant, mirroring the feature-dump layout: "PVEB" magic,
// u32 record count, then per record u32 id length, id bytes, u32 dim,
// dim 64-bit little-endian floats.

inline void save_embedding_store_binary(const EmbeddingStore& store, const std::string& path) {
  std::string out;
  out.append("PVEB");
  detail::append_u32le(out, static_cast<std::uint32_t>(store.size()));
  for (const auto& [id, e] : store.entries()) {
    detail::append_u32le(out, static_cast<std::uint32_t>(id.size()));
    out.append(id);
    detail::append_u32le(out, static_cast<std::uint32_t>(e.values.size()));
    for (double v : e.values) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof(bits));
      for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
    }
  }
  detail::write_file_bytes(path, out);
}

inline EmbeddingStore load_embedding_store_binary(const std::string& path) {
  const std::string bytes = detail::read_file_bytes(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  std::size_t pos = 0;
  const auto need = [&](std::size_t n) {
    if (pos + n > bytes.size()) throw FormatError("malformed embedding file (truncated): " + path);
  };
  need(8);
  if (std::memcmp(p, "PVEB", 4) != 0) throw FormatError("malformed embedding file: " + path);
  const std::uint32_t count = detail::read_u32le(p + 4);
  pos = 8;
  EmbeddingStore store;
  for (std::uint32_t r = 0; r < count; ++r) {
    need(4);
    const std::uint32_t id_len = detail::read_u32le(p + pos);
    pos += 4;
    need(id_len + 4);
    std::string id(reinterpret_cast<const char*>(p + pos), id_len);
    pos += id_len;
    const std::uint32_t dim = detail::read_u32le(p + pos);
    pos += 4;
    need(static_cast<std::size_t>(dim) * 8);
    Embedding e;
    e.values.resize(dim);
    for (std::uint32_t i = 0; i < dim; ++i) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) {
        bits |= static_cast<std::uint64_t>(p[pos + 8 * i + b]) << (8 * b);
      }
      std::memcpy(&e.values[i], &bits, sizeof(double));
    }
    pos += static_cast<std::size_t>(dim) * 8;
    e.normalized = std::abs(l2_norm(e) - 1.0) <= 1e-6;
    store.insert(id, std::move(e));
  }
  if (pos != bytes.size()) throw FormatError("malformed embedding file (trailing bytes): " + path);
  return store;
}

namespace detail {

/// Run a shell command; throws TimeoutError past the deadline
/// (timeout_s <= 0 means no deadline). Returns the exit status. The
/// command runs in its own process group so a timeout kills the whole
/// tree, not just the shell.
inline int run_command(const std::string& command, double timeout_s) {
  const pid_t pid = ::fork();
  if (pid < 0) throw IoError("fork failed");
  if (pid == 0) {
    ::setpgid(0, 0);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);  // both sides set it to close the startup race
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(timeout_s));
  for (;;) {
    int status = 0;
    const pid_t r = ::waitpid(pid, &status, WNOHANG);
    if (r == pid) {
      if (WIFEXITED(status)) return WEXITSTATUS(status);
      return -1;
    }
    if (r < 0) throw IoError("waitpid failed");
    if (timeout_s > 0.0 && std::chrono::steady_clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      throw TimeoutError("external command timed out after " +
                         format_double(timeout_s) + " s: " + command);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
}

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  out.push_back('\'');
  return out;
}

}  // namespace detail

/// File-exchange protocol to an out-of-process embedding extractor.
/// The extractor is invoked as `<command> <request-file> <response-file>`;
/// the request file holds one `<utterance-id> <wav-path>` line, the
/// response must be in the text exchange format above.
struct ExternalExtractorConfig {
  std::string command;
  std::string exchange_dir;
  double timeout_s = 30.0;
  int expected_dim = 0;  // 0 = accept any dimension
};

inline Embedding external_extract(const ExternalExtractorConfig& cfg,
                                  const std::string& utterance_id,
                                  const std::string& wav_path) {
  if (cfg.command.empty()) throw ConfigError("external extractor: no command configured");
  if (cfg.exchange_dir.empty()) throw ConfigError("external extractor: no exchange directory");
  std::filesystem::create_directories(cfg.exchange_dir);
  const std::string request = cfg.exchange_dir + "/request.txt";
  const std::string response = cfg.exchange_dir + "/response.txt";
  std::filesystem::remove(response);
  detail::write_file_bytes(request, utterance_id + " " + wav_path + "\n");

  const std::string cmdline = cfg.command + " " + detail::shell_quote(request) + " " +
                              detail::shell_quote(response);
  const int status = detail::run_command(cmdline, cfg.timeout_s);
  if (status != 0) {
    throw DataError("external extractor failed (exit " + std::to_string(status) + ")");
  }
  if (!std::filesystem::exists(response)) {
    throw DataError("external extractor wrote no response file");
  }
  const EmbeddingStore store = load_embedding_store(response);
  const Embedding* e = store.find(utterance_id);
  if (e == nullptr) {
    throw DataError("external extractor: missing output record for '" + utterance_id + "'");
  }
  if (cfg.expected_dim > 0 && e->dim() != cfg.expected_dim) {
    throw DataError("external extractor: dimension mismatch for '" + utterance_id +
                    "' (got " + std::to_string(e->dim()) + ", configured " +
                    std::to_string(cfg.expected_dim) + ")");
  }
  return *e;
}

/// Audio canonicalization shared by audio-backed embedding sources:
/// decode, resample to the run's rate, take the leading analysis segment.
struct AudioPipeline {
  int sample_rate_hz = 16000;
  double segment_s = 4.0;
  PadMode pad = PadMode::tile;
  FrontendConfig frontend;  // n_mels >= 1 for the baseline embedder

  Waveform canonical(const std::string& path) const {
    return take_segment(resample(load_wav(path), sample_rate_hz), segment_s, pad);
  }
};

/// Deterministic mapping from utterances to embeddings. Implementations
/// must return the same embedding for the same input, always.
class EmbeddingSource {
 public:
  virtual ~EmbeddingSource() = default;
  virtual std::string name() const = 0;
  /// Declared embedding dimension; 0 when only known per record.
  virtual int dim() const { return 0; }
  virtual Embedding embed_utterance(const std::string& utterance_id,
                                    const std::string& path) = 0;

  /// Audio-backed sources also embed raw waveforms; noise sweeps remix the
  /// canonical segment before embedding. Store-backed sources cannot.
  virtual bool is_audio_backed() const { return false; }
  virtual Waveform canonical_waveform(const std::string& /*path*/) const {
    throw ConfigError("embedding source '" + name() + "' is not audio backed");
  }
  virtual Embedding embed_waveform(const Waveform& /*canonical*/) {
    throw ConfigError("embedding source '" + name() + "' is not audio backed");
  }
};

class BaselineEmbeddingSource : public EmbeddingSource {
 public:
  explicit BaselineEmbeddingSource(AudioPipeline pipeline) : pipeline_(std::move(pipeline)) {
    if (pipeline_.frontend.n_mels < 1) {
      throw ConfigError("baseline embedder requires a log-mel front-end (n_mels >= 1)");
    }
  }

  std::string name() const override { return "baseline-spectral-stats"; }
  int dim() const override { return 3 * pipeline_.frontend.n_mels; }

  Embedding embed_utterance(const std::string& /*utterance_id*/,
                            const std::string& path) override {
    return embed_waveform(pipeline_.canonical(path));
  }

  bool is_audio_backed() const override { return true; }
  Waveform canonical_waveform(const std::string& path) const override {
    return pipeline_.canonical(path);
  }
  Embedding embed_waveform(const Waveform& canonical) override {
    return baseline_embed(log_mel(canonical, pipeline_.frontend));
  }

  const AudioPipeline& pipeline() const { return pipeline_; }

 private:
  AudioPipeline pipeline_;
};

class StoreEmbeddingSource : public EmbeddingSource {
 public:
  explicit StoreEmbeddingSource(EmbeddingStore store) : store_(std::move(store)) {}

  std::string name() const override { return "precomputed-store"; }
  int dim() const override { return store_.dim(); }

  Embedding embed_utterance(const std::string& utterance_id,
                            const std::string& /*path*/) override {
    const Embedding* e = store_.find(utterance_id);
    if (e == nullptr) {
      throw DataError("missing embedding for utterance '" + utterance_id + "'");
    }
    return *e;
  }

  const EmbeddingStore& store() const { return store_; }

 private:
  EmbeddingStore store_;
};

class ExternalEmbeddingSource : public EmbeddingSource {
 public:
  explicit ExternalEmbeddingSource(ExternalExtractorConfig cfg) : cfg_(std::move(cfg)) {}

  std::string name() const override { return "external-extractor"; }
  int dim() const override { return cfg_.expected_dim; }

  Embedding embed_utterance(const std::string& utterance_id,
                            const std::string& path) override {
    // One exchange directory, one request at a time.
    std::lock_guard<std::mutex> lock(mu_);
    return external_extract(cfg_, utterance_id, path);
  }

 private:
  ExternalExtractorConfig cfg_;
  std::mutex mu_;
};

}  // namespace poivox

#endif  // POIVOX_EMBEDDING_HPP_
