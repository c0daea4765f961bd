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

#ifndef POIVOX_CONFIG_HPP_
#define POIVOX_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "poivox/augment.hpp"
#include "poivox/embedding.hpp"
#include "poivox/error.hpp"
#include "poivox/frontend.hpp"
#include "poivox/metrics.hpp"
#include "poivox/protocol.hpp"
#include "poivox/rng.hpp"
#include "poivox/synthetic.hpp"

namespace poivox {

/// Full description of one run. Every stochastic choice is funneled
/// through the seeds below, so a config reproduces its reports exactly;
/// the report embeds fingerprint() as the run identifier.
struct RunConfig {
  std::uint64_t seed = 1;
  int workers = 1;
  std::string out_dir = "out";

  struct Audio {
    int sample_rate_hz = 16000;
    double segment_s = 4.0;
    std::string pad = "tile";  // tile | zeros
  } audio;

  FrontendConfig frontend = [] {
    FrontendConfig f;
    f.n_mels = 64;
    return f;
  }();

  struct Embedding {
    std::string source = "baseline";  // baseline | store | external
    std::string store_path;
    std::string store_format = "text";  // text | binary
    std::string external_cmd;
    std::string exchange_dir;
    double external_timeout_s = 30.0;
    int dim = 0;  // 0 = accept what the source yields
    std::string normalize = "auto";  // auto | always | never
  } embedding;

  std::string metric = "cosine";
  std::vector<std::string> strategies = {"cb", "ms"};

  struct Reference {
    std::string policy = "leave-one-out";
    int fixed_size = 10;
    std::vector<std::string> fixed_ids;
    std::uint64_t seed = 1;
  } reference;

  TdcfCosts tdcf;

  struct Noise {
    std::string kind = "white";  // white | pink | file
    std::string path;
    std::uint64_t seed = 1;
  } noise;

  struct Sweep {
    std::vector<int> sizes = {1, 2, 5, 10, 20};
    std::vector<double> snr_db = {0.0, 10.0, 20.0, 30.0};
  } sweep;

  SyntheticCorpusSpec synth;

  void validate() const {
    if (workers < 1) throw ConfigError("config: workers must be >= 1");
    if (audio.sample_rate_hz < 1000) throw ConfigError("config: sample rate too low");
    if (audio.segment_s <= 0.0) throw ConfigError("config: segment_s must be positive");
    if (audio.pad != "tile" && audio.pad != "zeros") {
      throw ConfigError("config: audio.pad must be tile or zeros");
    }
    frontend.validate(audio.sample_rate_hz);
    similarity_metric_from_string(metric);
    normalize_policy_from_string(embedding.normalize);
    reference_policy_from_string(reference.policy);
    if (strategies.empty()) throw ConfigError("config: no strategies selected");
    for (const std::string& s : strategies) strategy_from_string(s);
    if (tdcf.c_miss <= 0.0 || tdcf.c_fa <= 0.0) {
      throw ConfigError("config: t-DCF costs must be positive");
    }
    noise_kind_from_string(noise.kind);
    if (noise.kind == "file" && noise.path.empty()) {
      throw ConfigError("config: noise.kind=file needs noise.path");
    }
    for (int k : sweep.sizes) {
      if (k < 1) throw ConfigError("config: sweep sizes must be >= 1");
    }
    if (embedding.dim < 0) throw ConfigError("config: embedding.dim must be >= 0");
    if (embedding.source != "baseline" && embedding.source != "store" &&
        embedding.source != "external") {
      throw ConfigError("config: embedding.source must be baseline, store or external");
    }
    // Exactly one source may be wired up; mixing is a configuration bug.
    if (embedding.source == "baseline" &&
        (!embedding.store_path.empty() || !embedding.external_cmd.empty())) {
      throw ConfigError("config: baseline source must not set store_path or external_cmd");
    }
    if (embedding.source == "store") {
      if (embedding.store_path.empty()) throw ConfigError("config: store source needs store_path");
      if (!embedding.external_cmd.empty()) {
        throw ConfigError("config: store source must not set external_cmd");
      }
      if (embedding.store_format != "text" && embedding.store_format != "binary") {
        throw ConfigError("config: store_format must be text or binary");
      }
    }
    if (embedding.source == "external") {
      if (embedding.external_cmd.empty()) {
        throw ConfigError("config: external source needs external_cmd");
      }
      if (!embedding.store_path.empty()) {
        throw ConfigError("config: external source must not set store_path");
      }
      if (embedding.external_timeout_s <= 0.0) {
        throw ConfigError("config: external_timeout_s must be positive");
      }
    }
  }

  PadMode pad_mode() const { return audio.pad == "tile" ? PadMode::tile : PadMode::zeros; }

  AudioPipeline pipeline() const {
    AudioPipeline p;
    p.sample_rate_hz = audio.sample_rate_hz;
    p.segment_s = audio.segment_s;
    p.pad = pad_mode();
    p.frontend = frontend;
    return p;
  }

  EvaluationOptions evaluation_options() const {
    EvaluationOptions opts;
    opts.metric = similarity_metric_from_string(metric);
    opts.strategies.clear();
    for (const std::string& s : strategies) opts.strategies.push_back(strategy_from_string(s));
    opts.tdcf = tdcf;
    opts.normalize = normalize_policy_from_string(embedding.normalize);
    opts.workers = workers;
    return opts;
  }

  ReferencePolicy reference_policy() const {
    ReferencePolicy p;
    p.kind = reference_policy_from_string(reference.policy);
    p.fixed_size = reference.fixed_size;
    p.fixed_ids = reference.fixed_ids;
    p.seed = reference.seed;
    return p;
  }

  NoiseMixSpec noise_spec() const {
    NoiseMixSpec spec;
    spec.kind = noise_kind_from_string(noise.kind);
    spec.path = noise.path;
    spec.seed = noise.seed;
    return spec;
  }

  nlohmann::json to_json() const {
    return nlohmann::json{
        {"seed", seed},
        {"workers", workers},
        {"out_dir", out_dir},
        {"audio",
         {{"sample_rate_hz", audio.sample_rate_hz},
          {"segment_s", audio.segment_s},
          {"pad", audio.pad}}},
        {"frontend",
         {{"window_ms", frontend.window_ms},
          {"hop_ms", frontend.hop_ms},
          {"fft_size", frontend.fft_size},
          {"n_mels", frontend.n_mels},
          {"fmin_hz", frontend.fmin_hz},
          {"fmax_hz", frontend.fmax_hz},
          {"log_floor", frontend.log_floor}}},
        {"embedding",
         {{"source", embedding.source},
          {"store_path", embedding.store_path},
          {"store_format", embedding.store_format},
          {"external_cmd", embedding.external_cmd},
          {"exchange_dir", embedding.exchange_dir},
          {"external_timeout_s", embedding.external_timeout_s},
          {"dim", embedding.dim},
          {"normalize", embedding.normalize}}},
        {"metric", metric},
        {"strategies", strategies},
        {"reference",
         {{"policy", reference.policy},
          {"fixed_size", reference.fixed_size},
          {"fixed_ids", reference.fixed_ids},
          {"seed", reference.seed}}},
        {"tdcf", {{"c_miss", tdcf.c_miss}, {"c_fa", tdcf.c_fa}}},
        {"noise", {{"kind", noise.kind}, {"path", noise.path}, {"seed", noise.seed}}},
        {"sweep", {{"sizes", sweep.sizes}, {"snr_db", sweep.snr_db}}},
        {"synth",
         {{"n_speakers", synth.n_speakers},
          {"utts_per_speaker", synth.utts_per_speaker},
          {"fakes_per_speaker", synth.fakes_per_speaker},
          {"sample_rate_hz", synth.sample_rate_hz},
          {"seed", synth.seed}}}};
  }

  static RunConfig from_json(const nlohmann::json& j) {
    RunConfig c;
    const auto get = [](const nlohmann::json& obj, const char* key, auto& out) {
      if (obj.contains(key)) obj.at(key).get_to(out);
    };
    try {
      get(j, "seed", c.seed);
      get(j, "workers", c.workers);
      get(j, "out_dir", c.out_dir);
      if (j.contains("audio")) {
        const auto& a = j.at("audio");
        get(a, "sample_rate_hz", c.audio.sample_rate_hz);
        get(a, "segment_s", c.audio.segment_s);
        get(a, "pad", c.audio.pad);
      }
      if (j.contains("frontend")) {
        const auto& f = j.at("frontend");
        get(f, "window_ms", c.frontend.window_ms);
        get(f, "hop_ms", c.frontend.hop_ms);
        get(f, "fft_size", c.frontend.fft_size);
        get(f, "n_mels", c.frontend.n_mels);
        get(f, "fmin_hz", c.frontend.fmin_hz);
        get(f, "fmax_hz", c.frontend.fmax_hz);
        get(f, "log_floor", c.frontend.log_floor);
      }
      if (j.contains("embedding")) {
        const auto& e = j.at("embedding");
        get(e, "source", c.embedding.source);
        get(e, "store_path", c.embedding.store_path);
        get(e, "store_format", c.embedding.store_format);
        get(e, "external_cmd", c.embedding.external_cmd);
        get(e, "exchange_dir", c.embedding.exchange_dir);
        get(e, "external_timeout_s", c.embedding.external_timeout_s);
        get(e, "dim", c.embedding.dim);
        get(e, "normalize", c.embedding.normalize);
      }
      get(j, "metric", c.metric);
      get(j, "strategies", c.strategies);
      if (j.contains("reference")) {
        const auto& r = j.at("reference");
        get(r, "policy", c.reference.policy);
        get(r, "fixed_size", c.reference.fixed_size);
        get(r, "fixed_ids", c.reference.fixed_ids);
        get(r, "seed", c.reference.seed);
      }
      if (j.contains("tdcf")) {
        const auto& t = j.at("tdcf");
        get(t, "c_miss", c.tdcf.c_miss);
        get(t, "c_fa", c.tdcf.c_fa);
      }
      if (j.contains("noise")) {
        const auto& n = j.at("noise");
        get(n, "kind", c.noise.kind);
        get(n, "path", c.noise.path);
        get(n, "seed", c.noise.seed);
      }
      if (j.contains("sweep")) {
        const auto& s = j.at("sweep");
        get(s, "sizes", c.sweep.sizes);
        get(s, "snr_db", c.sweep.snr_db);
      }
      if (j.contains("synth")) {
        const auto& s = j.at("synth");
        get(s, "n_speakers", c.synth.n_speakers);
        get(s, "utts_per_speaker", c.synth.utts_per_speaker);
        get(s, "fakes_per_speaker", c.synth.fakes_per_speaker);
        get(s, "sample_rate_hz", c.synth.sample_rate_hz);
        get(s, "seed", c.synth.seed);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
  }

  static RunConfig load(const std::string& path) {
    if (!std::filesystem::exists(path)) throw IoError("no such config file: " + path);
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config: " + path + ": " + e.what());
    }
    return from_json(j);
  }

  /// FNV-1a digest of the canonical JSON form, as 16 hex digits.
  /// out_dir and workers are execution environment, not computation;
  /// they do not change any result byte and are left out of the digest.
  std::string fingerprint() const {
    nlohmann::json j = to_json();
    j.erase("out_dir");
    j.erase("workers");
    const std::uint64_t h = detail::fnv1a64(j.dump());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }
};

}  // namespace poivox

#endif  // POIVOX_CONFIG_HPP_
