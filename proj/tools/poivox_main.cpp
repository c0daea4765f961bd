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

// Command-line front end: synth | features | embed | evaluate |
// sweep-ref | robustness. Every subcommand validates the full config
// before touching any data.

#include <algorithm>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "poivox/poivox.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Exit codes; 1 is reserved for unexpected internal failures.
constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kDataError = 3;
constexpr int kPartialFailure = 4;

struct CliArgs {
  std::string config_path;
  std::string manifest_path;
  std::string input_dir;
  std::string scores_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string strategy;  // cb | ms | both
  std::string metric;
  std::vector<double> snr_list;
  std::vector<int> sizes;
  bool emit_roc = false;
};

std::string iso8601_utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

poivox::RunConfig make_config(const CliArgs& args) {
  poivox::RunConfig cfg =
      args.config_path.empty() ? poivox::RunConfig{} : poivox::RunConfig::load(args.config_path);
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (args.seed) {
    // One flag pins every seed of the run.
    cfg.seed = *args.seed;
    cfg.reference.seed = *args.seed;
    cfg.noise.seed = *args.seed;
    cfg.synth.seed = *args.seed;
  }
  if (args.workers) cfg.workers = *args.workers;
  if (!args.metric.empty()) cfg.metric = args.metric;
  if (!args.strategy.empty()) {
    if (args.strategy == "both") {
      cfg.strategies = {"cb", "ms"};
    } else {
      cfg.strategies = {args.strategy};
    }
  }
  if (!args.snr_list.empty()) cfg.sweep.snr_db = args.snr_list;
  if (!args.sizes.empty()) cfg.sweep.sizes = args.sizes;
  cfg.validate();
  return cfg;
}

std::unique_ptr<poivox::EmbeddingSource> make_source(const poivox::RunConfig& cfg) {
  if (cfg.embedding.source == "baseline") {
    return std::make_unique<poivox::BaselineEmbeddingSource>(cfg.pipeline());
  }
  if (cfg.embedding.source == "store") {
    poivox::EmbeddingStore store = cfg.embedding.store_format == "binary"
                                       ? poivox::load_embedding_store_binary(cfg.embedding.store_path)
                                       : poivox::load_embedding_store(cfg.embedding.store_path);
    if (cfg.embedding.dim > 0 && !store.empty() && store.dim() != cfg.embedding.dim) {
      throw poivox::DataError("embedding store dimension " + std::to_string(store.dim()) +
                              " does not match configured dim " +
                              std::to_string(cfg.embedding.dim));
    }
    return std::make_unique<poivox::StoreEmbeddingSource>(std::move(store));
  }
  poivox::ExternalExtractorConfig ext;
  ext.command = cfg.embedding.external_cmd;
  ext.exchange_dir = cfg.embedding.exchange_dir.empty()
                         ? (fs::path(cfg.out_dir) / "exchange").string()
                         : cfg.embedding.exchange_dir;
  ext.timeout_s = cfg.embedding.external_timeout_s;
  ext.expected_dim = cfg.embedding.dim;
  return std::make_unique<poivox::ExternalEmbeddingSource>(std::move(ext));
}

std::vector<poivox::ManifestEntry> load_input(const CliArgs& args) {
  if (!args.manifest_path.empty()) return poivox::load_manifest(args.manifest_path);
  if (args.input_dir.empty()) {
    throw poivox::ConfigError("no input given: --manifest (or --input-dir where supported)");
  }
  if (!fs::is_directory(args.input_dir)) {
    throw poivox::IoError("no such directory: " + args.input_dir);
  }
  std::vector<poivox::ManifestEntry> manifest;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(args.input_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const fs::path& p : files) {
    manifest.push_back({p.stem().string(), "unknown", poivox::Label::real, p.string()});
  }
  return manifest;
}

void write_json_file(const json& j, const std::string& path) {
  poivox::detail::write_file_bytes(path, j.dump(2) + "\n");
}

void write_report(poivox::ExperimentReport report, const poivox::RunConfig& cfg,
                  const std::string& path) {
  report.config_fingerprint = cfg.fingerprint();
  report.config = cfg.to_json();
  report.seed = cfg.seed;
  json j = poivox::to_json(report);
  j["generated_at_utc"] = iso8601_utc_now();
  write_json_file(j, path);
}

/// Per-utterance processing with a failure summary; returns the exit code.
struct FailureLog {
  std::size_t n_ok = 0;
  std::vector<std::pair<std::string, std::string>> failures;  // id, error

  json summary() const {
    json fails = json::array();
    for (const auto& [id, msg] : failures) fails.push_back({{"id", id}, {"error", msg}});
    return json{{"n_ok", n_ok}, {"n_failed", failures.size()}, {"failures", fails}};
  }
  int exit_code() const { return failures.empty() ? kOk : kPartialFailure; }
};

int cmd_synth(const poivox::RunConfig& cfg) {
  const auto corpus = poivox::generate_synthetic_corpus(cfg.synth, cfg.out_dir);
  json j{{"manifest", corpus.manifest_path},
         {"n_utterances", corpus.manifest.size()},
         {"n_speakers", cfg.synth.n_speakers},
         {"fingerprint", cfg.fingerprint()}};
  write_json_file(j, (fs::path(cfg.out_dir) / "synth_summary.json").string());
  std::cout << "wrote " << corpus.manifest.size() << " utterances under " << cfg.out_dir
            << "\n";
  return kOk;
}

int cmd_features(const poivox::RunConfig& cfg, const CliArgs& args) {
  const auto manifest = load_input(args);
  const fs::path feat_dir = fs::path(cfg.out_dir) / "features";
  fs::create_directories(feat_dir);

  const poivox::AudioPipeline pipeline = cfg.pipeline();
  std::vector<std::string> errors(manifest.size());
  poivox::detail::parallel_for(manifest.size(), cfg.workers, [&](std::size_t i) {
    try {
      const poivox::Waveform w = pipeline.canonical(manifest[i].path);
      const poivox::FeatureMatrix fm = cfg.frontend.n_mels > 0
                                           ? poivox::log_mel(w, cfg.frontend)
                                           : poivox::stft_power(w, cfg.frontend);
      poivox::write_feature_file(fm, (feat_dir / (manifest[i].utterance_id + ".feat")).string());
    } catch (const poivox::Error& e) {
      errors[i] = e.what();
    }
  });
  FailureLog log;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    if (errors[i].empty()) {
      ++log.n_ok;
    } else {
      log.failures.emplace_back(manifest[i].utterance_id, errors[i]);
    }
  }
  write_json_file(log.summary(), (fs::path(cfg.out_dir) / "features_summary.json").string());
  std::cout << "features: " << log.n_ok << " ok, " << log.failures.size() << " failed\n";
  return log.exit_code();
}

int cmd_embed(const poivox::RunConfig& cfg, const CliArgs& args) {
  const auto manifest = load_input(args);
  fs::create_directories(cfg.out_dir);
  auto source = make_source(cfg);

  std::vector<poivox::Embedding> slots(manifest.size());
  std::vector<std::string> errors(manifest.size());
  poivox::detail::parallel_for(manifest.size(), cfg.workers, [&](std::size_t i) {
    try {
      slots[i] = source->embed_utterance(manifest[i].utterance_id, manifest[i].path);
    } catch (const poivox::Error& e) {
      errors[i] = e.what();
    }
  });

  FailureLog log;
  poivox::EmbeddingStore store;
  int run_dim = cfg.embedding.dim > 0 ? cfg.embedding.dim : source->dim();
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    if (!errors[i].empty()) {
      log.failures.emplace_back(manifest[i].utterance_id, errors[i]);
      continue;
    }
    poivox::Embedding e = std::move(slots[i]);
    if (run_dim == 0) run_dim = e.dim();
    if (e.dim() != run_dim) {
      log.failures.emplace_back(manifest[i].utterance_id,
                                "dimension mismatch (got " + std::to_string(e.dim()) +
                                    ", run uses " + std::to_string(run_dim) + ")");
      continue;
    }
    store.insert(manifest[i].utterance_id, std::move(e));
    ++log.n_ok;
  }

  const bool binary = cfg.embedding.store_format == "binary";
  const std::string out_path =
      (fs::path(cfg.out_dir) / (binary ? "embeddings.bin" : "embeddings.txt")).string();
  if (binary) {
    poivox::save_embedding_store_binary(store, out_path);
  } else {
    poivox::save_embedding_store(store, out_path);
  }
  json summary = log.summary();
  summary["output"] = out_path;
  summary["dim"] = run_dim;
  write_json_file(summary, (fs::path(cfg.out_dir) / "embed_summary.json").string());
  std::cout << "embeddings: " << log.n_ok << " ok, " << log.failures.size() << " failed -> "
            << out_path << "\n";
  return log.exit_code();
}

int cmd_evaluate(const poivox::RunConfig& cfg, const CliArgs& args) {
  fs::create_directories(cfg.out_dir);
  const poivox::EvaluationOptions opts = cfg.evaluation_options();

  poivox::ExperimentReport report;
  if (!args.scores_path.empty()) {
    // Metrics-only pass over an existing score file.
    report.scores = poivox::read_score_csv(args.scores_path);
    for (poivox::Strategy s : opts.strategies) {
      const auto ls = poivox::labeled_scores_from_records(report.scores, s);
      report.metrics.push_back({s, poivox::compute_metrics(ls, opts.tdcf)});
    }
  } else {
    const auto manifest = load_input(args);
    auto source = make_source(cfg);
    report = poivox::run_evaluation(manifest, cfg.reference_policy(), *source, opts);
    poivox::write_score_csv(report.scores, (fs::path(cfg.out_dir) / "scores.csv").string());
  }

  if (args.emit_roc) {
    for (poivox::Strategy s : opts.strategies) {
      const auto ls = poivox::labeled_scores_from_records(report.scores, s);
      const std::string name = poivox::to_string(s) == "CB" ? "roc_cb.csv" : "roc_ms.csv";
      poivox::write_roc_csv(poivox::roc_curve(ls), (fs::path(cfg.out_dir) / name).string());
    }
  }
  write_report(std::move(report), cfg, (fs::path(cfg.out_dir) / "report.json").string());
  std::cout << "report: " << (fs::path(cfg.out_dir) / "report.json").string() << "\n";
  return kOk;
}

int cmd_sweep_ref(const poivox::RunConfig& cfg, const CliArgs& args) {
  const auto manifest = load_input(args);
  fs::create_directories(cfg.out_dir);
  auto source = make_source(cfg);
  auto report = poivox::refset_size_sweep(manifest, cfg.sweep.sizes, *source,
                                          cfg.evaluation_options(), cfg.reference.seed);
  poivox::write_sweep_csv(report, "size", (fs::path(cfg.out_dir) / "ref_sweep.csv").string());
  write_report(std::move(report), cfg, (fs::path(cfg.out_dir) / "report.json").string());
  std::cout << "sweep: " << cfg.sweep.sizes.size() << " sizes -> "
            << (fs::path(cfg.out_dir) / "ref_sweep.csv").string() << "\n";
  return kOk;
}

int cmd_robustness(const poivox::RunConfig& cfg, const CliArgs& args) {
  const auto manifest = load_input(args);
  fs::create_directories(cfg.out_dir);
  auto source = make_source(cfg);
  auto report = poivox::robustness_sweep(manifest, cfg.sweep.snr_db, cfg.noise_spec(),
                                         cfg.reference_policy(), *source,
                                         cfg.evaluation_options());
  poivox::write_sweep_csv(report, "snr_db", (fs::path(cfg.out_dir) / "snr_sweep.csv").string());
  write_report(std::move(report), cfg, (fs::path(cfg.out_dir) / "report.json").string());
  std::cout << "robustness: " << cfg.sweep.snr_db.size() << " SNR points -> "
            << (fs::path(cfg.out_dir) / "snr_sweep.csv").string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic-speech detection by speaker verification"};
  app.require_subcommand(1);
  app.fallthrough(true);

  CliArgs args;
  app.add_option("--config", args.config_path, "Run config (JSON)")
      ->envname("POIVOX_CONFIG");
  app.add_option("--out", args.out_dir, "Output directory (overrides config)");
  app.add_option("--seed", args.seed, "Set every seed of the run");
  app.add_option("--workers", args.workers, "Worker threads");
  app.add_option("--strategy", args.strategy, "cb | ms | both")
      ->check(CLI::IsMember({"cb", "ms", "both"}));
  app.add_option("--metric", args.metric, "cosine | neg-sq-euclid")
      ->check(CLI::IsMember({"cosine", "neg-sq-euclid"}));
  app.add_option("--snr-list", args.snr_list, "SNR points in dB")->delimiter(',');
  app.add_option("--sizes", args.sizes, "Reference-set sizes")->delimiter(',');

  CLI::App* synth = app.add_subcommand("synth", "Generate the synthetic corpus");
  CLI::App* features = app.add_subcommand("features", "Dump front-end features per utterance");
  CLI::App* embed = app.add_subcommand("embed", "Write an embedding exchange file");
  CLI::App* evaluate = app.add_subcommand("evaluate", "Score a manifest and compute metrics");
  CLI::App* sweep_ref = app.add_subcommand("sweep-ref", "AUC vs reference-set size");
  CLI::App* robustness = app.add_subcommand("robustness", "AUC vs mixing SNR");

  for (CLI::App* sub : {features, embed, evaluate, sweep_ref, robustness}) {
    sub->add_option("--manifest", args.manifest_path, "Dataset manifest CSV");
  }
  for (CLI::App* sub : {features, embed}) {
    sub->add_option("--input-dir", args.input_dir, "Directory of WAV files (instead of a manifest)");
  }
  evaluate->add_option("--scores", args.scores_path,
                       "Existing score CSV; compute metrics only");
  evaluate->add_flag("--roc", args.emit_roc, "Also write ROC curve CSVs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    const poivox::RunConfig cfg = make_config(args);
    if (synth->parsed()) return cmd_synth(cfg);
    if (features->parsed()) return cmd_features(cfg, args);
    if (embed->parsed()) return cmd_embed(cfg, args);
    if (evaluate->parsed()) return cmd_evaluate(cfg, args);
    if (sweep_ref->parsed()) return cmd_sweep_ref(cfg, args);
    if (robustness->parsed()) return cmd_robustness(cfg, args);
    std::cerr << "no subcommand\n";
    return kConfigError;
  } catch (const poivox::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const poivox::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
