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

#ifndef POIVOX_PROTOCOL_HPP_
#define POIVOX_PROTOCOL_HPP_

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "poivox/augment.hpp"
#include "poivox/embedding.hpp"
#include "poivox/error.hpp"
#include "poivox/manifest.hpp"
#include "poivox/metrics.hpp"
#include "poivox/rng.hpp"
#include "poivox/verification.hpp"

namespace poivox {

namespace detail {

/// Chunk-free worker pool over [0, n). Results must be written to
/// independent slots; the first raised exception is rethrown after all
/// workers finish.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;

  const int count = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(workers), n));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(count));
  for (int t = 0; t < count; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mu);
          if (!error) error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

enum class ReferencePolicyKind { leave_one_out, fixed_list };

inline std::string to_string(ReferencePolicyKind k) {
  return k == ReferencePolicyKind::leave_one_out ? "leave-one-out" : "fixed-list";
}

inline ReferencePolicyKind reference_policy_from_string(const std::string& s) {
  if (s == "leave-one-out") return ReferencePolicyKind::leave_one_out;
  if (s == "fixed-list") return ReferencePolicyKind::fixed_list;
  throw ConfigError("unknown reference policy '" + s + "' (leave-one-out | fixed-list)");
}

/// How reference sets are formed per claimed identity.
/// leave-one-out: a real test utterance is compared against all other
/// real utterances of its speaker; a fake against all of them.
/// fixed-list: a seed-deterministic fixed_size subset (or the explicit
/// fixed_ids) of the speaker's real utterances is held out as the
/// reference set; held-out utterances are never tested.
struct ReferencePolicy {
  ReferencePolicyKind kind = ReferencePolicyKind::leave_one_out;
  int fixed_size = 10;
  std::vector<std::string> fixed_ids;
  std::uint64_t seed = 0;
};

/// Reference assignment at the utterance-id level.
struct ReferencePlan {
  struct Item {
    ManifestEntry entry;  // the test utterance
    std::vector<std::string> reference_ids;
  };
  std::vector<Item> items;                   // manifest order, test items only
  std::set<std::string> reference_only_ids;  // fixed-list holdouts
};

namespace detail {

inline std::map<std::string, std::vector<std::string>> real_utterances_by_speaker(
    const std::vector<ManifestEntry>& manifest) {
  std::map<std::string, std::vector<std::string>> reals;
  for (const ManifestEntry& e : manifest) {
    if (e.label == Label::real) reals[e.speaker_id].push_back(e.utterance_id);
  }
  return reals;
}

}  // namespace detail

inline ReferencePlan build_reference_sets(const std::vector<ManifestEntry>& manifest,
                                          const ReferencePolicy& policy) {
  validate_manifest(manifest);
  const auto reals = detail::real_utterances_by_speaker(manifest);

  ReferencePlan plan;
  if (policy.kind == ReferencePolicyKind::leave_one_out) {
    for (const ManifestEntry& e : manifest) {
      const auto it = reals.find(e.speaker_id);
      std::vector<std::string> refs;
      if (it != reals.end()) {
        for (const std::string& id : it->second) {
          if (e.label == Label::real && id == e.utterance_id) continue;
          refs.push_back(id);
        }
      }
      if (refs.empty()) {
        throw DataError("identity '" + e.speaker_id + "' has no usable references for '" +
                        e.utterance_id + "'");
      }
      plan.items.push_back({e, std::move(refs)});
    }
    return plan;
  }

  // fixed-list
  if (policy.fixed_ids.empty() && policy.fixed_size < 1) {
    throw ConfigError("fixed-list policy: fixed_size must be >= 1");
  }
  std::map<std::string, std::vector<std::string>> refs_by_speaker;
  if (!policy.fixed_ids.empty()) {
    std::map<std::string, const ManifestEntry*> by_id;
    for (const ManifestEntry& e : manifest) by_id[e.utterance_id] = &e;
    for (const std::string& id : policy.fixed_ids) {
      const auto it = by_id.find(id);
      if (it == by_id.end()) {
        throw DataError("fixed-list reference '" + id + "' is not in the manifest");
      }
      if (it->second->label != Label::real) {
        throw DataError("fixed-list reference '" + id + "' is not a real utterance");
      }
      refs_by_speaker[it->second->speaker_id].push_back(id);
      plan.reference_only_ids.insert(id);
    }
  } else {
    for (const auto& [speaker, ids] : reals) {
      if (static_cast<int>(ids.size()) < policy.fixed_size) {
        throw DataError("identity '" + speaker + "' has " + std::to_string(ids.size()) +
                        " real utterances, fewer than fixed_size " +
                        std::to_string(policy.fixed_size));
      }
      std::vector<std::string> perm = ids;
      Rng rng(derive_seed(policy.seed, speaker));
      rng.shuffle(perm);
      perm.resize(static_cast<std::size_t>(policy.fixed_size));
      std::sort(perm.begin(), perm.end());
      for (const std::string& id : perm) plan.reference_only_ids.insert(id);
      refs_by_speaker[speaker] = std::move(perm);
    }
  }

  for (const ManifestEntry& e : manifest) {
    if (plan.reference_only_ids.count(e.utterance_id) != 0) continue;  // held out
    const auto it = refs_by_speaker.find(e.speaker_id);
    if (it == refs_by_speaker.end() || it->second.empty()) {
      throw DataError("identity '" + e.speaker_id + "' has no usable references for '" +
                      e.utterance_id + "'");
    }
    plan.items.push_back({e, it->second});
  }
  return plan;
}

/// Whether embeddings are L2-normalized on ingestion. auto_metric
/// normalizes under cosine and keeps raw vectors under the squared
/// Euclidean metric.
enum class NormalizePolicy { auto_metric, always, never };

inline std::string to_string(NormalizePolicy p) {
  switch (p) {
    case NormalizePolicy::auto_metric: return "auto";
    case NormalizePolicy::always: return "always";
    default: return "never";
  }
}

inline NormalizePolicy normalize_policy_from_string(const std::string& s) {
  if (s == "auto") return NormalizePolicy::auto_metric;
  if (s == "always") return NormalizePolicy::always;
  if (s == "never") return NormalizePolicy::never;
  throw ConfigError("unknown normalize policy '" + s + "' (auto | always | never)");
}

struct EvaluationOptions {
  SimilarityMetric metric = SimilarityMetric::cosine;
  std::vector<Strategy> strategies = {Strategy::cb, Strategy::ms};
  TdcfCosts tdcf;
  NormalizePolicy normalize = NormalizePolicy::auto_metric;
  int workers = 1;

  bool normalize_effective() const {
    return normalize == NormalizePolicy::always ||
           (normalize == NormalizePolicy::auto_metric && metric == SimilarityMetric::cosine);
  }

  void validate() const {
    if (strategies.empty()) throw ConfigError("evaluation: no strategies selected");
    if (workers < 1) throw ConfigError("evaluation: workers must be >= 1");
    if (tdcf.c_miss <= 0.0 || tdcf.c_fa <= 0.0) {
      throw ConfigError("evaluation: t-DCF costs must be positive");
    }
  }
};

struct StrategyMetrics {
  Strategy strategy = Strategy::cb;
  MetricsReport report;
};

struct SweepPoint {
  Strategy strategy = Strategy::cb;
  double x = 0.0;  // reference-set size or SNR in dB
  double auc = 0.0;
};

/// Output of one experiment driver. Sweep drivers fill `curve`; the
/// plain evaluation fills `scores` and `metrics`. The CLI layer embeds
/// the exact run config and its fingerprint.
struct ExperimentReport {
  std::vector<ScoreRecord> scores;
  std::vector<StrategyMetrics> metrics;
  std::vector<SweepPoint> curve;
  std::vector<std::string> warnings;
  std::uint64_t seed = 0;
  std::string config_fingerprint;
  nlohmann::json config = nlohmann::json::object();
};

namespace detail {

struct EmbeddingTable {
  std::unordered_map<std::string, Embedding> by_id;

  const Embedding& get(const std::string& id) const {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError("missing embedding for utterance '" + id + "'");
    return it->second;
  }
};

/// Resolve embeddings for the given entries (parallel, deterministic
/// slots), applying the run's normalization policy.
inline EmbeddingTable embed_entries(const std::vector<const ManifestEntry*>& entries,
                                    EmbeddingSource& source, const EvaluationOptions& opts) {
  std::vector<Embedding> slots(entries.size());
  parallel_for(entries.size(), opts.workers, [&](std::size_t i) {
    Embedding e = source.embed_utterance(entries[i]->utterance_id, entries[i]->path);
    if (opts.normalize_effective()) e = l2_normalize(e);
    slots[i] = std::move(e);
  });
  EmbeddingTable table;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    table.by_id.emplace(entries[i]->utterance_id, std::move(slots[i]));
  }
  return table;
}

inline std::vector<const ManifestEntry*> entries_needed(const std::vector<ManifestEntry>& manifest,
                                                        const ReferencePlan& plan) {
  std::set<std::string> needed;
  for (const auto& item : plan.items) {
    needed.insert(item.entry.utterance_id);
    for (const std::string& id : item.reference_ids) needed.insert(id);
  }
  std::vector<const ManifestEntry*> out;
  for (const ManifestEntry& e : manifest) {
    if (needed.count(e.utterance_id) != 0) out.push_back(&e);
  }
  return out;
}

inline ReferenceSet materialize(const std::string& identity,
                                const std::vector<std::string>& reference_ids,
                                const EmbeddingTable& table) {
  std::vector<Embedding> members;
  members.reserve(reference_ids.size());
  for (const std::string& id : reference_ids) members.push_back(table.get(id));
  return ReferenceSet(identity, std::move(members));
}

inline double strategy_score(Strategy s, const Embedding& x, const ReferenceSet& rs,
                             SimilarityMetric m) {
  return s == Strategy::cb ? cb_score(x, rs, m) : ms_score(x, rs, m);
}

}  // namespace detail

/// Score every test utterance of the manifest under the reference policy
/// and compute per-strategy metrics. Deterministic given (inputs, seed).
inline ExperimentReport run_evaluation(const std::vector<ManifestEntry>& manifest,
                                       const ReferencePolicy& policy,
                                       EmbeddingSource& source,
                                       const EvaluationOptions& opts) {
  opts.validate();
  const ReferencePlan plan = build_reference_sets(manifest, policy);
  const auto table = detail::embed_entries(detail::entries_needed(manifest, plan), source, opts);

  ExperimentReport report;
  report.seed = policy.seed;

  // Fixed-list reference sets are shared by all test items of a speaker;
  // they are materialized up front so the parallel section only reads.
  std::map<std::string, std::shared_ptr<const ReferenceSet>> shared_sets;
  if (policy.kind == ReferencePolicyKind::fixed_list) {
    for (const auto& item : plan.items) {
      auto& slot = shared_sets[item.entry.speaker_id];
      if (!slot) {
        slot = std::make_shared<const ReferenceSet>(
            detail::materialize(item.entry.speaker_id, item.reference_ids, table));
      }
    }
  }

  std::vector<double> cb_scores(plan.items.size()), ms_scores(plan.items.size());
  detail::parallel_for(plan.items.size(), opts.workers, [&](std::size_t i) {
    const auto& item = plan.items[i];
    std::shared_ptr<const ReferenceSet> rs;
    if (policy.kind == ReferencePolicyKind::fixed_list) {
      rs = shared_sets.at(item.entry.speaker_id);
    } else {
      rs = std::make_shared<const ReferenceSet>(
          detail::materialize(item.entry.speaker_id, item.reference_ids, table));
    }
    const Embedding& x = table.get(item.entry.utterance_id);
    cb_scores[i] = detail::strategy_score(Strategy::cb, x, *rs, opts.metric);
    ms_scores[i] = detail::strategy_score(Strategy::ms, x, *rs, opts.metric);
  });

  for (Strategy s : opts.strategies) {
    for (std::size_t i = 0; i < plan.items.size(); ++i) {
      const auto& item = plan.items[i];
      ScoreRecord r;
      r.utterance_id = item.entry.utterance_id;
      r.claimed_identity = item.entry.speaker_id;
      r.label = item.entry.label;
      r.strategy = s;
      r.metric = opts.metric;
      r.score = (s == Strategy::cb) ? cb_scores[i] : ms_scores[i];
      report.scores.push_back(std::move(r));
    }
    report.metrics.push_back(
        {s, compute_metrics(labeled_scores_from_records(report.scores, s), opts.tdcf)});
  }
  return report;
}

/// Reference-set cardinality sweep under the leave-one-out protocol.
/// For each speaker one seed-deterministic permutation of its real
/// utterances is drawn; the size-k reference set of a test item is the
/// first k entries of that permutation (excluding the item itself), so
/// subsets are nested across sizes. Identities with fewer than k real
/// utterances are skipped at that size, with a warning.
inline ExperimentReport refset_size_sweep(const std::vector<ManifestEntry>& manifest,
                                          const std::vector<int>& sizes,
                                          EmbeddingSource& source,
                                          const EvaluationOptions& opts,
                                          std::uint64_t subset_seed) {
  opts.validate();
  validate_manifest(manifest);

  ExperimentReport report;
  report.seed = subset_seed;
  if (sizes.empty()) return report;
  for (int k : sizes) {
    if (k < 1) throw ConfigError("refset_size_sweep: sizes must be >= 1");
  }

  const auto reals = detail::real_utterances_by_speaker(manifest);
  std::map<std::string, std::vector<std::string>> perms;
  for (const auto& [speaker, ids] : reals) {
    std::vector<std::string> perm = ids;
    Rng rng(derive_seed(subset_seed, speaker));
    rng.shuffle(perm);
    perms[speaker] = std::move(perm);
  }

  // Embeddings do not depend on the sweep size; resolve once.
  std::vector<const ManifestEntry*> all;
  for (const ManifestEntry& e : manifest) all.push_back(&e);
  const auto table = detail::embed_entries(all, source, opts);

  for (int k : sizes) {
    std::vector<const ManifestEntry*> tested;
    std::set<std::string> skipped;
    for (const ManifestEntry& e : manifest) {
      const auto it = reals.find(e.speaker_id);
      const std::size_t available = (it == reals.end()) ? 0 : it->second.size();
      if (available < static_cast<std::size_t>(k)) {
        skipped.insert(e.speaker_id);
        continue;
      }
      tested.push_back(&e);
    }
    for (const std::string& speaker : skipped) {
      report.warnings.push_back("size " + std::to_string(k) + ": identity '" + speaker +
                                "' has fewer real utterances; skipped");
    }
    if (tested.empty()) continue;

    std::vector<double> cb_scores(tested.size()), ms_scores(tested.size());
    detail::parallel_for(tested.size(), opts.workers, [&](std::size_t i) {
      const ManifestEntry& e = *tested[i];
      const auto& perm = perms.at(e.speaker_id);
      std::vector<std::string> refs;
      refs.reserve(static_cast<std::size_t>(k));
      for (const std::string& id : perm) {
        if (static_cast<int>(refs.size()) == k) break;
        if (e.label == Label::real && id == e.utterance_id) continue;
        refs.push_back(id);
      }
      const ReferenceSet rs = detail::materialize(e.speaker_id, refs, table);
      const Embedding& x = table.get(e.utterance_id);
      cb_scores[i] = detail::strategy_score(Strategy::cb, x, rs, opts.metric);
      ms_scores[i] = detail::strategy_score(Strategy::ms, x, rs, opts.metric);
    });

    for (Strategy s : opts.strategies) {
      LabeledScores ls;
      for (std::size_t i = 0; i < tested.size(); ++i) {
        const double score = (s == Strategy::cb) ? cb_scores[i] : ms_scores[i];
        (tested[i]->label == Label::real ? ls.real_scores : ls.fake_scores).push_back(score);
      }
      report.curve.push_back({s, static_cast<double>(k), auc(ls)});
    }
  }
  return report;
}

/// AUC as a function of the mixing SNR. Test audio is remixed at each
/// SNR point before embedding; reference embeddings are computed once
/// from clean audio and reused at every point. The per-utterance noise
/// draw is fixed across SNR points, so only the mixing gain varies.
inline ExperimentReport robustness_sweep(const std::vector<ManifestEntry>& manifest,
                                         const std::vector<double>& snr_points_db,
                                         const NoiseMixSpec& noise,
                                         const ReferencePolicy& policy,
                                         EmbeddingSource& source,
                                         const EvaluationOptions& opts) {
  opts.validate();
  if (!source.is_audio_backed()) {
    throw ConfigError("robustness_sweep requires an audio-backed embedding source");
  }
  const ReferencePlan plan = build_reference_sets(manifest, policy);
  const auto table = detail::embed_entries(detail::entries_needed(manifest, plan), source, opts);

  ExperimentReport report;
  report.seed = noise.seed;
  if (snr_points_db.empty()) return report;

  Waveform noise_base;
  if (noise.kind == NoiseKind::file) {
    if (noise.path.empty()) throw ConfigError("robustness_sweep: file noise needs a path");
    noise_base = load_wav(noise.path);
  }

  // Clean reference sets, shared across all SNR points.
  std::vector<std::shared_ptr<const ReferenceSet>> ref_sets(plan.items.size());
  std::map<std::string, std::shared_ptr<const ReferenceSet>> shared_sets;
  for (std::size_t i = 0; i < plan.items.size(); ++i) {
    const auto& item = plan.items[i];
    if (policy.kind == ReferencePolicyKind::fixed_list) {
      auto& slot = shared_sets[item.entry.speaker_id];
      if (!slot) {
        slot = std::make_shared<const ReferenceSet>(
            detail::materialize(item.entry.speaker_id, item.reference_ids, table));
      }
      ref_sets[i] = slot;
    } else {
      ref_sets[i] = std::make_shared<const ReferenceSet>(
          detail::materialize(item.entry.speaker_id, item.reference_ids, table));
    }
  }

  for (double snr_db : snr_points_db) {
    std::vector<double> cb_scores(plan.items.size()), ms_scores(plan.items.size());
    detail::parallel_for(plan.items.size(), opts.workers, [&](std::size_t i) {
      const auto& item = plan.items[i];
      const Waveform clean = source.canonical_waveform(item.entry.path);
      const std::uint64_t utt_seed = derive_seed(noise.seed, item.entry.utterance_id);
      Waveform component;
      if (noise.kind == NoiseKind::file) {
        Waveform n = noise_base;
        if (n.sample_rate_hz != clean.sample_rate_hz) n = resample(n, clean.sample_rate_hz);
        component = prepare_noise_excerpt(n, clean.samples.size(), utt_seed);
      } else {
        component = gen_noise(noise.kind, clean.samples.size(), clean.sample_rate_hz, utt_seed);
      }
      Embedding x = source.embed_waveform(mix_at_snr(clean, component, snr_db).mixed);
      if (opts.normalize_effective()) x = l2_normalize(x);
      cb_scores[i] = detail::strategy_score(Strategy::cb, x, *ref_sets[i], opts.metric);
      ms_scores[i] = detail::strategy_score(Strategy::ms, x, *ref_sets[i], opts.metric);
    });

    for (Strategy s : opts.strategies) {
      LabeledScores ls;
      for (std::size_t i = 0; i < plan.items.size(); ++i) {
        const double score = (s == Strategy::cb) ? cb_scores[i] : ms_scores[i];
        (plan.items[i].entry.label == Label::real ? ls.real_scores : ls.fake_scores)
            .push_back(score);
      }
      report.curve.push_back({s, snr_db, auc(ls)});
    }
  }
  return report;
}

inline nlohmann::json to_json(const ExperimentReport& r) {
  nlohmann::json metrics = nlohmann::json::object();
  for (const StrategyMetrics& m : r.metrics) {
    metrics[to_string(m.strategy)] = to_json(m.report);
  }
  nlohmann::json curve = nlohmann::json::array();
  for (const SweepPoint& p : r.curve) {
    curve.push_back({{"strategy", to_string(p.strategy)}, {"x", p.x}, {"auc", p.auc}});
  }
  return nlohmann::json{{"fingerprint", r.config_fingerprint}, {"seed", r.seed},
                        {"config", r.config},   {"metrics", metrics},
                        {"curve", curve},       {"warnings", r.warnings},
                        {"n_scores", r.scores.size()}};
}

inline void write_sweep_csv(const ExperimentReport& report, const std::string& x_name,
                            const std::string& path) {
  std::ostringstream out;
  out << "strategy," << x_name << ",auc\n";
  for (const SweepPoint& p : report.curve) {
    out << to_string(p.strategy) << ',' << detail::format_double(p.x) << ','
        << detail::format_double(p.auc) << '\n';
  }
  detail::write_file_bytes(path, out.str());
}

}  // namespace poivox

#endif  // POIVOX_PROTOCOL_HPP_
