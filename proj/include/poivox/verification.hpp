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

#ifndef POIVOX_VERIFICATION_HPP_
#define POIVOX_VERIFICATION_HPP_

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "poivox/embedding.hpp"
#include "poivox/error.hpp"

namespace poivox {

/// Both kinds are oriented so that a higher value means "more similar":
/// the squared Euclidean distance is negated into a similarity.
enum class SimilarityMetric { cosine, neg_sq_euclidean };

inline std::string to_string(SimilarityMetric m) {
  return m == SimilarityMetric::cosine ? "cosine" : "neg-sq-euclid";
}

inline SimilarityMetric similarity_metric_from_string(const std::string& s) {
  if (s == "cosine") return SimilarityMetric::cosine;
  if (s == "neg-sq-euclid") return SimilarityMetric::neg_sq_euclidean;
  throw ConfigError("unknown similarity metric '" + s + "' (cosine | neg-sq-euclid)");
}

/// cosine -> a.b / (|a||b|) in [-1, 1]; neg-sq-euclidean -> -|a-b|^2 in
/// (-inf, 0].
inline double similarity(const Embedding& a, const Embedding& b, SimilarityMetric m) {
  if (a.dim() != b.dim()) {
    throw DataError("similarity: dimension mismatch (" + std::to_string(a.dim()) +
                    " vs " + std::to_string(b.dim()) + ")");
  }
  if (m == SimilarityMetric::cosine) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int i = 0; i < a.dim(); ++i) {
      dot += a.values[static_cast<std::size_t>(i)] * b.values[static_cast<std::size_t>(i)];
      na += a.values[static_cast<std::size_t>(i)] * a.values[static_cast<std::size_t>(i)];
      nb += b.values[static_cast<std::size_t>(i)] * b.values[static_cast<std::size_t>(i)];
    }
    if (na == 0.0 || nb == 0.0) throw DataError("similarity: zero vector under cosine");
    return dot / (std::sqrt(na) * std::sqrt(nb));
  }
  double sq = 0.0;
  for (int i = 0; i < a.dim(); ++i) {
    const double d = a.values[static_cast<std::size_t>(i)] - b.values[static_cast<std::size_t>(i)];
    sq += d * d;
  }
  return -sq;
}

/// Elementwise arithmetic mean of the member embeddings.
inline Embedding compute_centroid(const std::vector<Embedding>& members) {
  if (members.empty()) throw DataError("compute_centroid: empty reference set");
  const int dim = members.front().dim();
  Embedding c;
  c.values.assign(static_cast<std::size_t>(dim), 0.0);
  for (const Embedding& m : members) {
    if (m.dim() != dim) throw DataError("compute_centroid: dimension mismatch among members");
    for (int i = 0; i < dim; ++i) c.values[static_cast<std::size_t>(i)] += m.values[static_cast<std::size_t>(i)];
  }
  for (double& v : c.values) v /= static_cast<double>(members.size());
  return c;
}

/// Claimed identity plus its pristine-audio embeddings. Immutable after
/// construction; the centroid is computed once and cached.
class ReferenceSet {
 public:
  ReferenceSet(std::string identity, std::vector<Embedding> members)
      : identity_(std::move(identity)), members_(std::move(members)) {
    if (members_.empty()) {
      throw DataError("reference set for '" + identity_ + "' is empty");
    }
    centroid_ = compute_centroid(members_);
  }

  const std::string& identity() const { return identity_; }
  const std::vector<Embedding>& members() const { return members_; }
  const Embedding& centroid() const { return centroid_; }
  std::size_t size() const { return members_.size(); }

 private:
  std::string identity_;
  std::vector<Embedding> members_;
  Embedding centroid_;
};

inline Embedding compute_centroid(const ReferenceSet& rs) { return rs.centroid(); }

/// Centroid-Based decision statistic: similarity of the test embedding
/// to the mean of the reference embeddings.
inline double cb_score(const Embedding& x, const ReferenceSet& rs, SimilarityMetric m) {
  return similarity(x, rs.centroid(), m);
}

/// Maximum-Similarity decision statistic: the best similarity of the
/// test embedding over all reference embeddings.
inline double ms_score(const Embedding& x, const ReferenceSet& rs, SimilarityMetric m) {
  double best = -std::numeric_limits<double>::infinity();
  for (const Embedding& r : rs.members()) {
    best = std::max(best, similarity(x, r, m));
  }
  return best;
}

enum class Label { real, fake };

inline std::string to_string(Label l) { return l == Label::real ? "real" : "fake"; }

inline Label label_from_string(const std::string& s) {
  if (s == "real") return Label::real;
  if (s == "fake") return Label::fake;
  throw FormatError("unknown label '" + s + "' (real | fake)");
}

/// fake iff the score is strictly below the threshold.
inline Label decide(double score, double threshold) {
  return score < threshold ? Label::fake : Label::real;
}

enum class Strategy { cb, ms };

inline std::string to_string(Strategy s) { return s == Strategy::cb ? "CB" : "MS"; }

inline Strategy strategy_from_string(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "cb") return Strategy::cb;
  if (s == "ms") return Strategy::ms;
  throw ConfigError("unknown strategy '" + s + "' (cb | ms)");
}

/// One decision statistic for one test utterance under one strategy.
struct ScoreRecord {
  std::string utterance_id;
  std::string claimed_identity;
  Label label = Label::real;
  Strategy strategy = Strategy::cb;
  SimilarityMetric metric = SimilarityMetric::cosine;
  double score = 0.0;
};

inline constexpr const char* kScoreCsvHeader =
    "utterance_id,claimed_identity,label,strategy,metric,score";

inline void write_score_csv(const std::vector<ScoreRecord>& records, const std::string& path) {
  std::ostringstream out;
  out << kScoreCsvHeader << '\n';
  for (const ScoreRecord& r : records) {
    out << r.utterance_id << ',' << r.claimed_identity << ',' << to_string(r.label) << ','
        << to_string(r.strategy) << ',' << to_string(r.metric) << ','
        << detail::format_double(r.score) << '\n';
  }
  detail::write_file_bytes(path, out.str());
}

inline std::vector<ScoreRecord> read_score_csv(const std::string& path) {
  if (!std::filesystem::exists(path)) throw IoError("no such file: " + path);
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line) || line != kScoreCsvHeader) {
    throw FormatError("score csv: missing or bad header: " + path);
  }
  std::vector<ScoreRecord> records;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string context = path + ":" + std::to_string(lineno);
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 6) throw FormatError(context + ": expected 6 fields");
    ScoreRecord r;
    r.utterance_id = fields[0];
    r.claimed_identity = fields[1];
    r.label = label_from_string(fields[2]);
    r.strategy = strategy_from_string(fields[3]);
    r.metric = similarity_metric_from_string(fields[4]);
    r.score = detail::parse_double(fields[5], context);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace poivox

#endif  // POIVOX_VERIFICATION_HPP_
