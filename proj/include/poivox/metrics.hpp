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

#ifndef POIVOX_METRICS_HPP_
#define POIVOX_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "poivox/error.hpp"
#include "poivox/verification.hpp"

namespace poivox {

/// Scores split by ground truth. Real utterances are expected to score
/// higher than fakes; both lists must be nonempty for any metric.
struct LabeledScores {
  std::vector<double> real_scores;
  std::vector<double> fake_scores;
};

inline LabeledScores labeled_scores_from_records(const std::vector<ScoreRecord>& records,
                                                 Strategy strategy) {
  LabeledScores ls;
  for (const ScoreRecord& r : records) {
    if (r.strategy != strategy) continue;
    (r.label == Label::real ? ls.real_scores : ls.fake_scores).push_back(r.score);
  }
  return ls;
}

struct RocPoint {
  double threshold = 0.0;
  double p_miss = 0.0;  // fraction of real scores < threshold
  double p_fa = 0.0;    // fraction of fake scores >= threshold
};

namespace detail {

inline void require_nonempty(const LabeledScores& ls, const char* op) {
  if (ls.real_scores.empty() || ls.fake_scores.empty()) {
    throw DataError(std::string(op) + ": need at least one real and one fake score");
  }
}

}  // namespace detail

/// Error rates at one decision threshold.
inline RocPoint operating_point(const LabeledScores& ls, double threshold) {
  detail::require_nonempty(ls, "operating_point");
  std::size_t miss = 0, fa = 0;
  for (double s : ls.real_scores) miss += (s < threshold) ? 1 : 0;
  for (double s : ls.fake_scores) fa += (s >= threshold) ? 1 : 0;
  return {threshold, static_cast<double>(miss) / static_cast<double>(ls.real_scores.size()),
          static_cast<double>(fa) / static_cast<double>(ls.fake_scores.size())};
}

/// Exact discrete ROC: one point per distinct observed score plus -inf
/// and +inf sentinels, sorted by threshold. p_miss is nondecreasing and
/// p_fa nonincreasing along the curve.
inline std::vector<RocPoint> roc_curve(const LabeledScores& ls) {
  detail::require_nonempty(ls, "roc_curve");

  std::vector<double> thresholds;
  thresholds.reserve(ls.real_scores.size() + ls.fake_scores.size() + 2);
  thresholds.push_back(-std::numeric_limits<double>::infinity());
  thresholds.insert(thresholds.end(), ls.real_scores.begin(), ls.real_scores.end());
  thresholds.insert(thresholds.end(), ls.fake_scores.begin(), ls.fake_scores.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  std::vector<double> reals = ls.real_scores;
  std::vector<double> fakes = ls.fake_scores;
  std::sort(reals.begin(), reals.end());
  std::sort(fakes.begin(), fakes.end());
  const auto n_real = static_cast<double>(reals.size());
  const auto n_fake = static_cast<double>(fakes.size());

  std::vector<RocPoint> curve;
  curve.reserve(thresholds.size());
  for (double t : thresholds) {
    const auto below_real = static_cast<double>(
        std::lower_bound(reals.begin(), reals.end(), t) - reals.begin());
    const auto below_fake = static_cast<double>(
        std::lower_bound(fakes.begin(), fakes.end(), t) - fakes.begin());
    curve.push_back({t, below_real / n_real, (n_fake - below_fake) / n_fake});
  }
  return curve;
}

/// Area under the ROC curve as the Mann-Whitney pair statistic:
/// (#pairs with real > fake + 0.5 * #ties) / (n_real * n_fake).
inline double auc(const LabeledScores& ls) {
  detail::require_nonempty(ls, "auc");
  std::vector<double> fakes = ls.fake_scores;
  std::sort(fakes.begin(), fakes.end());
  double favorable = 0.0;
  for (double r : ls.real_scores) {
    const auto lo = std::lower_bound(fakes.begin(), fakes.end(), r) - fakes.begin();
    const auto hi = std::upper_bound(fakes.begin(), fakes.end(), r) - fakes.begin();
    favorable += static_cast<double>(lo) + 0.5 * static_cast<double>(hi - lo);
  }
  return favorable /
         (static_cast<double>(ls.real_scores.size()) * static_cast<double>(ls.fake_scores.size()));
}

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

/// Equal error rate on the discrete ROC. When no exact p_miss = p_fa
/// crossing exists on the grid, returns (p_miss + p_fa) / 2 at the
/// threshold minimizing |p_miss - p_fa|, ties broken by the smaller
/// threshold.
inline EerResult eer(const LabeledScores& ls) {
  const std::vector<RocPoint> curve = roc_curve(ls);
  const RocPoint* best = &curve.front();
  for (const RocPoint& p : curve) {
    if (std::abs(p.p_miss - p.p_fa) < std::abs(best->p_miss - best->p_fa)) {
      best = &p;
    }
  }
  return {(best->p_miss + best->p_fa) / 2.0, best->threshold};
}

/// Weights of the detection cost function.
struct TdcfCosts {
  double c_miss = 1.0;
  double c_fa = 1.0;
};

/// Minimum normalized detection cost over all ROC thresholds:
/// min_t (c_miss * p_miss(t) + c_fa * p_fa(t)) / min(c_miss, c_fa).
/// The normalizer is the cost of the better trivial system (accept-all
/// versus reject-all), so the result lies in [0, 1].
inline double min_norm_tdcf(const LabeledScores& ls, const TdcfCosts& costs) {
  if (costs.c_miss <= 0.0 || costs.c_fa <= 0.0) {
    throw ConfigError("min_norm_tdcf: costs must be positive");
  }
  const std::vector<RocPoint> curve = roc_curve(ls);
  double best = std::numeric_limits<double>::infinity();
  for (const RocPoint& p : curve) {
    best = std::min(best, costs.c_miss * p.p_miss + costs.c_fa * p.p_fa);
  }
  return best / std::min(costs.c_miss, costs.c_fa);
}

/// Aggregated threshold-free metrics of one labeled score set.
struct MetricsReport {
  double eer = 0.0;
  double auc = 0.0;
  double min_tdcf = 0.0;
  double eer_threshold = 0.0;
  std::size_t n_real = 0;
  std::size_t n_fake = 0;
};

inline MetricsReport compute_metrics(const LabeledScores& ls, const TdcfCosts& costs = {}) {
  detail::require_nonempty(ls, "compute_metrics");
  MetricsReport report;
  const EerResult e = eer(ls);
  report.eer = e.eer;
  report.eer_threshold = e.threshold;
  report.auc = auc(ls);
  report.min_tdcf = min_norm_tdcf(ls, costs);
  report.n_real = ls.real_scores.size();
  report.n_fake = ls.fake_scores.size();
  return report;
}

inline nlohmann::json to_json(const MetricsReport& r) {
  return nlohmann::json{{"eer", r.eer},
                        {"auc", r.auc},
                        {"min_tdcf", r.min_tdcf},
                        {"eer_threshold", r.eer_threshold},
                        {"n_real", r.n_real},
                        {"n_fake", r.n_fake}};
}

inline void write_roc_csv(const std::vector<RocPoint>& curve, const std::string& path) {
  std::ostringstream out;
  out << "threshold,p_miss,p_fa\n";
  for (const RocPoint& p : curve) {
    out << detail::format_double(p.threshold) << ',' << detail::format_double(p.p_miss)
        << ',' << detail::format_double(p.p_fa) << '\n';
  }
  detail::write_file_bytes(path, out.str());
}

}  // namespace poivox

#endif  // POIVOX_METRICS_HPP_
