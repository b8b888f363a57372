// Copyright 2026 The strec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef STREC_METRICS_HPP_
#define STREC_METRICS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace strec {

// One scored evaluation set: per-sample model scores, binary click labels,
// and the grouping identifier used by the listwise metrics.
struct ScoredSet {
  std::vector<double> scores;
  std::vector<int> labels;
  std::vector<std::uint64_t> group_ids;
};

// Throws std::invalid_argument on length mismatches, empty input,
// non-binary labels, or non-finite scores. Group ids are only required
// when `need_groups` is set.
void validate_scored(const ScoredSet& scored, bool need_groups);

// Probability that a uniformly random positive outranks a uniformly random
// negative, with ties credited 0.5. Rank-sum formulation, O(n log n).
// Returns nullopt when the input is single-class.
std::optional<double> auc(const std::vector<double>& scores,
                          const std::vector<int>& labels);

// Outcome of a per-group metric: the aggregate value (nullopt when no group
// qualifies) plus how many groups contributed and how many were skipped.
struct GroupedMetric {
  std::optional<double> value;
  std::size_t groups_used = 0;
  std::size_t groups_skipped = 0;
};

// Impression-weighted mean of per-group AUC over groups that contain both
// classes. Single-class groups are skipped and counted. Groups are reduced
// in ascending group-id order.
GroupedMetric gauc(const ScoredSet& scored);

// Mean negative log-likelihood of binary labels under probability scores,
// clamped to [1e-15, 1 - 1e-15] before taking logs. Scores must lie in
// [0, 1]; convert logits upstream.
double logloss(const std::vector<double>& probs, const std::vector<int>& labels);

// Mean normalized discounted cumulative gain over groups with at least one
// positive. Within a group, samples are ranked by descending score (ties
// keep input order); the k highest-ranked positives contribute gain
// (2^label - 1) discounted by log2(rank + 1) at their actual ranks, and the
// ideal places them at ranks 1..min(#positives, k).
GroupedMetric ndcg(const ScoredSet& scored, int k = 10);

// Every offline metric over one scored set, plus the bookkeeping needed to
// interpret the grouped ones.
struct EvalReport {
  std::size_t samples = 0;
  std::string group_key = "user_id";
  int ndcg_k = 10;
  std::optional<double> auc;
  double logloss = 0.0;
  GroupedMetric gauc;
  GroupedMetric ndcg;
};

EvalReport evaluate(const ScoredSet& scored, int ndcg_k = 10,
                    std::string group_key = "user_id");

nlohmann::ordered_json eval_report_to_json(const EvalReport& report);
EvalReport eval_report_from_json(const nlohmann::json& j);

// Aligned two-column text rendering, one metric per line.
std::string eval_report_to_text(const EvalReport& report);

}  // namespace strec

#endif  // STREC_METRICS_HPP_
