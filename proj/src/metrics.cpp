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

#include "strec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace strec {
namespace {

constexpr double kProbClamp = 1e-15;

void check_lengths(std::size_t scores, std::size_t labels) {
  if (scores == 0) throw std::invalid_argument("metrics: empty input");
  if (scores != labels)
    throw std::invalid_argument("metrics: scores and labels differ in length");
}

void check_labels(const std::vector<int>& labels) {
  for (int y : labels)
    if (y != 0 && y != 1)
      throw std::invalid_argument("metrics: labels must be 0 or 1");
}

void check_finite(const std::vector<double>& scores) {
  for (double s : scores)
    if (!std::isfinite(s))
      throw std::invalid_argument("metrics: scores must be finite");
}

// Indices of `scored` belonging to each group, in ascending group-id order.
std::map<std::uint64_t, std::vector<std::size_t>> group_indices(
    const ScoredSet& scored) {
  std::map<std::uint64_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < scored.scores.size(); ++i)
    groups[scored.group_ids[i]].push_back(i);
  return groups;
}

nlohmann::ordered_json grouped_to_json(const GroupedMetric& m) {
  nlohmann::ordered_json j;
  if (m.value)
    j["value"] = *m.value;
  else
    j["value"] = nullptr;
  j["groups_used"] = m.groups_used;
  j["groups_skipped"] = m.groups_skipped;
  return j;
}

GroupedMetric grouped_from_json(const nlohmann::json& j) {
  GroupedMetric m;
  if (!j.at("value").is_null()) m.value = j.at("value").get<double>();
  m.groups_used = j.at("groups_used").get<std::size_t>();
  m.groups_skipped = j.at("groups_skipped").get<std::size_t>();
  return m;
}

std::string format_value(const std::optional<double>& v) {
  if (!v) return "n/a";
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << *v;
  return os.str();
}

}  // namespace

void validate_scored(const ScoredSet& scored, bool need_groups) {
  check_lengths(scored.scores.size(), scored.labels.size());
  check_labels(scored.labels);
  check_finite(scored.scores);
  if (need_groups && scored.group_ids.size() != scored.scores.size())
    throw std::invalid_argument("metrics: group ids missing or wrong length");
}

std::optional<double> auc(const std::vector<double>& scores,
                          const std::vector<int>& labels) {
  check_lengths(scores.size(), labels.size());
  check_labels(labels);
  check_finite(scores);

  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  // Average 1-based ranks across runs of tied scores, then sum the ranks of
  // the positives. With 0.5 tie credit this equals wins + ties/2.
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t r = i; r < j; ++r) {
      if (labels[order[r]] == 1) {
        positive_rank_sum += avg_rank;
        ++positives;
      }
    }
    i = j;
  }

  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) return std::nullopt;

  const double p = static_cast<double>(positives);
  const double u = positive_rank_sum - p * (p + 1.0) * 0.5;
  return u / (p * static_cast<double>(negatives));
}

GroupedMetric gauc(const ScoredSet& scored) {
  validate_scored(scored, true);

  GroupedMetric result;
  double weighted_sum = 0.0;
  double weight_total = 0.0;
  for (const auto& [gid, idx] : group_indices(scored)) {
    std::vector<double> s(idx.size());
    std::vector<int> y(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
      s[r] = scored.scores[idx[r]];
      y[r] = scored.labels[idx[r]];
    }
    const auto group_auc = auc(s, y);
    if (!group_auc) {
      ++result.groups_skipped;
      continue;
    }
    const double w = static_cast<double>(idx.size());
    weighted_sum += w * *group_auc;
    weight_total += w;
    ++result.groups_used;
  }
  if (result.groups_used > 0) result.value = weighted_sum / weight_total;
  return result;
}

double logloss(const std::vector<double>& probs, const std::vector<int>& labels) {
  check_lengths(probs.size(), labels.size());
  check_labels(labels);
  for (double p : probs)
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("metrics: logloss expects probabilities in [0, 1]");

  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], kProbClamp, 1.0 - kProbClamp);
    total += labels[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
  }
  return total / static_cast<double>(probs.size());
}

GroupedMetric ndcg(const ScoredSet& scored, int k) {
  validate_scored(scored, true);
  if (k < 1) throw std::invalid_argument("metrics: ndcg k must be >= 1");

  GroupedMetric result;
  double total = 0.0;
  for (const auto& [gid, idx] : group_indices(scored)) {
    std::vector<std::size_t> order = idx;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return scored.scores[a] > scored.scores[b];
                     });

    // Binary gain 2^label - 1 is 1 for clicks and 0 otherwise, so only the
    // k highest-ranked positives contribute, each discounted at its actual
    // 1-based rank.
    int counted = 0;
    double dcg = 0.0;
    int positives = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      if (scored.labels[order[rank]] != 1) continue;
      ++positives;
      if (counted < k) {
        dcg += 1.0 / std::log2(static_cast<double>(rank) + 2.0);
        ++counted;
      }
    }
    if (positives == 0) {
      ++result.groups_skipped;
      continue;
    }
    double ideal = 0.0;
    const int ideal_count = std::min(positives, k);
    for (int r = 0; r < ideal_count; ++r)
      ideal += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    total += dcg / ideal;
    ++result.groups_used;
  }
  if (result.groups_used > 0)
    result.value = total / static_cast<double>(result.groups_used);
  return result;
}

EvalReport evaluate(const ScoredSet& scored, int ndcg_k, std::string group_key) {
  validate_scored(scored, true);

  EvalReport report;
  report.samples = scored.scores.size();
  report.group_key = std::move(group_key);
  report.ndcg_k = ndcg_k;
  report.auc = auc(scored.scores, scored.labels);
  report.logloss = logloss(scored.scores, scored.labels);
  report.gauc = gauc(scored);
  report.ndcg = ndcg(scored, ndcg_k);
  return report;
}

nlohmann::ordered_json eval_report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["samples"] = report.samples;
  j["group_key"] = report.group_key;
  if (report.auc)
    j["auc"] = *report.auc;
  else
    j["auc"] = nullptr;
  j["logloss"] = report.logloss;
  j["gauc"] = grouped_to_json(report.gauc);
  j["ndcg"] = grouped_to_json(report.ndcg);
  j["ndcg"]["k"] = report.ndcg_k;
  return j;
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
  EvalReport report;
  report.samples = j.at("samples").get<std::size_t>();
  report.group_key = j.at("group_key").get<std::string>();
  if (!j.at("auc").is_null()) report.auc = j.at("auc").get<double>();
  report.logloss = j.at("logloss").get<double>();
  report.gauc = grouped_from_json(j.at("gauc"));
  report.ndcg = grouped_from_json(j.at("ndcg"));
  report.ndcg_k = j.at("ndcg").at("k").get<int>();
  return report;
}

std::string eval_report_to_text(const EvalReport& report) {
  std::ostringstream os;
  const auto row = [&os](const std::string& name, const std::string& value,
                         const std::string& note = "") {
    os << std::left << std::setw(12) << name << value;
    if (!note.empty()) os << "  " << note;
    os << "\n";
  };
  const auto group_note = [](const GroupedMetric& m) {
    std::ostringstream n;
    n << "(groups used " << m.groups_used << ", skipped " << m.groups_skipped
      << ")";
    return n.str();
  };

  row("samples", std::to_string(report.samples));
  row("group key", report.group_key);
  row("auc", format_value(report.auc));
  row("gauc", format_value(report.gauc.value), group_note(report.gauc));
  {
    std::ostringstream v;
    v << std::fixed << std::setprecision(6) << report.logloss;
    row("logloss", v.str());
  }
  row("ndcg@" + std::to_string(report.ndcg_k), format_value(report.ndcg.value),
      group_note(report.ndcg));
  return os.str();
}

}  // namespace strec
