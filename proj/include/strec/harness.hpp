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

#ifndef STREC_HARNESS_HPP_
#define STREC_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "strec/metrics.hpp"
#include "strec/training.hpp"

namespace strec {

// One experiment arm: where the data lives plus the full training recipe.
struct ExperimentSpec {
  std::string label = "run";
  std::string train_data;
  std::string eval_data;
  TrainConfig train;
};

// Throws std::invalid_argument listing every violated constraint at once.
void validate_spec(const ExperimentSpec& spec);

nlohmann::ordered_json spec_to_json(const ExperimentSpec& spec);
// Collects every malformed field before throwing; with `errors` given the
// problems are appended there and a default-patched spec returned.
ExperimentSpec spec_from_json(const nlohmann::json& j,
                              std::vector<std::string>* errors = nullptr);

// FNV-1a over the canonical JSON dump; names the run directory, so two
// specs collide exactly when their serialized forms are identical.
std::uint64_t spec_hash(const ExperimentSpec& spec);
std::string spec_hash_hex(const ExperimentSpec& spec);

// Outcome of one run plus where its artifacts were written.
struct RunResult {
  std::filesystem::path run_dir;
  std::string label;
  std::uint64_t hash = 0;
  EvalReport report;
  double wall_seconds = 0.0;
  bool skipped = false;  // a finished run with the same hash was reused
};

// Trains per spec, evaluates, and writes spec.json / model.ckpt /
// history.jsonl / report.json under out_root/<hash>. Run directories are
// append-only: a directory that already holds a report is reused as-is
// unless `force` is set.
RunResult run_experiment(const ExperimentSpec& spec,
                         const std::filesystem::path& out_root,
                         bool force = false);

// Same, with the datasets already in memory; the spec's paths are recorded
// but not read.
RunResult run_experiment_on(const ExperimentSpec& spec, const Dataset& train_data,
                            const Dataset& eval_data,
                            const std::filesystem::path& out_root,
                            bool force = false);

// Reads one finished run back from its directory.
RunResult load_run(const std::filesystem::path& run_dir);
// Every finished run directly under out_root, sorted by label then hash.
std::vector<RunResult> load_runs(const std::filesystem::path& out_root);

// Suite output: one row per arm plus the anchor row the delta columns are
// measured against. Deltas are recomputed from the stored absolute
// metrics, never stored themselves.
struct ComparisonTable {
  std::vector<RunResult> rows;
  std::size_t anchor = 0;

  // (metric - anchor) / anchor; nullopt when either side is missing or the
  // anchor value is zero.
  std::optional<double> delta_auc(std::size_t row) const;
  std::optional<double> delta_gauc(std::size_t row) const;
};

// Aligned text table, one row per run, anchor label marked with '*'.
std::string table_to_text(const ComparisonTable& table);
// Line-delimited JSON, one object per row, delta columns included.
std::string table_to_jsonl(const ComparisonTable& table);

// Mask tokens accepted by ablation toggles: the six context slots by name
// (hour, time_period, week, geohash, city, aoi), the destination fields
// (ct, us, it, sq), and bias_net.
const std::vector<std::string>& ablation_tokens();

// Copy of `base` with the named mask bits flipped and the label suffixed
// with one +token/-token per flip (sign = the bit's new state).
ExperimentSpec toggle_features(const ExperimentSpec& base,
                               const std::vector<std::string>& flips);

// One run per toggle set, each differing from base only in its masks and
// label. Rows come back sorted by descending AUC; the anchor is the row
// with every context feature off when one exists, the base row otherwise.
ComparisonTable ablation_suite(const ExperimentSpec& base,
                               const std::vector<std::vector<std::string>>& toggle_sets,
                               const std::filesystem::path& out_root,
                               bool force = false, int parallel = 1);

// Runs all six encoder arms with otherwise identical specs; rows stay in
// declaration order and the anchor is the arm the base spec already uses.
ComparisonTable sequence_suite(const ExperimentSpec& base,
                               const std::filesystem::path& out_root,
                               bool force = false, int parallel = 1);

// One run per k, the model forced to the context-adaptive kind. ks must be
// distinct values in 1..6; rows stay in ks order and the anchor is the row
// matching the base spec's k when present, the first row otherwise.
ComparisonTable k_sweep(const ExperimentSpec& base, const std::vector<int>& ks,
                        const std::filesystem::path& out_root,
                        bool force = false, int parallel = 1);

}  // namespace strec

#endif  // STREC_HARNESS_HPP_
