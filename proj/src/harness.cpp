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

#include "strec/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <utility>

#include "strec/models.hpp"

namespace strec {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& message) {
  throw std::invalid_argument(message);
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

void write_text_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
  if (!out) throw std::runtime_error("short write to " + path.string());
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  json j;
  in >> j;
  return j;
}

// Runs a list of arms, deduplicating identical specs so concurrent arms
// never touch the same run directory. Results come back in arm order.
std::vector<RunResult> run_arms(const std::vector<ExperimentSpec>& arms,
                                const std::filesystem::path& out_root,
                                bool force, int parallel) {
  if (parallel < 1) fail("parallel must be >= 1");
  for (const ExperimentSpec& arm : arms) validate_spec(arm);

  // Arms share dataset files; read each path once.
  std::map<std::string, Dataset> cache;
  for (const ExperimentSpec& arm : arms) {
    for (const std::string& path : {arm.train_data, arm.eval_data})
      if (!cache.count(path)) cache.emplace(path, load_dataset(path));
  }

  std::vector<std::size_t> unique;  // first arm index per distinct hash
  std::vector<std::size_t> source(arms.size());
  std::map<std::uint64_t, std::size_t> seen;
  for (std::size_t i = 0; i < arms.size(); ++i) {
    const std::uint64_t h = spec_hash(arms[i]);
    auto [it, inserted] = seen.emplace(h, unique.size());
    if (inserted) unique.push_back(i);
    source[i] = it->second;
  }

  std::vector<RunResult> done(unique.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t slot = next.fetch_add(1);
      if (slot >= unique.size()) return;
      try {
        const ExperimentSpec& arm = arms[unique[slot]];
        done[slot] = run_experiment_on(arm, cache.at(arm.train_data),
                                       cache.at(arm.eval_data), out_root, force);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  if (parallel == 1 || unique.size() == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const std::size_t n = std::min<std::size_t>(parallel, unique.size());
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::vector<RunResult> results(arms.size());
  for (std::size_t i = 0; i < arms.size(); ++i) {
    results[i] = done[source[i]];
    results[i].label = arms[i].label;
    if (unique[source[i]] != i) results[i].skipped = true;
  }
  return results;
}

std::size_t row_index_by_hash(const std::vector<RunResult>& rows, std::uint64_t hash) {
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].hash == hash) return i;
  return 0;
}

std::string format_num(double v, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return std::string(buf);
}

std::string format_opt(const std::optional<double>& v, const char* fmt) {
  return v.has_value() ? format_num(*v, fmt) : "-";
}

}  // namespace

void validate_spec(const ExperimentSpec& spec) {
  std::vector<std::string> problems;
  if (spec.label.empty()) problems.push_back("label must be non-empty");
  if (spec.train_data.empty()) problems.push_back("train_data path must be non-empty");
  if (spec.eval_data.empty()) problems.push_back("eval_data path must be non-empty");
  try {
    validate_train_config(spec.train);
  } catch (const std::invalid_argument& e) {
    problems.push_back(e.what());
  }
  if (!problems.empty()) fail("experiment spec: " + join(problems, "; "));
}

ordered_json spec_to_json(const ExperimentSpec& spec) {
  ordered_json j;
  j["label"] = spec.label;
  j["train_data"] = spec.train_data;
  j["eval_data"] = spec.eval_data;
  j["train"] = train_config_to_json(spec.train);
  return j;
}

ExperimentSpec spec_from_json(const json& j, std::vector<std::string>* errors) {
  ExperimentSpec spec;
  std::vector<std::string> local;
  std::vector<std::string>& errs = errors ? *errors : local;

  if (!j.is_object()) {
    errs.push_back("experiment spec must be a JSON object");
  } else {
    for (const auto& [key, value] : j.items()) {
      (void)value;
      if (key != "label" && key != "train_data" && key != "eval_data" && key != "train")
        errs.push_back("unknown spec field '" + key + "'");
    }
    auto get_string = [&](const char* key, std::string fallback) -> std::string {
      if (!j.contains(key)) return fallback;
      if (!j.at(key).is_string()) {
        errs.push_back(std::string(key) + " must be a string");
        return fallback;
      }
      return j.at(key).get<std::string>();
    };
    spec.label = get_string("label", spec.label);
    spec.train_data = get_string("train_data", spec.train_data);
    spec.eval_data = get_string("eval_data", spec.eval_data);
    if (j.contains("train")) spec.train = train_config_from_json(j.at("train"), &errs);
  }

  if (spec.label.empty()) errs.push_back("label must be non-empty");
  if (spec.train_data.empty()) errs.push_back("train_data path must be non-empty");
  if (spec.eval_data.empty()) errs.push_back("eval_data path must be non-empty");
  if (!errors && !errs.empty()) fail("experiment spec: " + join(errs, "; "));
  return spec;
}

std::uint64_t spec_hash(const ExperimentSpec& spec) {
  return fnv1a64(spec_to_json(spec).dump());
}

std::string spec_hash_hex(const ExperimentSpec& spec) {
  return hex16(spec_hash(spec));
}

RunResult load_run(const std::filesystem::path& run_dir) {
  const json j = read_json_file(run_dir / "report.json");
  RunResult r;
  r.run_dir = run_dir;
  r.label = j.at("label").get<std::string>();
  r.hash = std::stoull(j.at("spec_hash").get<std::string>(), nullptr, 16);
  r.wall_seconds = j.at("wall_seconds").get<double>();
  r.report = eval_report_from_json(j.at("report"));
  r.skipped = true;
  return r;
}

std::vector<RunResult> load_runs(const std::filesystem::path& out_root) {
  if (!std::filesystem::is_directory(out_root))
    throw std::runtime_error("no run directory at " + out_root.string());
  std::vector<RunResult> runs;
  for (const auto& entry : std::filesystem::directory_iterator(out_root)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "report.json"))
      runs.push_back(load_run(entry.path()));
  }
  std::sort(runs.begin(), runs.end(), [](const RunResult& a, const RunResult& b) {
    return a.label != b.label ? a.label < b.label : a.hash < b.hash;
  });
  return runs;
}

RunResult run_experiment(const ExperimentSpec& spec,
                         const std::filesystem::path& out_root, bool force) {
  validate_spec(spec);
  const Dataset train_data = load_dataset(spec.train_data);
  const Dataset eval_data = load_dataset(spec.eval_data);
  return run_experiment_on(spec, train_data, eval_data, out_root, force);
}

RunResult run_experiment_on(const ExperimentSpec& spec, const Dataset& train_data,
                            const Dataset& eval_data,
                            const std::filesystem::path& out_root, bool force) {
  validate_spec(spec);
  const std::uint64_t hash = spec_hash(spec);
  const std::filesystem::path run_dir = out_root / hex16(hash);

  if (!force && std::filesystem::exists(run_dir / "report.json")) {
    RunResult r = load_run(run_dir);
    r.label = spec.label;
    return r;
  }

  std::filesystem::create_directories(run_dir);
  const auto t0 = std::chrono::steady_clock::now();
  const TrainResult trained = train(spec.train, train_data, eval_data);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - t0;

  RunResult r;
  r.run_dir = run_dir;
  r.label = spec.label;
  r.hash = hash;
  r.report = trained.eval;
  r.wall_seconds = elapsed.count();

  write_text_file(run_dir / "spec.json", spec_to_json(spec).dump(2) + "\n");
  trained.model.save((run_dir / "model.ckpt").string());
  save_history(run_dir / "history.jsonl", trained.history);
  ordered_json report;
  report["label"] = spec.label;
  report["spec_hash"] = hex16(hash);
  report["wall_seconds"] = r.wall_seconds;
  report["report"] = eval_report_to_json(r.report);
  write_text_file(run_dir / "report.json", report.dump(2) + "\n");
  return r;
}

std::optional<double> ComparisonTable::delta_auc(std::size_t row) const {
  const std::optional<double>& a = rows.at(anchor).report.auc;
  const std::optional<double>& v = rows.at(row).report.auc;
  if (!a.has_value() || !v.has_value() || *a == 0.0) return std::nullopt;
  return (*v - *a) / *a;
}

std::optional<double> ComparisonTable::delta_gauc(std::size_t row) const {
  const std::optional<double>& a = rows.at(anchor).report.gauc.value;
  const std::optional<double>& v = rows.at(row).report.gauc.value;
  if (!a.has_value() || !v.has_value() || *a == 0.0) return std::nullopt;
  return (*v - *a) / *a;
}

std::string table_to_text(const ComparisonTable& table) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"label", "auc", "gauc", "logloss", "ndcg", "d_auc", "d_gauc",
                   "wall_s", "run"});
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const RunResult& r = table.rows[i];
    cells.push_back({r.label + (i == table.anchor ? " *" : ""),
                     format_opt(r.report.auc, "%.6f"),
                     format_opt(r.report.gauc.value, "%.6f"),
                     format_num(r.report.logloss, "%.6f"),
                     format_opt(r.report.ndcg.value, "%.6f"),
                     format_opt(table.delta_auc(i), "%+.4f"),
                     format_opt(table.delta_gauc(i), "%+.4f"),
                     format_num(r.wall_seconds, "%.2f"), hex16(r.hash)});
  }
  std::vector<std::size_t> width(cells[0].size(), 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c)
      width[c] = std::max(width[c], row[c].size());
  std::ostringstream out;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << row[c] << std::string(width[c] - row[c].size(), ' ');
      out << (c + 1 == row.size() ? "\n" : "  ");
    }
  }
  return out.str();
}

std::string table_to_jsonl(const ComparisonTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const RunResult& r = table.rows[i];
    ordered_json j;
    j["label"] = r.label;
    j["spec_hash"] = hex16(r.hash);
    j["anchor"] = i == table.anchor;
    j["auc"] = r.report.auc.has_value() ? json(*r.report.auc) : json(nullptr);
    j["gauc"] = r.report.gauc.value.has_value() ? json(*r.report.gauc.value) : json(nullptr);
    j["logloss"] = r.report.logloss;
    j["ndcg"] = r.report.ndcg.value.has_value() ? json(*r.report.ndcg.value) : json(nullptr);
    const std::optional<double> da = table.delta_auc(i);
    const std::optional<double> dg = table.delta_gauc(i);
    j["delta_auc"] = da.has_value() ? json(*da) : json(nullptr);
    j["delta_gauc"] = dg.has_value() ? json(*dg) : json(nullptr);
    j["wall_seconds"] = r.wall_seconds;
    j["skipped"] = r.skipped;
    out += j.dump() + "\n";
  }
  return out;
}

const std::vector<std::string>& ablation_tokens() {
  static const std::vector<std::string> tokens = {
      "hour", "time_period", "week", "geohash", "city", "aoi",
      "ct",   "us",          "it",   "sq",      "bias_net"};
  return tokens;
}

ExperimentSpec toggle_features(const ExperimentSpec& base,
                               const std::vector<std::string>& flips) {
  ExperimentSpec spec = base;
  ModelConfig& m = spec.train.model;
  std::vector<std::string> parts;
  for (const std::string& token : flips) {
    bool now = false;
    bool known = false;
    for (int slot = 0; slot < kContextSlots; ++slot) {
      if (token == context_slot_name(slot)) {
        m.context_features[slot] = !m.context_features[slot];
        now = m.context_features[slot];
        known = true;
      }
    }
    if (token == "ct") { m.destinations.ct = !m.destinations.ct; now = m.destinations.ct; known = true; }
    if (token == "us") { m.destinations.us = !m.destinations.us; now = m.destinations.us; known = true; }
    if (token == "it") { m.destinations.it = !m.destinations.it; now = m.destinations.it; known = true; }
    if (token == "sq") { m.destinations.sq = !m.destinations.sq; now = m.destinations.sq; known = true; }
    if (token == "bias_net") { m.use_bias_net = !m.use_bias_net; now = m.use_bias_net; known = true; }
    if (!known)
      fail("unknown toggle '" + token + "'; expected one of " +
           join(ablation_tokens(), ", "));
    parts.push_back((now ? "+" : "-") + token);
  }
  if (!parts.empty()) spec.label = base.label + " " + join(parts, " ");
  return spec;
}

ComparisonTable ablation_suite(const ExperimentSpec& base,
                               const std::vector<std::vector<std::string>>& toggle_sets,
                               const std::filesystem::path& out_root, bool force,
                               int parallel) {
  if (toggle_sets.empty()) fail("ablation: empty toggle set");
  std::vector<ExperimentSpec> arms;
  std::uint64_t anchor_hash = 0;
  bool have_anchor = false;
  for (const std::vector<std::string>& flips : toggle_sets) {
    arms.push_back(toggle_features(base, flips));
    const auto& mask = arms.back().train.model.context_features;
    const bool no_context =
        std::none_of(mask.begin(), mask.end(), [](bool b) { return b; });
    if (no_context && !have_anchor) {
      anchor_hash = spec_hash(arms.back());
      have_anchor = true;
    }
  }
  if (!have_anchor) anchor_hash = spec_hash(arms.front());

  ComparisonTable table;
  table.rows = run_arms(arms, out_root, force, parallel);
  std::stable_sort(table.rows.begin(), table.rows.end(),
                   [](const RunResult& a, const RunResult& b) {
                     return a.report.auc.value_or(0.0) > b.report.auc.value_or(0.0);
                   });
  table.anchor = row_index_by_hash(table.rows, anchor_hash);
  return table;
}

ComparisonTable sequence_suite(const ExperimentSpec& base,
                               const std::filesystem::path& out_root, bool force,
                               int parallel) {
  static const EncoderArm kArms[] = {EncoderArm::kMeanPool,     EncoderArm::kMhta,
                                     EncoderArm::kSelfAttnMhta, EncoderArm::kGru,
                                     EncoderArm::kMhtaTimeDiff, EncoderArm::kSelfAttnPosEnc};
  std::vector<ExperimentSpec> arms;
  std::uint64_t anchor_hash = 0;
  for (EncoderArm arm : kArms) {
    ExperimentSpec spec = base;
    spec.train.model.encoder = arm;
    spec.label = to_string(arm);
    arms.push_back(spec);
    if (arm == base.train.model.encoder) anchor_hash = spec_hash(spec);
  }
  ComparisonTable table;
  table.rows = run_arms(arms, out_root, force, parallel);
  table.anchor = row_index_by_hash(table.rows, anchor_hash);
  return table;
}

ComparisonTable k_sweep(const ExperimentSpec& base, const std::vector<int>& ks,
                        const std::filesystem::path& out_root, bool force,
                        int parallel) {
  if (ks.empty()) fail("k sweep: empty k list");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] < 1 || ks[i] > kContextSlots)
      fail("k sweep: k=" + std::to_string(ks[i]) + " outside 1..6");
    for (std::size_t j = 0; j < i; ++j)
      if (ks[j] == ks[i]) fail("k sweep: duplicate k=" + std::to_string(ks[i]));
  }
  std::vector<ExperimentSpec> arms;
  std::uint64_t anchor_hash = 0;
  bool have_anchor = false;
  for (int k : ks) {
    ExperimentSpec spec = base;
    spec.train.model.model = ModelKind::kDcam;
    spec.train.model.k = k;
    spec.label = "k=" + std::to_string(k);
    arms.push_back(spec);
    if (k == base.train.model.k) {
      anchor_hash = spec_hash(spec);
      have_anchor = true;
    }
  }
  if (!have_anchor) anchor_hash = spec_hash(arms.front());
  ComparisonTable table;
  table.rows = run_arms(arms, out_root, force, parallel);
  table.anchor = row_index_by_hash(table.rows, anchor_hash);
  return table;
}

}  // namespace strec
