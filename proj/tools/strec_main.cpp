/*
 * Copyright 2026 The strec Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "strec/datagen.hpp"
#include "strec/harness.hpp"
#include "strec/models.hpp"
#include "strec/training.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return j;
}

void write_text_file(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << body;
  if (!out) throw IoError("short write to " + path.string());
}

// Options shared by every subcommand that runs experiments.
struct Common {
  std::string config;
  std::string out = "runs";
  std::uint64_t seed = 0;
  bool force = false;
  int parallel = 1;
  CLI::Option* seed_opt = nullptr;

  bool seed_given() const { return seed_opt != nullptr && seed_opt->count() > 0; }
};

void add_common(CLI::App* cmd, Common& c, bool config_required = true) {
  CLI::Option* conf = cmd->add_option("--config", c.config, "JSON config path");
  if (config_required) conf->required();
  cmd->add_option("--out", c.out, "output directory (default runs)");
  c.seed_opt = cmd->add_option("--seed", c.seed, "seed override");
  cmd->add_flag("--force", c.force, "rerun even if a finished run exists");
  cmd->add_option("--parallel", c.parallel, "concurrent experiment arms")
      ->check(CLI::PositiveNumber);
}

void print_run(const strec::RunResult& r) {
  std::printf("%s\n", strec::eval_report_to_text(r.report).c_str());
  std::printf("run_dir   %s%s\n", r.run_dir.string().c_str(),
              r.skipped ? "  (reused)" : "");
  nlohmann::ordered_json line;
  line["label"] = r.label;
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(r.hash));
  line["spec_hash"] = hex;
  line["wall_seconds"] = r.wall_seconds;
  line["skipped"] = r.skipped;
  line["report"] = strec::eval_report_to_json(r.report);
  std::printf("%s\n", line.dump().c_str());
}

void emit_table(const strec::ComparisonTable& table, const fs::path& out_dir,
                const std::string& stem) {
  const std::string text = strec::table_to_text(table);
  const std::string jsonl = strec::table_to_jsonl(table);
  fs::create_directories(out_dir);
  write_text_file(out_dir / (stem + ".txt"), text);
  write_text_file(out_dir / (stem + ".jsonl"), jsonl);
  std::printf("%s", text.c_str());
  std::printf("wrote %s and %s\n", (out_dir / (stem + ".txt")).string().c_str(),
              (out_dir / (stem + ".jsonl")).string().c_str());
}

int run_gen(const Common& c, const std::string& preset_name, std::int64_t n_mc) {
  strec::GenConfig cfg;
  if (!preset_name.empty() && !c.config.empty())
    throw std::invalid_argument("gen takes --config or --preset, not both");
  if (!preset_name.empty()) {
    cfg = strec::preset(preset_name, c.seed);
  } else if (!c.config.empty()) {
    cfg = strec::gen_config_from_json(read_json_file(c.config));
    if (c.seed_given()) cfg.seed = c.seed;
  } else {
    throw std::invalid_argument("gen needs --config or --preset");
  }
  fs::create_directories(c.out);
  const fs::path dataset = fs::path(c.out) / "dataset.jsonl";
  const fs::path manifest = fs::path(c.out) / "manifest.json";
  strec::generate_files(cfg, dataset, manifest, n_mc);
  const json m = read_json_file(manifest.string());
  std::printf("wrote %s (%lld impressions, ctr %.4f, bayes_auc %.4f)\n",
              dataset.string().c_str(),
              static_cast<long long>(m.at("n_impressions").get<std::int64_t>()),
              m.at("empirical_ctr").get<double>(),
              m.at("bayes_auc").at("value").get<double>());
  return 0;
}

int run_train(const Common& c) {
  strec::ExperimentSpec spec = strec::spec_from_json(read_json_file(c.config));
  if (c.seed_given()) spec.train.seed = c.seed;
  const strec::RunResult r = strec::run_experiment(spec, c.out, c.force);
  print_run(r);
  return 0;
}

int run_eval(const Common& c) {
  const json j = read_json_file(c.config);
  std::vector<std::string> errors;
  if (!j.is_object()) {
    errors.push_back("eval config must be a JSON object");
  } else {
    for (const auto& [key, value] : j.items()) {
      (void)value;
      if (key != "checkpoint" && key != "data" && key != "ndcg_k")
        errors.push_back("unknown eval field '" + key + "'");
    }
    if (!j.contains("checkpoint") || !j.at("checkpoint").is_string())
      errors.push_back("checkpoint must be a string path");
    if (!j.contains("data") || !j.at("data").is_string())
      errors.push_back("data must be a string path");
    if (j.contains("ndcg_k") && !j.at("ndcg_k").is_number_integer())
      errors.push_back("ndcg_k must be an integer");
  }
  if (!errors.empty()) {
    std::string all = "eval config: ";
    for (std::size_t i = 0; i < errors.size(); ++i)
      all += (i ? "; " : "") + errors[i];
    throw std::invalid_argument(all);
  }
  const strec::Model model = strec::Model::load(j.at("checkpoint").get<std::string>());
  const strec::Dataset data = strec::load_dataset(j.at("data").get<std::string>());
  const int ndcg_k = j.value("ndcg_k", 10);
  const strec::EvalReport report = strec::evaluate_model(model, data, ndcg_k);
  std::printf("%s\n", strec::eval_report_to_text(report).c_str());
  std::printf("%s\n", strec::eval_report_to_json(report).dump().c_str());
  return 0;
}

int run_ablate(const Common& c) {
  const json j = read_json_file(c.config);
  if (!j.is_object() || !j.contains("spec"))
    throw std::invalid_argument("ablate config needs a 'spec' object");
  const strec::ExperimentSpec base = [&] {
    strec::ExperimentSpec spec = strec::spec_from_json(j.at("spec"));
    return spec;
  }();
  strec::ExperimentSpec spec = base;
  if (c.seed_given()) spec.train.seed = c.seed;

  std::vector<std::vector<std::string>> toggles;
  if (j.contains("toggles")) {
    if (!j.at("toggles").is_array())
      throw std::invalid_argument("toggles must be an array of string arrays");
    for (const json& set : j.at("toggles")) {
      if (!set.is_array())
        throw std::invalid_argument("toggles must be an array of string arrays");
      std::vector<std::string> flips;
      for (const json& tok : set) {
        if (!tok.is_string())
          throw std::invalid_argument("toggle entries must be strings");
        flips.push_back(tok.get<std::string>());
      }
      toggles.push_back(std::move(flips));
    }
  } else {
    // Default study: the base mask, each single-feature removal, no context.
    toggles.push_back({});
    std::vector<std::string> all;
    for (int slot = 0; slot < strec::kContextSlots; ++slot) {
      toggles.push_back({strec::context_slot_name(slot)});
      all.push_back(strec::context_slot_name(slot));
    }
    toggles.push_back(all);
  }

  const strec::ComparisonTable table =
      strec::ablation_suite(spec, toggles, c.out, c.force, c.parallel);
  emit_table(table, c.out, "ablation");
  return 0;
}

int run_seq_suite(const Common& c) {
  strec::ExperimentSpec spec = strec::spec_from_json(read_json_file(c.config));
  if (c.seed_given()) spec.train.seed = c.seed;
  const strec::ComparisonTable table =
      strec::sequence_suite(spec, c.out, c.force, c.parallel);
  emit_table(table, c.out, "sequence");
  return 0;
}

int run_k_sweep(const Common& c) {
  const json j = read_json_file(c.config);
  if (!j.is_object() || !j.contains("spec"))
    throw std::invalid_argument("k-sweep config needs a 'spec' object");
  strec::ExperimentSpec spec = strec::spec_from_json(j.at("spec"));
  if (c.seed_given()) spec.train.seed = c.seed;
  std::vector<int> ks = {1, 2, 3, 4, 5, 6};
  if (j.contains("ks")) {
    if (!j.at("ks").is_array()) throw std::invalid_argument("ks must be an array");
    ks.clear();
    for (const json& k : j.at("ks")) {
      if (!k.is_number_integer()) throw std::invalid_argument("ks entries must be integers");
      ks.push_back(k.get<int>());
    }
  }
  const strec::ComparisonTable table =
      strec::k_sweep(spec, ks, c.out, c.force, c.parallel);
  emit_table(table, c.out, "k_sweep");
  return 0;
}

int run_report(const Common& c) {
  const std::string root = c.config.empty() ? c.out : c.config;
  strec::ComparisonTable table;
  table.rows = strec::load_runs(root);
  if (table.rows.empty())
    throw std::invalid_argument("no finished runs under " + root);
  std::printf("%s", strec::table_to_text(table).c_str());
  std::printf("%s", strec::table_to_jsonl(table).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"strec: spatiotemporal CTR ranking experiments"};
  app.require_subcommand(1);

  Common gen_c, train_c, eval_c, ablate_c, seq_c, sweep_c, report_c;
  std::string preset_name;
  std::int64_t n_mc = 200000;

  CLI::App* gen = app.add_subcommand("gen", "generate a dataset and its manifest");
  add_common(gen, gen_c, /*config_required=*/false);
  gen->add_option("--preset", preset_name,
                  "named ground truth: acceptance_default, noise2, recency");
  gen->add_option("--mc", n_mc, "Monte-Carlo draws for the manifest's bayes_auc")
      ->check(CLI::PositiveNumber);

  CLI::App* train = app.add_subcommand("train", "train one experiment spec");
  add_common(train, train_c);
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  add_common(eval, eval_c);
  CLI::App* ablate = app.add_subcommand("ablate", "feature-mask ablation suite");
  add_common(ablate, ablate_c);
  CLI::App* seq = app.add_subcommand("seq-suite", "compare all sequence encoders");
  add_common(seq, seq_c);
  CLI::App* sweep = app.add_subcommand("k-sweep", "sweep the top-k context gate");
  add_common(sweep, sweep_c);
  CLI::App* report = app.add_subcommand("report", "re-render finished runs as a table");
  add_common(report, report_c, /*config_required=*/false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    for (char& ch : msg)
      if (ch == '\n') ch = ' ';
    std::fprintf(stderr, "E_USAGE: %s\n", msg.c_str());
    return 64;
  }

  try {
    if (gen->parsed()) return run_gen(gen_c, preset_name, n_mc);
    if (train->parsed()) return run_train(train_c);
    if (eval->parsed()) return run_eval(eval_c);
    if (ablate->parsed()) return run_ablate(ablate_c);
    if (seq->parsed()) return run_seq_suite(seq_c);
    if (sweep->parsed()) return run_k_sweep(sweep_c);
    if (report->parsed()) return run_report(report_c);
  } catch (const IoError& e) {
    std::fprintf(stderr, "E_IO: %s\n", e.what());
    return 74;
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    for (char& ch : msg)
      if (ch == '\n') ch = ' ';
    std::fprintf(stderr, "E_SPEC: %s\n", msg.c_str());
    return 66;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "E_JSON: %s\n", e.what());
    return 65;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "E_RUNTIME: %s\n", e.what());
    return 70;
  }
  std::fprintf(stderr, "E_USAGE: no subcommand\n");
  return 64;
}
