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

#include "strec/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "strec/graph.hpp"
#include "strec/ops.hpp"
#include "strec/rng.hpp"

namespace strec {
namespace {

using nlohmann::json;

constexpr std::uint64_t kShuffleTag = 0x73687566666cull;

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> train_config_problems(const TrainConfig& cfg) {
  std::vector<std::string> problems;
  if (cfg.batch_size < 1) problems.push_back("batch_size must be >= 1");
  if (!(cfg.warmup.lr_start > 0.0)) problems.push_back("lr_start must be > 0");
  if (!(cfg.warmup.lr_start <= cfg.warmup.lr_end))
    problems.push_back("lr_start must not exceed lr_end");
  if (cfg.warmup.warmup_steps < 0) problems.push_back("warmup_steps must be >= 0");
  if (cfg.total_steps < 0) problems.push_back("total_steps must be >= 0");
  if (cfg.warmup.warmup_steps > cfg.total_steps)
    problems.push_back("warmup_steps must not exceed total_steps");
  if (cfg.eval_every < 0) problems.push_back("eval_every must be >= 0");
  if (cfg.ndcg_k < 1) problems.push_back("ndcg_k must be >= 1");
  return problems;
}

double sigmoid_stable(double x) { return 0.5 * (1.0 + std::tanh(0.5 * x)); }

void shuffle_order(std::vector<std::size_t>& order, Rng& rng) {
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.below(i)]);
}

}  // namespace

void validate_train_config(const TrainConfig& cfg) {
  std::vector<std::string> problems = train_config_problems(cfg);
  try {
    validate_config(cfg.model);
  } catch (const std::invalid_argument& e) {
    problems.push_back(e.what());
  }
  if (!problems.empty()) fail("train config: " + join(problems, "; "));
}

nlohmann::ordered_json train_config_to_json(const TrainConfig& cfg) {
  nlohmann::ordered_json j;
  j["model"] = model_config_to_json(cfg.model);
  j["batch_size"] = cfg.batch_size;
  j["warmup"] = {{"lr_start", cfg.warmup.lr_start},
                 {"lr_end", cfg.warmup.lr_end},
                 {"warmup_steps", cfg.warmup.warmup_steps}};
  j["total_steps"] = cfg.total_steps;
  j["eval_every"] = cfg.eval_every;
  j["seed"] = cfg.seed;
  j["ndcg_k"] = cfg.ndcg_k;
  return j;
}

TrainConfig train_config_from_json(const json& j, std::vector<std::string>* errors) {
  TrainConfig cfg;
  std::vector<std::string> local;
  std::vector<std::string>& errs = errors ? *errors : local;

  if (!j.is_object()) {
    errs.push_back("train config must be a JSON object");
  } else {
    static const std::vector<std::string> known = {
        "model",      "batch_size", "warmup", "total_steps",
        "eval_every", "seed",       "ndcg_k"};
    for (const auto& [key, value] : j.items()) {
      (void)value;
      bool ok = false;
      for (const std::string& k : known) ok = ok || k == key;
      if (!ok) errs.push_back("unknown train config field '" + key + "'");
    }

    auto get_int = [&](const json& obj, const char* key, std::int64_t fallback,
                       bool allow_negative = false) -> std::int64_t {
      if (!obj.contains(key)) return fallback;
      const json& v = obj.at(key);
      const bool ok = v.is_number_unsigned() ||
                      (v.is_number_integer() &&
                       (allow_negative || v.get<std::int64_t>() >= 0));
      if (!ok) {
        errs.push_back(std::string(key) + " must be a non-negative integer");
        return fallback;
      }
      return v.get<std::int64_t>();
    };
    auto get_double = [&](const json& obj, const char* key, double fallback) -> double {
      if (!obj.contains(key)) return fallback;
      const json& v = obj.at(key);
      if (!v.is_number()) {
        errs.push_back(std::string(key) + " must be a number");
        return fallback;
      }
      return v.get<double>();
    };

    if (j.contains("model")) {
      cfg.model = model_config_from_json(j.at("model"), &errs);
    }
    cfg.batch_size = get_int(j, "batch_size", cfg.batch_size);
    if (j.contains("warmup")) {
      const json& w = j.at("warmup");
      if (!w.is_object()) {
        errs.push_back("warmup must be an object");
      } else {
        for (const auto& [key, value] : w.items()) {
          (void)value;
          if (key != "lr_start" && key != "lr_end" && key != "warmup_steps")
            errs.push_back("unknown warmup field '" + key + "'");
        }
        cfg.warmup.lr_start = get_double(w, "lr_start", cfg.warmup.lr_start);
        cfg.warmup.lr_end = get_double(w, "lr_end", cfg.warmup.lr_end);
        cfg.warmup.warmup_steps = get_int(w, "warmup_steps", cfg.warmup.warmup_steps);
      }
    }
    cfg.total_steps = get_int(j, "total_steps", cfg.total_steps);
    cfg.eval_every = get_int(j, "eval_every", cfg.eval_every);
    cfg.seed = static_cast<std::uint64_t>(
        get_int(j, "seed", static_cast<std::int64_t>(cfg.seed)));
    cfg.ndcg_k = static_cast<int>(get_int(j, "ndcg_k", cfg.ndcg_k));
  }

  // Model problems were already collected by model_config_from_json.
  for (const std::string& p : train_config_problems(cfg)) errs.push_back(p);
  if (!errors && !errs.empty()) fail("train config: " + join(errs, "; "));
  return cfg;
}

double ce_loss(const Tensor& logits, const Tensor& labels) {
  if (logits.numel() != labels.numel() || logits.numel() == 0)
    fail("ce_loss: logits and labels must be equal-length and non-empty");
  for (Index i = 0; i < labels.numel(); ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0)
      fail("ce_loss: label at position " + std::to_string(i) + " is not 0 or 1");
  }
  double total = 0.0;
  for (Index i = 0; i < logits.numel(); ++i) {
    const double z = logits[i];
    total += std::max(z, 0.0) - z * labels[i] + std::log1p(std::exp(-std::abs(z)));
  }
  return total / static_cast<double>(logits.numel());
}

void adagrad_update(Tensor& param, const Tensor& grad, Tensor& accum,
                    double lr, double eps) {
  if (grad.shape() != param.shape() || accum.shape() != param.shape())
    fail("adagrad_update: parameter, gradient, and accumulator shapes differ");
  accum.data().array() += grad.data().array().square();
  param.data().array() -=
      lr * grad.data().array() / (accum.data().array().sqrt() + eps);
}

AdaGradState AdaGradState::for_model(const Model& model) {
  AdaGradState state;
  state.accumulators.reserve(model.parameters().size());
  for (const auto& [name, tensor] : model.parameters())
    state.accumulators.emplace_back(name, Tensor::zeros(tensor.shape()));
  return state;
}

void adagrad_step(Model& model, const Graph& g, AdaGradState& state, double lr) {
  auto& params = model.parameters();
  if (params.size() != state.accumulators.size())
    fail("adagrad_step: optimizer state does not match the model");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& [name, param] = params[i];
    if (state.accumulators[i].first != name)
      fail("adagrad_step: optimizer state does not match parameter '" + name + "'");
    adagrad_update(param, g.grad(name), state.accumulators[i].second, lr,
                   state.epsilon);
  }
}

EvalReport evaluate_model(const Model& model, const Dataset& data, int ndcg_k) {
  const Tensor logits = model.predict_logits(data);
  ScoredSet scored;
  scored.scores.reserve(data.size());
  scored.labels.reserve(data.size());
  scored.group_ids.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    scored.scores.push_back(sigmoid_stable(logits[static_cast<Index>(i)]));
    scored.labels.push_back(data[i].label);
    scored.group_ids.push_back(data[i].user_id);
  }
  return evaluate(scored, ndcg_k, "user_id");
}

TrainResult train(const TrainConfig& cfg, const Dataset& train_data,
                  const Dataset& eval_data) {
  validate_train_config(cfg);
  if (cfg.total_steps > 0 && train_data.empty())
    fail("train: no training data");

  TrainResult result{Model(cfg.model, cfg.seed), {}, {}, {}};
  AdaGradState state = AdaGradState::for_model(result.model);
  result.history.reserve(static_cast<std::size_t>(cfg.total_steps));

  const std::size_t n = train_data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uint64_t epoch = 0;
  std::size_t pos = n;  // forces the first-epoch shuffle

  std::vector<const Sample*> rows;
  for (std::int64_t step = 0; step < cfg.total_steps; ++step) {
    if (pos >= n) {
      Rng rng = Rng::substream(cfg.seed, kShuffleTag, epoch);
      shuffle_order(order, rng);
      ++epoch;
      pos = 0;
    }
    const std::size_t take =
        std::min(static_cast<std::size_t>(cfg.batch_size), n - pos);
    rows.clear();
    for (std::size_t i = 0; i < take; ++i) rows.push_back(&train_data[order[pos + i]]);
    pos += take;

    const EncodedBatch batch = encode_batch(rows, cfg.model);
    Graph g;
    Var loss = ce_with_logits(result.model.build_logits(g, batch), batch.labels);
    const double loss_value = loss.value()[0];
    if (!std::isfinite(loss_value))
      throw std::runtime_error("train: non-finite loss at step " + std::to_string(step));

    const double lr = cfg.warmup.lr_at(step);
    g.backward(loss);
    adagrad_step(result.model, g, state, lr);
    result.history.push_back({step, lr, loss_value});

    if (cfg.eval_every > 0 && (step + 1) % cfg.eval_every == 0 &&
        step + 1 < cfg.total_steps && !eval_data.empty()) {
      result.interval_evals.emplace_back(
          step + 1, evaluate_model(result.model, eval_data, cfg.ndcg_k));
    }
  }

  if (!eval_data.empty())
    result.eval = evaluate_model(result.model, eval_data, cfg.ndcg_k);
  return result;
}

void save_history(const std::filesystem::path& path,
                  const std::vector<TrainStep>& history) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail("save_history: cannot open " + path.string());
  for (const TrainStep& s : history) {
    nlohmann::ordered_json j;
    j["step"] = s.step;
    j["lr"] = s.lr;
    j["loss"] = s.loss;
    out << j.dump() << "\n";
  }
  if (!out) fail("save_history: write failed for " + path.string());
}

std::vector<TrainStep> load_history(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("load_history: cannot open " + path.string());
  std::vector<TrainStep> history;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    history.push_back({j.at("step").get<std::int64_t>(), j.at("lr").get<double>(),
                       j.at("loss").get<double>()});
  }
  return history;
}

}  // namespace strec
