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

#ifndef STREC_TRAINING_HPP_
#define STREC_TRAINING_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "strec/metrics.hpp"
#include "strec/models.hpp"
#include "strec/tensor.hpp"

namespace strec {

// Linear learning-rate ramp from lr_start to lr_end over warmup_steps,
// held at lr_end afterwards.
struct WarmupSchedule {
  double lr_start = 0.001;
  double lr_end = 0.015;
  std::int64_t warmup_steps = 1000;

  double lr_at(std::int64_t step) const {
    if (step >= warmup_steps) return lr_end;
    const double t = static_cast<double>(step) / static_cast<double>(warmup_steps);
    return lr_start + (lr_end - lr_start) * t;
  }
};

// Full training recipe: model choice plus batching, schedule, and seed.
// Defaults are sized so a run finishes in minutes on one core.
struct TrainConfig {
  ModelConfig model;
  Index batch_size = 256;
  WarmupSchedule warmup;
  std::int64_t total_steps = 5000;
  std::int64_t eval_every = 0;  // 0 evaluates only after the last step
  std::uint64_t seed = 0;
  int ndcg_k = 10;
};

// Throws std::invalid_argument listing every violated constraint.
void validate_train_config(const TrainConfig& cfg);

nlohmann::ordered_json train_config_to_json(const TrainConfig& cfg);

// Parses a config document, collecting every problem (unknown fields, type
// errors, violated invariants) in one pass. With errors == nullptr all
// problems are thrown joined into a single std::invalid_argument.
TrainConfig train_config_from_json(const nlohmann::json& j,
                                   std::vector<std::string>* errors = nullptr);

// Mean binary cross-entropy computed from logits in the max(z,0) - z*y +
// log1p(exp(-|z|)) form; matches the loss node used by the training graph.
double ce_loss(const Tensor& logits, const Tensor& labels);

// One optimizer step for a single tensor: accum += grad^2 elementwise, then
// param -= lr * grad / (sqrt(accum) + eps).
void adagrad_update(Tensor& param, const Tensor& grad, Tensor& accum,
                    double lr, double eps);

// Squared-gradient accumulators aligned with a model's parameter list.
struct AdaGradState {
  double epsilon = 1e-8;
  std::vector<std::pair<std::string, Tensor>> accumulators;

  static AdaGradState for_model(const Model& model);
};

// Applies one AdaGrad step to every model parameter using the gradients left
// in g by backward().
void adagrad_step(Model& model, const Graph& g, AdaGradState& state, double lr);

struct TrainStep {
  std::int64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
};

struct TrainResult {
  Model model;
  std::vector<TrainStep> history;
  // Final evaluation on eval data; samples == 0 when no eval data was given.
  EvalReport eval;
  std::vector<std::pair<std::int64_t, EvalReport>> interval_evals;
};

// Deterministic mini-batch training: fixed init from the seed, per-epoch
// reshuffles from seed-derived substreams, one history record per step.
// Throws std::runtime_error naming the step index if the loss goes
// non-finite.
TrainResult train(const TrainConfig& cfg, const Dataset& train_data,
                  const Dataset& eval_data);

// Scores a dataset with the model (sigmoid of the logits) and evaluates it
// grouped by user id.
EvalReport evaluate_model(const Model& model, const Dataset& data,
                          int ndcg_k = 10);

// History files are line-delimited JSON records {"step", "lr", "loss"}.
void save_history(const std::filesystem::path& path,
                  const std::vector<TrainStep>& history);
std::vector<TrainStep> load_history(const std::filesystem::path& path);

}  // namespace strec

#endif  // STREC_TRAINING_HPP_
