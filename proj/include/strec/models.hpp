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
#ifndef STREC_MODELS_HPP_
#define STREC_MODELS_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "strec/encoders.hpp"
#include "strec/features.hpp"
#include "strec/graph.hpp"
#include "strec/ops.hpp"

namespace strec {

enum class ModelKind { kBaseline, kDcam };
enum class EncoderArm { kMeanPool, kMhta, kSelfAttnMhta, kGru, kMhtaTimeDiff, kSelfAttnPosEnc };

std::string to_string(ModelKind kind);
std::string to_string(EncoderArm arm);
ModelKind model_kind_from_string(const std::string& name);
EncoderArm encoder_arm_from_string(const std::string& name);

// Where the six context embeddings are injected.
struct Destinations {
  bool ct = true;  // standalone context field (gated through the adaptation module on dcam)
  bool us = false; // appended to the user embedding
  bool it = false; // appended to the candidate item embedding
  bool sq = false; // appended to every behavior event embedding

  bool operator==(const Destinations&) const = default;
};

struct ModelConfig {
  ModelKind model = ModelKind::kBaseline;
  EncoderArm encoder = EncoderArm::kMhta;
  bool use_bias_net = true;
  int k = 4;      // context slots kept by the top-k gate (dcam)
  int heads = 2;  // attention heads
  std::array<bool, kContextSlots> context_features{true, true, true, true, true, true};
  Destinations destinations;
  Index d_c = 8;     // per-slot context embedding width
  Index d_i = 16;    // user and candidate item embedding width
  Index d_item = 12; // behavior item slice of an event embedding
  Index d_time = 4;  // time-gap slice of an event embedding
  Index l_max = 20;
  VocabConfig vocabs;
  std::vector<Index> main_hidden{64, 32};
  std::vector<Index> bias_hidden{16};
  std::vector<Index> stfam_hidden{32};

  Index context_width() const { return kContextSlots * d_c; }
  Index event_dim() const { return d_item + d_time + (destinations.sq ? context_width() : 0); }
  Index user_dim() const { return d_i + (destinations.us ? context_width() : 0); }
  Index item_dim() const { return d_i + (destinations.it ? context_width() : 0); }
  // Width of the encoded-sequence slot; every encoder arm emits event_dim().
  Index sequence_dim() const { return event_dim(); }
  Index main_input_dim() const;
};

// Throws std::invalid_argument listing every violated constraint at once.
void validate_config(const ModelConfig& config);

nlohmann::ordered_json model_config_to_json(const ModelConfig& config);
// Collects every malformed field before throwing; when `errors` is given the
// problems are appended there instead and a default-patched config returned.
ModelConfig model_config_from_json(const nlohmann::json& j, std::vector<std::string>* errors = nullptr);

// Index-encoded mini-batch ready for embedding lookups.
struct EncodedBatch {
  Index size = 0;
  std::vector<Index> user;                           // [B]
  std::vector<Index> item;                           // [B]
  std::array<std::vector<Index>, kContextSlots> context;  // [B] per slot
  std::vector<Index> seq_item;                       // [B * l_max] row-major
  std::vector<Index> seq_time;                       // [B * l_max]
  Tensor mask;                                       // [B, l_max]
  Tensor labels;                                     // [B]
};

EncodedBatch encode_batch(const std::vector<const Sample*>& rows, const ModelConfig& config);
EncodedBatch encode_batch(const Dataset& data, const ModelConfig& config);

// Gate head of the adaptation module: sigmoid(MLP(concat(flatten(e_c), e_input))),
// one weight per context slot. e_c may arrive as [B, 6*d_c] or [B, 6, d_c].
Var stfam_weights(Var e_c, Var e_input, const std::vector<Var>& weights, const std::vector<Var>& biases);

// Scales slot j of e_c_flat [B, 6*d_c] by weight_k[:, j].
Var context_gate(Var weight_k, Var e_c_flat, Index d_c);

struct StfamOut {
  Var weight;    // [B, 6] in (0, 1)
  Var weight_k;  // [B, 6] after the top-k gate
  Var gated;     // [B, 6*d_c], context scaled slot-wise by weight_k
  Var a_output;  // [B, m + 6*d_c]
};

StfamOut stfam_apply(Var e_c, Var e_input, const std::vector<Var>& weights, const std::vector<Var>& biases,
                     int k, Index d_c);
Var stfam_forward(Var e_c, Var e_input, const std::vector<Var>& weights, const std::vector<Var>& biases,
                  int k, Index d_c);

// A ranking model holding named parameter tensors; every forward pass builds
// onto a caller-owned tape so gradients and updates stay outside the model.
class Model {
 public:
  Model(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  std::vector<std::pair<std::string, Tensor>>& parameters() { return params_; }
  const std::vector<std::pair<std::string, Tensor>>& parameters() const { return params_; }
  Tensor& parameter(const std::string& name);
  const Tensor& parameter(const std::string& name) const;

  // Registers every parameter in g and returns the logit node [B].
  Var build_logits(Graph& g, const EncodedBatch& batch) const;

  // Forward-only scoring over a dataset, batched on fresh tapes.
  Tensor predict_logits(const Dataset& data, Index batch_size = 512) const;

  void save(const std::string& path) const;
  static Model load(const std::string& path);

 private:
  explicit Model(ModelConfig config);  // shapes only, zero-valued parameters

  ModelConfig config_;
  std::vector<std::pair<std::string, Tensor>> params_;
};

inline constexpr char kCheckpointMagic[8] = {'S', 'T', 'R', 'E', 'C', 'K', 'P', '1'};
inline constexpr int kCheckpointVersion = 1;

}  // namespace strec

#endif  // STREC_MODELS_HPP_
