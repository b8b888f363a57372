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
#include "strec/models.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "strec/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format stores raw little-endian doubles");

namespace strec {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::uint64_t kInitTag = 0x6d6f64656cull;  // parameter-init substream

void fail(const std::string& msg) { throw std::invalid_argument(msg); }

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

struct ParamSpec {
  std::string name;
  Shape shape;
};

void append_mlp(std::vector<ParamSpec>& out, const std::string& prefix, Index input,
                const std::vector<Index>& hidden, Index output) {
  std::vector<Index> widths = hidden;
  widths.push_back(output);
  Index prev = input;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    out.push_back({prefix + "/w" + std::to_string(i), {prev, widths[i]}});
    out.push_back({prefix + "/b" + std::to_string(i), {widths[i]}});
    prev = widths[i];
  }
}

std::vector<ParamSpec> parameter_layout(const ModelConfig& cfg) {
  std::vector<ParamSpec> out;
  out.push_back({"emb/user", {cfg.vocabs.user, cfg.d_i}});
  out.push_back({"emb/item", {cfg.vocabs.item, cfg.d_i}});
  for (int slot = 0; slot < kContextSlots; ++slot) {
    out.push_back({std::string("emb/ctx/") + context_slot_name(slot),
                   {context_vocab(slot, cfg.vocabs), cfg.d_c}});
  }
  out.push_back({"emb/seq_item", {cfg.vocabs.seq_item, cfg.d_item}});
  const Index time_rows = TimeDiffBucketizer::default_table().bucket_count() + 1;  // +1 padding
  out.push_back({"emb/seq_time", {time_rows, cfg.d_time}});

  const Index ev = cfg.event_dim();
  switch (cfg.encoder) {
    case EncoderArm::kMeanPool:
      break;
    case EncoderArm::kSelfAttnMhta:
    case EncoderArm::kSelfAttnPosEnc:
      out.push_back({"self_attn/w_q", {ev, ev}});
      out.push_back({"self_attn/w_k", {ev, ev}});
      out.push_back({"self_attn/w_v", {ev, ev}});
      [[fallthrough]];
    case EncoderArm::kMhta:
    case EncoderArm::kMhtaTimeDiff:
      out.push_back({"attn/w_q", {cfg.item_dim(), ev}});
      out.push_back({"attn/w_k", {ev, ev}});
      out.push_back({"attn/w_v", {ev, ev}});
      break;
    case EncoderArm::kGru:
      for (const char* gate : {"z", "r", "h"}) {
        out.push_back({std::string("gru/w_") + gate, {ev, ev}});
        out.push_back({std::string("gru/u_") + gate, {ev, ev}});
        out.push_back({std::string("gru/b_") + gate, {ev}});
      }
      break;
  }

  append_mlp(out, "main", cfg.main_input_dim(), cfg.main_hidden, 1);
  if (cfg.use_bias_net) append_mlp(out, "bias", cfg.context_width(), cfg.bias_hidden, 1);
  if (cfg.model == ModelKind::kDcam) {
    const Index m = cfg.user_dim() + cfg.item_dim() + cfg.sequence_dim();
    append_mlp(out, "stfam", cfg.context_width() + m, cfg.stfam_hidden, kContextSlots);
  }
  return out;
}

// x -> hidden relu layers -> final layer with final_act.
Var mlp_forward(Var x, const std::vector<Var>& weights, const std::vector<Var>& biases,
                Activation final_act) {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    x = dense(x, weights[i], biases[i], i + 1 == weights.size() ? final_act : Activation::kRelu);
  }
  return x;
}

std::vector<Var> collect(const std::map<std::string, Var>& vars, const std::string& prefix,
                         const char* kind) {
  std::vector<Var> out;
  for (std::size_t i = 0;; ++i) {
    auto it = vars.find(prefix + "/" + kind + std::to_string(i));
    if (it == vars.end()) break;
    out.push_back(it->second);
  }
  return out;
}

// flat [B, w] repeated along a new middle axis of length len.
Var tile_middle(Var flat, Index len) {
  const Index batch = flat.dim(0), width = flat.dim(1);
  std::vector<Var> copies(static_cast<std::size_t>(len), flat);
  return reshape(concat_last(copies), {batch, len, width});
}

bool has_json_type_error(const json& value, const char* expected) {
  if (std::strcmp(expected, "unsigned") == 0) {
    return !(value.is_number_unsigned() ||
             (value.is_number_integer() && value.get<std::int64_t>() >= 0));
  }
  if (std::strcmp(expected, "boolean") == 0) return !value.is_boolean();
  if (std::strcmp(expected, "string") == 0) return !value.is_string();
  if (std::strcmp(expected, "object") == 0) return !value.is_object();
  if (std::strcmp(expected, "array") == 0) return !value.is_array();
  return true;
}

}  // namespace

std::string to_string(ModelKind kind) {
  return kind == ModelKind::kBaseline ? "baseline" : "dcam";
}

std::string to_string(EncoderArm arm) {
  switch (arm) {
    case EncoderArm::kMeanPool: return "mean_pool";
    case EncoderArm::kMhta: return "mhta";
    case EncoderArm::kSelfAttnMhta: return "self_attn+mhta";
    case EncoderArm::kGru: return "gru";
    case EncoderArm::kMhtaTimeDiff: return "mhta+time_diff";
    case EncoderArm::kSelfAttnPosEnc: return "self_attn+pos_enc";
  }
  fail("unknown encoder arm");
  return {};
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "baseline") return ModelKind::kBaseline;
  if (name == "dcam") return ModelKind::kDcam;
  fail("model must be 'baseline' or 'dcam', got '" + name + "'");
  return ModelKind::kBaseline;
}

EncoderArm encoder_arm_from_string(const std::string& name) {
  for (EncoderArm arm : {EncoderArm::kMeanPool, EncoderArm::kMhta, EncoderArm::kSelfAttnMhta,
                         EncoderArm::kGru, EncoderArm::kMhtaTimeDiff, EncoderArm::kSelfAttnPosEnc}) {
    if (to_string(arm) == name) return arm;
  }
  fail("unknown encoder '" + name +
       "'; expected one of mean_pool, mhta, self_attn+mhta, gru, mhta+time_diff, self_attn+pos_enc");
  return EncoderArm::kMhta;
}

Index ModelConfig::main_input_dim() const {
  const Index mp = event_dim();
  if (model == ModelKind::kDcam) {
    const Index m = user_dim() + item_dim() + sequence_dim();
    return m + context_width() + mp;
  }
  Index width = user_dim() + item_dim() + sequence_dim() + mp;
  if (destinations.ct) width += context_width();
  return width;
}

namespace {

std::vector<std::string> config_problems(const ModelConfig& cfg) {
  std::vector<std::string> out;
  if (cfg.k < 1 || cfg.k > kContextSlots) {
    out.push_back("k must be in 1..6, got " + std::to_string(cfg.k));
  }
  if (cfg.heads < 1) out.push_back("heads must be positive");
  const bool attention = cfg.encoder != EncoderArm::kMeanPool && cfg.encoder != EncoderArm::kGru;
  if (attention && cfg.heads >= 1 && cfg.event_dim() % cfg.heads != 0) {
    out.push_back("heads " + std::to_string(cfg.heads) + " must divide the event width " +
                  std::to_string(cfg.event_dim()));
  }
  if (cfg.d_c < 1) out.push_back("d_c must be positive");
  if (cfg.d_i < 1) out.push_back("d_i must be positive");
  if (cfg.d_item < 1) out.push_back("d_item must be positive");
  if (cfg.d_time < 1) out.push_back("d_time must be positive");
  if (cfg.l_max < 1) out.push_back("l_max must be positive");
  if (cfg.vocabs.user < 1) out.push_back("vocabs.user must be positive");
  if (cfg.vocabs.item < 1) out.push_back("vocabs.item must be positive");
  if (cfg.vocabs.seq_item < 2) out.push_back("vocabs.seq_item needs at least a padding row plus one id");
  if (cfg.vocabs.geohash < 1) out.push_back("vocabs.geohash must be positive");
  if (cfg.vocabs.city < 1) out.push_back("vocabs.city must be positive");
  if (cfg.vocabs.aoi < 1) out.push_back("vocabs.aoi must be positive");
  for (const auto& [label, widths] :
       {std::pair<const char*, const std::vector<Index>*>{"main_hidden", &cfg.main_hidden},
        {"bias_hidden", &cfg.bias_hidden},
        {"stfam_hidden", &cfg.stfam_hidden}}) {
    for (Index w : *widths) {
      if (w < 1) {
        out.push_back(std::string(label) + " widths must be positive");
        break;
      }
    }
  }
  return out;
}

}  // namespace

void validate_config(const ModelConfig& config) {
  const std::vector<std::string> problems = config_problems(config);
  if (!problems.empty()) fail("model config: " + join(problems, "; "));
}

ordered_json model_config_to_json(const ModelConfig& cfg) {
  ordered_json j;
  j["model"] = to_string(cfg.model);
  j["encoder"] = to_string(cfg.encoder);
  j["use_bias_net"] = cfg.use_bias_net;
  j["k"] = cfg.k;
  j["heads"] = cfg.heads;
  ordered_json features;
  for (int slot = 0; slot < kContextSlots; ++slot) {
    features[context_slot_name(slot)] = cfg.context_features[static_cast<std::size_t>(slot)];
  }
  j["context_features"] = features;
  j["destinations"] = {{"ct", cfg.destinations.ct},
                       {"us", cfg.destinations.us},
                       {"it", cfg.destinations.it},
                       {"sq", cfg.destinations.sq}};
  j["dims"] = {{"d_c", cfg.d_c}, {"d_i", cfg.d_i}, {"d_item", cfg.d_item}, {"d_time", cfg.d_time}};
  j["l_max"] = cfg.l_max;
  j["vocabs"] = {{"user", cfg.vocabs.user},     {"item", cfg.vocabs.item},
                 {"seq_item", cfg.vocabs.seq_item}, {"geohash", cfg.vocabs.geohash},
                 {"city", cfg.vocabs.city},     {"aoi", cfg.vocabs.aoi}};
  j["main_hidden"] = cfg.main_hidden;
  j["bias_hidden"] = cfg.bias_hidden;
  j["stfam_hidden"] = cfg.stfam_hidden;
  return j;
}

ModelConfig model_config_from_json(const json& j, std::vector<std::string>* errors) {
  ModelConfig cfg;
  std::vector<std::string> local;
  std::vector<std::string>& errs = errors ? *errors : local;

  if (!j.is_object()) {
    errs.push_back("model config must be a JSON object");
  } else {
    static const std::vector<std::string> known = {
        "model",        "encoder", "use_bias_net", "k",           "heads",
        "context_features", "destinations", "dims",     "l_max",       "vocabs",
        "main_hidden",  "bias_hidden", "stfam_hidden"};
    for (const auto& [key, value] : j.items()) {
      (void)value;
      bool ok = false;
      for (const std::string& k : known) ok = ok || k == key;
      if (!ok) errs.push_back("unknown model config field '" + key + "'");
    }

    auto get_string = [&](const char* key, const std::string& fallback) -> std::string {
      if (!j.contains(key)) return fallback;
      if (has_json_type_error(j.at(key), "string")) {
        errs.push_back(std::string(key) + " must be a string");
        return fallback;
      }
      return j.at(key).get<std::string>();
    };
    auto get_bool = [&](const json& obj, const char* key, bool fallback) -> bool {
      if (!obj.contains(key)) return fallback;
      if (has_json_type_error(obj.at(key), "boolean")) {
        errs.push_back(std::string(key) + " must be a boolean");
        return fallback;
      }
      return obj.at(key).get<bool>();
    };
    auto get_index = [&](const json& obj, const char* key, Index fallback) -> Index {
      if (!obj.contains(key)) return fallback;
      if (has_json_type_error(obj.at(key), "unsigned")) {
        errs.push_back(std::string(key) + " must be a non-negative integer");
        return fallback;
      }
      return obj.at(key).get<Index>();
    };

    try {
      cfg.model = model_kind_from_string(get_string("model", "baseline"));
    } catch (const std::invalid_argument& e) {
      errs.push_back(e.what());
    }
    try {
      cfg.encoder = encoder_arm_from_string(get_string("encoder", "mhta"));
    } catch (const std::invalid_argument& e) {
      errs.push_back(e.what());
    }
    cfg.use_bias_net = get_bool(j, "use_bias_net", cfg.use_bias_net);
    cfg.k = static_cast<int>(get_index(j, "k", static_cast<Index>(cfg.k)));
    cfg.heads = static_cast<int>(get_index(j, "heads", static_cast<Index>(cfg.heads)));
    cfg.l_max = get_index(j, "l_max", cfg.l_max);

    if (j.contains("context_features")) {
      const json& f = j.at("context_features");
      if (!f.is_object()) {
        errs.push_back("context_features must map feature names to booleans");
      } else {
        for (const auto& [key, value] : f.items()) {
          (void)value;
          bool known_slot = false;
          for (int slot = 0; slot < kContextSlots; ++slot) known_slot = known_slot || key == context_slot_name(slot);
          if (!known_slot) errs.push_back("unknown context feature '" + key + "'");
        }
        for (int slot = 0; slot < kContextSlots; ++slot) {
          cfg.context_features[static_cast<std::size_t>(slot)] =
              get_bool(f, context_slot_name(slot), cfg.context_features[static_cast<std::size_t>(slot)]);
        }
      }
    }
    if (j.contains("destinations")) {
      const json& d = j.at("destinations");
      if (!d.is_object()) {
        errs.push_back("destinations must map ct/us/it/sq to booleans");
      } else {
        for (const auto& [key, value] : d.items()) {
          (void)value;
          if (key != "ct" && key != "us" && key != "it" && key != "sq") {
            errs.push_back("unknown destination field '" + key + "'");
          }
        }
        cfg.destinations.ct = get_bool(d, "ct", cfg.destinations.ct);
        cfg.destinations.us = get_bool(d, "us", cfg.destinations.us);
        cfg.destinations.it = get_bool(d, "it", cfg.destinations.it);
        cfg.destinations.sq = get_bool(d, "sq", cfg.destinations.sq);
      }
    }
    if (j.contains("dims")) {
      const json& d = j.at("dims");
      if (!d.is_object()) {
        errs.push_back("dims must be an object");
      } else {
        cfg.d_c = get_index(d, "d_c", cfg.d_c);
        cfg.d_i = get_index(d, "d_i", cfg.d_i);
        cfg.d_item = get_index(d, "d_item", cfg.d_item);
        cfg.d_time = get_index(d, "d_time", cfg.d_time);
      }
    }
    if (j.contains("vocabs")) {
      const json& v = j.at("vocabs");
      if (!v.is_object()) {
        errs.push_back("vocabs must be an object");
      } else {
        cfg.vocabs.user = get_index(v, "user", cfg.vocabs.user);
        cfg.vocabs.item = get_index(v, "item", cfg.vocabs.item);
        cfg.vocabs.seq_item = get_index(v, "seq_item", cfg.vocabs.seq_item);
        cfg.vocabs.geohash = get_index(v, "geohash", cfg.vocabs.geohash);
        cfg.vocabs.city = get_index(v, "city", cfg.vocabs.city);
        cfg.vocabs.aoi = get_index(v, "aoi", cfg.vocabs.aoi);
      }
    }
    auto get_widths = [&](const char* key, std::vector<Index>& target) {
      if (!j.contains(key)) return;
      const json& a = j.at(key);
      if (!a.is_array()) {
        errs.push_back(std::string(key) + " must be an array of widths");
        return;
      }
      std::vector<Index> widths;
      for (const json& w : a) {
        if (has_json_type_error(w, "unsigned")) {
          errs.push_back(std::string(key) + " must contain non-negative integers");
          return;
        }
        widths.push_back(w.get<Index>());
      }
      target = std::move(widths);
    };
    get_widths("main_hidden", cfg.main_hidden);
    get_widths("bias_hidden", cfg.bias_hidden);
    get_widths("stfam_hidden", cfg.stfam_hidden);
  }

  for (const std::string& p : config_problems(cfg)) errs.push_back(p);
  if (!errors && !errs.empty()) fail("model config: " + join(errs, "; "));
  return cfg;
}

EncodedBatch encode_batch(const std::vector<const Sample*>& rows, const ModelConfig& cfg) {
  static const TimeDiffBucketizer bucketizer = TimeDiffBucketizer::default_table();
  const Index batch = static_cast<Index>(rows.size());
  if (batch == 0) fail("encode_batch: empty batch");

  EncodedBatch out;
  out.size = batch;
  out.user.reserve(static_cast<std::size_t>(batch));
  out.item.reserve(static_cast<std::size_t>(batch));
  out.seq_item.resize(static_cast<std::size_t>(batch * cfg.l_max));
  out.seq_time.resize(static_cast<std::size_t>(batch * cfg.l_max));
  out.mask = Tensor::zeros({batch, cfg.l_max});
  out.labels = Tensor::zeros({batch});

  for (Index b = 0; b < batch; ++b) {
    const Sample& s = *rows[static_cast<std::size_t>(b)];
    out.user.push_back(static_cast<Index>(hash_id(s.user_id, static_cast<std::uint64_t>(cfg.vocabs.user))));
    out.item.push_back(static_cast<Index>(hash_id(s.item_id, static_cast<std::uint64_t>(cfg.vocabs.item))));
    for (int slot = 0; slot < kContextSlots; ++slot) {
      out.context[static_cast<std::size_t>(slot)].push_back(context_index(s.context, slot, cfg.vocabs));
    }
    const SequenceIndices seq = encode_sequence(s.behavior, s.decision_ts, cfg.l_max, cfg.vocabs, bucketizer);
    for (Index l = 0; l < cfg.l_max; ++l) {
      out.seq_item[static_cast<std::size_t>(b * cfg.l_max + l)] = seq.item[static_cast<std::size_t>(l)];
      out.seq_time[static_cast<std::size_t>(b * cfg.l_max + l)] = seq.time[static_cast<std::size_t>(l)];
      out.mask.at({b, l}) = seq.mask[l];
    }
    out.labels[b] = static_cast<double>(s.label);
  }
  return out;
}

EncodedBatch encode_batch(const Dataset& data, const ModelConfig& cfg) {
  std::vector<const Sample*> rows;
  rows.reserve(data.size());
  for (const Sample& s : data) rows.push_back(&s);
  return encode_batch(rows, cfg);
}

Var stfam_weights(Var e_c, Var e_input, const std::vector<Var>& weights, const std::vector<Var>& biases) {
  if (weights.empty() || weights.size() != biases.size()) {
    fail("stfam_weights: weight/bias stacks must be non-empty and aligned");
  }
  if (e_c.value().rank() == 3) {
    e_c = reshape(e_c, {e_c.dim(0), e_c.dim(1) * e_c.dim(2)});
  }
  if (e_c.value().rank() != 2 || e_input.value().rank() != 2 || e_c.dim(0) != e_input.dim(0)) {
    fail("stfam_weights: context and input must be matrices over one batch");
  }
  const Var& last = weights.back();
  if (last.value().rank() != 2 || last.dim(1) != kContextSlots) {
    fail("stfam_weights: final layer must output exactly " + std::to_string(kContextSlots) + " gates");
  }
  Var x = concat_last({e_c, e_input});
  return mlp_forward(x, weights, biases, Activation::kSigmoid);
}

Var context_gate(Var weight_k, Var e_c_flat, Index d_c) {
  if (weight_k.value().rank() != 2 || weight_k.dim(1) != kContextSlots) {
    fail("context_gate: weights must be [B, 6]");
  }
  const Index batch = weight_k.dim(0);
  if (e_c_flat.value().rank() != 2 || e_c_flat.dim(0) != batch ||
      e_c_flat.dim(1) != kContextSlots * d_c) {
    fail("context_gate: context must be [B, 6*d_c]");
  }
  Graph& g = *weight_k.graph;
  Var per_slot = reshape(weight_k, {batch * kContextSlots, 1});
  Var spread = reshape(matmul(per_slot, g.constant(Tensor::full({1, d_c}, 1.0))),
                       {batch, kContextSlots * d_c});
  return mul(spread, e_c_flat);
}

StfamOut stfam_apply(Var e_c, Var e_input, const std::vector<Var>& weights,
                     const std::vector<Var>& biases, int k, Index d_c) {
  StfamOut out;
  out.weight = stfam_weights(e_c, e_input, weights, biases);
  out.weight_k = top_k_filter(out.weight, k);
  Var flat = e_c.value().rank() == 3 ? reshape(e_c, {e_c.dim(0), e_c.dim(1) * e_c.dim(2)}) : e_c;
  out.gated = context_gate(out.weight_k, flat, d_c);
  out.a_output = concat_last({e_input, out.gated});
  return out;
}

Var stfam_forward(Var e_c, Var e_input, const std::vector<Var>& weights,
                  const std::vector<Var>& biases, int k, Index d_c) {
  return stfam_apply(e_c, e_input, weights, biases, k, d_c).a_output;
}

Model::Model(ModelConfig config) : config_(std::move(config)) {
  validate_config(config_);
  for (ParamSpec& spec : parameter_layout(config_)) {
    params_.emplace_back(std::move(spec.name), Tensor::zeros(std::move(spec.shape)));
  }
}

Model::Model(ModelConfig config, std::uint64_t seed) : Model(std::move(config)) {
  Rng rng = Rng::substream(seed, kInitTag);
  for (auto& [name, tensor] : params_) {
    if (tensor.rank() != 2) continue;  // biases stay zero
    const double a = std::sqrt(6.0 / static_cast<double>(tensor.dim(0) + tensor.dim(1)));
    for (Index i = 0; i < tensor.numel(); ++i) tensor[i] = rng.uniform(-a, a);
  }
}

Tensor& Model::parameter(const std::string& name) {
  for (auto& [n, t] : params_) {
    if (n == name) return t;
  }
  fail("no parameter named '" + name + "'");
  return params_.front().second;
}

const Tensor& Model::parameter(const std::string& name) const {
  return const_cast<Model*>(this)->parameter(name);
}

Var Model::build_logits(Graph& g, const EncodedBatch& batch) const {
  const Index b = batch.size;
  const Index l = config_.l_max;
  if (b < 1) fail("build_logits: empty batch");
  if (batch.mask.shape() != Shape{b, l}) fail("build_logits: mask does not match [batch, l_max]");
  if (static_cast<Index>(batch.user.size()) != b || static_cast<Index>(batch.item.size()) != b ||
      static_cast<Index>(batch.seq_item.size()) != b * l ||
      static_cast<Index>(batch.seq_time.size()) != b * l) {
    fail("build_logits: index arrays do not match the batch size");
  }

  std::map<std::string, Var> v;
  for (const auto& [name, tensor] : params_) v[name] = g.parameter(name, tensor);

  Var e_u = embedding(v.at("emb/user"), batch.user, {b});
  Var e_i = embedding(v.at("emb/item"), batch.item, {b});

  std::vector<Var> slots;
  for (int slot = 0; slot < kContextSlots; ++slot) {
    if (config_.context_features[static_cast<std::size_t>(slot)]) {
      slots.push_back(embedding(v.at(std::string("emb/ctx/") + context_slot_name(slot)),
                                batch.context[static_cast<std::size_t>(slot)], {b}));
    } else {
      slots.push_back(g.constant(Tensor::zeros({b, config_.d_c})));
    }
  }
  Var e_c = concat_last(slots);  // [B, 6*d_c], slot-major

  if (config_.destinations.us) e_u = concat_last({e_u, e_c});
  if (config_.destinations.it) e_i = concat_last({e_i, e_c});

  std::vector<Var> event_parts;
  event_parts.push_back(embedding(v.at("emb/seq_item"), batch.seq_item, {b, l}));
  if (config_.encoder == EncoderArm::kMhtaTimeDiff) {
    event_parts.push_back(embedding(v.at("emb/seq_time"), batch.seq_time, {b, l}));
  } else {
    event_parts.push_back(g.constant(Tensor::zeros({b, l, config_.d_time})));
  }
  if (config_.destinations.sq) event_parts.push_back(tile_middle(e_c, l));
  Var events = concat_last(event_parts);  // [B, L, event_dim]

  if (config_.encoder == EncoderArm::kSelfAttnPosEnc) {
    const Tensor pe = position_encoding(l, config_.event_dim());
    Tensor tiled = Tensor::zeros({b, l, config_.event_dim()});
    for (Index bb = 0; bb < b; ++bb) {
      for (Index i = 0; i < pe.numel(); ++i) tiled[bb * pe.numel() + i] = pe[i];
    }
    events = add(events, g.constant(tiled));
  }

  Var s{};
  switch (config_.encoder) {
    case EncoderArm::kMeanPool:
      s = mean_pool(events, batch.mask);
      break;
    case EncoderArm::kMhta:
    case EncoderArm::kMhtaTimeDiff: {
      MhtaParams p{v.at("attn/w_q"), v.at("attn/w_k"), v.at("attn/w_v"), config_.heads};
      s = mhta(e_i, events, batch.mask, p);
      break;
    }
    case EncoderArm::kSelfAttnMhta:
    case EncoderArm::kSelfAttnPosEnc: {
      MhtaParams sa{v.at("self_attn/w_q"), v.at("self_attn/w_k"), v.at("self_attn/w_v"), config_.heads};
      MhtaParams ta{v.at("attn/w_q"), v.at("attn/w_k"), v.at("attn/w_v"), config_.heads};
      s = mhta(e_i, self_attention_encode(events, batch.mask, sa), batch.mask, ta);
      break;
    }
    case EncoderArm::kGru: {
      GruParams p{v.at("gru/w_z"), v.at("gru/u_z"), v.at("gru/b_z"),
                  v.at("gru/w_r"), v.at("gru/u_r"), v.at("gru/b_r"),
                  v.at("gru/w_h"), v.at("gru/u_h"), v.at("gru/b_h")};
      s = gru_encode(events, batch.mask, p);
      break;
    }
  }

  Var mp = mean_pool(events, batch.mask);

  Var x{};
  Var bias_ctx = e_c;  // the adapted context replaces the raw field everywhere downstream
  if (config_.model == ModelKind::kDcam) {
    Var e_input = concat_last({e_u, e_i, s});
    StfamOut st = stfam_apply(e_c, e_input, collect(v, "stfam", "w"), collect(v, "stfam", "b"),
                              config_.k, config_.d_c);
    bias_ctx = st.gated;
    x = concat_last({st.a_output, mp});
  } else {
    std::vector<Var> parts = {e_u, e_i, s, mp};
    if (config_.destinations.ct) parts.push_back(e_c);
    x = concat_last(parts);
  }

  Var o = mlp_forward(x, collect(v, "main", "w"), collect(v, "main", "b"), Activation::kNone);
  if (config_.use_bias_net) {
    o = add(o, mlp_forward(bias_ctx, collect(v, "bias", "w"), collect(v, "bias", "b"), Activation::kNone));
  }
  return reshape(o, {b});
}

Tensor Model::predict_logits(const Dataset& data, Index batch_size) const {
  if (data.empty()) fail("predict_logits: empty dataset");
  if (batch_size < 1) fail("predict_logits: batch size must be positive");
  Tensor out = Tensor::zeros({static_cast<Index>(data.size())});
  for (std::size_t start = 0; start < data.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t stop = std::min(data.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<const Sample*> rows;
    rows.reserve(stop - start);
    for (std::size_t i = start; i < stop; ++i) rows.push_back(&data[i]);
    Graph g;
    const Tensor logits = build_logits(g, encode_batch(rows, config_)).value();
    for (std::size_t i = start; i < stop; ++i) out[static_cast<Index>(i)] = logits[static_cast<Index>(i - start)];
  }
  return out;
}

void Model::save(const std::string& path) const {
  ordered_json header;
  header["format_version"] = kCheckpointVersion;
  header["config"] = model_config_to_json(config_);
  ordered_json tensors = ordered_json::array();
  for (const auto& [name, tensor] : params_) {
    ordered_json entry;
    entry["name"] = name;
    entry["shape"] = tensor.shape();
    tensors.push_back(entry);
  }
  header["tensors"] = tensors;
  const std::string encoded = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::uint64_t header_len = encoded.size();
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(encoded.data(), static_cast<std::streamsize>(encoded.size()));
  for (const auto& [name, tensor] : params_) {
    (void)name;
    out.write(reinterpret_cast<const char*>(tensor.data().data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(tensor.numel())));
  }
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

Model Model::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);

  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw std::runtime_error(path + ": not a model checkpoint (bad magic)");
  }
  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  if (!in) throw std::runtime_error(path + ": truncated checkpoint header");
  std::string encoded(header_len, '\0');
  in.read(encoded.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw std::runtime_error(path + ": truncated checkpoint header");

  json header;
  try {
    header = json::parse(encoded);
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": unreadable checkpoint header: " + e.what());
  }
  if (!header.contains("format_version") || !header.at("format_version").is_number_integer() ||
      header.at("format_version").get<int>() != kCheckpointVersion) {
    throw std::runtime_error(path + ": unsupported checkpoint version");
  }

  Model model(model_config_from_json(header.at("config")));

  if (!header.contains("tensors") || !header.at("tensors").is_array() ||
      header.at("tensors").size() != model.params_.size()) {
    throw std::runtime_error(path + ": checkpoint tensor manifest does not match the configuration");
  }
  for (std::size_t i = 0; i < model.params_.size(); ++i) {
    const json& entry = header.at("tensors").at(i);
    const auto& [name, tensor] = model.params_[i];
    if (!entry.contains("name") || entry.at("name") != name ||
        !entry.contains("shape") || entry.at("shape").get<Shape>() != tensor.shape()) {
      throw std::runtime_error(path + ": checkpoint tensor '" +
                               entry.value("name", std::string("?")) + "' does not match expected '" +
                               name + "'");
    }
  }
  for (auto& [name, tensor] : model.params_) {
    (void)name;
    in.read(reinterpret_cast<char*>(tensor.data().data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(tensor.numel())));
    if (!in) throw std::runtime_error(path + ": truncated checkpoint data");
  }
  in.peek();
  if (!in.eof()) throw std::runtime_error(path + ": trailing bytes after checkpoint data");
  return model;
}

}  // namespace strec
