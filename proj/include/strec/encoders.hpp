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
#pragma once

#include <vector>

#include "strec/graph.hpp"
#include "strec/ops.hpp"
#include "strec/tensor.hpp"

// Behavior-sequence encoders: target attention, self-attention, GRU and
// mean pooling, all recorded on the tape so gradients flow into their
// parameters.
namespace strec {

// Projection parameters for attention. For target attention the query is
// the candidate item (w_q is [d_i, d]); for self-attention w_q is [d, d].
struct MhtaParams {
  Var w_q;
  Var w_k;  // [d, d]
  Var w_v;  // [d, d]
  int heads = 1;
};

// Attention probabilities captured during a forward pass, one [B, Lq, Lk]
// tensor per head, for diagnostics and normalization checks.
struct AttentionTrace {
  std::vector<Tensor> head_probs;
  Tensor mask;  // [B, Lk]
};

// Target attention: the candidate embedding queries the behavior sequence.
// e_i [B, d_i], e_b [B, L, d], mask [B, L] in {0,1}. Fully-masked rows
// yield zero vectors. Returns [B, d].
Var mhta(Var e_i, Var e_b, const Tensor& mask, const MhtaParams& params, AttentionTrace* trace = nullptr);

// Masked mean over sequence positions; all-masked rows yield zeros.
Var mean_pool(Var e_b, const Tensor& mask);

// One self-attention layer with a residual connection and no feed-forward
// sublayer. Masked positions produce zero rows and attract zero attention.
// Returns [B, L, d].
Var self_attention_encode(Var e_b, const Tensor& mask, const MhtaParams& params, AttentionTrace* trace = nullptr);

// Standard GRU gates over input dim d and hidden dim d_h.
struct GruParams {
  Var w_z, u_z, b_z;  // update gate: [d, d_h], [d_h, d_h], [d_h]
  Var w_r, u_r, b_r;  // reset gate
  Var w_h, u_h, b_h;  // candidate state
};

// Final hidden state after scanning valid positions in time order; masked
// steps carry the state through unchanged. Returns [B, d_h].
Var gru_encode(Var e_b, const Tensor& mask, const GruParams& params);

// Additive sinusoidal position encoding table [len, dim].
Tensor position_encoding(Index len, Index dim);

}  // namespace strec
