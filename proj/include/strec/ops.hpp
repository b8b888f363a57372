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

#include <functional>
#include <string>
#include <vector>

#include "strec/graph.hpp"
#include "strec/tensor.hpp"

// Differentiable operations over Graph values. Free functions; every op
// validates shapes up front and records its backward rule on the tape.
namespace strec {

enum class Activation { kNone, kRelu, kSigmoid, kTanh };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation a);

// x [..., k] times w [k, n]; contraction over the trailing axis of x.
Var matmul(Var x, Var w);

// Batched matmul: a [N, m, k] with b [N, k, n], or b [N, n, k] when
// transpose_b is set. Result [N, m, n].
Var bmm(Var a, Var b, bool transpose_b = false);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
// bias [n] broadcast over all leading axes of x [..., n].
Var add_bias(Var x, Var bias);

Var relu(Var x);
Var sigmoid(Var x);
Var tanh(Var x);
Var activate(Var x, Activation activation);

// Affine map plus activation: activation(x * w + bias).
Var dense(Var x, Var w, Var bias, Activation activation);

// Softmax over the trailing axis; shift-invariant, rows sum to 1.
Var softmax(Var x);

Var concat_last(const std::vector<Var>& parts);
Var slice_last(Var x, Index start, Index len);
Var reshape(Var x, Shape shape);

// Gathers rows of table [vocab, dim] at the given indices; the result has
// shape leading + [dim] where shape_numel(leading) == ids.size().
Var embedding(Var table, const std::vector<Index>& ids, Shape leading);

// Masked mean over the middle axis of x [B, L, d]; rows with an all-zero
// mask yield zero vectors.
Var masked_mean(Var x, const Tensor& mask);

// x[:, t, :] of x [B, L, d].
Var select_time(Var x, Index t);

Var sum(Var x);

// Mean binary cross-entropy computed directly from logits [B] (or [B, 1]);
// labels must be exactly 0 or 1.
Var ce_with_logits(Var logits, const Tensor& labels);

// Per row of x [B, n]: keep the k largest entries at their values, zero the
// rest. Ties break toward the lower slot index. The selection is constant
// in backward, so gradients flow only through kept entries.
Var top_k_filter(Var x, int k);

// Central-difference gradient oracle for a deterministic scalar function.
Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x, double step);

// Constant [B] -> [B, cols] column expansion (for masks and indicators).
Tensor expand_cols(const Tensor& row, Index cols);

}  // namespace strec
