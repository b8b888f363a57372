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
#include "strec/encoders.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace strec {

namespace {

constexpr double kMaskBias = -1e9;

void check_mask(const Tensor& mask, Index batch, Index len, const char* op) {
  if (mask.rank() != 2 || mask.dim(0) != batch || mask.dim(1) != len) {
    throw std::invalid_argument(std::string(op) + ": mask " + shape_str(mask.shape()) +
                                " does not match sequence [" + std::to_string(batch) + ", " +
                                std::to_string(len) + ", *]");
  }
  for (Index i = 0; i < mask.numel(); ++i) {
    if (mask[i] != 0.0 && mask[i] != 1.0) {
      throw std::invalid_argument(std::string(op) + ": mask entries must be 0 or 1");
    }
  }
}

// Key-side additive bias: 0 on valid positions, kMaskBias on padding,
// repeated across lq query rows.
Tensor key_bias(const Tensor& mask, Index lq) {
  const Index batch = mask.dim(0), lk = mask.dim(1);
  Tensor bias = Tensor::zeros({batch, lq, lk});
  for (Index b = 0; b < batch; ++b) {
    for (Index q = 0; q < lq; ++q) {
      for (Index k = 0; k < lk; ++k) {
        bias.at({b, q, k}) = mask.at({b, k}) == 1.0 ? 0.0 : kMaskBias;
      }
    }
  }
  return bias;
}

// mask [B, L] replicated across a trailing dim.
Tensor repeat_rows(const Tensor& mask, Index dim) {
  const Index batch = mask.dim(0), len = mask.dim(1);
  Tensor out = Tensor::zeros({batch, len, dim});
  for (Index b = 0; b < batch; ++b) {
    for (Index l = 0; l < len; ++l) {
      for (Index j = 0; j < dim; ++j) out.at({b, l, j}) = mask.at({b, l});
    }
  }
  return out;
}

// Per-sample indicator of having at least one valid position.
Tensor any_valid(const Tensor& mask) {
  const Index batch = mask.dim(0), len = mask.dim(1);
  Tensor out = Tensor::zeros({batch});
  for (Index b = 0; b < batch; ++b) {
    for (Index l = 0; l < len; ++l) {
      if (mask.at({b, l}) == 1.0) {
        out[b] = 1.0;
        break;
      }
    }
  }
  return out;
}

struct AttentionShapes {
  Index batch, len, d, d_head;
};

AttentionShapes check_attention(const Tensor& eb, const MhtaParams& p, const char* op) {
  if (eb.rank() != 3) {
    throw std::invalid_argument(std::string(op) + ": sequence must be rank 3, got " + shape_str(eb.shape()));
  }
  const Index d = eb.dim(2);
  if (p.w_k.value().rank() != 2 || p.w_k.dim(0) != d || p.w_k.dim(1) != d ||
      p.w_v.value().rank() != 2 || p.w_v.dim(0) != d || p.w_v.dim(1) != d) {
    throw std::invalid_argument(std::string(op) + ": key/value projections must be [" + std::to_string(d) +
                                ", " + std::to_string(d) + "]");
  }
  if (p.heads < 1 || d % p.heads != 0) {
    throw std::invalid_argument(std::string(op) + ": head count " + std::to_string(p.heads) +
                                " must divide d = " + std::to_string(d));
  }
  return {eb.dim(0), eb.dim(1), d, d / p.heads};
}

}  // namespace

Var mhta(Var e_i, Var e_b, const Tensor& mask, const MhtaParams& params, AttentionTrace* trace) {
  const AttentionShapes s = check_attention(e_b.value(), params, "mhta");
  if (e_i.value().rank() != 2 || e_i.dim(0) != s.batch) {
    throw std::invalid_argument("mhta: query batch must be [" + std::to_string(s.batch) + ", d_i], got " +
                                shape_str(e_i.shape()));
  }
  if (params.w_q.value().rank() != 2 || params.w_q.dim(0) != e_i.dim(1) || params.w_q.dim(1) != s.d) {
    throw std::invalid_argument("mhta: query projection must be [" + std::to_string(e_i.dim(1)) + ", " +
                                std::to_string(s.d) + "], got " + shape_str(params.w_q.shape()));
  }
  check_mask(mask, s.batch, s.len, "mhta");

  Graph& g = *e_b.graph;
  Var q = matmul(e_i, params.w_q);  // [B, d]
  Var k = matmul(e_b, params.w_k);  // [B, L, d]
  Var v = matmul(e_b, params.w_v);  // [B, L, d]
  Var bias = g.constant(key_bias(mask, 1));  // [B, 1, L]

  if (trace) {
    trace->head_probs.clear();
    trace->mask = mask;
  }

  std::vector<Var> heads;
  for (int h = 0; h < params.heads; ++h) {
    const Index off = h * s.d_head;
    Var qh = reshape(slice_last(q, off, s.d_head), {s.batch, 1, s.d_head});
    Var kh = slice_last(k, off, s.d_head);
    Var vh = slice_last(v, off, s.d_head);
    Var scores = scale(bmm(qh, kh, true), 1.0 / std::sqrt(static_cast<double>(s.d_head)));
    Var probs = softmax(add(scores, bias));  // [B, 1, L]
    if (trace) trace->head_probs.push_back(probs.value());
    heads.push_back(reshape(bmm(probs, vh), {s.batch, s.d_head}));
  }
  Var out = concat_last(heads);
  // Rows with no valid positions collapse to zero vectors.
  return mul(out, g.constant(expand_cols(any_valid(mask), s.d)));
}

Var mean_pool(Var e_b, const Tensor& mask) {
  if (e_b.value().rank() != 3) {
    throw std::invalid_argument("mean_pool: sequence must be rank 3, got " + shape_str(e_b.shape()));
  }
  check_mask(mask, e_b.dim(0), e_b.dim(1), "mean_pool");
  return masked_mean(e_b, mask);
}

Var self_attention_encode(Var e_b, const Tensor& mask, const MhtaParams& params, AttentionTrace* trace) {
  const AttentionShapes s = check_attention(e_b.value(), params, "self_attention_encode");
  if (params.w_q.value().rank() != 2 || params.w_q.dim(0) != s.d || params.w_q.dim(1) != s.d) {
    throw std::invalid_argument("self_attention_encode: query projection must be [" + std::to_string(s.d) + ", " +
                                std::to_string(s.d) + "], got " + shape_str(params.w_q.shape()));
  }
  check_mask(mask, s.batch, s.len, "self_attention_encode");

  Graph& g = *e_b.graph;
  Var q = matmul(e_b, params.w_q);
  Var k = matmul(e_b, params.w_k);
  Var v = matmul(e_b, params.w_v);
  Var bias = g.constant(key_bias(mask, s.len));  // [B, L, L]

  if (trace) {
    trace->head_probs.clear();
    trace->mask = mask;
  }

  std::vector<Var> heads;
  for (int h = 0; h < params.heads; ++h) {
    const Index off = h * s.d_head;
    Var qh = slice_last(q, off, s.d_head);
    Var kh = slice_last(k, off, s.d_head);
    Var vh = slice_last(v, off, s.d_head);
    Var scores = scale(bmm(qh, kh, true), 1.0 / std::sqrt(static_cast<double>(s.d_head)));
    Var probs = softmax(add(scores, bias));  // [B, L, L]
    if (trace) trace->head_probs.push_back(probs.value());
    heads.push_back(bmm(probs, vh));
  }
  Var out = add(concat_last(heads), e_b);  // residual
  // Padding rows carry no representation.
  return mul(out, g.constant(repeat_rows(mask, s.d)));
}

Var gru_encode(Var e_b, const Tensor& mask, const GruParams& params) {
  if (e_b.value().rank() != 3) {
    throw std::invalid_argument("gru_encode: sequence must be rank 3, got " + shape_str(e_b.shape()));
  }
  const Index batch = e_b.dim(0), len = e_b.dim(1), d = e_b.dim(2);
  check_mask(mask, batch, len, "gru_encode");
  if (params.w_z.value().rank() != 2 || params.w_z.dim(0) != d) {
    throw std::invalid_argument("gru_encode: input projection must be [" + std::to_string(d) + ", d_h], got " +
                                shape_str(params.w_z.shape()));
  }
  const Index d_h = params.w_z.dim(1);
  for (const Var& m : {params.u_z, params.u_r, params.u_h}) {
    if (m.value().rank() != 2 || m.dim(0) != d_h || m.dim(1) != d_h) {
      throw std::invalid_argument("gru_encode: recurrent matrices must be [" + std::to_string(d_h) + ", " +
                                  std::to_string(d_h) + "], got " + shape_str(m.shape()));
    }
  }

  Graph& g = *e_b.graph;
  Var h = g.constant(Tensor::zeros({batch, d_h}));
  Var ones = g.constant(Tensor::full({batch, d_h}, 1.0));

  for (Index t = 0; t < len; ++t) {
    Var x = select_time(e_b, t);
    Var z = sigmoid(add_bias(add(matmul(x, params.w_z), matmul(h, params.u_z)), params.b_z));
    Var r = sigmoid(add_bias(add(matmul(x, params.w_r), matmul(h, params.u_r)), params.b_r));
    Var cand = tanh(add_bias(add(matmul(x, params.w_h), matmul(mul(r, h), params.u_h)), params.b_h));
    Var next = add(mul(sub(ones, z), h), mul(z, cand));

    // Masked steps keep the previous state.
    Tensor step(Shape{batch}, Eigen::VectorXd::Zero(batch));
    for (Index b = 0; b < batch; ++b) step[b] = mask.at({b, t});
    Var keep = g.constant(expand_cols(step, d_h));
    Var drop = g.constant(expand_cols(Tensor(Shape{batch}, Eigen::VectorXd::Ones(batch) - step.data()), d_h));
    h = add(mul(keep, next), mul(drop, h));
  }
  return h;
}

Tensor position_encoding(Index len, Index dim) {
  if (len < 1 || dim < 1) throw std::invalid_argument("position_encoding: extents must be positive");
  Tensor out = Tensor::zeros({len, dim});
  for (Index pos = 0; pos < len; ++pos) {
    for (Index j = 0; j < dim; ++j) {
      const double exponent = static_cast<double>(2 * (j / 2)) / static_cast<double>(dim);
      const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
      out.at({pos, j}) = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return out;
}

}  // namespace strec
