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
#include "strec/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace strec {

namespace {

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

Shape leading_with(const Shape& shape, Index last) {
  Shape out(shape.begin(), shape.end() - 1);
  out.push_back(last);
  return out;
}

double sigmoid_scalar(double x) { return 0.5 * (1.0 + std::tanh(0.5 * x)); }

}  // namespace

Activation activation_from_string(const std::string& name) {
  if (name == "none") return Activation::kNone;
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "tanh") return Activation::kTanh;
  throw std::invalid_argument("unknown activation '" + name + "' (expected none|relu|sigmoid|tanh)");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kNone: return "none";
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kTanh: return "tanh";
  }
  return "none";
}

Var matmul(Var x, Var w) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  require(wv.rank() == 2, "matmul: weight must be rank 2, got " + shape_str(wv.shape()));
  require(xv.rank() >= 1, "matmul: input must have rank >= 1");
  const Index k = xv.dim(-1);
  require(k == wv.dim(0), "matmul: inner extents differ, input " + shape_str(xv.shape()) + " vs weight " +
                              shape_str(wv.shape()));
  const Index rows = xv.numel() / k;
  const Index n = wv.dim(1);

  Tensor out = Tensor::zeros(leading_with(xv.shape(), n));
  out.mat(rows, n).noalias() = xv.mat(rows, k) * wv.mat(k, n);

  const auto xid = x.id, wid = w.id;
  return x.graph->record(std::move(out), {x, w}, [xid, wid, rows, k, n](Graph& g, std::uint32_t self) {
    MatMap gy = g.grad_ref(self).mat(rows, n);
    if (g.requires_grad(xid)) {
      g.grad_ref(xid).mat(rows, k).noalias() += gy * g.value(wid).mat(k, n).transpose();
    }
    if (g.requires_grad(wid)) {
      g.grad_ref(wid).mat(k, n).noalias() += g.value(xid).mat(rows, k).transpose() * gy;
    }
  });
}

Var bmm(Var a, Var b, bool transpose_b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require(av.rank() == 3 && bv.rank() == 3,
          "bmm: both operands must be rank 3, got " + shape_str(av.shape()) + " and " + shape_str(bv.shape()));
  const Index batches = av.dim(0);
  require(bv.dim(0) == batches, "bmm: batch extents differ, " + shape_str(av.shape()) + " vs " + shape_str(bv.shape()));
  const Index m = av.dim(1), k = av.dim(2);
  const Index bk = transpose_b ? bv.dim(2) : bv.dim(1);
  const Index n = transpose_b ? bv.dim(1) : bv.dim(2);
  require(bk == k, "bmm: contraction extents differ, " + shape_str(av.shape()) + " vs " + shape_str(bv.shape()) +
                       (transpose_b ? " (transposed)" : ""));

  Tensor out = Tensor::zeros({batches, m, n});
  for (Index i = 0; i < batches; ++i) {
    ConstMatMap ai(av.data().data() + i * m * k, m, k);
    MatMap yi(out.data().data() + i * m * n, m, n);
    if (transpose_b) {
      ConstMatMap bi(bv.data().data() + i * n * k, n, k);
      yi.noalias() = ai * bi.transpose();
    } else {
      ConstMatMap bi(bv.data().data() + i * k * n, k, n);
      yi.noalias() = ai * bi;
    }
  }

  const auto aid = a.id, bid = b.id;
  return a.graph->record(
      std::move(out), {a, b}, [aid, bid, batches, m, k, n, transpose_b](Graph& g, std::uint32_t self) {
        const Tensor& gy = g.grad_ref(self);
        const Tensor& avv = g.value(aid);
        const Tensor& bvv = g.value(bid);
        const bool need_a = g.requires_grad(aid);
        const bool need_b = g.requires_grad(bid);
        for (Index i = 0; i < batches; ++i) {
          ConstMatMap gyi(gy.data().data() + i * m * n, m, n);
          ConstMatMap ai(avv.data().data() + i * m * k, m, k);
          if (transpose_b) {
            ConstMatMap bi(bvv.data().data() + i * n * k, n, k);
            if (need_a) MatMap(g.grad_ref(aid).data().data() + i * m * k, m, k).noalias() += gyi * bi;
            if (need_b) MatMap(g.grad_ref(bid).data().data() + i * n * k, n, k).noalias() += gyi.transpose() * ai;
          } else {
            ConstMatMap bi(bvv.data().data() + i * k * n, k, n);
            if (need_a) MatMap(g.grad_ref(aid).data().data() + i * m * k, m, k).noalias() += gyi * bi.transpose();
            if (need_b) MatMap(g.grad_ref(bid).data().data() + i * k * n, k, n).noalias() += ai.transpose() * gyi;
          }
        }
      });
}

Var add(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require(av.same_shape(bv), "add: shapes differ, " + shape_str(av.shape()) + " vs " + shape_str(bv.shape()));
  Tensor out(av.shape(), av.data() + bv.data());
  const auto aid = a.id, bid = b.id;
  return a.graph->record(std::move(out), {a, b}, [aid, bid](Graph& g, std::uint32_t self) {
    const Eigen::VectorXd& gy = g.grad_ref(self).data();
    if (g.requires_grad(aid)) g.grad_ref(aid).data() += gy;
    if (g.requires_grad(bid)) g.grad_ref(bid).data() += gy;
  });
}

Var sub(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require(av.same_shape(bv), "sub: shapes differ, " + shape_str(av.shape()) + " vs " + shape_str(bv.shape()));
  Tensor out(av.shape(), av.data() - bv.data());
  const auto aid = a.id, bid = b.id;
  return a.graph->record(std::move(out), {a, b}, [aid, bid](Graph& g, std::uint32_t self) {
    const Eigen::VectorXd& gy = g.grad_ref(self).data();
    if (g.requires_grad(aid)) g.grad_ref(aid).data() += gy;
    if (g.requires_grad(bid)) g.grad_ref(bid).data() -= gy;
  });
}

Var mul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require(av.same_shape(bv), "mul: shapes differ, " + shape_str(av.shape()) + " vs " + shape_str(bv.shape()));
  Tensor out(av.shape(), (av.data().array() * bv.data().array()).matrix());
  const auto aid = a.id, bid = b.id;
  return a.graph->record(std::move(out), {a, b}, [aid, bid](Graph& g, std::uint32_t self) {
    const Eigen::VectorXd& gy = g.grad_ref(self).data();
    if (g.requires_grad(aid)) g.grad_ref(aid).data().array() += gy.array() * g.value(bid).data().array();
    if (g.requires_grad(bid)) g.grad_ref(bid).data().array() += gy.array() * g.value(aid).data().array();
  });
}

Var scale(Var a, double factor) {
  const Tensor& av = a.value();
  Tensor out(av.shape(), av.data() * factor);
  const auto aid = a.id;
  return a.graph->record(std::move(out), {a}, [aid, factor](Graph& g, std::uint32_t self) {
    if (g.requires_grad(aid)) g.grad_ref(aid).data() += factor * g.grad_ref(self).data();
  });
}

Var add_bias(Var x, Var bias) {
  const Tensor& xv = x.value();
  const Tensor& bv = bias.value();
  require(bv.rank() == 1, "add_bias: bias must be rank 1, got " + shape_str(bv.shape()));
  require(xv.rank() >= 1 && xv.dim(-1) == bv.dim(0),
          "add_bias: trailing extent of " + shape_str(xv.shape()) + " does not match bias " + shape_str(bv.shape()));
  const Index n = bv.dim(0);
  const Index rows = xv.numel() / n;

  Tensor out = Tensor::zeros(xv.shape());
  out.mat(rows, n) = xv.mat(rows, n).rowwise() + bv.data().transpose();

  const auto xid = x.id, bid = bias.id;
  return x.graph->record(std::move(out), {x, bias}, [xid, bid, rows, n](Graph& g, std::uint32_t self) {
    MatMap gy = g.grad_ref(self).mat(rows, n);
    if (g.requires_grad(xid)) g.grad_ref(xid).mat(rows, n) += gy;
    if (g.requires_grad(bid)) g.grad_ref(bid).data() += gy.colwise().sum().transpose();
  });
}

Var activate(Var x, Activation activation) {
  if (activation == Activation::kNone) return x;
  const Tensor& xv = x.value();
  Tensor out = Tensor::zeros(xv.shape());
  switch (activation) {
    case Activation::kRelu:
      out.data() = xv.data().cwiseMax(0.0);
      break;
    case Activation::kSigmoid:
      out.data().array() = 0.5 * (1.0 + (0.5 * xv.data().array()).tanh());
      break;
    case Activation::kTanh:
      out.data().array() = xv.data().array().tanh();
      break;
    case Activation::kNone:
      break;
  }
  const auto xid = x.id;
  return x.graph->record(std::move(out), {x}, [xid, activation](Graph& g, std::uint32_t self) {
    if (!g.requires_grad(xid)) return;
    const Eigen::VectorXd& gy = g.grad_ref(self).data();
    const Eigen::VectorXd& y = g.value(self).data();
    Eigen::VectorXd& gx = g.grad_ref(xid).data();
    switch (activation) {
      case Activation::kRelu:
        gx.array() += gy.array() * (y.array() > 0.0).cast<double>();
        break;
      case Activation::kSigmoid:
        gx.array() += gy.array() * y.array() * (1.0 - y.array());
        break;
      case Activation::kTanh:
        gx.array() += gy.array() * (1.0 - y.array().square());
        break;
      case Activation::kNone:
        break;
    }
  });
}

Var relu(Var x) { return activate(x, Activation::kRelu); }
Var sigmoid(Var x) { return activate(x, Activation::kSigmoid); }
Var tanh(Var x) { return activate(x, Activation::kTanh); }

Var dense(Var x, Var w, Var bias, Activation activation) {
  return activate(add_bias(matmul(x, w), bias), activation);
}

Var softmax(Var x) {
  const Tensor& xv = x.value();
  require(xv.rank() >= 1, "softmax: input must have rank >= 1");
  const Index n = xv.dim(-1);
  const Index rows = xv.numel() / n;

  Tensor out = Tensor::zeros(xv.shape());
  {
    ConstMatMap in = xv.mat(rows, n);
    MatMap y = out.mat(rows, n);
    for (Index r = 0; r < rows; ++r) {
      const double m = in.row(r).maxCoeff();
      // std::exp underflows to an exact zero for strongly negative shifted
      // scores; Eigen's vectorized exp clamps its argument and leaves
      // denormals behind, which would let masked positions leak weight.
      for (Index c = 0; c < n; ++c) y(r, c) = std::exp(in(r, c) - m);
      y.row(r) /= y.row(r).sum();
    }
  }

  const auto xid = x.id;
  return x.graph->record(std::move(out), {x}, [xid, rows, n](Graph& g, std::uint32_t self) {
    if (!g.requires_grad(xid)) return;
    MatMap gy = g.grad_ref(self).mat(rows, n);
    ConstMatMap y = g.value(self).mat(rows, n);
    MatMap gx = g.grad_ref(xid).mat(rows, n);
    for (Index r = 0; r < rows; ++r) {
      const double dot = gy.row(r).dot(y.row(r));
      gx.row(r).array() += y.row(r).array() * (gy.row(r).array() - dot);
    }
  });
}

Var concat_last(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_last: needs at least one part");
  const Tensor& first = parts[0].value();
  require(first.rank() >= 1, "concat_last: parts must have rank >= 1");
  Index total = 0;
  std::vector<Index> widths;
  std::vector<std::uint32_t> ids;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    require(pv.rank() == first.rank() &&
                std::equal(pv.shape().begin(), pv.shape().end() - 1, first.shape().begin()),
            "concat_last: leading shape mismatch, " + shape_str(first.shape()) + " vs " + shape_str(pv.shape()));
    widths.push_back(pv.dim(-1));
    ids.push_back(p.id);
    total += pv.dim(-1);
  }
  const Index rows = first.numel() / first.dim(-1);

  Tensor out = Tensor::zeros(leading_with(first.shape(), total));
  {
    MatMap y = out.mat(rows, total);
    Index off = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      y.block(0, off, rows, widths[i]) = parts[i].value().mat(rows, widths[i]);
      off += widths[i];
    }
  }

  return parts[0].graph->record(std::move(out), parts, [ids, widths, rows, total](Graph& g, std::uint32_t self) {
    MatMap gy = g.grad_ref(self).mat(rows, total);
    Index off = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (g.requires_grad(ids[i])) {
        g.grad_ref(ids[i]).mat(rows, widths[i]) += gy.block(0, off, rows, widths[i]);
      }
      off += widths[i];
    }
  });
}

Var slice_last(Var x, Index start, Index len) {
  const Tensor& xv = x.value();
  require(xv.rank() >= 1, "slice_last: input must have rank >= 1");
  const Index n = xv.dim(-1);
  require(start >= 0 && len >= 1 && start + len <= n,
          "slice_last: range [" + std::to_string(start) + ", " + std::to_string(start + len) +
              ") out of bounds for trailing extent " + std::to_string(n));
  const Index rows = xv.numel() / n;

  Tensor out = Tensor::zeros(leading_with(xv.shape(), len));
  out.mat(rows, len) = xv.mat(rows, n).block(0, start, rows, len);

  const auto xid = x.id;
  return x.graph->record(std::move(out), {x}, [xid, start, len, rows, n](Graph& g, std::uint32_t self) {
    if (!g.requires_grad(xid)) return;
    g.grad_ref(xid).mat(rows, n).block(0, start, rows, len) += g.grad_ref(self).mat(rows, len);
  });
}

Var reshape(Var x, Shape shape) {
  const Tensor& xv = x.value();
  require(shape_numel(shape) == xv.numel(),
          "reshape: cannot view " + shape_str(xv.shape()) + " as " + shape_str(shape));
  Tensor out(std::move(shape), xv.data());
  const auto xid = x.id;
  return x.graph->record(std::move(out), {x}, [xid](Graph& g, std::uint32_t self) {
    if (g.requires_grad(xid)) g.grad_ref(xid).data() += g.grad_ref(self).data();
  });
}

Var embedding(Var table, const std::vector<Index>& ids, Shape leading) {
  const Tensor& tv = table.value();
  require(tv.rank() == 2, "embedding: table must be rank 2, got " + shape_str(tv.shape()));
  const Index vocab = tv.dim(0);
  const Index dim = tv.dim(1);
  const Index rows = static_cast<Index>(ids.size());
  require(shape_numel(leading) == rows, "embedding: leading shape " + shape_str(leading) + " does not hold " +
                                            std::to_string(ids.size()) + " ids");
  for (std::size_t i = 0; i < ids.size(); ++i) {
    require(ids[i] >= 0 && ids[i] < vocab, "embedding: id " + std::to_string(ids[i]) + " at position " +
                                               std::to_string(i) + " outside vocab " + std::to_string(vocab));
  }

  Shape out_shape = leading;
  out_shape.push_back(dim);
  Tensor out = Tensor::zeros(std::move(out_shape));
  {
    ConstMatMap t = tv.mat(vocab, dim);
    MatMap y = out.mat(rows, dim);
    for (Index r = 0; r < rows; ++r) y.row(r) = t.row(ids[r]);
  }

  const auto tid = table.id;
  return table.graph->record(std::move(out), {table}, [tid, ids, rows, vocab, dim](Graph& g, std::uint32_t self) {
    if (!g.requires_grad(tid)) return;
    MatMap gy = g.grad_ref(self).mat(rows, dim);
    MatMap gt = g.grad_ref(tid).mat(vocab, dim);
    for (Index r = 0; r < rows; ++r) gt.row(ids[r]) += gy.row(r);
  });
}

Var masked_mean(Var x, const Tensor& mask) {
  const Tensor& xv = x.value();
  require(xv.rank() == 3, "masked_mean: input must be rank 3, got " + shape_str(xv.shape()));
  const Index batch = xv.dim(0), len = xv.dim(1), dim = xv.dim(2);
  require(mask.rank() == 2 && mask.dim(0) == batch && mask.dim(1) == len,
          "masked_mean: mask " + shape_str(mask.shape()) + " does not match input " + shape_str(xv.shape()));
  for (Index i = 0; i < mask.numel(); ++i) {
    require(mask[i] == 0.0 || mask[i] == 1.0, "masked_mean: mask entries must be 0 or 1");
  }

  std::vector<double> counts(static_cast<std::size_t>(batch), 0.0);
  for (Index b = 0; b < batch; ++b) {
    for (Index l = 0; l < len; ++l) counts[b] += mask.at({b, l});
  }

  Tensor out = Tensor::zeros({batch, dim});
  {
    MatMap y = out.mat(batch, dim);
    for (Index b = 0; b < batch; ++b) {
      if (counts[b] == 0.0) continue;
      for (Index l = 0; l < len; ++l) {
        if (mask.at({b, l}) == 0.0) continue;
        y.row(b) += ConstMatMap(xv.data().data() + (b * len + l) * dim, 1, dim);
      }
      y.row(b) /= counts[b];
    }
  }

  const auto xid = x.id;
  return x.graph->record(std::move(out), {x}, [xid, mask, counts, batch, len, dim](Graph& g, std::uint32_t self) {
    if (!g.requires_grad(xid)) return;
    MatMap gy = g.grad_ref(self).mat(batch, dim);
    Tensor& gx = g.grad_ref(xid);
    for (Index b = 0; b < batch; ++b) {
      if (counts[b] == 0.0) continue;
      for (Index l = 0; l < len; ++l) {
        if (mask.at({b, l}) == 0.0) continue;
        MatMap(gx.data().data() + (b * len + l) * dim, 1, dim) += gy.row(b) / counts[b];
      }
    }
  });
}

Var select_time(Var x, Index t) {
  const Tensor& xv = x.value();
  require(xv.rank() == 3, "select_time: input must be rank 3, got " + shape_str(xv.shape()));
  const Index batch = xv.dim(0), len = xv.dim(1), dim = xv.dim(2);
  require(t >= 0 && t < len, "select_time: index " + std::to_string(t) + " outside length " + std::to_string(len));

  Tensor out = Tensor::zeros({batch, dim});
  {
    MatMap y = out.mat(batch, dim);
    for (Index b = 0; b < batch; ++b) {
      y.row(b) = ConstMatMap(xv.data().data() + (b * len + t) * dim, 1, dim);
    }
  }

  const auto xid = x.id;
  return x.graph->record(std::move(out), {x}, [xid, t, batch, len, dim](Graph& g, std::uint32_t self) {
    if (!g.requires_grad(xid)) return;
    MatMap gy = g.grad_ref(self).mat(batch, dim);
    Tensor& gx = g.grad_ref(xid);
    for (Index b = 0; b < batch; ++b) {
      MatMap(gx.data().data() + (b * len + t) * dim, 1, dim) += gy.row(b);
    }
  });
}

Var sum(Var x) {
  Tensor out = Tensor::scalar(x.value().data().sum());
  const auto xid = x.id;
  return x.graph->record(std::move(out), {x}, [xid](Graph& g, std::uint32_t self) {
    if (g.requires_grad(xid)) g.grad_ref(xid).data().array() += g.grad_ref(self).data()[0];
  });
}

Var ce_with_logits(Var logits, const Tensor& labels) {
  const Tensor& zv = logits.value();
  require(zv.rank() == 1 || (zv.rank() == 2 && zv.dim(1) == 1),
          "ce_with_logits: logits must be [B] or [B, 1], got " + shape_str(zv.shape()));
  const Index batch = zv.numel();
  require(labels.numel() == batch, "ce_with_logits: " + std::to_string(batch) + " logits vs " +
                                       std::to_string(labels.numel()) + " labels");
  for (Index i = 0; i < batch; ++i) {
    require(labels[i] == 0.0 || labels[i] == 1.0,
            "ce_with_logits: label at position " + std::to_string(i) + " is not 0 or 1");
  }

  double total = 0.0;
  for (Index i = 0; i < batch; ++i) {
    const double z = zv[i];
    total += std::max(z, 0.0) - z * labels[i] + std::log1p(std::exp(-std::abs(z)));
  }
  Tensor out = Tensor::scalar(total / static_cast<double>(batch));

  const auto zid = logits.id;
  return logits.graph->record(std::move(out), {logits}, [zid, labels, batch](Graph& g, std::uint32_t self) {
    if (!g.requires_grad(zid)) return;
    const double g0 = g.grad_ref(self).data()[0];
    Tensor& gz = g.grad_ref(zid);
    const Tensor& zv = g.value(zid);
    for (Index i = 0; i < batch; ++i) {
      gz[i] += g0 * (sigmoid_scalar(zv[i]) - labels[i]) / static_cast<double>(batch);
    }
  });
}

Var top_k_filter(Var x, int k) {
  const Tensor& xv = x.value();
  require(xv.rank() == 2, "top_k_filter: input must be rank 2, got " + shape_str(xv.shape()));
  const Index batch = xv.dim(0), n = xv.dim(1);
  require(k >= 1 && k <= n,
          "top_k_filter: k = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");

  Tensor keep = Tensor::zeros({batch, n});
  {
    ConstMatMap in = xv.mat(batch, n);
    std::vector<Index> order(static_cast<std::size_t>(n));
    for (Index b = 0; b < batch; ++b) {
      std::iota(order.begin(), order.end(), Index{0});
      // stable_sort leaves equal values in slot order, so ties keep the
      // lower index.
      std::stable_sort(order.begin(), order.end(),
                       [&](Index i, Index j) { return in(b, i) > in(b, j); });
      for (int r = 0; r < k; ++r) keep.at({b, order[static_cast<std::size_t>(r)]}) = 1.0;
    }
  }

  Tensor out({batch, n}, (xv.data().array() * keep.data().array()).matrix());
  const auto xid = x.id;
  return x.graph->record(std::move(out), {x}, [xid, keep](Graph& g, std::uint32_t self) {
    if (!g.requires_grad(xid)) return;
    g.grad_ref(xid).data().array() += g.grad_ref(self).data().array() * keep.data().array();
  });
}

Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x, double step) {
  require(step > 0.0, "finite_difference_gradient: step must be positive");
  Tensor grad = Tensor::zeros(x.shape());
  Tensor probe = x;
  for (Index i = 0; i < x.numel(); ++i) {
    const double original = probe[i];
    probe[i] = original + step;
    const double up = f(probe);
    probe[i] = original - step;
    const double down = f(probe);
    probe[i] = original;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw std::runtime_error("finite_difference_gradient: non-finite value at coordinate " + std::to_string(i));
    }
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

Tensor expand_cols(const Tensor& row, Index cols) {
  require(row.rank() == 1, "expand_cols: input must be rank 1, got " + shape_str(row.shape()));
  require(cols >= 1, "expand_cols: cols must be positive");
  Tensor out = Tensor::zeros({row.dim(0), cols});
  out.mat(row.dim(0), cols).colwise() = row.data();
  return out;
}

}  // namespace strec
