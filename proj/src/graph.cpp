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
#include "strec/graph.hpp"

#include <stdexcept>

namespace strec {

const Tensor& Var::value() const { return graph->value(*this); }
const Shape& Var::shape() const { return graph->value(*this).shape(); }

Var Graph::parameter(const std::string& name, const Tensor& init) {
  if (param_ids_.count(name) > 0) {
    throw std::invalid_argument("parameter '" + name + "' registered twice");
  }
  Node node;
  node.value = init;
  node.grad = Tensor::zeros(init.shape());
  node.requires_grad = true;
  nodes_.push_back(std::move(node));
  const auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
  params_.emplace_back(name, id);
  param_ids_.emplace(name, id);
  return Var{this, id};
}

Var Graph::constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  for (const Var& in : inputs) {
    if (in.graph != this) throw std::invalid_argument("op inputs belong to different graphs");
    node.requires_grad = node.requires_grad || nodes_[in.id].requires_grad;
  }
  if (node.requires_grad) {
    node.grad = Tensor::zeros(node.value.shape());
    node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Graph::backward(Var loss) {
  if (loss.graph != this) throw std::invalid_argument("loss belongs to a different graph");
  if (value(loss).numel() != 1) {
    throw std::invalid_argument("backward requires a scalar loss, got shape " + shape_str(value(loss).shape()));
  }
  for (Node& node : nodes_) {
    if (node.requires_grad) node.grad.data().setZero();
  }
  if (!nodes_[loss.id].requires_grad) {
    // Loss does not depend on any parameter; all gradients stay zero.
    backward_ran_ = true;
    return;
  }
  nodes_[loss.id].grad.data()[0] = 1.0;
  for (std::uint32_t id = loss.id + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (node.requires_grad && node.backward) node.backward(*this, id);
  }
  backward_ran_ = true;
}

const Tensor& Graph::value(Var v) const {
  if (v.graph != this) throw std::invalid_argument("var belongs to a different graph");
  return nodes_[v.id].value;
}

const Tensor& Graph::grad(Var v) const {
  if (v.graph != this) throw std::invalid_argument("var belongs to a different graph");
  if (!nodes_[v.id].requires_grad) {
    throw std::invalid_argument("node does not track gradients");
  }
  return nodes_[v.id].grad;
}

const Tensor& Graph::grad(const std::string& parameter_name) const {
  auto it = param_ids_.find(parameter_name);
  if (it == param_ids_.end()) {
    throw std::invalid_argument("unknown parameter '" + parameter_name + "'");
  }
  return nodes_[it->second].grad;
}

}  // namespace strec
