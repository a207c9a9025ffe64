// Copyright (c) 2026 The crowdtag Authors. All Rights Reserved.
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

#include "crowdtag/parameters.hpp"

#include "crowdtag/error.hpp"

namespace crowdtag {

std::size_t ParameterSet::add(std::string name, Tensor value, bool backbone) {
  if (find(name)) throw Error("duplicate parameter name '" + name + "'");
  params_.push_back({std::move(name), std::move(value), backbone});
  return params_.size() - 1;
}

std::optional<std::size_t> ParameterSet::find(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

std::vector<Tensor> ParameterSet::zeros_like() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.emplace_back(p.value.shape());
  return out;
}

ParamBinder::ParamBinder(Graph& graph, const ParameterSet& params, bool requires_grad)
    : graph_(graph), params_(params), requires_grad_(requires_grad), vars_(params.size()) {}

Var ParamBinder::operator()(std::size_t id) {
  auto& slot = vars_.at(id);
  if (!slot) slot = graph_.leaf_ref(params_[id].value, requires_grad_);
  return *slot;
}

void ParamBinder::accumulate(Gradients& grads, double scale) const {
  for (std::size_t id = 0; id < vars_.size(); ++id) {
    if (vars_[id] && graph_.has_grad(*vars_[id])) {
      grads[id].add_inplace(graph_.grad(*vars_[id]), scale);
    }
  }
}

}  // namespace crowdtag
