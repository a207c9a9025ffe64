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

#include "crowdtag/optim.hpp"

#include <cmath>

#include "crowdtag/error.hpp"

namespace crowdtag {

void validate(const AdamConfig& c) {
  if (!(c.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0) || !(c.beta2 >= 0.0 && c.beta2 < 1.0))
    throw ConfigError("Adam betas must be in [0, 1)");
  if (!(c.epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
}

void adam_step(ParameterSet& params, const Gradients& grads, AdamState& state,
               const AdamConfig& c, bool skip_backbone) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size())
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters, " +
                     std::to_string(grads.size()) + " gradients, " +
                     std::to_string(state.m.size()) + " moments");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Shape& s = params[i].value.shape();
    if (grads[i].shape() != s || state.m[i].shape() != s || state.v[i].shape() != s)
      throw ShapeError("adam_step " + params[i].name, shape_string(s),
                       shape_string(grads[i].shape()));
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(c.beta1, t);
  const double correct2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (skip_backbone && params[i].backbone) continue;
    auto w = params[i].value.values();
    auto g = grads[i].values();
    auto m = state.m[i].values();
    auto v = state.v[i].values();
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
      const double m_hat = m[k] / correct1;
      const double v_hat = v[k] / correct2;
      w[k] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

double global_norm(const Gradients& grads) {
  double sq = 0.0;
  for (const Tensor& g : grads)
    for (double x : g.values()) sq += x * x;
  return std::sqrt(sq);
}

double clip_gradients(Gradients& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw ConfigError("clip norm must be positive");
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double factor = max_norm / norm;
    for (Tensor& g : grads)
      for (double& x : g.values()) x *= factor;
  }
  return norm;
}

}  // namespace crowdtag
