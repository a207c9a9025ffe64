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

#pragma once

#include <cstddef>
#include <vector>

#include "crowdtag/parameters.hpp"

namespace crowdtag {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

void validate(const AdamConfig& config);

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::size_t step = 0;

  AdamState() = default;
  explicit AdamState(const ParameterSet& params)
      : m(params.zeros_like()), v(params.zeros_like()) {}
};

// One bias-corrected Adam update with a constant learning rate. Parameters
// with skip_backbone set and Parameter::backbone true are left untouched.
// Throws ShapeError when gradients or moments do not mirror the parameters.
void adam_step(ParameterSet& params, const Gradients& grads, AdamState& state,
               const AdamConfig& config, bool skip_backbone = false);

double global_norm(const Gradients& grads);

// Rescales all gradients uniformly when their global L2 norm exceeds
// max_norm. Returns the norm before clipping.
double clip_gradients(Gradients& grads, double max_norm);

}  // namespace crowdtag
