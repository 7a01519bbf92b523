// Copyright 2026 The SimRec Authors
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

#include <cmath>
#include <cstdint>
#include <vector>

#include "simrec/common.hpp"
#include "simrec/tensor.hpp"

namespace simrec {

template <typename T>
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t t = 0;
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
};

// One bias-corrected Adam update. Gradients are validated before any
// parameter changes.
template <typename T>
void adam_step(const std::vector<Tensor<T>*>& params, const std::vector<const Tensor<T>*>& grads,
               AdamState<T>& state, double lr) {
  if (params.size() != grads.size()) fail("adam_step: ", params.size(), " params vs ", grads.size(), " grads");
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (params[p]->shape() != grads[p]->shape()) {
      fail("adam_step: parameter ", p, " shape ", shape_str(params[p]->shape()), " vs gradient ",
           shape_str(grads[p]->shape()));
    }
    if (!grads[p]->all_finite()) fail("adam_step: non-finite gradient for parameter ", p);
  }
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.emplace_back(p->shape());
      state.v.emplace_back(p->shape());
    }
  } else if (state.m.size() != params.size()) {
    fail("adam_step: state holds ", state.m.size(), " moments for ", params.size(), " params");
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor<T>& w = *params[p];
    const Tensor<T>& g = *grads[p];
    Tensor<T>& m = state.m[p];
    Tensor<T>& v = state.v[p];
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double gk = g[k];
      const double mk = state.beta1 * m[k] + (1.0 - state.beta1) * gk;
      const double vk = state.beta2 * v[k] + (1.0 - state.beta2) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      w[k] = static_cast<T>(w[k] - lr * (mk / c1) / (std::sqrt(vk / c2) + state.eps));
    }
  }
}

}  // namespace simrec
