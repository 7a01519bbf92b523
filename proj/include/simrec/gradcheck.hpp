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

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "simrec/common.hpp"
#include "simrec/tensor.hpp"

namespace simrec {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradCheckOptions {
  double h = 1e-4;
  std::size_t min_coords = 200;
  std::uint64_t seed = 0;
  // Denominator floor: error = |a - n| / max(|a|, |n|, floor). Keeps
  // near-zero gradient entries from turning truncation noise into large
  // relative errors.
  double floor = 1e-3;
};

template <typename T>
using LossAndGrad = std::function<std::pair<double, std::vector<Tensor<T>>>(const std::vector<Tensor<T>>&)>;

inline double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Compares the analytic gradient at `params` against central differences on
// every coordinate, or on a random subsample of `min_coords` coordinates when
// there are more.
template <typename T>
GradCheckResult grad_check(const LossAndGrad<T>& fn, std::vector<Tensor<T>> params,
                           const GradCheckOptions& opt = {}) {
  const auto analytic = fn(params).second;
  if (analytic.size() != params.size()) fail("grad_check: gradient count mismatch");

  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (analytic[p].shape() != params[p].shape()) fail("grad_check: gradient shape mismatch for parameter ", p);
    for (std::size_t k = 0; k < params[p].size(); ++k) coords.emplace_back(p, k);
  }
  if (coords.size() > opt.min_coords) {
    Rng rng(opt.seed);
    rng.shuffle(coords);
    coords.resize(opt.min_coords);
    std::sort(coords.begin(), coords.end());
  }

  GradCheckResult res;
  for (const auto& [p, k] : coords) {
    const T orig = params[p][k];
    params[p][k] = static_cast<T>(orig + opt.h);
    const double up = fn(params).first;
    params[p][k] = static_cast<T>(orig - opt.h);
    const double down = fn(params).first;
    params[p][k] = orig;
    const double numeric = (up - down) / (2.0 * opt.h);
    const double a = static_cast<double>(analytic[p][k]);
    const double err = relative_error(a, numeric, opt.floor);
    ++res.coords_checked;
    if (err > res.max_rel_error || res.coords_checked == 1) {
      res.max_rel_error = std::max(res.max_rel_error, err);
      res.worst_param = p;
      res.worst_index = k;
      res.worst_analytic = a;
      res.worst_numeric = numeric;
    }
  }
  return res;
}

}  // namespace simrec
