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
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "simrec/common.hpp"

namespace simrec {

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k) out += "x";
    out += std::to_string(s[k]);
  }
  return out + "]";
}

// Row-major dense tensor. Kernels in this library use rank-2 tensors only.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0))
      : shape_(std::move(shape)),
        data_(std::accumulate(shape_.begin(), shape_.end(), std::size_t{1},
                              std::multiplies<>()),
              fill) {}
  Tensor(std::size_t rows, std::size_t cols, T fill = T(0)) : Tensor(Shape{rows, cols}, fill) {}
  Tensor(std::size_t rows, std::size_t cols, std::vector<T> values)
      : shape_{rows, cols}, data_(std::move(values)) {
    if (data_.size() != rows * cols) {
      fail("Tensor: ", data_.size(), " values for shape ", shape_str(shape_));
    }
  }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  T& operator[](std::size_t k) { return data_[k]; }
  const T& operator[](std::size_t k) const { return data_[k]; }
  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols() + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols() + j]; }

  std::span<T> row(std::size_t i) { return {data_.data() + i * cols(), cols()}; }
  std::span<const T> row(std::size_t i) const { return {data_.data() + i * cols(), cols()}; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    for (T v : data_) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    for (std::size_t k = 0; k < data_.size(); ++k) out[k] = static_cast<U>(data_[k]);
    return out;
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) fail("max_abs_diff: shape mismatch ", shape_str(a.shape()), " vs ", shape_str(b.shape()));
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    m = std::max(m, std::abs(static_cast<double>(a[k]) - static_cast<double>(b[k])));
  }
  return m;
}

template <typename T>
Tensor<T> uniform_tensor(std::size_t rows, std::size_t cols, double lo, double hi, Rng& rng) {
  Tensor<T> t(rows, cols);
  for (auto& v : t.values()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

}  // namespace simrec
