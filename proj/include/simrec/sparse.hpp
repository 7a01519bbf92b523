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
#include <span>
#include <vector>

#include "simrec/common.hpp"

namespace simrec {

// Compressed sparse rows with nonnegative values. Columns within a row are
// strictly increasing.
template <typename V = double>
struct SparseRowMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<std::uint64_t> row_offsets{0};
  std::vector<std::uint32_t> col_indices;
  std::vector<V> values;

  std::size_t nnz() const { return col_indices.size(); }

  std::span<const std::uint32_t> row_cols(std::size_t r) const {
    return {col_indices.data() + row_offsets[r],
            col_indices.data() + row_offsets[r + 1]};
  }
  std::span<const V> row_values(std::size_t r) const {
    return {values.data() + row_offsets[r], values.data() + row_offsets[r + 1]};
  }

  // Appends one row; caller supplies strictly increasing columns.
  void push_row(std::span<const std::uint32_t> cols, std::span<const V> vals) {
    col_indices.insert(col_indices.end(), cols.begin(), cols.end());
    values.insert(values.end(), vals.begin(), vals.end());
    row_offsets.push_back(col_indices.size());
    ++n_rows;
  }

  V at(std::size_t r, std::size_t c) const {
    const auto cols = row_cols(r);
    auto it = std::lower_bound(cols.begin(), cols.end(), c);
    if (it == cols.end() || *it != c) return V(0);
    return values[row_offsets[r] + static_cast<std::size_t>(it - cols.begin())];
  }

  std::vector<double> to_dense() const {
    std::vector<double> d(n_rows * n_cols, 0.0);
    for (std::size_t r = 0; r < n_rows; ++r) {
      for (auto k = row_offsets[r]; k < row_offsets[r + 1]; ++k) {
        d[r * n_cols + col_indices[k]] = static_cast<double>(values[k]);
      }
    }
    return d;
  }

  void validate() const {
    if (row_offsets.size() != n_rows + 1) fail("CSR: row_offsets length mismatch");
    if (row_offsets.front() != 0 || row_offsets.back() != col_indices.size() ||
        values.size() != col_indices.size()) {
      fail("CSR: offsets do not cover the entries");
    }
    for (std::size_t r = 0; r < n_rows; ++r) {
      if (row_offsets[r] > row_offsets[r + 1]) fail("CSR: offsets decrease at row ", r);
      for (auto k = row_offsets[r]; k < row_offsets[r + 1]; ++k) {
        if (col_indices[k] >= n_cols) fail("CSR: column out of range in row ", r);
        if (k > row_offsets[r] && col_indices[k] <= col_indices[k - 1]) {
          fail("CSR: columns not strictly increasing in row ", r);
        }
        if (!std::isfinite(static_cast<double>(values[k])) || values[k] < V(0)) {
          fail("CSR: negative or non-finite value in row ", r);
        }
      }
    }
  }

  static SparseRowMatrix identity(std::size_t n) {
    SparseRowMatrix m;
    m.n_cols = n;
    for (std::uint32_t i = 0; i < n; ++i) {
      const V one(1);
      m.push_row(std::span<const std::uint32_t>(&i, 1), std::span<const V>(&one, 1));
    }
    return m;
  }

  friend bool operator==(const SparseRowMatrix&, const SparseRowMatrix&) = default;
};

}  // namespace simrec
