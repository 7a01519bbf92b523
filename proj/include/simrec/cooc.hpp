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
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "simrec/common.hpp"
#include "simrec/data.hpp"
#include "simrec/sparse.hpp"

namespace simrec {

// Raw (unnormalized) step-interval weighted co-occurrence counts over item
// indices [0, n_items]. Symmetric by construction.
class CoocCounts {
 public:
  CoocCounts(std::size_t n_items, int threshold) : n_items_(n_items), threshold_(threshold) {
    if (threshold < 1) fail("co-occurrence threshold T must be >= 1, got ", threshold);
  }

  std::size_t n_items() const { return n_items_; }
  int threshold() const { return threshold_; }

  // Every position pair p < q with d = q - p < T adds T - d to both a_ij and
  // a_ji. Pairs at the same item add once to the diagonal.
  void add_sequence(std::span<const ItemIndex> items) {
    const std::size_t n = items.size();
    for (std::size_t p = 0; p < n; ++p) {
      check(items[p]);
      const std::size_t last = std::min(n, p + static_cast<std::size_t>(threshold_));
      for (std::size_t q = p + 1; q < last; ++q) {
        const double w = threshold_ - static_cast<double>(q - p);
        add(items[p], items[q], w);
        if (items[p] != items[q]) add(items[q], items[p], w);
      }
    }
  }

  void merge(const CoocCounts& other) {
    if (other.n_items_ != n_items_ || other.threshold_ != threshold_) {
      fail("cannot merge co-occurrence counts with different shape or T");
    }
    for (const auto& [key, w] : other.counts_) counts_[key] += w;
  }

  double at(ItemIndex i, ItemIndex j) const {
    auto it = counts_.find(key(i, j));
    return it == counts_.end() ? 0.0 : it->second;
  }

  // (row, col, weight) triples sorted by row then column.
  std::vector<std::tuple<ItemIndex, ItemIndex, double>> entries() const {
    std::vector<std::pair<std::uint64_t, double>> flat(counts_.begin(), counts_.end());
    std::sort(flat.begin(), flat.end());
    std::vector<std::tuple<ItemIndex, ItemIndex, double>> out;
    out.reserve(flat.size());
    for (const auto& [k, w] : flat) {
      out.emplace_back(static_cast<ItemIndex>(k >> 32),
                       static_cast<ItemIndex>(k & 0xffffffffULL), w);
    }
    return out;
  }

  std::size_t size() const { return counts_.size(); }

 private:
  static std::uint64_t key(ItemIndex i, ItemIndex j) {
    return (static_cast<std::uint64_t>(i) << 32) | j;
  }
  void check(ItemIndex i) const {
    if (i > n_items_) fail("item index ", i, " exceeds n_items ", n_items_);
  }
  void add(ItemIndex i, ItemIndex j, double w) { counts_[key(i, j)] += w; }

  std::size_t n_items_;
  int threshold_;
  std::unordered_map<std::uint64_t, double> counts_;
};

template <typename Sequences>
CoocCounts accumulate(const Sequences& sequences, std::size_t n_items, int threshold) {
  CoocCounts counts(n_items, threshold);
  for (const auto& s : sequences) counts.add_sequence(s);
  return counts;
}

// Only the listed users contribute (the training split).
inline CoocCounts accumulate(const SequenceSet& set, std::span<const UserIndex> users,
                             int threshold) {
  CoocCounts counts(set.n_items(), threshold);
  for (UserIndex u : users) counts.add_sequence(set.sequences.at(u).items);
  return counts;
}

struct CoocMatrix {
  SparseRowMatrix<double> matrix;  // (n_items + 1) square, row 0 = {0: 1}
  int threshold = 3;
  double density = 0.0;  // nnz over real items / n_items^2, before normalization
  bool normalized = false;

  std::size_t n_items() const { return matrix.n_rows - 1; }
};

// Overwrites the diagonal of every real item with 1, then L1-normalizes rows.
inline CoocMatrix finalize(const CoocCounts& counts) {
  const std::size_t n = counts.n_items();
  CoocMatrix out;
  out.threshold = counts.threshold();
  out.matrix.n_cols = n + 1;

  const auto entries = counts.entries();
  std::size_t e = 0;
  std::size_t real_nnz = 0;
  std::vector<std::uint32_t> cols;
  std::vector<double> vals;
  for (std::size_t row = 0; row <= n; ++row) {
    cols.clear();
    vals.clear();
    bool diag_done = false;
    auto put_diag = [&] {
      cols.push_back(static_cast<std::uint32_t>(row));
      vals.push_back(1.0);
      diag_done = true;
    };
    for (; e < entries.size() && std::get<0>(entries[e]) == row; ++e) {
      const auto col = std::get<1>(entries[e]);
      if (row == 0 || col == 0) continue;  // padding never co-occurs
      if (!diag_done && col >= row) put_diag();
      if (col == row) continue;
      cols.push_back(col);
      vals.push_back(std::get<2>(entries[e]));
    }
    if (!diag_done) put_diag();
    if (row > 0) {
      real_nnz += cols.size();
      double sum = 0.0;
      for (double v : vals) sum += v;
      for (double& v : vals) v /= sum;
    }
    out.matrix.push_row(cols, vals);
  }
  out.density = n == 0 ? 0.0
                       : static_cast<double>(real_nnz) /
                             (static_cast<double>(n) * static_cast<double>(n));
  out.normalized = true;
  return out;
}

// Row r of the result is a copy of row indices[r] of A (index 0 allowed).
inline SparseRowMatrix<double> gather_rows(const CoocMatrix& a,
                                           std::span<const ItemIndex> indices) {
  SparseRowMatrix<double> out;
  out.n_cols = a.matrix.n_cols;
  out.row_offsets.reserve(indices.size() + 1);
  for (ItemIndex i : indices) {
    if (i >= a.matrix.n_rows) {
      fail("gather_rows: index ", i, " >= n_rows ", a.matrix.n_rows);
    }
    out.push_row(a.matrix.row_cols(i), a.matrix.row_values(i));
  }
  return out;
}

inline constexpr std::uint32_t kCoocFormatVersion = 1;

// Binary layout (little-endian): "COOC", version u32, n_rows u64, n_cols u64,
// nnz u64, row_offsets u64[n_rows+1], col_indices u32[nnz], values f32[nnz],
// footer: T u32, density f64.
inline void write_cooc(std::ostream& os, const CoocMatrix& a) {
  const auto& m = a.matrix;
  os.write("COOC", 4);
  io::write_pod(os, kCoocFormatVersion);
  io::write_pod(os, static_cast<std::uint64_t>(m.n_rows));
  io::write_pod(os, static_cast<std::uint64_t>(m.n_cols));
  io::write_pod(os, static_cast<std::uint64_t>(m.nnz()));
  io::write_array(os, m.row_offsets);
  io::write_array(os, m.col_indices);
  std::vector<float> vals(m.values.begin(), m.values.end());
  io::write_array(os, vals);
  io::write_pod(os, static_cast<std::uint32_t>(a.threshold));
  io::write_pod(os, a.density);
}

inline CoocMatrix read_cooc(std::istream& is) {
  io::expect_magic(is, "COOC");
  const auto version = io::read_pod<std::uint32_t>(is, "COOC version");
  if (version != kCoocFormatVersion) {
    fail("COOC format version ", version, " unsupported (expected ", kCoocFormatVersion, ")");
  }
  CoocMatrix a;
  auto& m = a.matrix;
  m.n_rows = io::read_pod<std::uint64_t>(is, "COOC n_rows");
  m.n_cols = io::read_pod<std::uint64_t>(is, "COOC n_cols");
  const auto nnz = io::read_pod<std::uint64_t>(is, "COOC nnz");
  m.row_offsets = io::read_array<std::uint64_t>(is, m.n_rows + 1, "COOC row_offsets");
  m.col_indices = io::read_array<std::uint32_t>(is, nnz, "COOC col_indices");
  const auto vals = io::read_array<float>(is, nnz, "COOC values");
  m.values.assign(vals.begin(), vals.end());
  // Values are stored as f32; restore exact unit row sums in double.
  for (std::size_t r = 0; r < m.n_rows && r + 1 < m.row_offsets.size(); ++r) {
    double sum = 0.0;
    for (auto k = m.row_offsets[r]; k < m.row_offsets[r + 1] && k < m.values.size(); ++k) sum += m.values[k];
    if (sum > 0.0) {
      for (auto k = m.row_offsets[r]; k < m.row_offsets[r + 1] && k < m.values.size(); ++k) m.values[k] /= sum;
    }
  }
  a.threshold = static_cast<int>(io::read_pod<std::uint32_t>(is, "COOC footer T"));
  a.density = io::read_pod<double>(is, "COOC footer density");
  a.normalized = true;
  m.validate();
  if (m.n_rows != m.n_cols || m.n_rows == 0) fail("COOC matrix must be square and non-empty");
  return a;
}

inline void save_cooc(const std::string& path, const CoocMatrix& a) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail("cannot open '", path, "' for writing");
  write_cooc(os, a);
  if (!os) fail("write to '", path, "' failed");
}

inline CoocMatrix load_cooc(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail("cannot open co-occurrence file '", path, "'");
  return read_cooc(is);
}

}  // namespace simrec
