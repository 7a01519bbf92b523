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
#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "simrec/cooc.hpp"
#include "simrec/sparse.hpp"

namespace simrec {
namespace {

using Seqs = std::vector<std::vector<ItemIndex>>;

Seqs random_sequences(std::size_t n, std::size_t n_items, std::size_t max_len, Rng& rng) {
  Seqs out(n);
  for (auto& s : out) {
    const std::size_t len = 1 + rng.below(max_len);
    for (std::size_t k = 0; k < len; ++k) s.push_back(static_cast<ItemIndex>(1 + rng.below(n_items)));
  }
  return out;
}

// Dense oracle: every unordered position pair at distance d < T adds T - d to
// both orientations (once for equal items).
std::vector<double> brute_force(const Seqs& seqs, std::size_t n_items, int t) {
  const std::size_t n = n_items + 1;
  std::vector<double> m(n * n, 0.0);
  for (const auto& s : seqs) {
    for (std::size_t p = 0; p < s.size(); ++p) {
      for (std::size_t q = p + 1; q < s.size(); ++q) {
        const int w = t - static_cast<int>(q - p);
        if (w <= 0) continue;
        m[s[p] * n + s[q]] += w;
        if (s[p] != s[q]) m[s[q] * n + s[p]] += w;
      }
    }
  }
  return m;
}

TEST(Accumulate, DistanceBeyondThresholdLeavesCountUnchanged) {
  CoocCounts c(9, 3);
  c.add_sequence(std::vector<ItemIndex>{1, 5, 5, 5, 5, 2});  // (1,2) at d = 5
  EXPECT_EQ(c.at(1, 2), 0.0);
}

TEST(Accumulate, AdjacentPairAddsTMinusOne) {
  CoocCounts c(4, 3);
  c.add_sequence(std::vector<ItemIndex>{1, 2});
  EXPECT_EQ(c.at(1, 2), 2.0);
  EXPECT_EQ(c.at(2, 1), 2.0);
}

TEST(Accumulate, ThreeItemSequence) {
  CoocCounts c(3, 3);
  c.add_sequence(std::vector<ItemIndex>{1, 2, 3});
  EXPECT_EQ(c.at(1, 2), 2.0);
  EXPECT_EQ(c.at(2, 3), 2.0);
  EXPECT_EQ(c.at(1, 3), 1.0);
  EXPECT_EQ(c.at(3, 1), 1.0);
  EXPECT_EQ(c.size(), 6u);
}

TEST(Accumulate, MatchesBruteForceAndIsSymmetric) {
  Rng rng(21);
  const auto seqs = random_sequences(200, 15, 12, rng);
  for (int t : {1, 2, 3, 5}) {
    const auto counts = accumulate(seqs, 15, t);
    const auto oracle = brute_force(seqs, 15, t);
    for (ItemIndex i = 0; i <= 15; ++i) {
      for (ItemIndex j = 0; j <= 15; ++j) {
        EXPECT_EQ(counts.at(i, j), oracle[i * 16 + j]) << "T=" << t << " (" << i << "," << j << ")";
        EXPECT_EQ(counts.at(i, j), counts.at(j, i));
      }
    }
  }
}

TEST(Accumulate, MonotoneInThreshold) {
  Rng rng(2);
  const auto seqs = random_sequences(100, 20, 10, rng);
  for (int t = 1; t < 6; ++t) {
    const auto lo = accumulate(seqs, 20, t);
    const auto hi = accumulate(seqs, 20, t + 1);
    for (ItemIndex i = 1; i <= 20; ++i) {
      for (ItemIndex j = 1; j <= 20; ++j) EXPECT_LE(lo.at(i, j), hi.at(i, j));
    }
  }
}

TEST(Accumulate, ShardsMerge) {
  Rng rng(8);
  const auto seqs = random_sequences(60, 12, 9, rng);
  const Seqs first(seqs.begin(), seqs.begin() + 25), second(seqs.begin() + 25, seqs.end());
  auto merged = accumulate(first, 12, 3);
  merged.merge(accumulate(second, 12, 3));
  EXPECT_EQ(merged.entries(), accumulate(seqs, 12, 3).entries());
  EXPECT_THROW(merged.merge(CoocCounts(12, 4)), Error);
}

TEST(Accumulate, RejectsBadInput) {
  EXPECT_THROW(CoocCounts(5, 0), Error);
  CoocCounts c(5, 3);
  EXPECT_THROW(c.add_sequence(std::vector<ItemIndex>{1, 6}), Error);
}

TEST(Finalize, DiagonalOverwriteThenNormalize) {
  // With T = 2 every adjacent pair adds 1. Raw row of item 1: {1: 17, 2: 2, 3: 1}.
  CoocCounts c(3, 2);
  for (int k = 0; k < 17; ++k) c.add_sequence(std::vector<ItemIndex>{1, 1});
  c.add_sequence(std::vector<ItemIndex>{1, 2});
  c.add_sequence(std::vector<ItemIndex>{2, 1});
  c.add_sequence(std::vector<ItemIndex>{1, 3});
  ASSERT_EQ(c.at(1, 1), 17.0);
  ASSERT_EQ(c.at(1, 2), 2.0);
  ASSERT_EQ(c.at(1, 3), 1.0);
  const auto a = finalize(c);
  EXPECT_DOUBLE_EQ(a.matrix.at(1, 1), 0.25);
  EXPECT_DOUBLE_EQ(a.matrix.at(1, 2), 0.5);
  EXPECT_DOUBLE_EQ(a.matrix.at(1, 3), 0.25);
}

TEST(Finalize, IsolatedItemGetsIdentityRow) {
  CoocCounts c(4, 3);
  c.add_sequence(std::vector<ItemIndex>{1, 2});
  const auto a = finalize(c);
  ASSERT_EQ(a.matrix.row_cols(4).size(), 1u);
  EXPECT_EQ(a.matrix.at(4, 4), 1.0);
  ASSERT_EQ(a.matrix.row_cols(0).size(), 1u);
  EXPECT_EQ(a.matrix.at(0, 0), 1.0);
}

TEST(Finalize, RowsSumToOneAndDensity) {
  Rng rng(4);
  const auto seqs = random_sequences(300, 40, 15, rng);
  const auto counts = accumulate(seqs, 40, 3);
  const auto a = finalize(counts);
  a.matrix.validate();
  EXPECT_EQ(a.matrix.n_rows, 41u);
  std::size_t real_nnz = 0;
  for (std::size_t r = 1; r <= 40; ++r) {
    double s = 0.0;
    for (double v : a.matrix.row_values(r)) s += v;
    EXPECT_NEAR(s, 1.0, 1e-9);
    EXPECT_GT(a.matrix.at(r, r), 0.0);
    real_nnz += a.matrix.row_cols(r).size();
  }
  EXPECT_DOUBLE_EQ(a.density, static_cast<double>(real_nnz) / (40.0 * 40.0));
  // Normalized entries keep the raw symmetric pattern.
  for (std::size_t i = 1; i <= 40; ++i) {
    for (std::size_t j = 1; j <= 40; ++j) EXPECT_EQ(a.matrix.at(i, j) > 0, a.matrix.at(j, i) > 0);
  }
}

TEST(GatherRows, LookupSemantics) {
  Rng rng(6);
  const auto a = finalize(accumulate(random_sequences(50, 10, 8, rng), 10, 3));
  const std::vector<ItemIndex> twice = {3, 3};
  const auto g = gather_rows(a, twice);
  EXPECT_EQ(g.row_cols(0).size(), g.row_cols(1).size());
  EXPECT_TRUE(std::equal(g.row_values(0).begin(), g.row_values(0).end(), g.row_values(1).begin()));
  const auto pad = gather_rows(a, std::vector<ItemIndex>{0});
  EXPECT_EQ(pad.to_dense()[0], 1.0);
  EXPECT_EQ(pad.nnz(), 1u);
  std::vector<ItemIndex> all(11);
  std::iota(all.begin(), all.end(), 0);
  EXPECT_EQ(gather_rows(a, all), a.matrix);
  EXPECT_THROW(gather_rows(a, std::vector<ItemIndex>{11}), Error);
}

TEST(CoocFile, RoundTripAndDeterminism) {
  Rng rng(9);
  const auto a = finalize(accumulate(random_sequences(80, 25, 10, rng), 25, 3));
  std::stringstream first, second;
  write_cooc(first, a);
  write_cooc(second, a);
  EXPECT_EQ(first.str(), second.str());
  const auto back = read_cooc(first);
  EXPECT_EQ(back.threshold, 3);
  EXPECT_EQ(back.density, a.density);
  EXPECT_EQ(back.matrix.col_indices, a.matrix.col_indices);
  EXPECT_EQ(back.matrix.row_offsets, a.matrix.row_offsets);
  for (std::size_t k = 0; k < a.matrix.nnz(); ++k) EXPECT_NEAR(back.matrix.values[k], a.matrix.values[k], 1e-6);
  for (std::size_t r = 1; r < back.matrix.n_rows; ++r) {
    double s = 0.0;
    for (double v : back.matrix.row_values(r)) s += v;
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(CoocFile, BadMagicAndVersionAreNamed) {
  std::stringstream bad("XXXX");
  try {
    read_cooc(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("COOC"), std::string::npos) << e.what();
  }
  std::stringstream wrong_version;
  wrong_version.write("COOC", 4);
  io::write_pod(wrong_version, std::uint32_t{99});
  try {
    read_cooc(wrong_version);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos) << e.what();
  }
  std::stringstream truncated;
  truncated.write("COOC", 4);
  io::write_pod(truncated, kCoocFormatVersion);
  EXPECT_THROW(read_cooc(truncated), Error);
}

TEST(SparseRowMatrix, IdentityAndDense) {
  const auto id = SparseRowMatrix<double>::identity(3);
  EXPECT_EQ(id.to_dense(), (std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1}));
  EXPECT_EQ(id.at(1, 2), 0.0);
}

}  // namespace
}  // namespace simrec
