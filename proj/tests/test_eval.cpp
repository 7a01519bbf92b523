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

#include <algorithm>
#include <cmath>

#include "simrec/eval.hpp"
#include "simrec/synth.hpp"

namespace simrec {
namespace {

// Scores every item by max_k v_k . e_i and sorts the whole catalogue.
std::vector<ItemIndex> brute_force_topn(const Tensor<double>& v, const ItemAtlas<double>& atlas, std::size_t n) {
  std::vector<std::pair<double, ItemIndex>> all;
  for (std::size_t i = 1; i <= atlas.n_items(); ++i) {
    double best = -1e300;
    for (std::size_t k = 0; k < v.rows(); ++k) {
      double s = 0;
      for (std::size_t j = 0; j < v.cols(); ++j) s += v(k, j) * atlas.embeddings(i, j);
      best = std::max(best, s);
    }
    all.push_back({-best, static_cast<ItemIndex>(i)});
  }
  std::sort(all.begin(), all.end());
  std::vector<ItemIndex> out;
  for (std::size_t r = 0; r < n; ++r) out.push_back(all[r].second);
  return out;
}

TEST(Metrics, PerfectRanking) {
  const std::vector<ItemIndex> ranked = {3, 7, 1, 9};
  const std::vector<ItemIndex> targets = {7, 3};
  const auto m = metrics(ranked, targets, 4);
  EXPECT_DOUBLE_EQ(m.recall, 1.0);
  EXPECT_DOUBLE_EQ(m.hit, 1.0);
  EXPECT_NEAR(m.ndcg, 1.0, 1e-12);
}

TEST(Metrics, PartialHitNdcg) {
  // Targets {a, b}; b at 0-based rank 4, a missing.
  const std::vector<ItemIndex> ranked = {10, 11, 12, 13, 2, 14};
  const std::vector<ItemIndex> targets = {1, 2};
  const auto m = metrics(ranked, targets, 6);
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
  EXPECT_DOUBLE_EQ(m.hit, 1.0);
  EXPECT_NEAR(m.ndcg, (1.0 / std::log2(6.0)) / (1.0 + 1.0 / std::log2(3.0)), 1e-12);
}

TEST(Metrics, NoHits) {
  const std::vector<ItemIndex> ranked = {5, 6, 7};
  const std::vector<ItemIndex> targets = {1};
  const auto m = metrics(ranked, targets, 3);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.hit, 0.0);
  EXPECT_EQ(m.ndcg, 0.0);
}

TEST(Metrics, CutoffAndDuplicateTargets) {
  const std::vector<ItemIndex> ranked = {1, 2, 3, 4};
  const std::vector<ItemIndex> targets = {4, 4, 1};
  const auto m = metrics(ranked, targets, 2);
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
  EXPECT_NEAR(m.ndcg, 1.0 / (1.0 + 1.0 / std::log2(3.0)), 1e-12);
  EXPECT_THROW(metrics(ranked, std::vector<ItemIndex>{}, 2), Error);
  EXPECT_THROW(metrics(ranked, targets, 5), Error);
}

class RetrievalOracle : public ::testing::TestWithParam<std::size_t> {};

TEST_P(RetrievalOracle, MatchesBruteForce) {
  Rng rng(GetParam());
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n_items = 30 + rng.below(70);
    const std::size_t d = 2 + rng.below(6);
    ItemAtlas<double> atlas{uniform_tensor<double>(n_items + 1, d, -1, 1, rng)};
    const auto v = uniform_tensor<double>(GetParam(), d, -1, 1, rng);
    for (std::size_t n : {std::size_t{1}, std::size_t{5}, std::size_t{20}}) {
      EXPECT_EQ(retrieve_topn(v, atlas, n), brute_force_topn(v, atlas, n));
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Interests, RetrievalOracle, ::testing::Values(1, 2, 4, 8));

TEST(Retrieval, TiesBreakOnLowerIndexAndSkipPadding) {
  ItemAtlas<double> atlas{Tensor<double>(5, 1, std::vector<double>{100, 1, 2, 2, 1})};
  const Tensor<double> v(1, 1, 1.0);
  EXPECT_EQ(retrieve_topn(v, atlas, 4), (std::vector<ItemIndex>{2, 3, 1, 4}));
}

TEST(Retrieval, SingleInterestIsPlainTopN) {
  Rng rng(3);
  ItemAtlas<double> atlas{uniform_tensor<double>(41, 4, -1, 1, rng)};
  const auto v = uniform_tensor<double>(1, 4, -1, 1, rng);
  std::vector<std::pair<double, ItemIndex>> s;
  for (std::size_t i = 1; i <= 40; ++i) {
    double dot = 0;
    for (std::size_t j = 0; j < 4; ++j) dot += v(0, j) * atlas.embeddings(i, j);
    s.push_back({-dot, static_cast<ItemIndex>(i)});
  }
  std::sort(s.begin(), s.end());
  const auto got = retrieve_topn(v, atlas, 10);
  for (std::size_t r = 0; r < 10; ++r) EXPECT_EQ(got[r], s[r].second);
}

TEST(Retrieval, RejectsOversizedN) {
  ItemAtlas<double> atlas{Tensor<double>(4, 2, 1.0)};
  EXPECT_THROW(retrieve_topn(Tensor<double>(2, 2, 1.0), atlas, 4), Error);
  EXPECT_THROW(retrieve_topn(Tensor<double>(2, 3, 1.0), atlas, 2), Error);
}

struct RandomWorld {
  SequenceSet set;
  ModelParams<double> params;
  ItemAtlas<double> atlas;
};

RandomWorld random_world() {
  Rng rng(11);
  std::vector<InteractionRecord> records;
  for (int u = 0; u < 3000; ++u) {
    for (int t = 0; t < 10; ++t) {
      records.push_back({"u" + std::to_string(u), "i" + std::to_string(rng.below(300)), t});
    }
  }
  RandomWorld w;
  w.set = build_sequences(records);
  ModelDims dims{w.set.n_items(), 8, 4, 32, 20, true, EmbeddingMode::kBaseline};
  w.params = init_params<double>(dims, rng);
  w.atlas = make_atlas(w.params, nullptr);
  return w;
}

TEST(Evaluate, RandomModelScoresNearChance) {
  const auto w = random_world();
  std::vector<UserIndex> users;
  for (const auto& s : w.set.sequences) users.push_back(s.user);
  const auto r = evaluate(w.params, w.atlas, w.set, users, {20});
  EXPECT_EQ(r.users, users.size());
  const double chance = 20.0 / static_cast<double>(w.set.n_items());
  // 3000 users with 2 targets each: standard error about 0.0035.
  EXPECT_NEAR(r.recall(20), chance, 0.02);
}

TEST(Evaluate, UserOrderDoesNotMatter) {
  const auto w = random_world();
  std::vector<UserIndex> users;
  for (std::size_t u = 0; u < 400; ++u) users.push_back(static_cast<UserIndex>(u));
  const auto a = evaluate(w.params, w.atlas, w.set, users);
  Rng rng(5);
  rng.shuffle(users);
  const auto b = evaluate(w.params, w.atlas, w.set, users);
  for (std::size_t n : {20, 50}) {
    EXPECT_NEAR(a.recall(n), b.recall(n), 1e-12);
    EXPECT_NEAR(a.ndcg(n), b.ndcg(n), 1e-12);
    EXPECT_NEAR(a.hit(n), b.hit(n), 1e-12);
  }
}

TEST(Evaluate, JsonHasFixedKeyOrder) {
  EvalReport r;
  r.at[20] = {0.5, 1.0, 0.25};
  r.at[50] = {0.75, 1.0, 0.5};
  r.users = 3;
  r.skipped = 1;
  EXPECT_EQ(to_json(r),
            "{\"recall@20\": 0.5, \"ndcg@20\": 0.25, \"hit@20\": 1, \"recall@50\": 0.75, \"ndcg@50\": 0.5, "
            "\"hit@50\": 1, \"users\": 3, \"skipped\": 1}");
}

TEST(Evaluate, HandComputedSingleUser) {
  // Baseline mode, K = 1, one history position: the interest is the last
  // history item's embedding, so ranking follows the atlas column.
  std::vector<InteractionRecord> records;
  for (int t = 0; t < 5; ++t) records.push_back({"u", "i" + std::to_string(t), t});
  for (int u = 0; u < 4; ++u) {
    for (int t = 0; t < 5; ++t) records.push_back({"v" + std::to_string(u), "i" + std::to_string(t), t});
  }
  const auto set = build_sequences(records);
  Rng rng(1);
  auto p = init_params<double>(ModelDims{5, 1, 1, 2, 1, false, EmbeddingMode::kBaseline}, rng);
  // History is items[0..4) truncated to the last one; target is the 5th item.
  const auto& items = set.sequences[0].items;
  for (std::size_t i = 1; i <= 5; ++i) p.item_table(i, 0) = 0.1 * static_cast<double>(i);
  p.item_table(items[3], 0) = 1.0;
  p.item_table(items[4], 0) = 0.9;
  const auto atlas = make_atlas(p, nullptr);
  const std::vector<UserIndex> one = {0};
  const auto r = evaluate(p, atlas, set, one, {1, 2});
  EXPECT_EQ(r.recall(1), 0.0);
  EXPECT_EQ(r.recall(2), 1.0);
  EXPECT_NEAR(r.ndcg(2), 1.0 / std::log2(3.0), 1e-12);
}

}  // namespace
}  // namespace simrec
