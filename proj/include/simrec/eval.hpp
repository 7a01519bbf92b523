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
#include <iomanip>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "simrec/common.hpp"
#include "simrec/data.hpp"
#include "simrec/model.hpp"
#include "simrec/tensor.hpp"

namespace simrec {

namespace detail {

struct Scored {
  double score;
  ItemIndex item;
};

// Higher score first, lower item index on ties.
inline bool better(const Scored& a, const Scored& b) {
  return a.score > b.score || (a.score == b.score && a.item < b.item);
}

}  // namespace detail

// Exact multi-interest retrieval: top-n per interest by inner product, then
// the union re-ranked by f(u, i) = max_k v_k . e_i. The padding row is never
// a candidate.
template <typename T>
std::vector<ItemIndex> retrieve_topn(const Tensor<T>& interests, const ItemAtlas<T>& atlas, std::size_t n) {
  const std::size_t n_items = atlas.n_items();
  if (n > n_items) fail("retrieve_topn: N = ", n, " exceeds the ", n_items, " items");
  if (interests.cols() != atlas.dim()) {
    fail("retrieve_topn: interests ", shape_str(interests.shape()), " vs atlas width ", atlas.dim());
  }
  const std::size_t d = atlas.dim();
  std::vector<detail::Scored> scores(n_items);
  std::vector<ItemIndex> candidates;
  candidates.reserve(interests.rows() * n);
  for (std::size_t k = 0; k < interests.rows(); ++k) {
    const auto v = interests.row(k);
    for (std::size_t i = 1; i <= n_items; ++i) {
      const T* e = atlas.embeddings.data() + i * d;
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += static_cast<double>(v[j]) * e[j];
      scores[i - 1] = {s, static_cast<ItemIndex>(i)};
    }
    std::partial_sort(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(n), scores.end(),
                      detail::better);
    for (std::size_t r = 0; r < n; ++r) candidates.push_back(scores[r].item);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::vector<detail::Scored> merged;
  merged.reserve(candidates.size());
  for (ItemIndex i : candidates) {
    const T* e = atlas.embeddings.data() + static_cast<std::size_t>(i) * d;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < interests.rows(); ++k) {
      const auto v = interests.row(k);
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += static_cast<double>(v[j]) * e[j];
      best = std::max(best, s);
    }
    merged.push_back({best, i});
  }
  std::sort(merged.begin(), merged.end(), detail::better);
  std::vector<ItemIndex> out;
  out.reserve(n);
  for (std::size_t r = 0; r < n; ++r) out.push_back(merged[r].item);
  return out;
}

struct RankMetrics {
  double recall = 0.0;
  double hit = 0.0;
  double ndcg = 0.0;
};

// Recall, hit and NDCG of the first n ranked items. The discount at 0-based
// rank r is 1/log2(r + 2); the ideal DCG covers min(|targets|, n) hits.
inline RankMetrics metrics(std::span<const ItemIndex> ranked, std::span<const ItemIndex> targets, std::size_t n) {
  if (targets.empty()) fail("metrics: empty target set");
  if (ranked.size() < n) fail("metrics: ranked list has ", ranked.size(), " < N = ", n, " items");
  std::vector<ItemIndex> tset(targets.begin(), targets.end());
  std::sort(tset.begin(), tset.end());
  tset.erase(std::unique(tset.begin(), tset.end()), tset.end());

  std::size_t hits = 0;
  double dcg = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (std::binary_search(tset.begin(), tset.end(), ranked[r])) {
      ++hits;
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
  }
  double idcg = 0.0;
  for (std::size_t r = 0; r < std::min(tset.size(), n); ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  RankMetrics m;
  m.recall = static_cast<double>(hits) / static_cast<double>(tset.size());
  m.hit = hits > 0 ? 1.0 : 0.0;
  m.ndcg = dcg / idcg;
  return m;
}

struct EvalReport {
  std::map<std::size_t, RankMetrics> at;  // by cutoff
  std::size_t users = 0;
  std::size_t skipped = 0;

  double recall(std::size_t n) const { return at.at(n).recall; }
  double ndcg(std::size_t n) const { return at.at(n).ndcg; }
  double hit(std::size_t n) const { return at.at(n).hit; }
};

// Flat JSON object with keys recall@N, ndcg@N, hit@N per cutoff, then users
// and skipped.
inline std::string to_json(const EvalReport& r) {
  std::ostringstream os;
  os << std::setprecision(10) << "{";
  for (const auto& [n, m] : r.at) {
    os << "\"recall@" << n << "\": " << m.recall << ", \"ndcg@" << n << "\": " << m.ndcg << ", \"hit@" << n
       << "\": " << m.hit << ", ";
  }
  os << "\"users\": " << r.users << ", \"skipped\": " << r.skipped << "}";
  return os.str();
}

// Per user: 80/20 split, interests from the history, exact retrieval, and
// metrics at each cutoff; averages over users with a nonempty target set.
template <typename T>
EvalReport evaluate(const ModelParams<T>& p, const ItemAtlas<T>& atlas, const SequenceSet& set,
                    std::span<const UserIndex> users, std::vector<std::size_t> cutoffs = {20, 50}) {
  if (cutoffs.empty()) fail("evaluate: no cutoffs");
  const std::size_t max_n = *std::max_element(cutoffs.begin(), cutoffs.end());
  EvalReport report;
  std::map<std::size_t, RankMetrics> sums;
  for (std::size_t n : cutoffs) sums[n] = {};
  for (UserIndex u : users) {
    const auto& items = set.sequences.at(u).items;
    if (items.size() < 5) {
      ++report.skipped;
      continue;
    }
    const EvalExample ex = eval_split(items, p.dims.l);
    if (ex.targets.empty() || ex.history.empty()) {
      ++report.skipped;
      continue;
    }
    const auto interests = user_interests(p, atlas, ex.history);
    const auto ranked = retrieve_topn(interests.interests, atlas, max_n);
    for (std::size_t n : cutoffs) {
      const RankMetrics m = metrics(ranked, ex.targets, n);
      sums[n].recall += m.recall;
      sums[n].hit += m.hit;
      sums[n].ndcg += m.ndcg;
    }
    ++report.users;
  }
  for (auto& [n, m] : sums) {
    const double c = report.users ? static_cast<double>(report.users) : 1.0;
    report.at[n] = {m.recall / c, m.hit / c, m.ndcg / c};
  }
  return report;
}

}  // namespace simrec
