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
#include <cctype>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "simrec/common.hpp"

namespace simrec {

struct InteractionRecord {
  std::string user_key;
  std::string item_key;
  std::int64_t timestamp = 0;
};

// Bijection between opaque keys and dense indices. Item index 0 is the
// padding sentinel and never maps to a key; users are 0-based.
class IdMap {
 public:
  IdMap() : item_keys_{std::string()} {}

  ItemIndex add_item(const std::string& key) {
    auto [it, inserted] =
        item_index_.try_emplace(key, static_cast<ItemIndex>(item_keys_.size()));
    if (inserted) item_keys_.push_back(key);
    return it->second;
  }

  UserIndex add_user(const std::string& key) {
    auto [it, inserted] =
        user_index_.try_emplace(key, static_cast<UserIndex>(user_keys_.size()));
    if (inserted) user_keys_.push_back(key);
    return it->second;
  }

  // Number of real items; valid item indices are [1, n_items()].
  std::size_t n_items() const { return item_keys_.size() - 1; }
  std::size_t n_users() const { return user_keys_.size(); }

  ItemIndex item(const std::string& key) const {
    auto it = item_index_.find(key);
    if (it == item_index_.end()) fail("unknown item key '", key, "'");
    return it->second;
  }
  bool has_item(const std::string& key) const {
    return item_index_.count(key) != 0;
  }
  UserIndex user(const std::string& key) const {
    auto it = user_index_.find(key);
    if (it == user_index_.end()) fail("unknown user key '", key, "'");
    return it->second;
  }

  const std::string& item_key(ItemIndex i) const {
    if (i == kPaddingItem || i >= item_keys_.size()) {
      fail("item index ", i, " out of range [1, ", n_items(), "]");
    }
    return item_keys_[i];
  }
  const std::string& user_key(UserIndex u) const {
    if (u >= user_keys_.size()) fail("user index ", u, " out of range");
    return user_keys_[u];
  }

 private:
  std::unordered_map<std::string, ItemIndex> item_index_;
  std::vector<std::string> item_keys_;
  std::unordered_map<std::string, UserIndex> user_index_;
  std::vector<std::string> user_keys_;
};

struct UserSequence {
  UserIndex user = 0;
  std::vector<ItemIndex> items;
};

struct DatasetSplit {
  std::vector<UserIndex> train;
  std::vector<UserIndex> valid;
  std::vector<UserIndex> test;
};

enum class InputFormat { kCsv, kSeqLines };

struct IngestResult {
  std::vector<InteractionRecord> records;
  IdMap ids;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::string_view> tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace detail

// Parses a CSV (header `user_id,item_id,timestamp`) or seq-lines stream.
// Records keep input order. seq-lines rows get a running counter as
// timestamp, so chronological order equals input order.
inline IngestResult ingest(std::istream& in, InputFormat format) {
  IngestResult out;
  std::string line;
  std::size_t line_no = 0;
  std::int64_t counter = 0;

  if (format == InputFormat::kCsv) {
    bool header_seen = false;
    while (std::getline(in, line)) {
      ++line_no;
      const auto row = detail::trim(line);
      if (row.empty()) continue;
      if (!header_seen) {
        const auto cols = detail::split(row, ',');
        if (cols.size() != 3 || detail::trim(cols[0]) != "user_id" ||
            detail::trim(cols[1]) != "item_id" ||
            detail::trim(cols[2]) != "timestamp") {
          fail("line ", line_no,
               ": expected header 'user_id,item_id,timestamp'");
        }
        header_seen = true;
        continue;
      }
      const auto cols = detail::split(row, ',');
      if (cols.size() != 3) {
        fail("line ", line_no, ": expected 3 comma-separated fields, got ",
             cols.size());
      }
      const auto user = detail::trim(cols[0]);
      const auto item = detail::trim(cols[1]);
      const auto ts = detail::trim(cols[2]);
      if (user.empty() || item.empty()) {
        fail("line ", line_no, ": empty user or item key");
      }
      std::int64_t t = 0;
      try {
        std::size_t used = 0;
        t = std::stoll(std::string(ts), &used);
        if (used != ts.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        fail("line ", line_no, ": bad timestamp '", ts, "'");
      }
      out.records.push_back({std::string(user), std::string(item), t});
    }
  } else {
    while (std::getline(in, line)) {
      ++line_no;
      const auto toks = detail::tokens(line);
      if (toks.empty()) continue;
      if (toks.size() < 2) {
        fail("line ", line_no, ": user '", toks[0], "' has no items");
      }
      for (std::size_t k = 1; k < toks.size(); ++k) {
        out.records.push_back(
            {std::string(toks[0]), std::string(toks[k]), counter++});
      }
    }
  }
  if (out.records.empty()) fail("empty input: no interaction records");
  for (const auto& r : out.records) {
    out.ids.add_user(r.user_key);
    out.ids.add_item(r.item_key);
  }
  return out;
}

struct SequenceSet {
  IdMap ids;  // compacted to the surviving users and items
  std::vector<UserSequence> sequences;  // indexed by user
  std::size_t max_len_eval = 20;

  std::size_t n_items() const { return ids.n_items(); }
  std::size_t n_users() const { return sequences.size(); }
  std::size_t n_interactions() const {
    std::size_t n = 0;
    for (const auto& s : sequences) n += s.items.size();
    return n;
  }
};

// Iterated min-count filter over users and items, then per-user
// chronological sort (ties keep input order). Surviving users and items are
// re-indexed densely in order of first appearance.
inline SequenceSet build_sequences(const std::vector<InteractionRecord>& records,
                                   std::size_t min_count = 5,
                                   std::size_t max_len_eval = 20) {
  IdMap raw;
  std::vector<std::uint32_t> rec_user(records.size()), rec_item(records.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    rec_user[r] = raw.add_user(records[r].user_key);
    rec_item[r] = raw.add_item(records[r].item_key);
  }
  std::vector<char> user_alive(raw.n_users(), 1), item_alive(raw.n_items() + 1, 1);
  std::vector<std::size_t> user_count, item_count;
  bool changed = true;
  while (changed) {
    changed = false;
    user_count.assign(raw.n_users(), 0);
    item_count.assign(raw.n_items() + 1, 0);
    for (std::size_t r = 0; r < records.size(); ++r) {
      if (user_alive[rec_user[r]] && item_alive[rec_item[r]]) {
        ++user_count[rec_user[r]];
        ++item_count[rec_item[r]];
      }
    }
    for (std::size_t u = 0; u < user_alive.size(); ++u) {
      if (user_alive[u] && user_count[u] < min_count) {
        user_alive[u] = 0;
        changed = true;
      }
    }
    for (std::size_t i = 1; i < item_alive.size(); ++i) {
      if (item_alive[i] && item_count[i] < min_count) {
        item_alive[i] = 0;
        changed = true;
      }
    }
  }

  SequenceSet out;
  out.max_len_eval = max_len_eval;
  std::vector<std::vector<std::size_t>> per_user;
  for (std::size_t r = 0; r < records.size(); ++r) {
    if (!user_alive[rec_user[r]] || !item_alive[rec_item[r]]) continue;
    const UserIndex u = out.ids.add_user(records[r].user_key);
    if (u == per_user.size()) per_user.emplace_back();
    per_user[u].push_back(r);
  }
  if (per_user.empty()) fail("all users were filtered out (min_count=", min_count, ")");

  // Items are numbered by original first appearance, independent of user order.
  for (std::size_t i = 1; i <= raw.n_items(); ++i) {
    if (item_alive[i]) out.ids.add_item(raw.item_key(static_cast<ItemIndex>(i)));
  }

  out.sequences.resize(per_user.size());
  for (std::size_t u = 0; u < per_user.size(); ++u) {
    auto& recs = per_user[u];
    std::stable_sort(recs.begin(), recs.end(), [&](std::size_t a, std::size_t b) {
      return records[a].timestamp < records[b].timestamp;
    });
    auto& seq = out.sequences[u];
    seq.user = static_cast<UserIndex>(u);
    seq.items.reserve(recs.size());
    for (std::size_t r : recs) seq.items.push_back(out.ids.item(records[r].item_key));
  }
  return out;
}

// Deterministic shuffle of the sorted user set, then a contiguous
// train/valid/test partition with valid = test = round(n / 10).
inline DatasetSplit split_users(std::vector<UserIndex> users, std::uint64_t seed) {
  if (users.size() < 10) fail("split_users: need at least 10 users, got ", users.size());
  std::sort(users.begin(), users.end());
  Rng rng(seed);
  rng.shuffle(users);
  const std::size_t n = users.size();
  const std::size_t n_eval = static_cast<std::size_t>(std::llround(n / 10.0));
  const std::size_t n_train = n - 2 * n_eval;
  DatasetSplit s;
  s.train.assign(users.begin(), users.begin() + n_train);
  s.valid.assign(users.begin() + n_train, users.begin() + n_train + n_eval);
  s.test.assign(users.begin() + n_train + n_eval, users.end());
  return s;
}

inline DatasetSplit split_users(const SequenceSet& set, std::uint64_t seed) {
  std::vector<UserIndex> users;
  users.reserve(set.sequences.size());
  for (const auto& s : set.sequences) users.push_back(s.user);
  return split_users(std::move(users), seed);
}

struct EvalExample {
  std::vector<ItemIndex> history;  // chronological, at most max_len items
  std::vector<ItemIndex> targets;  // sorted, unique
};

// First floor(fraction * len) items (last `max_len` of them) form the
// history; the rest, as a set, are the targets.
inline EvalExample eval_split(std::span<const ItemIndex> items,
                              std::size_t max_len = 20, double fraction = 0.8) {
  if (items.size() < 5) fail("eval_split: sequence length ", items.size(), " < 5");
  const auto cut = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(items.size()) + 1e-9));
  EvalExample ex;
  const std::size_t start = cut > max_len ? cut - max_len : 0;
  ex.history.assign(items.begin() + start, items.begin() + cut);
  ex.targets.assign(items.begin() + cut, items.end());
  std::sort(ex.targets.begin(), ex.targets.end());
  ex.targets.erase(std::unique(ex.targets.begin(), ex.targets.end()), ex.targets.end());
  return ex;
}

struct TrainExample {
  std::vector<ItemIndex> history;  // length L, left-padded with kPaddingItem
  std::vector<std::uint8_t> mask;  // 1 on real positions
  ItemIndex target = kPaddingItem;
};

// Example predicting items[t] from up to `window` preceding items.
inline TrainExample make_train_example(std::span<const ItemIndex> items,
                                       std::size_t t, std::size_t window = 20) {
  if (t == 0 || t >= items.size()) {
    fail("make_train_example: position ", t, " outside [1, ", items.size(), ")");
  }
  TrainExample ex;
  ex.history.assign(window, kPaddingItem);
  ex.mask.assign(window, 0);
  const std::size_t n = std::min(t, window);
  for (std::size_t k = 0; k < n; ++k) {
    ex.history[window - n + k] = items[t - n + k];
    ex.mask[window - n + k] = 1;
  }
  ex.target = items[t];
  return ex;
}

// Uniform target position in [1, len).
inline TrainExample train_example(std::span<const ItemIndex> items, Rng& rng,
                                  std::size_t window = 20) {
  if (items.size() < 2) fail("train_example: sequence length ", items.size(), " < 2");
  const std::size_t t = 1 + rng.below(items.size() - 1);
  return make_train_example(items, t, window);
}

}  // namespace simrec
