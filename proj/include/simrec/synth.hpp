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
#include <ostream>
#include <string>
#include <vector>

#include "simrec/common.hpp"
#include "simrec/data.hpp"

namespace simrec {

// Planted-cluster interaction generator. Items belong to 1..max_groups latent
// groups (item j's primary group is j mod groups); each user draws two groups
// and a sequence from the union of their items, replacing each draw by a
// uniform random item with probability `noise`.
struct SynthConfig {
  std::size_t users = 2000;
  std::size_t items = 300;
  std::size_t groups = 10;
  std::size_t length = 20;
  std::size_t max_groups_per_item = 3;
  double noise = 0.05;
  std::uint64_t seed = 7;
};

struct SynthDataset {
  std::vector<InteractionRecord> records;
  std::vector<std::string> item_keys;                 // by generator item id
  std::vector<std::size_t> primary_group;             // by generator item id
  std::vector<std::vector<std::size_t>> item_groups;  // by generator item id
};

inline std::string synth_item_key(std::size_t j) { return "i" + std::to_string(j); }
inline std::string synth_user_key(std::size_t u) { return "u" + std::to_string(u); }

inline SynthDataset generate_synthetic(const SynthConfig& cfg) {
  if (cfg.groups < 2 || cfg.items < cfg.groups || cfg.users == 0 || cfg.length == 0) {
    fail("synth: need groups >= 2, items >= groups, users > 0, length > 0");
  }
  if (cfg.noise < 0.0 || cfg.noise > 1.0) fail("synth: noise must be in [0, 1]");
  Rng rng(cfg.seed);
  SynthDataset out;
  out.item_groups.resize(cfg.items);
  std::vector<std::vector<std::size_t>> members(cfg.groups);
  for (std::size_t j = 0; j < cfg.items; ++j) {
    out.item_keys.push_back(synth_item_key(j));
    const std::size_t primary = j % cfg.groups;
    out.primary_group.push_back(primary);
    auto& gs = out.item_groups[j];
    gs.push_back(primary);
    const auto n_groups =
        static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(std::max<std::size_t>(1, cfg.max_groups_per_item))));
    while (gs.size() < std::min(n_groups, cfg.groups)) {
      const std::size_t g = rng.below(cfg.groups);
      if (std::find(gs.begin(), gs.end(), g) == gs.end()) gs.push_back(g);
    }
    for (std::size_t g : gs) members[g].push_back(j);
  }
  std::int64_t clock = 0;
  for (std::size_t u = 0; u < cfg.users; ++u) {
    const std::size_t g1 = rng.below(cfg.groups);
    std::size_t g2 = rng.below(cfg.groups - 1);
    if (g2 >= g1) ++g2;
    std::vector<std::size_t> pool = members[g1];
    pool.insert(pool.end(), members[g2].begin(), members[g2].end());
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    for (std::size_t l = 0; l < cfg.length; ++l) {
      const std::size_t j = rng.uniform() < cfg.noise ? rng.below(cfg.items) : pool[rng.below(pool.size())];
      out.records.push_back({synth_user_key(u), out.item_keys[j], clock++});
    }
  }
  return out;
}

inline void write_interactions_csv(std::ostream& os, const std::vector<InteractionRecord>& records) {
  os << "user_id,item_id,timestamp\n";
  for (const auto& r : records) os << r.user_key << ',' << r.item_key << ',' << r.timestamp << '\n';
}

// Label file lines: item_key,category.
inline void write_labels(std::ostream& os, const SynthDataset& data) {
  for (std::size_t j = 0; j < data.item_keys.size(); ++j) {
    os << data.item_keys[j] << ",g" << data.primary_group[j] << '\n';
  }
}

}  // namespace simrec
