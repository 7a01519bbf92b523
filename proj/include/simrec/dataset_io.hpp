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
//
// On-disk layout of a prepared dataset directory:
//   items.txt      one item key per line; line n is item index n (1-based)
//   sequences.txt  one user per line (line u is user index u, 0-based):
//                  user_key<TAB>space-separated item indices, chronological
//   split.txt      user_index<SPACE>train|valid|test
#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>

#include "simrec/common.hpp"
#include "simrec/data.hpp"

namespace simrec {

struct PreparedData {
  SequenceSet set;
  DatasetSplit split;
};

inline void save_prepared(const std::filesystem::path& dir, const SequenceSet& set, const DatasetSplit& split) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream os(dir / name);
    if (!os) fail("cannot write '", (dir / name).string(), "'");
    return os;
  };
  {
    auto os = open("items.txt");
    for (std::size_t i = 1; i <= set.n_items(); ++i) os << set.ids.item_key(static_cast<ItemIndex>(i)) << '\n';
  }
  {
    auto os = open("sequences.txt");
    for (const auto& s : set.sequences) {
      os << set.ids.user_key(s.user) << '\t';
      for (std::size_t k = 0; k < s.items.size(); ++k) os << (k ? " " : "") << s.items[k];
      os << '\n';
    }
  }
  {
    auto os = open("split.txt");
    std::map<UserIndex, const char*> tag;
    for (UserIndex u : split.train) tag[u] = "train";
    for (UserIndex u : split.valid) tag[u] = "valid";
    for (UserIndex u : split.test) tag[u] = "test";
    for (const auto& [u, t] : tag) os << u << ' ' << t << '\n';
  }
}

inline PreparedData load_prepared(const std::filesystem::path& dir) {
  auto open = [&](const char* name) {
    std::ifstream is(dir / name);
    if (!is) fail("prepared dataset is missing '", (dir / name).string(), "' (run `prepare` first)");
    return is;
  };
  PreparedData out;
  std::string line;
  {
    auto is = open("items.txt");
    while (std::getline(is, line)) {
      const auto key = detail::trim(line);
      if (!key.empty()) out.set.ids.add_item(std::string(key));
    }
  }
  {
    auto is = open("sequences.txt");
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (detail::trim(line).empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos) fail("sequences.txt line ", line_no, ": missing tab");
      UserSequence seq;
      seq.user = out.set.ids.add_user(line.substr(0, tab));
      for (auto tok : detail::tokens(std::string_view(line).substr(tab + 1))) {
        const auto v = std::stoul(std::string(tok));
        if (v == 0 || v > out.set.n_items()) fail("sequences.txt line ", line_no, ": item index ", v, " out of range");
        seq.items.push_back(static_cast<ItemIndex>(v));
      }
      out.set.sequences.push_back(std::move(seq));
    }
  }
  {
    auto is = open("split.txt");
    while (std::getline(is, line)) {
      const auto toks = detail::tokens(line);
      if (toks.empty()) continue;
      if (toks.size() != 2) fail("split.txt: malformed line '", line, "'");
      const auto u = static_cast<UserIndex>(std::stoul(std::string(toks[0])));
      if (u >= out.set.n_users()) fail("split.txt: user index ", u, " out of range");
      if (toks[1] == "train") out.split.train.push_back(u);
      else if (toks[1] == "valid") out.split.valid.push_back(u);
      else if (toks[1] == "test") out.split.test.push_back(u);
      else fail("split.txt: unknown split '", toks[1], "'");
    }
  }
  return out;
}

}  // namespace simrec
