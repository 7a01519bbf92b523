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
// Embedding layers and the self-attentive multi-interest extractor.
//
// In SimEmb mode items are never looked up in an ID table. The trainable
// table is an attribute-embedding matrix E~ and an item's embedding is its
// co-occurrence row times E~, so E_I = A E~. During training only the rows of
// A that a batch touches are gathered and multiplied; for serving the full
// product is materialized once as an ItemAtlas.
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "simrec/autodiff.hpp"
#include "simrec/common.hpp"
#include "simrec/cooc.hpp"
#include "simrec/tensor.hpp"

namespace simrec {

enum class EmbeddingMode : std::uint8_t { kSimEmb = 0, kBaseline = 1 };

inline const char* to_string(EmbeddingMode m) {
  return m == EmbeddingMode::kSimEmb ? "simemb" : "baseline";
}

inline EmbeddingMode parse_mode(const std::string& s) {
  if (s == "simemb") return EmbeddingMode::kSimEmb;
  if (s == "baseline") return EmbeddingMode::kBaseline;
  fail("unknown mode '", s, "' (expected simemb or baseline)");
}

struct ModelDims {
  std::size_t n_items = 0;
  std::size_t d = 64;
  std::size_t k = 4;      // interests
  std::size_t d_a = 256;  // attention hidden width
  std::size_t l = 20;     // history window
  bool positional = true;
  EmbeddingMode mode = EmbeddingMode::kSimEmb;
};

template <typename T>
struct ModelParams {
  ModelDims dims;
  Tensor<T> item_table;  // E~ (SimEmb) or E_id (baseline): (n_items + 1) x d, row 0 = padding
  Tensor<T> w1;          // d_a x d
  Tensor<T> w2;          // k x d_a
  Tensor<T> pos;         // l x d, empty when positional is off

  std::vector<Tensor<T>*> trainable() {
    std::vector<Tensor<T>*> out{&item_table, &w1, &w2};
    if (dims.positional) out.push_back(&pos);
    return out;
  }
  std::vector<const Tensor<T>*> trainable() const {
    std::vector<const Tensor<T>*> out{&item_table, &w1, &w2};
    if (dims.positional) out.push_back(&pos);
    return out;
  }

  template <typename U>
  ModelParams<U> cast() const {
    return {dims, item_table.template cast<U>(), w1.template cast<U>(), w2.template cast<U>(),
            pos.template cast<U>()};
  }
};

// uniform(-1/sqrt(d), 1/sqrt(d)) everywhere; the padding row is zero.
template <typename T>
ModelParams<T> init_params(const ModelDims& dims, Rng& rng) {
  if (dims.n_items == 0 || dims.d == 0 || dims.k == 0 || dims.d_a == 0 || dims.l == 0) {
    fail("init_params: all model dimensions must be positive");
  }
  const double b = 1.0 / std::sqrt(static_cast<double>(dims.d));
  ModelParams<T> p;
  p.dims = dims;
  p.item_table = uniform_tensor<T>(dims.n_items + 1, dims.d, -b, b, rng);
  for (auto& v : p.item_table.row(0)) v = T(0);
  p.w1 = uniform_tensor<T>(dims.d_a, dims.d, -b, b, rng);
  p.w2 = uniform_tensor<T>(dims.k, dims.d_a, -b, b, rng);
  if (dims.positional) p.pos = uniform_tensor<T>(dims.l, dims.d, -b, b, rng);
  return p;
}

namespace detail {
inline void check_items(std::span<const ItemIndex> items, std::size_t n_rows) {
  for (ItemIndex i : items) {
    if (i >= n_rows) fail("item index ", i, " out of range (", n_rows - 1, " items)");
  }
}
}  // namespace detail

// H = gather_rows(A, history) * E~ (value only). Padding rows give E~[0].
template <typename T>
Tensor<T> sim_embed(const CoocMatrix& a, const Tensor<T>& table, std::span<const ItemIndex> history) {
  detail::check_items(history, a.matrix.n_rows);
  return kernels::sparse_dense_matmul(gather_rows(a, history), table);
}

// Same math as sim_embed, for target and negative indices.
template <typename T>
Tensor<T> embed_targets(const CoocMatrix& a, const Tensor<T>& table, std::span<const ItemIndex> items) {
  return sim_embed(a, table, items);
}

// Differentiable item embedding through either the co-occurrence path or a
// plain row lookup.
template <typename T>
Var<T> embed_items(Var<T> table, const CoocMatrix* a, std::span<const ItemIndex> items) {
  if (a) {
    detail::check_items(items, a->matrix.n_rows);
    auto rows = std::make_shared<const SparseRowMatrix<double>>(gather_rows(*a, items));
    return ops::sparse_dense_matmul(std::move(rows), table);
  }
  detail::check_items(items, table.rows());
  return ops::gather(table, std::vector<std::uint32_t>(items.begin(), items.end()));
}

template <typename T>
struct ItemAtlas {
  Tensor<T> embeddings;  // (n_items + 1) x d; row 0 is padding and never retrieved

  std::size_t n_items() const { return embeddings.rows() - 1; }
  std::size_t dim() const { return embeddings.cols(); }
};

// E_I = A E~ in a single sparse-dense product.
template <typename T>
ItemAtlas<T> full_item_matrix(const CoocMatrix& a, const Tensor<T>& table) {
  return {kernels::sparse_dense_matmul(a.matrix, table)};
}

template <typename T>
ItemAtlas<T> make_atlas(const ModelParams<T>& p, const CoocMatrix* a) {
  if (p.dims.mode == EmbeddingMode::kSimEmb) {
    if (!a) fail("make_atlas: SimEmb mode needs the co-occurrence matrix");
    if (a->matrix.n_rows != p.item_table.rows()) {
      fail("make_atlas: co-occurrence matrix has ", a->matrix.n_rows, " rows, model has ",
           p.item_table.rows());
    }
    return full_item_matrix(*a, p.item_table);
  }
  return {p.item_table};
}

template <typename T>
struct InterestVars {
  Var<T> interests;  // k x d
  Var<T> attention;  // k x l
};

// W = masked_softmax(W2 tanh(W1 (H + pos)^T)) over positions; V = W H.
template <typename T>
InterestVars<T> extract_interests(Var<T> h, const std::vector<std::uint8_t>& mask, Var<T> w1, Var<T> w2,
                                  std::optional<Var<T>> pos) {
  if (mask.size() != h.rows()) fail("extract_interests: mask length ", mask.size(), " vs ", h.rows(), " positions");
  if (std::none_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; })) {
    fail("extract_interests: history is fully masked");
  }
  Var<T> scored = pos ? ops::add(h, *pos) : h;
  Var<T> hidden = ops::tanh(ops::matmul(w1, scored, false, true));
  Var<T> logits = ops::matmul(w2, hidden);
  Var<T> attn = ops::masked_softmax(logits, mask, 1);
  return {ops::matmul(attn, h), attn};
}

template <typename T>
struct InterestMatrix {
  Tensor<T> interests;  // k x d
  Tensor<T> attention;  // k x l
};

// Forward-only interest extraction from precomputed history embeddings.
template <typename T>
InterestMatrix<T> extract_interests(const Tensor<T>& h, const std::vector<std::uint8_t>& mask,
                                    const ModelParams<T>& p) {
  Tape<T> tape;
  auto hv = tape.leaf(h, false);
  std::optional<Var<T>> pos;
  if (p.dims.positional) {
    if (p.pos.rows() != h.rows()) fail("extract_interests: history length ", h.rows(), " vs positional ", p.pos.rows());
    pos = tape.leaf(p.pos, false);
  }
  auto out = extract_interests(hv, mask, tape.leaf(p.w1, false), tape.leaf(p.w2, false), pos);
  return {out.interests.value(), out.attention.value()};
}

// argmax_k V[k] . e, lowest index on ties.
template <typename T>
std::size_t select_interest(const Tensor<T>& interests, std::span<const T> target) {
  if (interests.cols() != target.size()) {
    fail("select_interest: interests ", shape_str(interests.shape()), " vs target of length ", target.size());
  }
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < interests.rows(); ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j < target.size(); ++j) s += static_cast<double>(interests(k, j)) * target[j];
    if (s > best_score) {
      best_score = s;
      best = k;
    }
  }
  return best;
}

// Pads/truncates a chronological history to the last `l` items, left-padded.
inline std::pair<std::vector<ItemIndex>, std::vector<std::uint8_t>> pad_history(
    std::span<const ItemIndex> items, std::size_t l) {
  std::vector<ItemIndex> hist(l, kPaddingItem);
  std::vector<std::uint8_t> mask(l, 0);
  const std::size_t n = std::min(items.size(), l);
  for (std::size_t k = 0; k < n; ++k) {
    hist[l - n + k] = items[items.size() - n + k];
    mask[l - n + k] = 1;
  }
  return {hist, mask};
}

// Interests for a raw history, embedding items through a materialized atlas.
template <typename T>
InterestMatrix<T> user_interests(const ModelParams<T>& p, const ItemAtlas<T>& atlas,
                                 std::span<const ItemIndex> history) {
  auto [hist, mask] = pad_history(history, p.dims.l);
  Tensor<T> h(hist.size(), atlas.dim());
  for (std::size_t r = 0; r < hist.size(); ++r) {
    if (hist[r] >= atlas.embeddings.rows()) fail("item index ", hist[r], " out of range");
    const auto src = atlas.embeddings.row(hist[r]);
    std::copy(src.begin(), src.end(), h.row(r).begin());
  }
  return extract_interests(h, mask, p);
}

inline constexpr std::uint32_t kCheckpointVersion = 1;

// "SIMR", version u32, mode u8, positional u8, dims (n_items, d, k, d_a, l)
// as u64, then item_table, w1, w2[, pos] as f32 row-major, then a footer
// holding the companion COOC path (u32 length + bytes).
template <typename T>
void write_checkpoint(std::ostream& os, const ModelParams<T>& p, const std::string& cooc_path) {
  os.write("SIMR", 4);
  io::write_pod(os, kCheckpointVersion);
  io::write_pod(os, static_cast<std::uint8_t>(p.dims.mode));
  io::write_pod(os, static_cast<std::uint8_t>(p.dims.positional ? 1 : 0));
  for (std::size_t v : {p.dims.n_items, p.dims.d, p.dims.k, p.dims.d_a, p.dims.l}) {
    io::write_pod(os, static_cast<std::uint64_t>(v));
  }
  for (const Tensor<T>* t : p.trainable()) {
    std::vector<float> buf(t->values().begin(), t->values().end());
    io::write_array(os, buf);
  }
  io::write_pod(os, static_cast<std::uint32_t>(cooc_path.size()));
  os.write(cooc_path.data(), static_cast<std::streamsize>(cooc_path.size()));
}

template <typename T>
struct Checkpoint {
  ModelParams<T> params;
  std::string cooc_path;
};

template <typename T>
Checkpoint<T> read_checkpoint(std::istream& is) {
  io::expect_magic(is, "SIMR");
  const auto version = io::read_pod<std::uint32_t>(is, "SIMR version");
  if (version != kCheckpointVersion) {
    fail("SIMR checkpoint version ", version, " unsupported (expected ", kCheckpointVersion, ")");
  }
  Checkpoint<T> c;
  auto& d = c.params.dims;
  const auto mode = io::read_pod<std::uint8_t>(is, "SIMR mode");
  if (mode > 1) fail("SIMR: unknown mode byte ", static_cast<int>(mode));
  d.mode = static_cast<EmbeddingMode>(mode);
  d.positional = io::read_pod<std::uint8_t>(is, "SIMR positional") != 0;
  d.n_items = io::read_pod<std::uint64_t>(is, "SIMR n_items");
  d.d = io::read_pod<std::uint64_t>(is, "SIMR d");
  d.k = io::read_pod<std::uint64_t>(is, "SIMR k");
  d.d_a = io::read_pod<std::uint64_t>(is, "SIMR d_a");
  d.l = io::read_pod<std::uint64_t>(is, "SIMR l");
  auto read_tensor = [&](std::size_t r, std::size_t cols, const char* what) {
    auto buf = io::read_array<float>(is, r * cols, what);
    return Tensor<T>(r, cols, std::vector<T>(buf.begin(), buf.end()));
  };
  c.params.item_table = read_tensor(d.n_items + 1, d.d, "SIMR item table");
  c.params.w1 = read_tensor(d.d_a, d.d, "SIMR w1");
  c.params.w2 = read_tensor(d.k, d.d_a, "SIMR w2");
  if (d.positional) c.params.pos = read_tensor(d.l, d.d, "SIMR pos");
  const auto len = io::read_pod<std::uint32_t>(is, "SIMR footer");
  c.cooc_path.resize(len);
  is.read(c.cooc_path.data(), len);
  if (!is) fail("truncated file while reading SIMR footer path");
  return c;
}

template <typename T>
void save_checkpoint(const std::string& path, const ModelParams<T>& p, const std::string& cooc_path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail("cannot open '", path, "' for writing");
  write_checkpoint(os, p, cooc_path);
  if (!os) fail("write to '", path, "' failed");
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail("cannot open checkpoint '", path, "'");
  return read_checkpoint<T>(is);
}

}  // namespace simrec
