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
#include <chrono>
#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "simrec/adam.hpp"
#include "simrec/autodiff.hpp"
#include "simrec/common.hpp"
#include "simrec/cooc.hpp"
#include "simrec/data.hpp"
#include "simrec/eval.hpp"
#include "simrec/model.hpp"

namespace simrec {

struct TrainConfig {
  std::size_t d = 64;
  std::size_t K = 4;
  std::size_t L = 20;
  double lr = 0.001;
  std::size_t batch = 256;
  std::size_t neg_multiplier = 10;
  std::size_t max_iters = 1000000;
  std::size_t eval_every = 500;
  std::size_t patience = 20;
  std::uint64_t seed = 42;
  int T = 3;
  EmbeddingMode mode = EmbeddingMode::kSimEmb;
  bool positional = true;

  std::size_t negatives() const { return neg_multiplier * batch; }

  ModelDims dims(std::size_t n_items) const {
    return {n_items, d, K, 4 * d, L, positional, mode};
  }

  void validate() const {
    if (d == 0 || K == 0 || L == 0 || batch == 0 || neg_multiplier == 0 || max_iters == 0 ||
        eval_every == 0 || patience == 0 || T < 1 || !(lr > 0.0)) {
      fail("train config: every numeric field must be positive");
    }
  }

  // Sets one field from its textual value; keys are the field names.
  void set(const std::string& key, const std::string& value) {
    auto as_size = [&]() -> std::size_t {
      try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size() || v < 0) throw std::invalid_argument(value);
        return static_cast<std::size_t>(v);
      } catch (const std::exception&) {
        fail("config key '", key, "': expected a nonnegative integer, got '", value, "'");
      }
    };
    if (key == "d") d = as_size();
    else if (key == "K") K = as_size();
    else if (key == "L") L = as_size();
    else if (key == "lr") {
      try {
        lr = std::stod(value);
      } catch (const std::exception&) {
        fail("config key 'lr': expected a number, got '", value, "'");
      }
    } else if (key == "batch") batch = as_size();
    else if (key == "neg_multiplier") neg_multiplier = as_size();
    else if (key == "max_iters") max_iters = as_size();
    else if (key == "eval_every") eval_every = as_size();
    else if (key == "patience") patience = as_size();
    else if (key == "seed") seed = as_size();
    else if (key == "T") T = static_cast<int>(as_size());
    else if (key == "mode") mode = parse_mode(value);
    else if (key == "positional") {
      if (value == "true" || value == "1") positional = true;
      else if (value == "false" || value == "0") positional = false;
      else fail("config key 'positional': expected true/false, got '", value, "'");
    } else {
      fail("unknown config key '", key, "'");
    }
  }

  std::string to_text() const {
    std::ostringstream os;
    os << "d=" << d << "\nK=" << K << "\nL=" << L << "\nlr=" << lr << "\nbatch=" << batch
       << "\nneg_multiplier=" << neg_multiplier << "\nmax_iters=" << max_iters << "\neval_every=" << eval_every
       << "\npatience=" << patience << "\nseed=" << seed << "\nT=" << T << "\nmode=" << to_string(mode)
       << "\npositional=" << (positional ? "true" : "false") << "\n";
    return os.str();
  }
};

// Flat key=value lines; '#' starts a comment.
inline TrainConfig parse_config(std::istream& in, TrainConfig base = {}) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) fail("config line ", line_no, ": expected key=value");
    base.set(std::string(detail::trim(body.substr(0, eq))), std::string(detail::trim(body.substr(eq + 1))));
  }
  return base;
}

// Uniform draws from the real items [1, n_items], with replacement, shared
// by the whole batch. Positives are not excluded.
inline std::vector<ItemIndex> sample_negatives(std::size_t n_items, std::size_t count, Rng& rng) {
  if (n_items < 2) fail("sample_negatives: need at least 2 items");
  std::vector<ItemIndex> out(count);
  for (auto& i : out) i = static_cast<ItemIndex>(1 + rng.below(n_items));
  return out;
}

template <typename T>
struct BatchResult {
  double loss = 0.0;
  std::vector<Tensor<T>> grads;  // in ModelParams::trainable() order
};

// Sampled-softmax loss of one batch and its gradients. Every item the batch
// touches is embedded once (through the gathered co-occurrence rows in SimEmb
// mode); histories, targets and negatives are then row lookups into that
// block. The interest index is chosen by argmax against the target embedding
// and treated as a constant.
template <typename T>
BatchResult<T> batch_loss(const std::vector<TrainExample>& batch, const std::vector<ItemIndex>& negatives,
                          const ModelParams<T>& p, const CoocMatrix* a) {
  if (batch.empty()) fail("batch_loss: empty batch");
  if (negatives.empty()) fail("batch_loss: no negatives");
  if (p.dims.mode == EmbeddingMode::kSimEmb && !a) fail("batch_loss: SimEmb mode needs the co-occurrence matrix");
  const CoocMatrix* route = p.dims.mode == EmbeddingMode::kSimEmb ? a : nullptr;

  std::vector<ItemIndex> touched(negatives.begin(), negatives.end());
  for (const auto& ex : batch) {
    if (ex.history.size() != p.dims.l || ex.mask.size() != p.dims.l) {
      fail("batch_loss: history length ", ex.history.size(), " vs model window ", p.dims.l);
    }
    touched.insert(touched.end(), ex.history.begin(), ex.history.end());
    touched.push_back(ex.target);
  }
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
  auto local = [&](ItemIndex i) {
    return static_cast<std::uint32_t>(std::lower_bound(touched.begin(), touched.end(), i) - touched.begin());
  };
  auto locals = [&](std::span<const ItemIndex> items) {
    std::vector<std::uint32_t> out;
    out.reserve(items.size());
    for (ItemIndex i : items) out.push_back(local(i));
    return out;
  };

  Tape<T> tape;
  Var<T> table = tape.leaf(p.item_table);
  Var<T> w1 = tape.leaf(p.w1);
  Var<T> w2 = tape.leaf(p.w2);
  std::optional<Var<T>> pos;
  if (p.dims.positional) pos = tape.leaf(p.pos);

  Var<T> block = embed_items(table, route, touched);

  std::vector<Var<T>> selected;
  std::vector<ItemIndex> targets;
  selected.reserve(batch.size());
  for (const auto& ex : batch) {
    Var<T> h = ops::gather(block, locals(ex.history));
    auto interests = extract_interests(h, ex.mask, w1, w2, pos);
    const auto e_pos = block.value().row(local(ex.target));
    const std::size_t k = select_interest(interests.interests.value(), e_pos);
    selected.push_back(ops::gather(interests.interests, {static_cast<std::uint32_t>(k)}));
    targets.push_back(ex.target);
  }
  Var<T> users = ops::concat_rows(selected);
  Var<T> pos_logits = ops::row_dot(users, ops::gather(block, locals(targets)));
  Var<T> neg_logits = ops::matmul(users, ops::gather(block, locals(negatives)), false, true);
  Var<T> loss = ops::sampled_softmax_nll(pos_logits, neg_logits);

  BatchResult<T> out;
  out.loss = static_cast<double>(loss.value()[0]);
  if (!std::isfinite(out.loss)) {
    double max_abs = 0.0;
    for (T v : neg_logits.value().values()) max_abs = std::max(max_abs, std::abs(static_cast<double>(v)));
    fail("batch_loss: non-finite loss (batch ", batch.size(), ", negatives ", negatives.size(),
         ", max |negative logit| ", max_abs, ")");
  }
  tape.backward(loss);
  out.grads.push_back(tape.grad(table));
  out.grads.push_back(tape.grad(w1));
  out.grads.push_back(tape.grad(w2));
  if (pos) out.grads.push_back(tape.grad(*pos));
  return out;
}

inline std::vector<TrainExample> sample_batch(const SequenceSet& set, std::span<const UserIndex> users,
                                              std::size_t size, std::size_t window, Rng& rng) {
  if (users.empty()) fail("sample_batch: no training users");
  std::vector<TrainExample> batch;
  batch.reserve(size);
  std::size_t guard = 0;
  while (batch.size() < size) {
    const auto& items = set.sequences.at(users[rng.below(users.size())]).items;
    if (items.size() >= 2) {
      batch.push_back(train_example(items, rng, window));
    } else if (++guard > 100 * size) {
      fail("sample_batch: training users have fewer than 2 items");
    }
  }
  return batch;
}

struct TrainLogEntry {
  std::size_t iteration = 0;
  double loss_ema = 0.0;
  double valid_recall50 = 0.0;
  double seconds_per_batch = 0.0;
};

template <typename T>
struct TrainResult {
  ModelParams<T> params;  // best by validation Recall@50 (or last, without validation)
  std::vector<TrainLogEntry> log;
  std::vector<double> loss_ema;  // one entry per iteration
  std::size_t iterations = 0;
  double best_valid_recall50 = -1.0;
  double mean_seconds_per_batch = 0.0;
};

template <typename T>
using Validator = std::function<double(const ModelParams<T>&)>;

// Validation Recall@50 through the serving path.
template <typename T>
double validation_recall50(const ModelParams<T>& p, const CoocMatrix* a, const SequenceSet& set,
                           std::span<const UserIndex> users) {
  const auto atlas = make_atlas(p, a);
  const std::size_t n = std::min<std::size_t>(50, atlas.n_items());
  return evaluate(p, atlas, set, users, {n}).recall(n);
}

// Batch -> loss -> Adam, evaluating every eval_every iterations (and at the
// last one). Stops after `patience` evaluations without improvement.
template <typename T = float>
TrainResult<T> train(const TrainConfig& cfg, const SequenceSet& set, const DatasetSplit& split, const CoocMatrix* a,
                     Validator<T> validator = {}) {
  cfg.validate();
  if (split.train.empty()) fail("train: empty training split");
  if (cfg.mode == EmbeddingMode::kSimEmb) {
    if (!a) fail("train: SimEmb mode needs the co-occurrence matrix");
    if (a->n_items() != set.n_items()) {
      fail("train: co-occurrence matrix covers ", a->n_items(), " items, dataset has ", set.n_items());
    }
  }
  if (!validator && !split.valid.empty()) {
    validator = [&](const ModelParams<T>& p) { return validation_recall50(p, a, set, split.valid); };
  }

  Rng rng(cfg.seed);
  TrainResult<T> res;
  ModelParams<T> params = init_params<T>(cfg.dims(set.n_items()), rng);
  AdamState<T> adam;
  double ema = 0.0;
  double window_seconds = 0.0, total_seconds = 0.0;
  std::size_t window_batches = 0, bad_evals = 0;
  bool have_best = false;

  for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
    const auto batch = sample_batch(set, split.train, cfg.batch, cfg.L, rng);
    const auto negs = sample_negatives(set.n_items(), cfg.negatives(), rng);
    const auto t0 = std::chrono::steady_clock::now();
    auto step = batch_loss(batch, negs, params, a);
    std::vector<const Tensor<T>*> grads;
    for (const auto& g : step.grads) grads.push_back(&g);
    adam_step(params.trainable(), grads, adam, cfg.lr);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    window_seconds += secs;
    total_seconds += secs;
    ++window_batches;

    ema = it == 1 ? step.loss : 0.99 * ema + 0.01 * step.loss;
    res.loss_ema.push_back(ema);
    res.iterations = it;

    if (it % cfg.eval_every == 0 || it == cfg.max_iters) {
      TrainLogEntry entry{it, ema, 0.0, window_seconds / static_cast<double>(window_batches)};
      window_seconds = 0.0;
      window_batches = 0;
      if (validator) {
        entry.valid_recall50 = validator(params);
        if (!have_best || entry.valid_recall50 > res.best_valid_recall50) {
          res.best_valid_recall50 = entry.valid_recall50;
          res.params = params;
          have_best = true;
          bad_evals = 0;
        } else {
          ++bad_evals;
        }
      }
      res.log.push_back(entry);
      if (validator && bad_evals >= cfg.patience) break;
    }
  }
  if (!have_best) res.params = params;
  res.mean_seconds_per_batch = total_seconds / static_cast<double>(res.iterations);
  return res;
}

// Mean wall-clock seconds of batch_loss + adam_step over `batches` steps.
template <typename T = float>
double time_per_batch(const TrainConfig& cfg, const SequenceSet& set, const DatasetSplit& split, const CoocMatrix* a,
                      std::size_t batches) {
  TrainConfig c = cfg;
  c.max_iters = batches;
  c.eval_every = batches + 1;
  auto res = train<T>(c, set, split, a, [](const ModelParams<T>&) { return 0.0; });
  return res.mean_seconds_per_batch;
}

}  // namespace simrec
