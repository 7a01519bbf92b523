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
// Reverse-mode tape over a fixed kernel set. Each kernel records its forward
// value and a closure that accumulates exact gradients into its inputs.
// Reductions accumulate in double regardless of the tensor scalar type.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "simrec/common.hpp"
#include "simrec/sparse.hpp"
#include "simrec/tensor.hpp"

namespace simrec {

namespace kernels {

// C (+)= op(A) * op(B) for row-major A, B, C. op(A) is M x K, op(B) is K x N.
template <typename T>
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, const T* a,
          const T* b, T* c, bool accumulate) {
  std::vector<double> acc(n);
  if (trans_a && trans_b) fail("gemm: transposing both operands is not supported");
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    if (trans_b) {
      // A is M x K, B is N x K.
      const T* arow = a + i * k;
      for (std::size_t j = 0; j < n; ++j) {
        const T* brow = b + j * k;
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) s += static_cast<double>(arow[p]) * brow[p];
        acc[j] = s;
      }
    } else {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t p = 0; p < k; ++p) {
        // A is M x K (or K x M when transposed), B is K x N.
        const double av = trans_a ? a[p * m + i] : a[i * k + p];
        if (av == 0.0) continue;
        const T* brow = b + p * n;
        for (std::size_t j = 0; j < n; ++j) acc[j] += av * brow[j];
      }
    }
    if (accumulate) {
      for (std::size_t j = 0; j < n; ++j) crow[j] = static_cast<T>(crow[j] + acc[j]);
    } else {
      for (std::size_t j = 0; j < n; ++j) crow[j] = static_cast<T>(acc[j]);
    }
  }
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b, bool trans_a = false,
                 bool trans_b = false) {
  const std::size_t m = trans_a ? a.cols() : a.rows();
  const std::size_t ka = trans_a ? a.rows() : a.cols();
  const std::size_t kb = trans_b ? b.cols() : b.rows();
  const std::size_t n = trans_b ? b.rows() : b.cols();
  if (ka != kb) {
    fail("matmul: inner dimensions differ for ", shape_str(a.shape()), (trans_a ? "^T" : ""),
         " * ", shape_str(b.shape()), (trans_b ? "^T" : ""));
  }
  Tensor<T> c(m, n);
  gemm(trans_a, trans_b, m, n, ka, a.data(), b.data(), c.data(), false);
  return c;
}

template <typename T, typename V>
Tensor<T> sparse_dense_matmul(const SparseRowMatrix<V>& s, const Tensor<T>& d) {
  if (s.n_cols != d.rows()) {
    fail("sparse_dense_matmul: sparse ", s.n_rows, "x", s.n_cols, " * dense ", shape_str(d.shape()));
  }
  const std::size_t w = d.cols();
  Tensor<T> out(s.n_rows, w);
  std::vector<double> acc(w);
  for (std::size_t r = 0; r < s.n_rows; ++r) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (auto e = s.row_offsets[r]; e < s.row_offsets[r + 1]; ++e) {
      const double v = static_cast<double>(s.values[e]);
      const T* src = d.data() + static_cast<std::size_t>(s.col_indices[e]) * w;
      for (std::size_t j = 0; j < w; ++j) acc[j] += v * src[j];
    }
    T* dst = out.data() + r * w;
    for (std::size_t j = 0; j < w; ++j) dst[j] = static_cast<T>(acc[j]);
  }
  return out;
}

// Softmax along `axis` (0: down each column, 1: across each row). Masked
// positions get probability 0. Every slice needs one unmasked position.
template <typename T>
Tensor<T> masked_softmax(const Tensor<T>& x, std::span<const std::uint8_t> mask, int axis) {
  const std::size_t len = axis == 0 ? x.rows() : x.cols();
  const std::size_t slices = axis == 0 ? x.cols() : x.rows();
  if (axis != 0 && axis != 1) fail("masked_softmax: axis must be 0 or 1");
  if (mask.size() != len) {
    fail("masked_softmax: mask length ", mask.size(), " does not match axis ", axis, " of ",
         shape_str(x.shape()));
  }
  if (std::none_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; })) {
    fail("masked_softmax: every position is masked");
  }
  auto at = [&](std::size_t slice, std::size_t pos) {
    return axis == 0 ? pos * x.cols() + slice : slice * x.cols() + pos;
  };
  Tensor<T> y(x.shape());
  for (std::size_t s = 0; s < slices; ++s) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < len; ++p) {
      if (mask[p]) mx = std::max(mx, static_cast<double>(x[at(s, p)]));
    }
    double z = 0.0;
    for (std::size_t p = 0; p < len; ++p) {
      if (mask[p]) z += std::exp(static_cast<double>(x[at(s, p)]) - mx);
    }
    for (std::size_t p = 0; p < len; ++p) {
      y[at(s, p)] = mask[p] ? static_cast<T>(std::exp(static_cast<double>(x[at(s, p)]) - mx) / z)
                            : T(0);
    }
  }
  return y;
}

}  // namespace kernels

template <typename T>
class Tape;

// Handle to a tape node.
template <typename T>
struct Var {
  Tape<T>* tape = nullptr;
  std::size_t id = 0;

  const Tensor<T>& value() const { return tape->value(id); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

template <typename T>
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Owned value, never differentiated.
  Var<T> constant(Tensor<T> value) { return push(std::move(value), false, nullptr); }

  // Parameter leaf referencing an external tensor that must outlive the tape.
  Var<T> leaf(const Tensor<T>& ref, bool requires_grad = true) {
    Node n;
    n.external = &ref;
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  Var<T> push(Tensor<T> value, bool requires_grad, Backward backward) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.backward = requires_grad ? std::move(backward) : nullptr;
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  const Tensor<T>& value(std::size_t id) const {
    const Node& n = nodes_.at(id);
    return n.external ? *n.external : n.value;
  }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

  // Gradient accumulator for a node, allocated as zeros on first use.
  Tensor<T>& grad_ref(std::size_t id) {
    Node& n = nodes_.at(id);
    if (n.grad.empty() && !value(id).empty()) n.grad = Tensor<T>(value(id).shape());
    return n.grad;
  }

  // Zero tensor when the node received no gradient.
  Tensor<T> grad(Var<T> v) const {
    const Node& n = nodes_.at(v.id);
    if (n.grad.empty()) return Tensor<T>(value(v.id).shape());
    return n.grad;
  }

  // Seeds d(loss)/d(loss) = 1 and visits every node once in reverse order.
  void backward(Var<T> loss) {
    if (loss.value().size() != 1) {
      fail("backward: loss must be a scalar, got ", shape_str(loss.value().shape()));
    }
    grad_ref(loss.id)[0] = T(1);
    for (std::size_t id = loss.id + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (n.backward && !n.grad.empty()) n.backward(*this, id);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    const Tensor<T>* external = nullptr;
    Tensor<T> grad;
    bool requires_grad = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
};

namespace ops {

namespace detail {

template <typename T>
bool any_grad(std::initializer_list<Var<T>> vs) {
  for (const auto& v : vs) {
    if (v.tape->requires_grad(v.id)) return true;
  }
  return false;
}

template <typename T>
void same_shape(const char* op, const Var<T>& a, const Var<T>& b) {
  if (a.value().shape() != b.value().shape()) {
    fail(op, ": shape mismatch ", shape_str(a.value().shape()), " vs ",
         shape_str(b.value().shape()));
  }
}

}  // namespace detail

template <typename T>
Var<T> matmul(Var<T> a, Var<T> b, bool trans_a = false, bool trans_b = false) {
  Tape<T>& tape = *a.tape;
  Tensor<T> out = kernels::matmul(a.value(), b.value(), trans_a, trans_b);
  const std::size_t ia = a.id, ib = b.id;
  return tape.push(std::move(out), detail::any_grad({a, b}), [=](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad_ref(self);
    const Tensor<T>& av = t.value(ia);
    const Tensor<T>& bv = t.value(ib);
    const std::size_t m = g.rows(), n = g.cols();
    const std::size_t k = trans_a ? av.rows() : av.cols();
    if (t.requires_grad(ia)) {
      Tensor<T>& ga = t.grad_ref(ia);
      if (!trans_a) {
        // dA (M x K) = G * op(B)^T
        kernels::gemm(false, !trans_b, m, k, n, g.data(), bv.data(), ga.data(), true);
      } else {
        // A is K x M; dA = op(B) * G^T
        if (trans_b) fail("matmul: transposing both operands is not supported");
        kernels::gemm(false, true, k, m, n, bv.data(), g.data(), ga.data(), true);
      }
    }
    if (t.requires_grad(ib)) {
      Tensor<T>& gb = t.grad_ref(ib);
      if (!trans_b) {
        // dB (K x N) = op(A)^T * G
        kernels::gemm(!trans_a, false, k, n, m, av.data(), g.data(), gb.data(), true);
      } else {
        // B is N x K; dB = G^T * op(A)
        if (trans_a) fail("matmul: transposing both operands is not supported");
        kernels::gemm(true, false, n, k, m, g.data(), av.data(), gb.data(), true);
      }
    }
  });
}

// Constant sparse left operand; gradient flows to the dense side only.
template <typename T, typename V>
Var<T> sparse_dense_matmul(std::shared_ptr<const SparseRowMatrix<V>> s, Var<T> d) {
  Tape<T>& tape = *d.tape;
  Tensor<T> out = kernels::sparse_dense_matmul(*s, d.value());
  const std::size_t id = d.id;
  return tape.push(std::move(out), detail::any_grad({d}), [=](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad_ref(self);
    Tensor<T>& gd = t.grad_ref(id);
    const std::size_t w = g.cols();
    for (std::size_t r = 0; r < s->n_rows; ++r) {
      const T* grow = g.data() + r * w;
      for (auto e = s->row_offsets[r]; e < s->row_offsets[r + 1]; ++e) {
        const double v = static_cast<double>(s->values[e]);
        T* dst = gd.data() + static_cast<std::size_t>(s->col_indices[e]) * w;
        for (std::size_t j = 0; j < w; ++j) dst[j] = static_cast<T>(dst[j] + v * grow[j]);
      }
    }
  });
}

template <typename T>
Var<T> tanh(Var<T> x) {
  Tensor<T> out(x.value().shape());
  const auto& xv = x.value();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = static_cast<T>(std::tanh(static_cast<double>(xv[k])));
  const std::size_t ix = x.id;
  return x.tape->push(std::move(out), detail::any_grad({x}), [=](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad_ref(self);
    const Tensor<T>& y = t.value(self);
    Tensor<T>& gx = t.grad_ref(ix);
    for (std::size_t k = 0; k < g.size(); ++k) gx[k] = static_cast<T>(gx[k] + g[k] * (T(1) - y[k] * y[k]));
  });
}

template <typename T>
Var<T> masked_softmax(Var<T> x, std::vector<std::uint8_t> mask, int axis) {
  Tensor<T> out = kernels::masked_softmax(x.value(), mask, axis);
  const std::size_t ix = x.id;
  return x.tape->push(std::move(out), detail::any_grad({x}), [=](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad_ref(self);
    const Tensor<T>& y = t.value(self);
    Tensor<T>& gx = t.grad_ref(ix);
    const std::size_t cols = y.cols();
    const std::size_t len = axis == 0 ? y.rows() : cols;
    const std::size_t slices = axis == 0 ? cols : y.rows();
    auto at = [&](std::size_t s, std::size_t p) { return axis == 0 ? p * cols + s : s * cols + p; };
    for (std::size_t s = 0; s < slices; ++s) {
      double dot = 0.0;
      for (std::size_t p = 0; p < len; ++p) dot += static_cast<double>(g[at(s, p)]) * y[at(s, p)];
      for (std::size_t p = 0; p < len; ++p) {
        if (!mask[p]) continue;
        const std::size_t k = at(s, p);
        gx[k] = static_cast<T>(gx[k] + y[k] * (g[k] - dot));
      }
    }
  });
}

// Row lookup; repeated indices accumulate gradient.
template <typename T>
Var<T> gather(Var<T> e, std::vector<std::uint32_t> indices) {
  const auto& ev = e.value();
  const std::size_t w = ev.cols();
  Tensor<T> out(indices.size(), w);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= ev.rows()) {
      fail("gather: index ", indices[r], " out of range for ", shape_str(ev.shape()));
    }
    std::copy_n(ev.data() + static_cast<std::size_t>(indices[r]) * w, w, out.data() + r * w);
  }
  const std::size_t ie = e.id;
  return e.tape->push(std::move(out), detail::any_grad({e}),
                      [ie, w, idx = std::move(indices)](Tape<T>& t, std::size_t self) {
                        const Tensor<T>& g = t.grad_ref(self);
                        Tensor<T>& ge = t.grad_ref(ie);
                        for (std::size_t r = 0; r < idx.size(); ++r) {
                          T* dst = ge.data() + static_cast<std::size_t>(idx[r]) * w;
                          const T* src = g.data() + r * w;
                          for (std::size_t j = 0; j < w; ++j) dst[j] += src[j];
                        }
                      });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  detail::same_shape("add", a, b);
  Tensor<T> out(a.value().shape());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = a.value()[k] + b.value()[k];
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->push(std::move(out), detail::any_grad({a, b}), [=](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad_ref(self);
    for (std::size_t id : {ia, ib}) {
      if (!t.requires_grad(id)) continue;
      Tensor<T>& gi = t.grad_ref(id);
      for (std::size_t k = 0; k < g.size(); ++k) gi[k] += g[k];
    }
  });
}

template <typename T>
Var<T> scale(Var<T> a, double c) {
  Tensor<T> out(a.value().shape());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = static_cast<T>(a.value()[k] * c);
  const std::size_t ia = a.id;
  return a.tape->push(std::move(out), detail::any_grad({a}), [=](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad_ref(self);
    Tensor<T>& ga = t.grad_ref(ia);
    for (std::size_t k = 0; k < g.size(); ++k) ga[k] = static_cast<T>(ga[k] + c * g[k]);
  });
}

// Per-row inner product: n x d, n x d -> n x 1.
template <typename T>
Var<T> row_dot(Var<T> a, Var<T> b) {
  detail::same_shape("row_dot", a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  const std::size_t n = av.rows(), w = av.cols();
  Tensor<T> out(n, 1);
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < w; ++j) s += static_cast<double>(av(r, j)) * bv(r, j);
    out[r] = static_cast<T>(s);
  }
  const std::size_t ia = a.id, ib = b.id;
  return a.tape->push(std::move(out), detail::any_grad({a, b}), [=](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad_ref(self);
    const Tensor<T>& av2 = t.value(ia);
    const Tensor<T>& bv2 = t.value(ib);
    if (t.requires_grad(ia)) {
      Tensor<T>& ga = t.grad_ref(ia);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < w; ++j) ga(r, j) += g[r] * bv2(r, j);
    }
    if (t.requires_grad(ib)) {
      Tensor<T>& gb = t.grad_ref(ib);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < w; ++j) gb(r, j) += g[r] * av2(r, j);
    }
  });
}

// Vertical stack of equal-width inputs.
template <typename T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
  if (parts.empty()) fail("concat_rows: no inputs");
  const std::size_t w = parts.front().cols();
  std::size_t total = 0;
  bool needs = false;
  for (const auto& p : parts) {
    if (p.cols() != w) fail("concat_rows: width ", p.cols(), " differs from ", w);
    total += p.rows();
    needs = needs || p.tape->requires_grad(p.id);
  }
  Tensor<T> out(total, w);
  std::vector<std::size_t> ids, offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    std::copy_n(p.value().data(), p.value().size(), out.data() + off * w);
    ids.push_back(p.id);
    offsets.push_back(off);
    off += p.rows();
  }
  return parts.front().tape->push(
      std::move(out), needs, [ids, offsets, w](Tape<T>& t, std::size_t self) {
        const Tensor<T>& g = t.grad_ref(self);
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (!t.requires_grad(ids[k])) continue;
          Tensor<T>& gp = t.grad_ref(ids[k]);
          const T* src = g.data() + offsets[k] * w;
          for (std::size_t j = 0; j < gp.size(); ++j) gp[j] += src[j];
        }
      });
}

// Mean over rows of -log( exp(pos_r) / (exp(pos_r) + sum_j exp(neg_rj)) ).
// pos is n x 1, neg is n x N; result is 1 x 1.
template <typename T>
Var<T> sampled_softmax_nll(Var<T> pos, Var<T> neg) {
  const auto& pv = pos.value();
  const auto& nv = neg.value();
  if (pv.cols() != 1 || pv.rows() != nv.rows()) {
    fail("sampled_softmax_nll: positive ", shape_str(pv.shape()), " vs negative ",
         shape_str(nv.shape()));
  }
  const std::size_t n = nv.rows(), m = nv.cols();
  // Cached per-row softmax probabilities: column 0 positive, then negatives.
  auto probs = std::make_shared<std::vector<double>>(n * (m + 1));
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    double mx = pv[r];
    for (std::size_t j = 0; j < m; ++j) mx = std::max(mx, static_cast<double>(nv(r, j)));
    double z = std::exp(pv[r] - mx);
    for (std::size_t j = 0; j < m; ++j) z += std::exp(nv(r, j) - mx);
    const double lse = mx + std::log(z);
    total += lse - pv[r];
    double* pr = probs->data() + r * (m + 1);
    pr[0] = std::exp(pv[r] - lse);
    for (std::size_t j = 0; j < m; ++j) pr[j + 1] = std::exp(nv(r, j) - lse);
  }
  Tensor<T> out(1, 1);
  out[0] = static_cast<T>(total / static_cast<double>(n));
  const std::size_t ip = pos.id, in = neg.id;
  return pos.tape->push(std::move(out), detail::any_grad({pos, neg}), [=](Tape<T>& t, std::size_t self) {
    const double g = t.grad_ref(self)[0] / static_cast<double>(n);
    if (t.requires_grad(ip)) {
      Tensor<T>& gp = t.grad_ref(ip);
      for (std::size_t r = 0; r < n; ++r) gp[r] = static_cast<T>(gp[r] + g * ((*probs)[r * (m + 1)] - 1.0));
    }
    if (t.requires_grad(in)) {
      Tensor<T>& gn = t.grad_ref(in);
      for (std::size_t r = 0; r < n; ++r) {
        const double* pr = probs->data() + r * (m + 1) + 1;
        for (std::size_t j = 0; j < m; ++j) gn(r, j) = static_cast<T>(gn(r, j) + g * pr[j]);
      }
    }
  });
}

}  // namespace ops

}  // namespace simrec
