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
// Small-scale exact check of the attribute-simulation identity: for a binary
// item-attribute matrix R, the shared-attribute similarity S = R R^T is a
// column transformation of the zero-extended [R : O], S = [R : O] P, so
// [R : O] = S P^-1.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "simrec/common.hpp"

namespace simrec::theory {

template <typename T>
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c, T fill = T(0))
      : rows(r), cols(c), data(r * c, fill) {}

  T& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;
};

using IntMatrix = DenseMatrix<std::int64_t>;

// Binary |I| x |A| incidence; every item has at least one attribute.
struct AttributeMatrix {
  IntMatrix r;

  std::size_t n_items() const { return r.rows; }
  std::size_t n_attrs() const { return r.cols; }

  void validate() const {
    for (std::size_t i = 0; i < r.rows; ++i) {
      std::int64_t count = 0;
      for (std::size_t j = 0; j < r.cols; ++j) {
        if (r(i, j) != 0 && r(i, j) != 1) fail("attribute matrix must be binary");
        count += r(i, j);
      }
      if (count == 0) fail("item ", i, " has no attributes");
    }
  }
};

inline std::vector<std::size_t> attr_index_set(const AttributeMatrix& a, std::size_t item) {
  if (item >= a.n_items()) fail("item ", item, " out of range");
  std::vector<std::size_t> set;
  for (std::size_t j = 0; j < a.n_attrs(); ++j) {
    if (a.r(item, j) != 0) set.push_back(j);
  }
  return set;
}

// Column i of S is the sum of the R columns indexed by item i's attributes.
inline IntMatrix similarity_from_attributes(const AttributeMatrix& a) {
  a.validate();
  const std::size_t n = a.n_items();
  IntMatrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : attr_index_set(a, i)) {
      for (std::size_t row = 0; row < n; ++row) s(row, i) += a.r(row, j);
    }
  }
  return s;
}

// [R : O], the zero-extended |I| x |I| attribute matrix.
inline IntMatrix extend_with_zeros(const AttributeMatrix& a) {
  if (a.n_attrs() > a.n_items()) fail("need |A| <= |I| to zero-extend R");
  IntMatrix out(a.n_items(), a.n_items());
  for (std::size_t i = 0; i < a.n_items(); ++i) {
    for (std::size_t j = 0; j < a.n_attrs(); ++j) out(i, j) = a.r(i, j);
  }
  return out;
}

template <typename A, typename B>
DenseMatrix<std::common_type_t<A, B>> matmul(const DenseMatrix<A>& x, const DenseMatrix<B>& y) {
  using C = std::common_type_t<A, B>;
  if (x.cols != y.rows) fail("theory::matmul: shape mismatch ", x.rows, "x", x.cols, " * ", y.rows, "x", y.cols);
  DenseMatrix<C> out(x.rows, y.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t k = 0; k < x.cols; ++k) {
      const C v = x(i, k);
      if (v == C(0)) continue;
      for (std::size_t j = 0; j < y.cols; ++j) out(i, j) += v * static_cast<C>(y(k, j));
    }
  }
  return out;
}

// Determinant by partial-pivot elimination, in doubles.
inline double determinant(DenseMatrix<double> m) {
  if (m.rows != m.cols) fail("determinant of non-square matrix");
  const std::size_t n = m.rows;
  double det = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(m(r, c)) > std::abs(m(piv, c))) piv = r;
    }
    if (m(piv, c) == 0.0) return 0.0;
    if (piv != c) {
      for (std::size_t k = 0; k < n; ++k) std::swap(m(piv, k), m(c, k));
      det = -det;
    }
    det *= m(c, c);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = m(r, c) / m(c, c);
      if (f == 0.0) continue;
      for (std::size_t k = c; k < n; ++k) m(r, k) -= f * m(c, k);
    }
  }
  return det;
}

template <typename T>
DenseMatrix<double> to_double(const DenseMatrix<T>& m) {
  DenseMatrix<double> out(m.rows, m.cols);
  for (std::size_t k = 0; k < m.data.size(); ++k) out.data[k] = static_cast<double>(m.data[k]);
  return out;
}

// P with top block P[j, i] = 1 iff attribute j belongs to item i, and an
// identity bottom block on rows |A|..|I|-1. Invertible iff the incidence
// block of the first |A| items is.
inline IntMatrix build_transform(const AttributeMatrix& a) {
  a.validate();
  const std::size_t n = a.n_items(), m = a.n_attrs();
  if (m > n) fail("build_transform: need |A| <= |I|");
  IntMatrix p(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) p(j, i) = a.r(i, j);
  }
  for (std::size_t r = m; r < n; ++r) p(r, r) = 1;

  DenseMatrix<double> block(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) block(i, j) = static_cast<double>(a.r(i, j));
  }
  if (std::abs(determinant(block)) < 0.5) {
    fail("build_transform: the first |A| items have a singular attribute block; "
         "regenerate the instance");
  }
  return p;
}

// Returns S P^-1 by solving X P = S (that is, P^T X^T = S^T) with partial
// pivoting.
inline DenseMatrix<double> verify_recovery(const IntMatrix& s, const IntMatrix& p) {
  if (p.rows != p.cols || s.cols != p.rows) fail("verify_recovery: shape mismatch");
  const std::size_t n = p.rows, k = s.rows;
  // Augmented system [P^T | S^T].
  DenseMatrix<double> aug(n, n + k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) aug(i, j) = static_cast<double>(p(j, i));
    for (std::size_t j = 0; j < k; ++j) aug(i, n + j) = static_cast<double>(s(j, i));
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(aug(r, c)) > std::abs(aug(piv, c))) piv = r;
    }
    if (std::abs(aug(piv, c)) < 1e-12) fail("verify_recovery: P is singular");
    if (piv != c) {
      for (std::size_t j = 0; j < aug.cols; ++j) std::swap(aug(piv, j), aug(c, j));
    }
    const double d = aug(c, c);
    for (std::size_t j = c; j < aug.cols; ++j) aug(c, j) /= d;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = aug(r, c);
      if (f == 0.0) continue;
      for (std::size_t j = c; j < aug.cols; ++j) aug(r, j) -= f * aug(c, j);
    }
  }
  DenseMatrix<double> x(k, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) x(j, i) = aug(i, n + j);
  }
  return x;
}

// Random instance with an invertible leading block: item j < |A| carries
// attribute j plus optional attributes below j (unit lower triangular);
// the remaining items draw a random nonempty subset.
inline AttributeMatrix generate_instance(std::size_t n_items, std::size_t n_attrs, Rng& rng,
                                         double extra_prob = 0.3) {
  if (n_attrs == 0 || n_attrs > n_items) fail("generate_instance: need 1 <= |A| <= |I|");
  if (n_items > 64 || n_attrs > 16) fail("generate_instance: harness limited to |I| <= 64, |A| <= 16");
  AttributeMatrix a{IntMatrix(n_items, n_attrs)};
  for (std::size_t i = 0; i < n_attrs; ++i) {
    a.r(i, i) = 1;
    for (std::size_t j = 0; j < i; ++j) a.r(i, j) = rng.uniform() < extra_prob ? 1 : 0;
  }
  for (std::size_t i = n_attrs; i < n_items; ++i) {
    bool any = false;
    for (std::size_t j = 0; j < n_attrs; ++j) {
      a.r(i, j) = rng.uniform() < extra_prob ? 1 : 0;
      any = any || a.r(i, j) != 0;
    }
    if (!any) a.r(i, rng.below(n_attrs)) = 1;
  }
  return a;
}

struct InstanceCheck {
  bool product_exact = false;       // [R:O] P == S in integers
  double recovery_residual = 0.0;   // max |S P^-1 - [R:O]|
  double det_p = 0.0;
};

inline InstanceCheck check_instance(const AttributeMatrix& a) {
  InstanceCheck out;
  const IntMatrix s = similarity_from_attributes(a);
  const IntMatrix p = build_transform(a);
  const IntMatrix ro = extend_with_zeros(a);
  out.product_exact = matmul(ro, p) == s;
  out.det_p = determinant(to_double(p));
  const auto rec = verify_recovery(s, p);
  for (std::size_t k = 0; k < rec.data.size(); ++k) {
    out.recovery_residual =
        std::max(out.recovery_residual, std::abs(rec.data[k] - static_cast<double>(ro.data[k])));
  }
  return out;
}

// Item sequences in which co-occurring items share an attribute: each
// sequence picks one attribute and samples items carrying it. Items are
// returned 1-based so they can feed the co-occurrence builder directly.
inline std::vector<std::vector<std::uint32_t>> attribute_sequences(const AttributeMatrix& a,
                                                                   std::size_t n_sequences,
                                                                   std::size_t length, Rng& rng) {
  std::vector<std::vector<std::size_t>> carriers(a.n_attrs());
  for (std::size_t i = 0; i < a.n_items(); ++i) {
    for (std::size_t j : attr_index_set(a, i)) carriers[j].push_back(i);
  }
  std::vector<std::vector<std::uint32_t>> out(n_sequences);
  for (auto& seq : out) {
    const auto& pool = carriers[rng.below(a.n_attrs())];
    for (std::size_t l = 0; l < length; ++l) {
      seq.push_back(static_cast<std::uint32_t>(pool[rng.below(pool.size())] + 1));
    }
  }
  return out;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) fail("pearson: need equal-length inputs");
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace simrec::theory
