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
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "simrec/common.hpp"
#include "simrec/data.hpp"
#include "simrec/tensor.hpp"

namespace simrec::viz {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct TsneOptions {
  double perplexity = 30.0;
  std::size_t iters = 1000;
  std::size_t exaggeration_iters = 250;
  double exaggeration = 12.0;
  double learning_rate = 0.0;  // 0 selects n / 12
  std::uint64_t seed = 0;
};

struct TsneResult {
  std::vector<Point2> points;
  std::vector<std::pair<std::size_t, double>> kl_log;  // (iteration, KL(P || Q))

  double kl_at(std::size_t iter) const {
    for (const auto& [it, kl] : kl_log) {
      if (it == iter) return kl;
    }
    fail("tsne: no KL logged at iteration ", iter);
  }
  double final_kl() const { return kl_log.back().second; }
};

namespace detail {

inline std::vector<double> squared_distances(const std::vector<std::vector<double>>& x) {
  const std::size_t n = x.size();
  std::vector<double> d2(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < x[i].size(); ++k) {
        const double t = x[i][k] - x[j][k];
        s += t * t;
      }
      d2[i * n + j] = d2[j * n + i] = s;
    }
  }
  return d2;
}

// Row-conditional Gaussian affinities with entropy log(perplexity), then
// symmetrized and normalized to sum to one.
inline std::vector<double> input_affinities(const std::vector<double>& d2, std::size_t n, double perplexity) {
  const double target = std::log(perplexity);
  std::vector<double> p(n * n, 0.0);
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) dmin = std::min(dmin, d2[i * n + j]);
    }
    for (int step = 0; step < 200; ++step) {
      double sum = 0.0, weighted = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        // Shift by the nearest distance; cancels in the normalization.
        row[j] = j == i ? 0.0 : std::exp(-beta * (d2[i * n + j] - dmin));
        sum += row[j];
        weighted += row[j] * (d2[i * n + j] - dmin);
      }
      const double entropy = std::log(sum) + beta * weighted / sum;
      const double diff = entropy - target;
      for (std::size_t j = 0; j < n; ++j) p[i * n + j] = row[j] / sum;
      if (std::abs(diff) < 1e-6) break;
      if (diff > 0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : (beta + hi) / 2.0;
      } else {
        hi = beta;
        beta = (beta + lo) / 2.0;
      }
    }
  }
  std::vector<double> sym(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      sym[i * n + j] = std::max((p[i * n + j] + p[j * n + i]) / (2.0 * static_cast<double>(n)), 1e-12);
    }
    sym[i * n + i] = 0.0;
  }
  return sym;
}

}  // namespace detail

// Exact-gradient t-SNE.
inline TsneResult tsne_project(const std::vector<std::vector<double>>& x, const TsneOptions& opt = {}) {
  const std::size_t n = x.size();
  if (n < 2) fail("tsne: need at least 2 points");
  if (n > 2000) fail("tsne: ", n, " points exceeds the exact-gradient limit of 2000");
  if (!(opt.perplexity > 0.0) || opt.perplexity >= static_cast<double>(n) / 3.0) {
    fail("tsne: perplexity ", opt.perplexity, " must be in (0, n/3) for n = ", n);
  }
  const std::size_t dim = x[0].size();
  for (const auto& r : x) {
    if (r.size() != dim) fail("tsne: ragged input rows");
  }
  const auto d2 = detail::squared_distances(x);
  if (*std::max_element(d2.begin(), d2.end()) == 0.0) fail("tsne: degenerate input (all rows identical)");
  const auto p = detail::input_affinities(d2, n, opt.perplexity);

  Rng rng(opt.seed);
  std::vector<double> y(2 * n), dy(2 * n), update(2 * n, 0.0), gains(2 * n, 1.0);
  for (double& v : y) v = 1e-4 * rng.normal();
  const double eta = opt.learning_rate > 0.0 ? opt.learning_rate : std::max(static_cast<double>(n) / 12.0, 1.0);
  std::vector<double> num(n * n);
  TsneResult out;

  for (std::size_t it = 1; it <= opt.iters; ++it) {
    const double exag = it <= opt.exaggeration_iters ? opt.exaggeration : 1.0;
    const double momentum = it <= opt.exaggeration_iters ? 0.5 : 0.8;
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      num[i * n + i] = 0.0;
      for (std::size_t j = i + 1; j < n; ++j) {
        const double a = y[2 * i] - y[2 * j], b = y[2 * i + 1] - y[2 * j + 1];
        const double q = 1.0 / (1.0 + a * a + b * b);
        num[i * n + j] = num[j * n + i] = q;
        z += 2.0 * q;
      }
    }
    std::fill(dy.begin(), dy.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double q = num[i * n + j];
        const double m = (exag * p[i * n + j] - q / z) * q;
        dy[2 * i] += 4.0 * m * (y[2 * i] - y[2 * j]);
        dy[2 * i + 1] += 4.0 * m * (y[2 * i + 1] - y[2 * j + 1]);
      }
    }
    for (std::size_t k = 0; k < 2 * n; ++k) {
      gains[k] = (dy[k] > 0) != (update[k] > 0) ? gains[k] + 0.2 : gains[k] * 0.8;
      gains[k] = std::max(gains[k], 0.01);
      update[k] = momentum * update[k] - eta * gains[k] * dy[k];
      y[k] += update[k];
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += y[2 * i];
      my += y[2 * i + 1];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[2 * i] -= mx;
      y[2 * i + 1] -= my;
    }
    if (it == 50 || it == opt.iters || it % 100 == 0) {
      // KL of the unexaggerated objective at the positions before this step.
      double kl = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (i == j) continue;
          kl += p[i * n + j] * std::log(p[i * n + j] / std::max(num[i * n + j] / z, 1e-300));
        }
      }
      out.kl_log.emplace_back(it, kl);
    }
  }
  out.points.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.points[i] = {y[2 * i], y[2 * i + 1]};
  return out;
}

// Centers by the mean, then scales each point to unit norm; exact zeros are
// nudged by 1e-9 first.
inline std::vector<Point2> normalize_to_circle(std::vector<Point2> pts) {
  if (pts.empty()) return pts;
  double mx = 0.0, my = 0.0;
  for (const auto& q : pts) {
    mx += q.x;
    my += q.y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  for (auto& q : pts) {
    q.x -= mx;
    q.y -= my;
    if (q.x == 0.0 && q.y == 0.0) q.x = 1e-9;
    const double r = std::hypot(q.x, q.y);
    q.x /= r;
    q.y /= r;
  }
  return pts;
}

struct DensityCurve {
  std::vector<double> theta;    // bin starts over [-pi, pi)
  std::vector<double> density;  // nonnegative, integrates to one over the circle
};

inline std::vector<double> angle_grid(std::size_t bins = 360) {
  std::vector<double> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b] = -std::numbers::pi + 2.0 * std::numbers::pi * static_cast<double>(b) / static_cast<double>(bins);
  }
  return out;
}

// Mean of von Mises kernels exp(k cos(t - t_i)) / (2 pi I0(k)), evaluated with
// the scaled Bessel function so large k does not overflow.
inline DensityCurve vmf_density(const std::vector<double>& angles, double kappa, std::size_t bins = 360) {
  if (angles.empty()) fail("vmf_density: no angles");
  if (!(kappa > 0.0)) fail("vmf_density: kappa must be positive");
  const double log_norm = std::log(2.0 * std::numbers::pi) + std::log(std::cyl_bessel_i(0.0, kappa)) - kappa;
  DensityCurve c;
  c.theta = angle_grid(bins);
  c.density.assign(bins, 0.0);
  for (std::size_t b = 0; b < bins; ++b) {
    double s = 0.0;
    for (double a : angles) s += std::exp(kappa * (std::cos(c.theta[b] - a) - 1.0) - log_norm);
    c.density[b] = s / static_cast<double>(angles.size());
  }
  return c;
}

// Trapezoidal rule over the closed circle (the last bin wraps to the first).
inline double circle_integral(const DensityCurve& c) {
  const std::size_t n = c.density.size();
  if (n == 0) return 0.0;
  const double h = 2.0 * std::numbers::pi / static_cast<double>(n);
  double s = 0.0;
  for (std::size_t b = 0; b < n; ++b) s += 0.5 * (c.density[b] + c.density[(b + 1) % n]) * h;
  return s;
}

inline std::vector<double> angles_of(const std::vector<Point2>& pts) {
  std::vector<double> out;
  out.reserve(pts.size());
  for (const auto& q : pts) out.push_back(std::atan2(q.y, q.x));
  return out;
}

inline double sharpness(const DensityCurve& c, double eps = 1e-6) {
  const auto [lo, hi] = std::minmax_element(c.density.begin(), c.density.end());
  return *hi / (*lo + eps);
}

struct DensityGrid {
  std::size_t size = 100;
  double lo = -1.2;
  double hi = 1.2;
  std::vector<double> values;  // row-major, y major

  double coord(std::size_t k) const {
    return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(size - 1);
  }
};

// Scott's rule for a 2-D isotropic kernel: n^(-1/6) times the mean per-axis
// standard deviation.
inline double scott_bandwidth(const std::vector<Point2>& pts) {
  if (pts.size() < 2) fail("scott_bandwidth: need at least 2 points");
  const double n = static_cast<double>(pts.size());
  double mx = 0, my = 0;
  for (const auto& q : pts) {
    mx += q.x;
    my += q.y;
  }
  mx /= n;
  my /= n;
  double vx = 0, vy = 0;
  for (const auto& q : pts) {
    vx += (q.x - mx) * (q.x - mx);
    vy += (q.y - my) * (q.y - my);
  }
  const double sigma = 0.5 * (std::sqrt(vx / (n - 1)) + std::sqrt(vy / (n - 1)));
  return std::pow(n, -1.0 / 6.0) * sigma;
}

inline DensityGrid gaussian_kde2d(const std::vector<Point2>& pts, double bandwidth, std::size_t grid = 100) {
  if (pts.size() < 2) fail("gaussian_kde2d: need at least 2 points");
  if (!(bandwidth > 0.0)) fail("gaussian_kde2d: bandwidth must be positive");
  if (grid < 2) fail("gaussian_kde2d: grid must have at least 2 points per axis");
  DensityGrid g;
  g.size = grid;
  g.values.assign(grid * grid, 0.0);
  const double norm = 1.0 / (2.0 * std::numbers::pi * bandwidth * bandwidth * static_cast<double>(pts.size()));
  for (std::size_t r = 0; r < grid; ++r) {
    for (std::size_t c = 0; c < grid; ++c) {
      const double gx = g.coord(c), gy = g.coord(r);
      double s = 0.0;
      for (const auto& q : pts) {
        const double dx = gx - q.x, dy = gy - q.y;
        s += std::exp(-(dx * dx + dy * dy) / (2.0 * bandwidth * bandwidth));
      }
      g.values[r * grid + c] = s * norm;
    }
  }
  return g;
}

// item_key -> category.
using LabelMap = std::map<std::string, std::string>;

inline LabelMap parse_labels(std::istream& is) {
  LabelMap out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto t = simrec::detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto comma = t.find(',');
    if (comma == std::string_view::npos) fail("labels line ", line_no, ": expected item_key,category");
    out[std::string(simrec::detail::trim(t.substr(0, comma)))] = std::string(simrec::detail::trim(t.substr(comma + 1)));
  }
  return out;
}

struct LabeledItem {
  ItemIndex item;
  std::string category;
};

// Picks the `categories` most populous labels (0 keeps all), then samples up
// to `sample` labeled items among them without replacement. Unknown item keys
// in the label map are ignored.
inline std::vector<LabeledItem> sample_labeled_items(const IdMap& ids, const LabelMap& labels, std::size_t sample,
                                                     std::size_t categories, Rng& rng) {
  std::map<std::string, std::vector<ItemIndex>> by_cat;
  for (const auto& [key, cat] : labels) {
    if (ids.has_item(key)) by_cat[cat].push_back(ids.item(key));
  }
  if (by_cat.empty()) fail("visualize: no labeled item matches the dataset");
  std::vector<std::pair<std::string, std::size_t>> sizes;
  for (const auto& [cat, items] : by_cat) sizes.emplace_back(cat, items.size());
  std::stable_sort(sizes.begin(), sizes.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (categories > 0 && sizes.size() > categories) sizes.resize(categories);
  std::vector<LabeledItem> pool;
  for (const auto& [cat, _] : sizes) {
    for (ItemIndex i : by_cat[cat]) pool.push_back({i, cat});
  }
  std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) { return a.item < b.item; });
  rng.shuffle(pool);
  if (pool.size() > sample) pool.resize(sample);
  return pool;
}

struct Projection {
  std::vector<LabeledItem> items;
  std::vector<Point2> points;  // unit circle
  std::vector<std::pair<std::size_t, double>> kl_log;
};

// Rows of `table` for the sampled items, t-SNE to 2-D, then onto the circle.
template <typename T>
Projection project_items(const Tensor<T>& table, std::vector<LabeledItem> items, const TsneOptions& opt) {
  std::vector<std::vector<double>> x;
  x.reserve(items.size());
  for (const auto& it : items) {
    if (it.item == kPaddingItem || it.item >= table.rows()) fail("visualize: item index ", it.item, " out of range");
    const auto r = table.row(it.item);
    x.emplace_back(r.begin(), r.end());
  }
  auto ts = tsne_project(x, opt);
  return {std::move(items), normalize_to_circle(std::move(ts.points)), std::move(ts.kl_log)};
}

// Opens `path`, runs `write` on the stream, and fails on any I/O error.
template <typename F>
void save_text(const std::string& path, F&& write) {
  std::ofstream os(path);
  if (!os) fail("cannot open '", path, "' for writing");
  write(os);
  os.flush();
  if (!os) fail("error while writing '", path, "'");
}

inline void write_projection_csv(std::ostream& os, const IdMap& ids, const Projection& p) {
  os << "item,category,x,y\n" << std::setprecision(12);
  for (std::size_t k = 0; k < p.items.size(); ++k) {
    os << ids.item_key(p.items[k].item) << ',' << p.items[k].category << ',' << p.points[k].x << ','
       << p.points[k].y << '\n';
  }
}

inline void write_curve_csv(std::ostream& os, const DensityCurve& c) {
  os << "theta,density\n" << std::setprecision(12);
  for (std::size_t b = 0; b < c.theta.size(); ++b) os << c.theta[b] << ',' << c.density[b] << '\n';
}

inline void write_grid_csv(std::ostream& os, const DensityGrid& g) {
  os << "x,y,density\n" << std::setprecision(12);
  for (std::size_t r = 0; r < g.size; ++r) {
    for (std::size_t c = 0; c < g.size; ++c) os << g.coord(c) << ',' << g.coord(r) << ',' << g.values[r * g.size + c] << '\n';
  }
}

namespace detail {

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace detail

// Left panel: points on the unit circle colored by category. Right panel:
// the overall angular density.
inline void write_svg(std::ostream& os, const Projection& p, const DensityCurve& curve) {
  static constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                             "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  std::map<std::string, std::size_t> color;
  for (const auto& it : p.items) color.try_emplace(it.category, color.size());
  os << std::setprecision(6);
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"820\" height=\"400\" viewBox=\"0 0 820 400\">\n"
     << "<rect width=\"820\" height=\"400\" fill=\"white\"/>\n"
     << "<circle cx=\"200\" cy=\"200\" r=\"160\" fill=\"none\" stroke=\"#cccccc\"/>\n";
  for (std::size_t k = 0; k < p.items.size(); ++k) {
    const double cx = 200 + 160 * p.points[k].x, cy = 200 - 160 * p.points[k].y;
    os << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"2.5\" fill=\""
       << kPalette[color[p.items[k].category] % std::size(kPalette)] << "\"/>\n";
  }
  double peak = 0.0;
  for (double v : curve.density) peak = std::max(peak, v);
  if (peak <= 0.0) peak = 1.0;
  os << "<polyline fill=\"none\" stroke=\"#333333\" points=\"";
  for (std::size_t b = 0; b < curve.theta.size(); ++b) {
    const double x = 440 + 360 * (curve.theta[b] + std::numbers::pi) / (2 * std::numbers::pi);
    const double y = 360 - 320 * curve.density[b] / peak;
    os << (b ? " " : "") << x << ',' << y;
  }
  os << "\"/>\n";
  std::size_t row = 0;
  for (const auto& [cat, c] : color) {
    os << "<text x=\"10\" y=\"" << 20 + 16 * row++ << "\" font-size=\"12\" fill=\""
       << kPalette[c % std::size(kPalette)] << "\">" << detail::xml_escape(cat) << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace simrec::viz
