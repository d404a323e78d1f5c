// Copyright 2026 The vpr Authors
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

// Independent reference implementations used by the unit tests, property
// suites and the acceptance runner. Nothing here calls the routine it checks.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "vpr/evaluator.hpp"
#include "vpr/mining.hpp"
#include "vpr/places_db.hpp"
#include "vpr/rng.hpp"
#include "vpr/tensor.hpp"

namespace vpr::oracle {

inline FeatureMap random_map(Rng& rng, std::size_t h, std::size_t w, std::size_t c, double lo = -1.0,
                             double hi = 1.0) {
  FeatureMap f(h, w, c);
  for (auto& v : f.values) v = rng.uniform(lo, hi);
  return f;
}

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (auto& v : m.values) v = rng.normal();
  return m;
}

inline std::vector<double> unit(std::vector<double> v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (auto& x : v) x /= n;
  return v;
}

inline Matrix random_unit_rows(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<double> v(cols);
    for (auto& x : v) x = rng.normal();
    v = unit(v);
    std::copy(v.begin(), v.end(), m.row(i).begin());
  }
  return m;
}

// P x K labels in a random order; label values are arbitrary distinct ids.
inline std::vector<PlaceId> pk_labels(Rng& rng, std::size_t p, std::size_t k, bool shuffle = true) {
  std::vector<PlaceId> labels;
  for (std::size_t i = 0; i < p; ++i) {
    const auto id = static_cast<PlaceId>(100 + 7 * i);
    for (std::size_t j = 0; j < k; ++j) labels.push_back(id);
  }
  if (shuffle) rng.shuffle(std::span<PlaceId>(labels));
  return labels;
}

// Symmetric similarity matrix with entries on a coarse grid so ties occur.
inline Matrix tied_similarity(Rng& rng, std::size_t n, int levels) {
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    s(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = -1.0 + 2.0 * static_cast<double>(rng.below(static_cast<std::uint64_t>(levels))) / (levels - 1);
      s(i, j) = s(j, i) = v;
    }
  }
  return s;
}

// Central differences of a scalar function.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// max_i |a_i - b_i| / max(max_i |a_i|, max_i |b_i|); zero when both vanish.
inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  }
  // Floor keeps finite-difference noise on a zero gradient from reading as 100%.
  return diff / std::max(scale, 1e-6);
}

// Exhaustive hardest mining: rank candidates by (similarity, index) with a
// full sort and take the front.
inline MinedSet hardest(const Matrix& s, std::span<const PlaceId> labels) {
  MinedSet out;
  const std::size_t n = labels.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, std::size_t>> pos, neg;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (labels[j] == labels[i]) pos.emplace_back(s(i, j), j);
      else neg.emplace_back(-s(i, j), j);
    }
    if (pos.empty() || neg.empty()) continue;
    std::sort(pos.begin(), pos.end());
    std::sort(neg.begin(), neg.end());
    out.triplets.push_back({i, pos.front().second, neg.front().second});
    out.positive_pairs.push_back({i, pos.front().second});
    out.negative_pairs.push_back({i, neg.front().second});
  }
  return out;
}

// Exhaustive multi-similarity mining, thresholds from sorted candidate lists.
inline MinedSet multi_similarity(const Matrix& s, std::span<const PlaceId> labels, double eps) {
  MinedSet out;
  const std::size_t n = labels.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> pos, neg;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      (labels[j] == labels[i] ? pos : neg).push_back(s(i, j));
    }
    if (pos.empty() || neg.empty()) continue;
    std::sort(pos.begin(), pos.end());
    std::sort(neg.begin(), neg.end());
    const double hardest_pos = pos.front(), hardest_neg = neg.back();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (labels[j] == labels[i]) {
        if (s(i, j) - eps < hardest_neg) out.positive_pairs.push_back({i, j});
      } else if (s(i, j) + eps > hardest_pos) {
        out.negative_pairs.push_back({i, j});
      }
    }
  }
  return out;
}

// Full ranking of every reference: similarity descending, index ascending.
inline std::vector<std::size_t> full_ranking(std::span<const double> q, const Matrix& refs) {
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t r = 0; r < refs.rows; ++r) {
    double d = 0.0;
    for (std::size_t t = 0; t < refs.cols; ++t) d += q[t] * refs(r, t);
    scored.emplace_back(-d, r);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<std::size_t> out;
  for (const auto& e : scored) out.push_back(e.second);
  return out;
}

// Hand count of recall@k with label ground truth; queries lacking any
// same-label reference are dropped.
inline double label_recall(const DescriptorSet& q, const DescriptorSet& r, std::size_t k) {
  std::size_t hits = 0, valid = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    bool any = false;
    for (const auto& m : r.meta) any = any || m.place_id == q.meta[i].place_id;
    if (!any) continue;
    ++valid;
    const auto ranked = full_ranking(q.rows.row(i), r.rows);
    for (std::size_t t = 0; t < k && t < ranked.size(); ++t) {
      if (r.meta[ranked[t]].place_id == q.meta[i].place_id) {
        ++hits;
        break;
      }
    }
  }
  return valid == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(valid);
}

// Cyclic Jacobi eigensolver for a symmetric matrix. Returns eigenvalues in
// descending order and the matching unit eigenvectors as matrix rows.
inline std::pair<std::vector<double>, Matrix> jacobi_eigen(Matrix a, int sweeps = 100) {
  const std::size_t n = a.rows;
  Matrix v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    }
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
  std::vector<double> values;
  Matrix vectors(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    values.push_back(a(order[r], order[r]));
    for (std::size_t k = 0; k < n; ++k) vectors(r, k) = v(k, order[r]);
  }
  return {values, vectors};
}

// Sample covariance (divisor n - 1) of matrix rows.
inline Matrix covariance(const Matrix& x) {
  const std::size_t n = x.rows, d = x.cols;
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < d; ++t) mean[t] += x(i, t) / static_cast<double>(n);
  }
  Matrix c(d, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) c(a, b) += (x(i, a) - mean[a]) * (x(i, b) - mean[b]);
    }
  }
  for (auto& v : c.values) v /= static_cast<double>(n - 1);
  return c;
}

// Largest |C - I| entry.
inline double identity_deviation(const Matrix& c) {
  double worst = 0.0;
  for (std::size_t a = 0; a < c.rows; ++a) {
    for (std::size_t b = 0; b < c.cols; ++b) worst = std::max(worst, std::abs(c(a, b) - (a == b ? 1.0 : 0.0)));
  }
  return worst;
}

// Conv-AP straight from its definition: per-cell projection, then cell
// averaging with bin membership found by scanning bin starts.
inline std::vector<double> conv_ap_raw(const FeatureMap& f, const std::vector<double>& w, const std::vector<double>& b,
                                       std::size_t d, std::size_t s1, std::size_t s2) {
  const auto bin_of = [](std::size_t i, std::size_t n, std::size_t s) {
    std::size_t bin = 0;
    while (bin + 1 < s && (bin + 1) * n / s <= i) ++bin;
    return bin;
  };
  std::vector<double> sum(s1 * s2 * d, 0.0);
  std::vector<double> count(s1 * s2, 0.0);
  for (std::size_t i = 0; i < f.height; ++i) {
    for (std::size_t j = 0; j < f.width; ++j) {
      const std::size_t cell = bin_of(i, f.height, s1) * s2 + bin_of(j, f.width, s2);
      count[cell] += 1.0;
      for (std::size_t r = 0; r < d; ++r) {
        double y = b.empty() ? 0.0 : b[r];
        for (std::size_t k = 0; k < f.channels; ++k) y += w[r * f.channels + k] * f.at(i, j, k);
        sum[cell * d + r] += y;
      }
    }
  }
  for (std::size_t cell = 0; cell < s1 * s2; ++cell) {
    for (std::size_t r = 0; r < d; ++r) sum[cell * d + r] /= count[cell];
  }
  return sum;
}

}  // namespace vpr::oracle
