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

#include "vpr/losses.hpp"

#include <cmath>

#include "vpr/aggregators.hpp"
#include "vpr/error.hpp"

namespace vpr {

namespace {

void check_index(const SimilarityMatrix& s, std::size_t i) {
  require(i < s.rows, Errc::kInvalidArgument, "pair index " + std::to_string(i) + " out of range");
}

SimilarityLoss zero_loss(const SimilarityMatrix& s) {
  SimilarityLoss out;
  out.grad = Matrix(s.rows, s.cols);
  out.empty = true;
  return out;
}

// log(1 + sum exp(x_t)) and the softmax-style weights exp(x_t) / (1 + sum).
double log1p_sum_exp(std::span<const double> x, std::vector<double>& weights) {
  weights.assign(x.size(), 0.0);
  if (x.empty()) return 0.0;
  double hi = 0.0;
  for (double v : x) hi = std::max(hi, v);
  double total = std::exp(-hi);
  for (std::size_t t = 0; t < x.size(); ++t) {
    weights[t] = std::exp(x[t] - hi);
    total += weights[t];
  }
  for (auto& w : weights) w /= total;
  return hi + std::log(total);
}

}  // namespace

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kContrastive: return "contrastive";
    case LossKind::kTriplet: return "triplet";
    case LossKind::kMultiSimilarity: return "ms";
    case LossKind::kWeakTriplet: return "weak_triplet";
  }
  return "?";
}

LossKind parse_loss(const std::string& name) {
  if (name == "contrastive") return LossKind::kContrastive;
  if (name == "triplet") return LossKind::kTriplet;
  if (name == "ms") return LossKind::kMultiSimilarity;
  if (name == "weak_triplet") return LossKind::kWeakTriplet;
  fail(Errc::kInvalidArgument, "unknown loss '" + name + "' (expected contrastive, triplet, ms or weak_triplet)");
}

LossConfig LossConfig::defaults(LossKind kind) {
  LossConfig cfg;
  switch (kind) {
    case LossKind::kContrastive: cfg.margin = 0.5; break;
    case LossKind::kTriplet:
    case LossKind::kWeakTriplet: cfg.margin = 0.1; break;
    case LossKind::kMultiSimilarity: cfg.margin = 0.5; break;
  }
  return cfg;
}

PairLabels::PairLabels(std::span<const PlaceId> labels) : n(labels.size()), indicator(n * n, 0) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) indicator[i * n + j] = (i != j && labels[i] == labels[j]) ? 1 : 0;
  }
}

SimilarityLoss contrastive_loss(const SimilarityMatrix& s, const MinedSet& pairs, const LossConfig& cfg) {
  const std::size_t total = pairs.positive_pairs.size() + pairs.negative_pairs.size();
  if (total == 0) return zero_loss(s);
  SimilarityLoss out;
  out.grad = Matrix(s.rows, s.cols);
  out.terms = total;
  const double w = 1.0 / static_cast<double>(total);
  double sum = 0.0;
  for (const auto& [i, j] : pairs.positive_pairs) {
    check_index(s, i);
    check_index(s, j);
    sum -= s(i, j);
    out.grad(i, j) -= w;
  }
  for (const auto& [i, k] : pairs.negative_pairs) {
    check_index(s, i);
    check_index(s, k);
    const double h = s(i, k) - cfg.margin;
    if (h > 0.0) {
      sum += h;
      out.grad(i, k) += w;
    }
  }
  out.value = sum * w;
  return out;
}

SimilarityLoss triplet_loss(const SimilarityMatrix& s, std::span<const Triplet> triplets, const LossConfig& cfg) {
  if (triplets.empty()) return zero_loss(s);
  SimilarityLoss out;
  out.grad = Matrix(s.rows, s.cols);
  out.terms = triplets.size();
  const double w = 1.0 / static_cast<double>(triplets.size());
  double sum = 0.0;
  for (const auto& t : triplets) {
    check_index(s, t.anchor);
    check_index(s, t.positive);
    check_index(s, t.negative);
    const double h = s(t.anchor, t.negative) - s(t.anchor, t.positive) + cfg.margin;
    if (h > 0.0) {
      sum += h;
      out.grad(t.anchor, t.negative) += w;
      out.grad(t.anchor, t.positive) -= w;
    }
  }
  out.value = sum * w;
  return out;
}

SimilarityLoss multi_similarity_loss(const SimilarityMatrix& s, const MinedSet& pairs, const LossConfig& cfg) {
  require(cfg.ms_alpha > 0.0 && cfg.ms_beta > 0.0, Errc::kInvalidArgument, "MS alpha and beta must be positive");
  const std::size_t n = s.rows;
  require(n >= 2, Errc::kInvalidArgument, "multi-similarity loss needs N >= 2");
  SimilarityLoss out;
  out.grad = Matrix(n, n);
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<std::vector<std::size_t>> pos(n), neg(n);
  for (const auto& [i, j] : pairs.positive_pairs) {
    check_index(s, i);
    check_index(s, j);
    pos[i].push_back(j);
  }
  for (const auto& [i, k] : pairs.negative_pairs) {
    check_index(s, i);
    check_index(s, k);
    neg[i].push_back(k);
  }
  std::vector<double> x, weights;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (pos[i].empty() && neg[i].empty()) continue;
    ++out.terms;
    x.clear();
    for (std::size_t j : pos[i]) x.push_back(-cfg.ms_alpha * (s(i, j) - cfg.margin));
    sum += log1p_sum_exp(x, weights) / cfg.ms_alpha;
    // d/dS_ij of (1/alpha) log(1 + sum e^{-alpha(S - m)}) = -weight_j.
    for (std::size_t t = 0; t < pos[i].size(); ++t) out.grad(i, pos[i][t]) -= weights[t] * inv_n;
    x.clear();
    for (std::size_t k : neg[i]) x.push_back(cfg.ms_beta * (s(i, k) - cfg.margin));
    sum += log1p_sum_exp(x, weights) / cfg.ms_beta;
    for (std::size_t t = 0; t < neg[i].size(); ++t) out.grad(i, neg[i][t]) += weights[t] * inv_n;
  }
  out.value = sum * inv_n;
  out.empty = out.terms == 0;
  return out;
}

SimilarityLoss multi_similarity_loss(const SimilarityMatrix& s, const PairLabels& labels, const LossConfig& cfg) {
  require(labels.n == s.rows, Errc::kShapeMismatch, "label count does not match similarity matrix");
  MinedSet all;
  for (std::size_t i = 0; i < labels.n; ++i) {
    for (std::size_t j = 0; j < labels.n; ++j) {
      if (labels.positive(i, j)) all.positive_pairs.push_back({i, j});
      else if (labels.negative(i, j)) all.negative_pairs.push_back({i, j});
    }
  }
  return multi_similarity_loss(s, all, cfg);
}

SimilarityLoss weak_triplet_loss(const SimilarityMatrix& s, const WeakTuple& tuple, const LossConfig& cfg) {
  require(!tuple.potential_positives.empty(), Errc::kInvalidArgument, "weak tuple has no potential positive");
  check_index(s, tuple.query);
  const std::size_t q = tuple.query;
  std::size_t best = tuple.potential_positives.front();
  for (std::size_t p : tuple.potential_positives) {
    check_index(s, p);
    if (s(q, p) > s(q, best) || (s(q, p) == s(q, best) && p < best)) best = p;
  }
  SimilarityLoss out;
  out.grad = Matrix(s.rows, s.cols);
  out.terms = 1;
  for (std::size_t n : tuple.definite_negatives) {
    check_index(s, n);
    const double h = s(q, n) - s(q, best) + cfg.margin;
    if (h > 0.0) {
      out.value += h;
      out.grad(q, n) += 1.0;
      out.grad(q, best) -= 1.0;
    }
  }
  return out;
}

std::vector<WeakTuple> weak_tuples_from_geo(std::span<const GeoPoint> positions, double positive_radius_m,
                                            double negative_radius_m) {
  require(positive_radius_m >= 0.0 && negative_radius_m >= positive_radius_m, Errc::kInvalidArgument,
          "weak tuple radii must satisfy 0 <= positive <= negative");
  std::vector<WeakTuple> out;
  for (std::size_t q = 0; q < positions.size(); ++q) {
    WeakTuple t{q, {}, {}};
    for (std::size_t j = 0; j < positions.size(); ++j) {
      if (j == q) continue;
      const double d = haversine_m(positions[q], positions[j]);
      if (d <= positive_radius_m) {
        t.potential_positives.push_back(j);
      } else if (d > negative_radius_m) {
        t.definite_negatives.push_back(j);
      }
    }
    if (!t.potential_positives.empty() && !t.definite_negatives.empty()) out.push_back(std::move(t));
  }
  return out;
}

SimilarityLoss weak_triplet_loss(const SimilarityMatrix& s, std::span<const WeakTuple> tuples, const LossConfig& cfg) {
  if (tuples.empty()) return zero_loss(s);
  SimilarityLoss out;
  out.grad = Matrix(s.rows, s.cols);
  out.terms = tuples.size();
  const double w = 1.0 / static_cast<double>(tuples.size());
  for (const auto& t : tuples) {
    const auto one = weak_triplet_loss(s, t, cfg);
    out.value += one.value * w;
    for (std::size_t e = 0; e < out.grad.values.size(); ++e) out.grad.values[e] += one.grad.values[e] * w;
  }
  return out;
}

Matrix similarity_backward(const Matrix& grad_s, const Matrix& z) {
  require(grad_s.rows == z.rows && grad_s.cols == z.rows, Errc::kShapeMismatch, "gradient shape mismatch");
  const std::size_t n = z.rows, d = z.cols;
  Matrix g(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    auto gi = g.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double c = grad_s(i, j) + grad_s(j, i);
      if (c == 0.0) continue;
      const auto zj = z.row(j);
      for (std::size_t t = 0; t < d; ++t) gi[t] += c * zj[t];
    }
  }
  return g;
}

LossOutput batch_loss(const EmbeddingBatch& raw, LossKind loss, MinerKind miner, double miner_epsilon,
                      const LossConfig& cfg) {
  require(raw.labels.size() == raw.size(), Errc::kShapeMismatch, "label count does not match batch size");
  const EmbeddingBatch z = normalize_rows(raw);
  const SimilarityMatrix s = similarity_matrix(z);
  LossOutput out;
  const MinedSet mined = mine(miner, s, raw.labels, miner_epsilon, &out.stats);

  SimilarityLoss sl;
  switch (loss) {
    case LossKind::kContrastive: sl = contrastive_loss(s, mined, cfg); break;
    case LossKind::kTriplet: {
      const auto triplets = mined.triplets.empty() ? pairs_to_triplets(mined) : mined.triplets;
      sl = triplet_loss(s, triplets, cfg);
      break;
    }
    case LossKind::kMultiSimilarity: sl = multi_similarity_loss(s, mined, cfg); break;
    case LossKind::kWeakTriplet: {
      // Labels stand in for geography: same-place images are the potential
      // positives of each query.
      std::vector<WeakTuple> tuples(raw.size());
      for (std::size_t i = 0; i < raw.size(); ++i) tuples[i].query = i;
      for (const auto& [i, j] : mined.positive_pairs) tuples[i].potential_positives.push_back(j);
      for (const auto& [i, k] : mined.negative_pairs) tuples[i].definite_negatives.push_back(k);
      std::erase_if(tuples, [](const WeakTuple& t) { return t.potential_positives.empty(); });
      sl = weak_triplet_loss(s, tuples, cfg);
      break;
    }
  }
  out.value = sl.value;
  out.terms = sl.terms;
  out.empty = sl.empty;
  const Matrix gz = similarity_backward(sl.grad, z.rows);
  out.grad = Matrix(raw.size(), raw.dim());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto gi = normalize_backward(raw.rows.row(i), gz.row(i));
    std::copy(gi.begin(), gi.end(), out.grad.row(i).begin());
  }
  return out;
}

}  // namespace vpr
