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

#include "vpr/mining.hpp"

#include <algorithm>

#include "vpr/error.hpp"

namespace vpr {

namespace {

void check_inputs(const SimilarityMatrix& s, std::span<const PlaceId> labels) {
  require(s.rows == s.cols && s.rows == labels.size(), Errc::kShapeMismatch,
          "similarity matrix does not match label count");
}

void count(MinedSet& set, MiningStats* stats) {
  if (!stats) return;
  stats->positive_pairs += set.positive_pairs.size();
  stats->negative_pairs += set.negative_pairs.size();
  stats->triplets += set.triplets.size();
}

}  // namespace

MiningStats& MiningStats::operator+=(const MiningStats& o) {
  anchors += o.anchors;
  skipped_anchors += o.skipped_anchors;
  positive_pairs += o.positive_pairs;
  negative_pairs += o.negative_pairs;
  triplets += o.triplets;
  return *this;
}

std::string to_string(MinerKind kind) {
  switch (kind) {
    case MinerKind::kNone: return "none";
    case MinerKind::kHardest: return "ohm";
    case MinerKind::kMultiSimilarity: return "ms";
  }
  return "?";
}

MinerKind parse_miner(const std::string& name) {
  if (name == "none") return MinerKind::kNone;
  if (name == "ohm") return MinerKind::kHardest;
  if (name == "ms") return MinerKind::kMultiSimilarity;
  fail(Errc::kInvalidArgument, "unknown miner '" + name + "' (expected none, ohm or ms)");
}

MinedSet enumerate_pairs(std::span<const PlaceId> labels) {
  MinedSet set;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (i == j) continue;
      (labels[i] == labels[j] ? set.positive_pairs : set.negative_pairs).push_back({i, j});
    }
  }
  return set;
}

MinedSet hardest_mining(const SimilarityMatrix& s, std::span<const PlaceId> labels, MiningStats* stats) {
  check_inputs(s, labels);
  MinedSet set;
  const std::size_t n = labels.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (stats) ++stats->anchors;
    std::size_t pos = n, neg = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (labels[j] == labels[i]) {
        if (pos == n || s(i, j) < s(i, pos)) pos = j;
      } else {
        if (neg == n || s(i, j) > s(i, neg)) neg = j;
      }
    }
    if (pos == n || neg == n) {
      if (stats) ++stats->skipped_anchors;
      continue;
    }
    set.triplets.push_back({i, pos, neg});
    set.positive_pairs.push_back({i, pos});
    set.negative_pairs.push_back({i, neg});
  }
  count(set, stats);
  return set;
}

MinedSet ms_mining(const SimilarityMatrix& s, std::span<const PlaceId> labels, double epsilon, MiningStats* stats) {
  check_inputs(s, labels);
  require(epsilon >= 0.0, Errc::kInvalidArgument, "miner epsilon must be >= 0");
  MinedSet set;
  const std::size_t n = labels.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (stats) ++stats->anchors;
    bool has_pos = false, has_neg = false;
    double min_pos = 0.0, max_neg = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (labels[j] == labels[i]) {
        min_pos = has_pos ? std::min(min_pos, s(i, j)) : s(i, j);
        has_pos = true;
      } else {
        max_neg = has_neg ? std::max(max_neg, s(i, j)) : s(i, j);
        has_neg = true;
      }
    }
    if (!has_pos || !has_neg) {
      if (stats) ++stats->skipped_anchors;
      continue;
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (labels[j] == labels[i]) {
        if (s(i, j) < max_neg + epsilon) set.positive_pairs.push_back({i, j});
      } else {
        if (s(i, j) > min_pos - epsilon) set.negative_pairs.push_back({i, j});
      }
    }
  }
  count(set, stats);
  return set;
}

MinedSet mine(MinerKind kind, const SimilarityMatrix& s, std::span<const PlaceId> labels, double epsilon,
              MiningStats* stats) {
  switch (kind) {
    case MinerKind::kNone: {
      check_inputs(s, labels);
      MinedSet set = enumerate_pairs(labels);
      if (stats) {
        stats->anchors += labels.size();
        for (std::size_t i = 0; i < labels.size(); ++i) {
          const auto same = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), labels[i]));
          if (same < 2 || same == labels.size()) ++stats->skipped_anchors;
        }
      }
      count(set, stats);
      return set;
    }
    case MinerKind::kHardest: return hardest_mining(s, labels, stats);
    case MinerKind::kMultiSimilarity: return ms_mining(s, labels, epsilon, stats);
  }
  return {};
}

std::vector<Triplet> pairs_to_triplets(const MinedSet& set) {
  std::vector<Triplet> out;
  // Pair lists are sorted by anchor; walk both in step.
  std::size_t pi = 0, ni = 0;
  while (pi < set.positive_pairs.size() && ni < set.negative_pairs.size()) {
    const std::size_t a = std::min(set.positive_pairs[pi].anchor, set.negative_pairs[ni].anchor);
    std::size_t pe = pi, ne = ni;
    while (pe < set.positive_pairs.size() && set.positive_pairs[pe].anchor == a) ++pe;
    while (ne < set.negative_pairs.size() && set.negative_pairs[ne].anchor == a) ++ne;
    for (std::size_t p = pi; p < pe; ++p) {
      for (std::size_t q = ni; q < ne; ++q) out.push_back({a, set.positive_pairs[p].other, set.negative_pairs[q].other});
    }
    pi = pe;
    ni = ne;
  }
  return out;
}

}  // namespace vpr
