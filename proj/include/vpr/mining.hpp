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

#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "vpr/embedding.hpp"

namespace vpr {

struct IndexPair {
  std::size_t anchor = 0;
  std::size_t other = 0;
  bool operator==(const IndexPair&) const = default;
};

struct Triplet {
  std::size_t anchor = 0;
  std::size_t positive = 0;
  std::size_t negative = 0;
  bool operator==(const Triplet&) const = default;
};

// Pairs and triplets selected inside one batch, in anchor order.
struct MinedSet {
  std::vector<IndexPair> positive_pairs;
  std::vector<IndexPair> negative_pairs;
  std::vector<Triplet> triplets;

  bool empty() const { return positive_pairs.empty() && negative_pairs.empty() && triplets.empty(); }
};

struct MiningStats {
  std::size_t anchors = 0;
  std::size_t skipped_anchors = 0;  // no positive or no negative in batch
  std::size_t positive_pairs = 0;
  std::size_t negative_pairs = 0;
  std::size_t triplets = 0;

  MiningStats& operator+=(const MiningStats& o);
};

enum class MinerKind { kNone, kHardest, kMultiSimilarity };

std::string to_string(MinerKind kind);
MinerKind parse_miner(const std::string& name);

// All ordered positive and negative pairs (no triplets).
MinedSet enumerate_pairs(std::span<const PlaceId> labels);

// Per anchor: least similar positive and most similar negative, ties to the
// smallest index. Fills triplets and the matching pair lists.
MinedSet hardest_mining(const SimilarityMatrix& s, std::span<const PlaceId> labels, MiningStats* stats = nullptr);

// Multi-similarity pair mining. Per anchor i, keeps negative k iff
// S_ik > min_pos S_ij - eps and positive j iff S_ij < max_neg S_ik + eps.
MinedSet ms_mining(const SimilarityMatrix& s, std::span<const PlaceId> labels, double epsilon,
                   MiningStats* stats = nullptr);

MinedSet mine(MinerKind kind, const SimilarityMatrix& s, std::span<const PlaceId> labels, double epsilon,
              MiningStats* stats = nullptr);

// Cross product of each anchor's positive and negative pairs.
std::vector<Triplet> pairs_to_triplets(const MinedSet& set);

}  // namespace vpr
