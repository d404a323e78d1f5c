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
#include <span>
#include <string>
#include <vector>

#include "vpr/embedding.hpp"
#include "vpr/mining.hpp"
#include "vpr/places_db.hpp"

namespace vpr {

enum class LossKind { kContrastive, kTriplet, kMultiSimilarity, kWeakTriplet };

std::string to_string(LossKind kind);
LossKind parse_loss(const std::string& name);

struct LossConfig {
  double margin = 0.5;
  double ms_alpha = 2.0;
  double ms_beta = 50.0;

  // contrastive m=0.5, triplet and weak triplet m=0.1, MS alpha=2 beta=50 m=0.5.
  static LossConfig defaults(LossKind kind);
};

// I_ij = 1 iff labels equal and i != j.
struct PairLabels {
  std::size_t n = 0;
  std::vector<unsigned char> indicator;

  explicit PairLabels(std::span<const PlaceId> labels);
  bool positive(std::size_t i, std::size_t j) const { return indicator[i * n + j] != 0; }
  bool negative(std::size_t i, std::size_t j) const { return i != j && indicator[i * n + j] == 0; }
};

struct WeakTuple {
  std::size_t query = 0;
  std::vector<std::size_t> potential_positives;
  std::vector<std::size_t> definite_negatives;
};

// Loss value together with dL/dS.
struct SimilarityLoss {
  double value = 0.0;
  Matrix grad;            // N x N
  std::size_t terms = 0;  // pairs, triplets, anchors or tuples that entered the mean
  bool empty = false;     // nothing to average over; value and grad are zero
};

// Mean over mined pairs of [S_ij - m]_+ (negatives) and -S_ij (positives).
SimilarityLoss contrastive_loss(const SimilarityMatrix& s, const MinedSet& pairs, const LossConfig& cfg);

// Mean over triplets of [S_ik - S_ij + m]_+.
SimilarityLoss triplet_loss(const SimilarityMatrix& s, std::span<const Triplet> triplets, const LossConfig& cfg);

// Multi-similarity loss averaged over all N anchors; P_i and N_i are the
// anchor's positive and negative pairs in `pairs`.
SimilarityLoss multi_similarity_loss(const SimilarityMatrix& s, const MinedSet& pairs, const LossConfig& cfg);
SimilarityLoss multi_similarity_loss(const SimilarityMatrix& s, const PairLabels& labels, const LossConfig& cfg);

// Sum over definite negatives of [S_qn - max_p S_qp + m]_+. The gradient
// flows through the single most similar potential positive (smallest index
// on ties). Throws kInvalidArgument when the tuple has no potential positive.
SimilarityLoss weak_triplet_loss(const SimilarityMatrix& s, const WeakTuple& tuple, const LossConfig& cfg);

// Tuples from geotags: for each query, images within `positive_radius_m`
// are potential positives and images beyond `negative_radius_m` are definite
// negatives; those in between are ignored. Queries without a potential
// positive or a negative are dropped.
std::vector<WeakTuple> weak_tuples_from_geo(std::span<const GeoPoint> positions, double positive_radius_m = 10.0,
                                            double negative_radius_m = 25.0);

// Mean of weak_triplet_loss over tuples.
SimilarityLoss weak_triplet_loss(const SimilarityMatrix& s, std::span<const WeakTuple> tuples, const LossConfig& cfg);

// dL/dz for S = Z Z^T, given dL/dS and unit rows Z.
Matrix similarity_backward(const Matrix& grad_s, const Matrix& z);

// Loss over raw (pre-normalization) embeddings with gradient w.r.t. the raw rows.
struct LossOutput {
  double value = 0.0;
  Matrix grad;  // N x D, dL/d(raw row)
  std::size_t terms = 0;
  bool empty = false;
  MiningStats stats;
};

LossOutput batch_loss(const EmbeddingBatch& raw, LossKind loss, MinerKind miner, double miner_epsilon,
                      const LossConfig& cfg);

}  // namespace vpr
