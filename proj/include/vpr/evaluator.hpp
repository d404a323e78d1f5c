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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vpr/embedding.hpp"
#include "vpr/places_db.hpp"
#include "vpr/tensor.hpp"

namespace vpr {

struct DescriptorMeta {
  std::string id;
  double lat = 0.0;
  double lon = 0.0;
  PlaceId place_id = 0;
};

// N unit-norm descriptors with per-row metadata.
struct DescriptorSet {
  Matrix rows;
  std::vector<DescriptorMeta> meta;

  std::size_t size() const { return rows.rows; }
  std::size_t dim() const { return rows.cols; }
};

// Indices of the k most similar references, descending similarity, ties to
// the smallest index. Throws kInvalidArgument unless 1 <= k <= refs.rows.
std::vector<std::size_t> retrieve_topk(std::span<const double> query, const Matrix& refs, std::size_t k);

enum class GroundTruthMode { kGeo, kLabel };

struct GroundTruthMatcher {
  GroundTruthMode mode = GroundTruthMode::kGeo;
  double radius_m = 25.0;

  bool matches(const DescriptorMeta& query, const DescriptorMeta& ref) const;
};

struct QueryTrace {
  std::vector<std::size_t> ranked;  // top max(ks) reference indices
  long first_correct = -1;          // 0-based rank within `ranked`, -1 if none
  bool has_ground_truth = true;
};

struct RecallReport {
  std::vector<std::size_t> ks;
  std::map<std::size_t, double> recall_at;
  std::vector<QueryTrace> per_query;
  std::size_t num_queries = 0;   // queries in the denominator
  std::size_t num_excluded = 0;  // queries with no ground-truth reference
};

// Recall@k over queries that have at least one ground-truth reference.
RecallReport recall_at_k(const DescriptorSet& queries, const DescriptorSet& refs, const GroundTruthMatcher& gt,
                         std::vector<std::size_t> ks);

// PCA + whitening learned on a set of descriptors.
struct PCAModel {
  std::vector<double> mean;        // D
  Matrix projection;               // out_dim x D, rows scaled by 1/sqrt(eigenvalue + eps)
  std::vector<double> eigenvalues; // out_dim, nonincreasing
  double epsilon = 1e-9;

  std::size_t in_dim() const { return mean.size(); }
  std::size_t out_dim() const { return projection.rows; }
};

// Fits on the rows of `training` (sample covariance, divisor n - 1).
// Eigenvector signs make the first nonzero component positive.
PCAModel pca_whiten_fit(const Matrix& training, std::size_t out_dim, double epsilon = 1e-9);

// projection * (v - mean), not normalized.
std::vector<double> pca_project(const PCAModel& model, std::span<const double> v);

// l2_normalize(pca_project(v)).
Descriptor pca_transform(const PCAModel& model, std::span<const double> v);

DescriptorSet pca_transform(const PCAModel& model, const DescriptorSet& set);

}  // namespace vpr
