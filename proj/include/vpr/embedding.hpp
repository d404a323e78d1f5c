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

#include <span>
#include <vector>

#include "vpr/places_db.hpp"
#include "vpr/tensor.hpp"

namespace vpr {

inline constexpr double kNormEpsilon = 1e-12;
inline constexpr double kUnitNormTolerance = 1e-6;

double l2_norm(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

// v / ||v||. Throws kNumeric when ||v|| <= eps.
Descriptor l2_normalize(std::span<const double> v, double eps = kNormEpsilon);

struct EmbeddingBatch {
  Matrix rows;  // N x D
  std::vector<PlaceId> labels;
  bool normalized = false;

  std::size_t size() const { return rows.rows; }
  std::size_t dim() const { return rows.cols; }
};

// Normalizes every row; the returned batch is flagged normalized.
EmbeddingBatch normalize_rows(const EmbeddingBatch& batch, std::vector<double>* norms = nullptr);

using SimilarityMatrix = Matrix;

// S_ij = <z_i, z_j> over unit-norm rows. Throws kInvalidArgument if any row
// is off the unit sphere by more than kUnitNormTolerance.
SimilarityMatrix similarity_matrix(const EmbeddingBatch& batch);

}  // namespace vpr
