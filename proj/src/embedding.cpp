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

#include "vpr/embedding.hpp"

#include <cmath>
#include <string>

#include "vpr/error.hpp"

namespace vpr {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

Descriptor l2_normalize(std::span<const double> v, double eps) {
  const double n = l2_norm(v);
  if (!(n > eps)) fail(Errc::kNumeric, "cannot normalize a vector with norm " + std::to_string(n));
  Descriptor out(v.begin(), v.end());
  for (auto& x : out) x /= n;
  return out;
}

EmbeddingBatch normalize_rows(const EmbeddingBatch& batch, std::vector<double>* norms) {
  EmbeddingBatch out{Matrix(batch.size(), batch.dim()), batch.labels, true};
  if (norms) norms->assign(batch.size(), 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto row = batch.rows.row(i);
    const auto z = l2_normalize(row);
    std::copy(z.begin(), z.end(), out.rows.row(i).begin());
    if (norms) (*norms)[i] = l2_norm(row);
  }
  return out;
}

SimilarityMatrix similarity_matrix(const EmbeddingBatch& batch) {
  const std::size_t n = batch.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double norm = l2_norm(batch.rows.row(i));
    if (std::abs(norm - 1.0) > kUnitNormTolerance) {
      fail(Errc::kInvalidArgument, "row " + std::to_string(i) + " is not unit-norm (" + std::to_string(norm) + ")");
    }
  }
  SimilarityMatrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = dot(batch.rows.row(i), batch.rows.row(j));
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

}  // namespace vpr
