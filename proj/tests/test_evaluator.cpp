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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "vpr/error.hpp"
#include "vpr/evaluator.hpp"

namespace vpr {
namespace {

DescriptorSet labeled(const Matrix& rows, std::vector<PlaceId> labels) {
  DescriptorSet d;
  d.rows = rows;
  for (PlaceId l : labels) d.meta.push_back({"x", 0.0, 0.0, l});
  return d;
}

const GroundTruthMatcher kLabelGt{GroundTruthMode::kLabel, 25.0};

TEST(TopK, SelfMatchRanksFirst) {
  Rng rng(1);
  const Matrix refs = oracle::random_unit_rows(rng, 30, 6);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(retrieve_topk(refs.row(i), refs, 1).front(), i);
}

TEST(TopK, FullDepthIsAPermutation) {
  Rng rng(2);
  const Matrix refs = oracle::random_unit_rows(rng, 25, 4);
  auto ranked = retrieve_topk(refs.row(3), refs, 25);
  std::sort(ranked.begin(), ranked.end());
  std::vector<std::size_t> all(25);
  std::iota(all.begin(), all.end(), 0);
  EXPECT_EQ(ranked, all);
}

TEST(TopK, MatchesFullSort) {
  Rng rng(3);
  const Matrix refs = oracle::random_unit_rows(rng, 200, 8);
  const Matrix q = oracle::random_unit_rows(rng, 50, 8);
  for (std::size_t i = 0; i < 50; ++i) {
    auto want = oracle::full_ranking(q.row(i), refs);
    want.resize(10);
    EXPECT_EQ(retrieve_topk(q.row(i), refs, 10), want);
  }
}

TEST(TopK, DepthOutOfRangeIsAnError) {
  const Matrix refs(2, 2, 0.5);
  const std::vector<double> q = {1.0, 0.0};
  EXPECT_THROW(retrieve_topk(q, refs, 0), Error);
  EXPECT_THROW(retrieve_topk(q, refs, 3), Error);
}

TEST(Recall, PerfectAndZero) {
  const Matrix e = [] {
    Matrix m(3, 3);
    for (std::size_t i = 0; i < 3; ++i) m(i, i) = 1.0;
    return m;
  }();
  const auto perfect = recall_at_k(labeled(e, {0, 1, 2}), labeled(e, {0, 1, 2}), kLabelGt, {1, 5});
  EXPECT_EQ(perfect.recall_at.at(1), 1.0);
  EXPECT_EQ(perfect.recall_at.at(5), 1.0);
  // Each query's only match sits at rank 3; depth 2 never reaches it.
  Matrix refs(3, 3);
  refs(0, 0) = refs(1, 1) = refs(2, 2) = 1.0;
  const Matrix q = [] {
    Matrix m(1, 3);
    m(0, 0) = 0.8;
    m(0, 1) = 0.6;
    return m;
  }();
  const auto none = recall_at_k(labeled(q, {2}), labeled(refs, {0, 1, 2}), kLabelGt, {1, 2});
  EXPECT_EQ(none.recall_at.at(1), 0.0);
  EXPECT_EQ(none.recall_at.at(2), 0.0);
  EXPECT_EQ(none.per_query[0].first_correct, -1);
}

TEST(Recall, QueriesWithoutGroundTruthAreExcluded) {
  Rng rng(4);
  const Matrix r = oracle::random_unit_rows(rng, 6, 3);
  const Matrix q = oracle::random_unit_rows(rng, 3, 3);
  const auto report = recall_at_k(labeled(q, {0, 1, 9}), labeled(r, {0, 1, 2, 0, 1, 2}), kLabelGt, {1, 6});
  EXPECT_EQ(report.num_queries, 2u);
  EXPECT_EQ(report.num_excluded, 1u);
  EXPECT_EQ(report.recall_at.at(6), 1.0);
  EXPECT_FALSE(report.per_query[2].has_ground_truth);
}

TEST(Recall, MatchesHandCount) {
  Rng rng(5);
  const auto q = labeled(oracle::random_unit_rows(rng, 50, 5), std::vector<PlaceId>(50));
  auto r = labeled(oracle::random_unit_rows(rng, 200, 5), std::vector<PlaceId>(200));
  for (auto& m : r.meta) m.place_id = static_cast<PlaceId>(rng.below(30));
  auto qq = q;
  for (auto& m : qq.meta) m.place_id = static_cast<PlaceId>(rng.below(30));
  const auto report = recall_at_k(qq, r, kLabelGt, {1, 5, 10});
  for (std::size_t k : {1, 5, 10}) EXPECT_EQ(report.recall_at.at(k), oracle::label_recall(qq, r, k));
}

TEST(GeoTruth, RadiusBoundary) {
  const GroundTruthMatcher gt{GroundTruthMode::kGeo, 25.0};
  const DescriptorMeta q{"q", 10.0, 20.0, 0};
  const double deg_per_m = 180.0 / (M_PI * 6371008.8);
  DescriptorMeta near = q, far = q;
  near.lat += 24.99 * deg_per_m;
  far.lat += 25.01 * deg_per_m;
  EXPECT_TRUE(gt.matches(q, near));
  EXPECT_FALSE(gt.matches(q, far));
}

TEST(Pca, WhiteDataIsAFixedPoint) {
  // Rows +-a e_i have zero mean and covariance 2a^2 / (n - 1) I.
  const std::size_t d = 6, n = 2 * d;
  const double a = std::sqrt((n - 1) / 2.0);
  Matrix x(n, d);
  for (std::size_t i = 0; i < d; ++i) {
    x(2 * i, i) = a;
    x(2 * i + 1, i) = -a;
  }
  const PCAModel m = pca_whiten_fit(x, d);
  Matrix y(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = pca_project(m, x.row(i));
    std::copy(p.begin(), p.end(), y.row(i).begin());
  }
  EXPECT_LE(oracle::identity_deviation(oracle::covariance(y)), 1e-6);
}

TEST(Pca, AgreesWithJacobiOracle) {
  Rng rng(6);
  Matrix x = oracle::random_matrix(rng, 40, 7);
  for (std::size_t i = 0; i < 40; ++i) {
    for (std::size_t j = 0; j < 7; ++j) x(i, j) *= 1.0 + static_cast<double>(j);
  }
  const PCAModel m = pca_whiten_fit(x, 4);
  auto [values, vectors] = oracle::jacobi_eigen(oracle::covariance(x));
  for (std::size_t r = 0; r < 4; ++r) {
    EXPECT_NEAR(m.eigenvalues[r], values[r], 1e-9 * values[0]);
    // Same sign convention: first nonzero component positive.
    std::size_t first = 0;
    while (std::abs(vectors(r, first)) < 1e-12) ++first;
    const double sign = vectors(r, first) > 0 ? 1.0 : -1.0;
    const double scale = 1.0 / std::sqrt(values[r] + m.epsilon);
    for (std::size_t c = 0; c < 7; ++c) EXPECT_NEAR(m.projection(r, c), sign * vectors(r, c) * scale, 1e-8);
  }
}

TEST(Pca, ReducesToRequestedDimension) {
  Rng rng(7);
  const Matrix x = oracle::random_matrix(rng, 600, 2048);
  const PCAModel m = pca_whiten_fit(x, 512);
  EXPECT_EQ(m.out_dim(), 512u);
  const auto z = pca_transform(m, x.row(0));
  EXPECT_EQ(z.size(), 512u);
  EXPECT_NEAR(std::sqrt(std::inner_product(z.begin(), z.end(), z.begin(), 0.0)), 1.0, 1e-12);
}

TEST(Pca, LeadingAxisMapsToFirstCoordinate) {
  Rng rng(8);
  Matrix x = oracle::random_matrix(rng, 30, 5);
  for (std::size_t i = 0; i < 30; ++i) x(i, 2) *= 10.0;
  const PCAModel m = pca_whiten_fit(x, 5);
  std::vector<double> v = m.mean;
  const double lambda = 3.0;
  // Recover the unit eigenvector from the whitened row.
  const double s = std::sqrt(m.eigenvalues[0] + m.epsilon);
  for (std::size_t c = 0; c < 5; ++c) v[c] += lambda * m.projection(0, c) * s;
  const auto z = pca_transform(m, v);
  EXPECT_NEAR(z[0], 1.0, 1e-9);
  for (std::size_t r = 1; r < 5; ++r) EXPECT_NEAR(z[r], 0.0, 1e-9);
}

TEST(Pca, DimensionMismatchIsAnError) {
  Rng rng(9);
  const PCAModel m = pca_whiten_fit(oracle::random_matrix(rng, 10, 4), 2);
  const std::vector<double> v(5, 0.1);
  EXPECT_THROW(pca_transform(m, v), Error);
  EXPECT_THROW(pca_whiten_fit(oracle::random_matrix(rng, 10, 4), 5), Error);
}

}  // namespace
}  // namespace vpr
