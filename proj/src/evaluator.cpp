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

#include "vpr/evaluator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "vpr/error.hpp"

namespace vpr {

std::vector<std::size_t> retrieve_topk(std::span<const double> query, const Matrix& refs, std::size_t k) {
  require(k >= 1 && k <= refs.rows, Errc::kInvalidArgument,
          "k=" + std::to_string(k) + " out of range for " + std::to_string(refs.rows) + " references");
  require(query.size() == refs.cols, Errc::kShapeMismatch, "query dimension does not match references");
  std::vector<double> sims(refs.rows);
  for (std::size_t r = 0; r < refs.rows; ++r) sims[r] = dot(query, refs.row(r));
  std::vector<std::size_t> idx(refs.rows);
  std::iota(idx.begin(), idx.end(), 0);
  auto better = [&](std::size_t a, std::size_t b) { return sims[a] > sims[b] || (sims[a] == sims[b] && a < b); };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), better);
  idx.resize(k);
  return idx;
}

bool GroundTruthMatcher::matches(const DescriptorMeta& query, const DescriptorMeta& ref) const {
  if (mode == GroundTruthMode::kLabel) return query.place_id == ref.place_id;
  return haversine_m({query.lat, query.lon}, {ref.lat, ref.lon}) <= radius_m;
}

RecallReport recall_at_k(const DescriptorSet& queries, const DescriptorSet& refs, const GroundTruthMatcher& gt,
                         std::vector<std::size_t> ks) {
  require(queries.size() > 0, Errc::kInvalidArgument, "empty query set");
  require(refs.size() > 0, Errc::kInvalidArgument, "empty reference set");
  require(queries.meta.size() == queries.size() && refs.meta.size() == refs.size(), Errc::kShapeMismatch,
          "descriptor metadata does not match row count");
  require(!ks.empty(), Errc::kInvalidArgument, "no k values requested");
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  require(ks.front() >= 1, Errc::kInvalidArgument, "k must be >= 1");
  const std::size_t kmax = std::min(ks.back(), refs.size());

  RecallReport report;
  report.ks = ks;
  std::map<std::size_t, std::size_t> hits;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    QueryTrace trace;
    trace.ranked = retrieve_topk(queries.rows.row(q), refs.rows, kmax);
    trace.has_ground_truth = false;
    for (std::size_t r = 0; r < refs.size(); ++r) {
      if (gt.matches(queries.meta[q], refs.meta[r])) {
        trace.has_ground_truth = true;
        break;
      }
    }
    if (trace.has_ground_truth) {
      for (std::size_t rank = 0; rank < trace.ranked.size(); ++rank) {
        if (gt.matches(queries.meta[q], refs.meta[trace.ranked[rank]])) {
          trace.first_correct = static_cast<long>(rank);
          break;
        }
      }
      ++report.num_queries;
      for (std::size_t k : ks) {
        if (trace.first_correct >= 0 && static_cast<std::size_t>(trace.first_correct) < k) ++hits[k];
      }
    } else {
      ++report.num_excluded;
    }
    report.per_query.push_back(std::move(trace));
  }
  for (std::size_t k : ks) {
    report.recall_at[k] =
        report.num_queries == 0 ? 0.0 : static_cast<double>(hits[k]) / static_cast<double>(report.num_queries);
  }
  return report;
}

PCAModel pca_whiten_fit(const Matrix& training, std::size_t out_dim, double epsilon) {
  const std::size_t n = training.rows, d = training.cols;
  require(out_dim >= 1 && out_dim <= d, Errc::kInvalidArgument, "PCA output dimension must lie in [1, D]");
  require(n > out_dim, Errc::kInvalidArgument, "PCA needs more training rows than output dimensions");
  require(epsilon >= 0.0, Errc::kInvalidArgument, "whitening epsilon must be >= 0");

  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMat> x(training.values.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const RowMat centered = x.rowwise() - mean;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) fail(Errc::kNumeric, "covariance eigendecomposition failed");

  // Eigen returns ascending eigenvalues.
  const Eigen::VectorXd& evals = solver.eigenvalues();
  const double top = std::max(evals(static_cast<Eigen::Index>(d - 1)), 0.0);
  const double rank_tol = top * static_cast<double>(d) * 1e-12;
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < evals.size(); ++i) {
    if (evals(i) > rank_tol) ++rank;
  }
  if (out_dim > rank) {
    fail(Errc::kInvalidArgument, "PCA output dimension " + std::to_string(out_dim) + " exceeds data rank " +
                                     std::to_string(rank));
  }

  PCAModel model;
  model.epsilon = epsilon;
  model.mean.assign(mean.data(), mean.data() + d);
  model.projection = Matrix(out_dim, d);
  model.eigenvalues.resize(out_dim);
  for (std::size_t r = 0; r < out_dim; ++r) {
    const auto col = static_cast<Eigen::Index>(d - 1 - r);
    const double lambda = std::max(evals(col), 0.0);
    Eigen::VectorXd v = solver.eigenvectors().col(col);
    for (Eigen::Index t = 0; t < v.size(); ++t) {
      if (std::abs(v(t)) > 1e-12) {
        if (v(t) < 0.0) v = -v;
        break;
      }
    }
    const double scale = 1.0 / std::sqrt(lambda + epsilon);
    model.eigenvalues[r] = lambda;
    for (std::size_t t = 0; t < d; ++t) model.projection(r, t) = v(static_cast<Eigen::Index>(t)) * scale;
  }
  return model;
}

std::vector<double> pca_project(const PCAModel& model, std::span<const double> v) {
  require(v.size() == model.in_dim(), Errc::kShapeMismatch,
          "descriptor dimension " + std::to_string(v.size()) + " != PCA input dimension " +
              std::to_string(model.in_dim()));
  std::vector<double> centered(v.size());
  for (std::size_t t = 0; t < v.size(); ++t) centered[t] = v[t] - model.mean[t];
  std::vector<double> out(model.out_dim());
  for (std::size_t r = 0; r < model.out_dim(); ++r) out[r] = dot(model.projection.row(r), centered);
  return out;
}

Descriptor pca_transform(const PCAModel& model, std::span<const double> v) {
  return l2_normalize(pca_project(model, v));
}

DescriptorSet pca_transform(const PCAModel& model, const DescriptorSet& set) {
  DescriptorSet out{Matrix(set.size(), model.out_dim()), set.meta};
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto z = pca_transform(model, set.rows.row(i));
    std::copy(z.begin(), z.end(), out.rows.row(i).begin());
  }
  return out;
}

}  // namespace vpr
