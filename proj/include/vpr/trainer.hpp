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
#include <cstdint>
#include <span>
#include <vector>

#include "vpr/aggregators.hpp"
#include "vpr/losses.hpp"
#include "vpr/mining.hpp"
#include "vpr/places_db.hpp"

namespace vpr {

struct OptimizerConfig {
  double momentum = 0.9;
  double weight_decay = 0.001;
  // Apply weight decay to the Conv-AP bias as well as the kernel.
  bool decay_bias = true;
};

// Heavy-ball SGD with L2 weight decay folded into the gradient:
//   g' = grad + wd * param;  v = momentum * v + g';  param -= lr * v.
// Throws kNumeric on a non-finite gradient and kShapeMismatch on size mismatch.
void sgd_step(std::span<double> params, std::span<const double> grads, std::span<double> velocity, double lr,
              double momentum, double weight_decay);

struct TrainConfig {
  BatchSpec batch{16, 4, 0};
  AggregatorKind aggregator = AggregatorKind::kConvAP;
  std::size_t conv_dim = 64;  // d
  std::size_t pool_s1 = 2;
  std::size_t pool_s2 = 2;
  bool conv_bias = true;
  double gem_p = 3.0;
  LossKind loss = LossKind::kMultiSimilarity;
  LossConfig loss_cfg = LossConfig::defaults(LossKind::kMultiSimilarity);
  MinerKind miner = MinerKind::kMultiSimilarity;
  double miner_epsilon = 0.1;
  double initial_lr = 0.03;
  double lr_decay_factor = 0.3;
  std::size_t lr_decay_every = 5;
  std::size_t max_epochs = 30;
  OptimizerConfig optimizer;
  std::uint64_t seed = 7;
};

// initial_lr * decay_factor^(floor(epoch / decay_every)).
double lr_at_epoch(const TrainConfig& cfg, std::size_t epoch);

// Head initialized per the config for feature maps with `channels` channels.
Head init_head(const TrainConfig& cfg, std::size_t channels);

struct StepRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  MiningStats mining;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<double> epoch_lr;
  double wall_seconds = 0.0;

  // Mean step loss of one epoch.
  double epoch_mean_loss(std::size_t epoch) const;
};

struct TrainResult {
  Head head;
  TrainLog log;
};

// Trains the aggregation head on P x K batches from `db`. Starts from
// init_head(cfg, c) unless `initial` is given. Deterministic given cfg.seed.
TrainResult train(const PlacesDB& db, const TrainConfig& cfg, const Head* initial = nullptr);

}  // namespace vpr
