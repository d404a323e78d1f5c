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

#include "vpr/trainer.hpp"

#include <chrono>
#include <cmath>

#include "vpr/error.hpp"

namespace vpr {

void sgd_step(std::span<double> params, std::span<const double> grads, std::span<double> velocity, double lr,
              double momentum, double weight_decay) {
  require(params.size() == grads.size() && params.size() == velocity.size(), Errc::kShapeMismatch,
          "parameter, gradient and velocity sizes differ");
  require(lr >= 0.0 && momentum >= 0.0 && momentum < 1.0 && weight_decay >= 0.0, Errc::kInvalidArgument,
          "optimizer settings out of range");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      fail(Errc::kNumeric, "non-finite gradient at parameter " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i] + weight_decay * params[i];
    velocity[i] = momentum * velocity[i] + g;
    params[i] -= lr * velocity[i];
  }
}

double lr_at_epoch(const TrainConfig& cfg, std::size_t epoch) {
  const std::size_t every = cfg.lr_decay_every == 0 ? 1 : cfg.lr_decay_every;
  return cfg.initial_lr * std::pow(cfg.lr_decay_factor, static_cast<double>(epoch / every));
}

Head init_head(const TrainConfig& cfg, std::size_t channels) {
  Head head;
  head.kind = cfg.aggregator;
  switch (cfg.aggregator) {
    case AggregatorKind::kConvAP:
      head.conv_ap = init_conv_ap(channels, cfg.conv_dim, cfg.pool_s1, cfg.pool_s2, cfg.conv_bias, cfg.seed ^ 0x5eedULL);
      break;
    case AggregatorKind::kGeM: head.gem.p = cfg.gem_p; break;
    case AggregatorKind::kAvg: break;
  }
  return head;
}

double TrainLog::epoch_mean_loss(std::size_t epoch) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : steps) {
    if (s.epoch == epoch) {
      sum += s.loss;
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

TrainResult train(const PlacesDB& db, const TrainConfig& cfg, const Head* initial) {
  const auto t0 = std::chrono::steady_clock::now();
  require(db.has_payloads(), Errc::kInvalidArgument, "training needs a database with feature-map payloads");
  require(cfg.initial_lr >= 0.0 && cfg.lr_decay_factor > 0.0, Errc::kInvalidArgument, "invalid learning-rate schedule");
  require(cfg.optimizer.momentum >= 0.0 && cfg.optimizer.momentum < 1.0 && cfg.optimizer.weight_decay >= 0.0,
          Errc::kInvalidArgument, "invalid optimizer settings");

  const std::size_t channels = db.payloads().front().channels;
  TrainResult result{initial ? *initial : init_head(cfg, channels), {}};
  Head& head = result.head;
  if (cfg.max_epochs == 0) return result;

  BatchSpec spec = cfg.batch;
  spec.seed = cfg.seed;
  BatchSampler sampler(db, spec);

  std::vector<double> vel_w(head.conv_ap.weight.size(), 0.0), vel_b(head.conv_ap.bias.size(), 0.0);
  std::vector<double> vel_p(1, 0.0);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double lr = lr_at_epoch(cfg, epoch);
    result.log.epoch_lr.push_back(lr);
    for (std::size_t b = 0; b < sampler.batches_per_epoch(); ++b) {
      const Batch batch = sampler.next();
      const std::size_t n = batch.items.size();
      std::vector<const FeatureMap*> maps(n);
      EmbeddingBatch raw;
      raw.labels = batch.labels;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& item = batch.items[i];
        maps[i] = &db.payload(db.places()[item.place_index].images[item.image_index]);
        const auto v = head.forward_raw(*maps[i]);
        if (i == 0) raw.rows = Matrix(n, v.size());
        std::copy(v.begin(), v.end(), raw.rows.row(i).begin());
      }
      const LossOutput loss = batch_loss(raw, cfg.loss, cfg.miner, cfg.miner_epsilon, cfg.loss_cfg);
      if (!std::isfinite(loss.value)) {
        fail(Errc::kNumeric, "loss diverged at epoch " + std::to_string(epoch) + " step " + std::to_string(step));
      }
      result.log.steps.push_back({epoch, step, lr, loss.value, loss.stats});

      switch (head.kind) {
        case AggregatorKind::kConvAP: {
          ConvAPGrads grads;
          for (std::size_t i = 0; i < n; ++i) conv_ap_backward_raw(*maps[i], head.conv_ap, loss.grad.row(i), grads, false);
          sgd_step(head.conv_ap.weight, grads.weight, vel_w, lr, cfg.optimizer.momentum, cfg.optimizer.weight_decay);
          if (head.conv_ap.use_bias) {
            sgd_step(head.conv_ap.bias, grads.bias, vel_b, lr, cfg.optimizer.momentum,
                     cfg.optimizer.decay_bias ? cfg.optimizer.weight_decay : 0.0);
          }
          break;
        }
        case AggregatorKind::kGeM: {
          GemGrads grads;
          for (std::size_t i = 0; i < n; ++i) gem_backward_raw(*maps[i], head.gem, loss.grad.row(i), grads, false);
          std::vector<double> p{head.gem.p}, g{grads.p};
          sgd_step(p, g, vel_p, lr, cfg.optimizer.momentum, cfg.optimizer.weight_decay);
          head.gem.p = std::max(p[0], head.gem.p_min);
          break;
        }
        case AggregatorKind::kAvg: break;
      }
      ++step;
    }
  }
  result.log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace vpr
