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

#include "vpr/experiment.hpp"

#include <iomanip>
#include <limits>
#include <sstream>

#include "vpr/error.hpp"
#include "vpr/io.hpp"

namespace vpr {

SynthConfig synth_config(const Config& cfg) {
  SynthConfig s;
  s.num_places = cfg.get_uint("synth.num_places");
  s.images_per_place = cfg.get_uint("synth.images_per_place");
  s.height = cfg.get_uint("synth.height");
  s.width = cfg.get_uint("synth.width");
  s.channels = cfg.get_uint("synth.channels");
  s.max_shift = cfg.get_uint("synth.max_shift");
  s.gain = cfg.get_number("synth.gain");
  s.noise_sigma = cfg.get_number("synth.noise_sigma");
  s.code_scale = cfg.get_number("synth.code_scale");
  s.code_rank = cfg.get_uint("synth.code_rank");
  s.layout_scale = cfg.get_number("synth.layout_scale");
  s.layout_rank = cfg.get_uint("synth.layout_rank");
  s.texture_scale = cfg.get_number("synth.texture_scale");
  s.seed = cfg.get_uint("seed");
  return s;
}

TrainConfig train_config(const Config& cfg) {
  TrainConfig t;
  t.batch.num_places = cfg.get_uint("train.places_per_batch");
  t.batch.images_per_place = cfg.get_uint("train.images_per_place");
  t.aggregator = parse_aggregator(cfg.get_string("model.aggregator"));
  t.conv_dim = cfg.get_uint("model.dim");
  t.pool_s1 = cfg.get_uint("model.s1");
  t.pool_s2 = cfg.get_uint("model.s2");
  t.conv_bias = cfg.get_bool("model.bias");
  t.gem_p = cfg.get_number("model.gem_p");
  t.loss = parse_loss(cfg.get_string("train.loss"));
  t.loss_cfg = LossConfig::defaults(t.loss);
  switch (t.loss) {
    case LossKind::kContrastive: t.loss_cfg.margin = cfg.get_number("train.contrastive_margin"); break;
    case LossKind::kTriplet:
    case LossKind::kWeakTriplet: t.loss_cfg.margin = cfg.get_number("train.triplet_margin"); break;
    case LossKind::kMultiSimilarity: t.loss_cfg.margin = cfg.get_number("train.ms_margin"); break;
  }
  t.loss_cfg.ms_alpha = cfg.get_number("train.ms_alpha");
  t.loss_cfg.ms_beta = cfg.get_number("train.ms_beta");
  t.miner = parse_miner(cfg.get_string("train.miner"));
  t.miner_epsilon = cfg.get_number("train.miner_epsilon");
  t.initial_lr = cfg.get_number("train.lr");
  t.lr_decay_factor = cfg.get_number("train.lr_decay_factor");
  t.lr_decay_every = cfg.get_uint("train.lr_decay_every");
  t.max_epochs = cfg.get_uint("train.epochs");
  t.optimizer.momentum = cfg.get_number("train.momentum");
  t.optimizer.weight_decay = cfg.get_number("train.weight_decay");
  t.optimizer.decay_bias = cfg.get_bool("train.decay_bias");
  t.seed = cfg.get_uint("seed");
  return t;
}

GroundTruthMatcher ground_truth(const Config& cfg) {
  GroundTruthMatcher gt;
  const auto mode = cfg.get_string("eval.ground_truth");
  if (mode == "geo") {
    gt.mode = GroundTruthMode::kGeo;
  } else if (mode == "label") {
    gt.mode = GroundTruthMode::kLabel;
  } else {
    fail(Errc::kValidation, "eval.ground_truth must be 'geo' or 'label'");
  }
  gt.radius_m = cfg.get_number("eval.radius_m");
  require(gt.radius_m >= 0.0, Errc::kValidation, "eval.radius_m must be >= 0");
  return gt;
}

PlacesDB build_db(const Config& cfg) {
  const std::filesystem::path manifest = cfg.get_string("build.manifest");
  require(!manifest.empty(), Errc::kValidation, "build.manifest is not set");
  IngestOptions opts;
  opts.min_images_per_place = cfg.get_uint("build.min_images");
  opts.permissive = cfg.get_bool("build.permissive") || cfg.get_bool("build.regroup_grid");
  PlacesDB db = ingest_manifest(manifest, opts);

  // Attach payloads when every image_ref names a tensor file.
  std::vector<Place> places = db.places();
  std::vector<FeatureMap> payloads;
  bool all = db.num_images() > 0;
  const auto base = manifest.parent_path();
  for (const auto& p : places) {
    for (const auto& r : p.images) {
      const std::filesystem::path ref = r.image_ref;
      if (ref.extension() != ".vprk" || !std::filesystem::exists(ref.is_absolute() ? ref : base / ref)) all = false;
    }
  }
  if (all) {
    for (auto& p : places) {
      for (auto& r : p.images) {
        const std::filesystem::path ref = r.image_ref;
        const Tensor t = read_tensor_file(ref.is_absolute() ? ref : base / ref);
        require(t.dims.size() == 3, Errc::kParse, r.image_ref + ": payload must be a rank-3 h x w x c tensor");
        FeatureMap m(t.dims[0], t.dims[1], t.dims[2]);
        m.values = t.values;
        r.payload = payloads.size();
        payloads.push_back(std::move(m));
      }
    }
  }
  const double cell = cfg.get_number("build.cell_size_deg");
  if (cfg.get_bool("build.regroup_grid")) {
    std::vector<ImageRecord> records;
    for (const auto& p : places) records.insert(records.end(), p.images.begin(), p.images.end());
    return grid_group(records, cell, static_cast<int>(cfg.get_uint("build.min_dates")), std::move(payloads));
  }
  return PlacesDB(std::move(places), std::move(payloads), cell);
}

DescriptorSet describe(const Head& head, const PlacesDB& db,
                       const std::vector<std::pair<std::size_t, std::size_t>>& items) {
  DescriptorSet set;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& place = db.places().at(items[i].first);
    const auto& rec = place.images.at(items[i].second);
    const auto z = head.forward(db.payload(rec));
    if (i == 0) set.rows = Matrix(items.size(), z.size());
    std::copy(z.begin(), z.end(), set.rows.row(i).begin());
    set.meta.push_back({rec.image_ref, rec.lat, rec.lon, place.place_id});
  }
  return set;
}

EvalSets describe_holdout(const Head& head, const PlacesDB& db, std::size_t train_images_per_place) {
  const HoldoutSplit split = split_holdout(db, train_images_per_place);
  require(!split.queries.empty() && !split.references.empty(), Errc::kInvalidArgument,
          "no held-out images: places need at least train_images_per_place + 2 images");
  return {describe(head, db, split.queries), describe(head, db, split.references)};
}

Head resolve_head(const Config& cfg, const PlacesDB& db, const std::string& checkpoint) {
  if (!checkpoint.empty()) return load_checkpoint(checkpoint);
  require(db.has_payloads(), Errc::kInvalidArgument, "database has no payloads");
  return init_head(train_config(cfg), db.payloads().front().channels);
}

std::string format_train_log(const TrainLog& log) {
  std::ostringstream out;
  out << "epoch,step,lr,loss,anchors,skipped_anchors,positive_pairs,negative_pairs,triplets\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& s : log.steps) {
    out << s.epoch << ',' << s.step << ',' << s.lr << ',' << s.loss << ',' << s.mining.anchors << ','
        << s.mining.skipped_anchors << ',' << s.mining.positive_pairs << ',' << s.mining.negative_pairs << ','
        << s.mining.triplets << '\n';
  }
  return out.str();
}

}  // namespace vpr
