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

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "vpr/aggregators.hpp"
#include "vpr/config.hpp"
#include "vpr/evaluator.hpp"
#include "vpr/places_db.hpp"
#include "vpr/trainer.hpp"

namespace vpr {

// Translation from the declarative config to module settings, plus the
// pipeline steps shared by the C API and tests.

SynthConfig synth_config(const Config& cfg);
TrainConfig train_config(const Config& cfg);
GroundTruthMatcher ground_truth(const Config& cfg);

// Manifest -> database per the build.* keys. Image refs naming existing
// .vprk tensors (relative to the manifest directory) are loaded as payloads
// when every row has one.
PlacesDB build_db(const Config& cfg);

// Descriptors of the given (place, image) items under `head`.
DescriptorSet describe(const Head& head, const PlacesDB& db,
                       const std::vector<std::pair<std::size_t, std::size_t>>& items);

struct EvalSets {
  DescriptorSet queries;
  DescriptorSet references;
};

// Held-out query and reference descriptors per split_holdout.
EvalSets describe_holdout(const Head& head, const PlacesDB& db, std::size_t train_images_per_place);

// Head from a checkpoint, or a fresh init_head() when `checkpoint` is empty.
Head resolve_head(const Config& cfg, const PlacesDB& db, const std::string& checkpoint);

// One CSV line per training step.
std::string format_train_log(const TrainLog& log);

}  // namespace vpr
