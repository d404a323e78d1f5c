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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vpr/rng.hpp"
#include "vpr/tensor.hpp"

namespace vpr {

using PlaceId = std::int64_t;

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;
};

// One captured image of a place. `payload` indexes PlacesDB::payloads() when
// the database carries feature maps.
struct ImageRecord {
  std::string image_ref;
  double lat = 0.0;
  double lon = 0.0;
  std::optional<double> bearing;
  int year = 0;
  int month = 1;
  std::optional<std::size_t> payload;

  GeoPoint position() const { return {lat, lon}; }
};

struct Place {
  PlaceId place_id = 0;
  std::vector<ImageRecord> images;
};

// Grid cell under floor quantization of raw degrees.
struct GridCell {
  std::int64_t lat_index = 0;
  std::int64_t lon_index = 0;
  auto operator<=>(const GridCell&) const = default;
};

GridCell grid_cell(double lat, double lon, double cell_size_deg);

// Checks coordinate ranges, month, and optional bearing. Throws kValidation.
void validate_record(const ImageRecord& r);

// Immutable collection of places with optional attached feature maps.
class PlacesDB {
 public:
  PlacesDB() = default;
  // Throws kValidation on duplicate place ids, duplicate (place_id,
  // image_ref), bad records, or payload indices out of range.
  PlacesDB(std::vector<Place> places, std::vector<FeatureMap> payloads = {},
           double cell_size_deg = 0.001);

  const std::vector<Place>& places() const { return places_; }
  const std::vector<FeatureMap>& payloads() const { return payloads_; }
  double cell_size_deg() const { return cell_size_deg_; }

  std::size_t num_places() const { return places_.size(); }
  std::size_t num_images() const;
  bool has_payloads() const { return !payloads_.empty(); }

  const FeatureMap& payload(const ImageRecord& r) const;

  // Places with fewer than `min_images` images.
  std::vector<PlaceId> undersized_places(std::size_t min_images) const;

  // True when no two places share a grid cell (first image of each place).
  bool places_disjoint() const;

 private:
  std::vector<Place> places_;
  std::vector<FeatureMap> payloads_;
  double cell_size_deg_ = 0.001;
};

struct IngestOptions {
  std::size_t min_images_per_place = 4;
  // Keep undersized places instead of rejecting the manifest.
  bool permissive = false;
};

// Reads the `place_id,image_ref,lat,lon,bearing,year,month` CSV manifest.
PlacesDB ingest_manifest(const std::filesystem::path& path, const IngestOptions& options = {});
PlacesDB parse_manifest(std::string_view text, const IngestOptions& options = {});

// Groups records into one place per occupied grid cell having at least
// `min_dates` distinct (year, month) stamps. Place ids follow ascending
// (lat_index, lon_index) order. Payload indices on the records are kept.
PlacesDB grid_group(std::span<const ImageRecord> records, double cell_size_deg, int min_dates,
                    std::vector<FeatureMap> payloads = {});

struct SynthConfig {
  std::size_t num_places = 64;
  std::size_t images_per_place = 8;
  std::size_t height = 7;
  std::size_t width = 7;
  std::size_t channels = 32;
  // Per-image perturbation of the place latent map.
  std::size_t max_shift = 2;
  double gain = 0.3;
  double noise_sigma = 0.1;
  // Latent model over three orthogonal channel blocks: a spatially constant
  // place code (`code_rank` axes), a smooth layout shared by all places
  // (`layout_rank` axes), and i.i.d. per-cell texture (the rest).
  double code_scale = 1.0;
  std::size_t code_rank = 8;
  double layout_scale = 3.0;
  std::size_t layout_rank = 4;
  double texture_scale = 1.0;
  std::uint64_t seed = 7;
};

// Deterministic synthetic database whose payloads stand in for backbone
// feature maps. Places sit in distinct grid cells with 4+ monthly stamps.
PlacesDB synth_places(const SynthConfig& cfg);

// Circular spatial shift by (di, dj) cells.
FeatureMap circular_shift(const FeatureMap& f, std::ptrdiff_t di, std::ptrdiff_t dj);

inline constexpr double kEarthRadiusM = 6371008.8;

// Great-circle distance in meters.
double haversine_m(GeoPoint a, GeoPoint b);

struct BatchSpec {
  std::size_t num_places = 100;       // P
  std::size_t images_per_place = 4;   // K
  std::uint64_t seed = 0;
};

struct BatchItem {
  PlaceId place_id = 0;
  std::size_t place_index = 0;  // into PlacesDB::places()
  std::size_t image_index = 0;  // into Place::images
};

struct Batch {
  std::vector<BatchItem> items;
  std::vector<PlaceId> labels;
};

// P x K sampler. An epoch is one seeded shuffle of the places holding at
// least K images. When P does not divide the eligible count, the final batch
// of an epoch is topped up with other places drawn from the same epoch's
// order, so every place is still visited once per epoch.
class BatchSampler {
 public:
  BatchSampler(const PlacesDB& db, BatchSpec spec);

  Batch next();

  std::size_t epoch() const { return epoch_; }
  std::size_t batches_per_epoch() const;
  std::size_t eligible_places() const { return eligible_.size(); }
  // True when the next call to next() starts a new epoch.
  bool at_epoch_start() const { return cursor_ == 0; }

 private:
  void reshuffle();

  const PlacesDB* db_;
  BatchSpec spec_;
  Rng rng_;
  std::vector<std::size_t> eligible_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::size_t epoch_ = 0;
};

// Single-call form over explicit sampler state.
inline Batch sample_batch(BatchSampler& state) { return state.next(); }

// Splits each place's images: the first `train_per_place` go to training;
// of the rest, the first half (rounded up) are queries and the remainder
// references. Places without at least one query and one reference are left
// out of the evaluation side.
struct HoldoutSplit {
  PlacesDB train;
  std::vector<std::pair<std::size_t, std::size_t>> queries;     // (place, image)
  std::vector<std::pair<std::size_t, std::size_t>> references;  // (place, image)
};
HoldoutSplit split_holdout(const PlacesDB& db, std::size_t train_per_place);

// Directory form: manifest.csv plus payloads.vprk when payloads exist.
void save_db(const PlacesDB& db, const std::filesystem::path& dir);
PlacesDB load_db(const std::filesystem::path& dir, const IngestOptions& options = {});

}  // namespace vpr
