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

#include "vpr/places_db.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <unordered_map>

#include <Eigen/QR>

#include "csv.hpp"
#include "vpr/error.hpp"
#include "vpr/io.hpp"

namespace vpr {

namespace {

constexpr std::string_view kManifestHeader = "place_id,image_ref,lat,lon,bearing,year,month";

template <typename T>
T parse_number(const std::string& s, std::size_t line_no, const char* what) {
  T value{};
  std::istringstream in(s);
  in >> value;
  if (s.empty() || in.fail() || !in.eof()) {
    fail(Errc::kParse, "line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
  }
  return value;
}

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

GridCell grid_cell(double lat, double lon, double cell_size_deg) {
  return {static_cast<std::int64_t>(std::floor(lat / cell_size_deg)),
          static_cast<std::int64_t>(std::floor(lon / cell_size_deg))};
}

void validate_record(const ImageRecord& r) {
  if (!(r.lat >= -90.0 && r.lat <= 90.0) || !(r.lon >= -180.0 && r.lon <= 180.0)) {
    fail(Errc::kValidation, "image '" + r.image_ref + "': coordinates out of range");
  }
  if (r.month < 1 || r.month > 12) {
    fail(Errc::kValidation, "image '" + r.image_ref + "': month out of range");
  }
  if (r.bearing && !(*r.bearing >= 0.0 && *r.bearing < 360.0)) {
    fail(Errc::kValidation, "image '" + r.image_ref + "': bearing out of range");
  }
}

PlacesDB::PlacesDB(std::vector<Place> places, std::vector<FeatureMap> payloads, double cell_size_deg)
    : places_(std::move(places)), payloads_(std::move(payloads)), cell_size_deg_(cell_size_deg) {
  require(cell_size_deg_ > 0.0, Errc::kValidation, "cell size must be positive");
  std::set<PlaceId> ids;
  for (const auto& p : places_) {
    if (!ids.insert(p.place_id).second) {
      fail(Errc::kValidation, "duplicate place_id " + std::to_string(p.place_id));
    }
    std::set<std::string> refs;
    for (const auto& r : p.images) {
      validate_record(r);
      if (!refs.insert(r.image_ref).second) {
        fail(Errc::kValidation, "duplicate image_ref '" + r.image_ref + "' in place " +
                                    std::to_string(p.place_id));
      }
      if (r.payload && *r.payload >= payloads_.size()) {
        fail(Errc::kValidation, "payload index out of range for '" + r.image_ref + "'");
      }
    }
  }
}

std::size_t PlacesDB::num_images() const {
  std::size_t n = 0;
  for (const auto& p : places_) n += p.images.size();
  return n;
}

const FeatureMap& PlacesDB::payload(const ImageRecord& r) const {
  if (!r.payload) fail(Errc::kInvalidArgument, "image '" + r.image_ref + "' has no payload");
  return payloads_.at(*r.payload);
}

std::vector<PlaceId> PlacesDB::undersized_places(std::size_t min_images) const {
  std::vector<PlaceId> out;
  for (const auto& p : places_) {
    if (p.images.size() < min_images) out.push_back(p.place_id);
  }
  return out;
}

bool PlacesDB::places_disjoint() const {
  std::set<GridCell> cells;
  for (const auto& p : places_) {
    if (p.images.empty()) continue;
    const auto& r = p.images.front();
    if (!cells.insert(grid_cell(r.lat, r.lon, cell_size_deg_)).second) return false;
  }
  return true;
}

namespace {

// Records carry their data-row number in `payload`; callers strip or keep it.
std::vector<Place> parse_manifest_rows(std::string_view text, const IngestOptions& options) {
  std::vector<Place> places;
  std::size_t data_row = 0;
  std::unordered_map<PlaceId, std::size_t> index;
  std::size_t line_no = 0;
  bool saw_header = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
    if (csv::trim(line).empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (!saw_header) {
      if (csv::trim(line) != kManifestHeader) {
        fail(Errc::kParse, "line " + std::to_string(line_no) + ": expected header '" +
                               std::string(kManifestHeader) + "'");
      }
      saw_header = true;
      continue;
    }
    const auto f = csv::split_line(line, line_no);
    if (f.size() != 7) {
      fail(Errc::kParse, "line " + std::to_string(line_no) + ": expected 7 fields, got " +
                             std::to_string(f.size()));
    }
    ImageRecord r;
    const auto pid = parse_number<PlaceId>(f[0], line_no, "place_id");
    r.image_ref = f[1];
    if (r.image_ref.empty()) fail(Errc::kParse, "line " + std::to_string(line_no) + ": empty image_ref");
    r.lat = parse_number<double>(f[2], line_no, "lat");
    r.lon = parse_number<double>(f[3], line_no, "lon");
    if (!f[4].empty()) r.bearing = parse_number<double>(f[4], line_no, "bearing");
    r.year = parse_number<int>(f[5], line_no, "year");
    r.month = parse_number<int>(f[6], line_no, "month");
    try {
      validate_record(r);
    } catch (const Error& e) {
      fail(Errc::kValidation, "line " + std::to_string(line_no) + ": " + e.what());
    }
    auto [it, inserted] = index.try_emplace(pid, places.size());
    if (inserted) places.push_back(Place{pid, {}});
    auto& images = places[it->second].images;
    for (const auto& existing : images) {
      if (existing.image_ref == r.image_ref) {
        fail(Errc::kValidation, "line " + std::to_string(line_no) + ": duplicate (place_id, image_ref) (" +
                                    std::to_string(pid) + ", " + r.image_ref + ")");
      }
    }
    r.payload = data_row++;
    images.push_back(std::move(r));
    if (end == text.size()) break;
  }
  if (!saw_header) fail(Errc::kParse, "manifest is missing its header");

  if (!options.permissive) {
    for (const auto& p : places) {
      if (p.images.size() < options.min_images_per_place) {
        fail(Errc::kValidation, "place " + std::to_string(p.place_id) + " has " +
                                    std::to_string(p.images.size()) + " images, need at least " +
                                    std::to_string(options.min_images_per_place));
      }
    }
  }
  return places;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::kIo, "cannot open manifest " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

PlacesDB parse_manifest(std::string_view text, const IngestOptions& options) {
  auto places = parse_manifest_rows(text, options);
  for (auto& p : places) {
    for (auto& r : p.images) r.payload.reset();
  }
  return PlacesDB(std::move(places));
}

PlacesDB ingest_manifest(const std::filesystem::path& path, const IngestOptions& options) {
  const std::string text = read_text(path);
  try {
    return parse_manifest(text, options);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

PlacesDB grid_group(std::span<const ImageRecord> records, double cell_size_deg, int min_dates,
                    std::vector<FeatureMap> payloads) {
  require(cell_size_deg > 0.0, Errc::kInvalidArgument, "cell size must be positive");
  require(min_dates >= 1, Errc::kInvalidArgument, "min_dates must be at least 1");
  std::map<GridCell, std::vector<const ImageRecord*>> cells;
  for (const auto& r : records) {
    validate_record(r);
    cells[grid_cell(r.lat, r.lon, cell_size_deg)].push_back(&r);
  }
  std::vector<Place> places;
  for (const auto& [cell, members] : cells) {
    std::set<std::pair<int, int>> dates;
    for (const auto* r : members) dates.emplace(r->year, r->month);
    if (dates.size() < static_cast<std::size_t>(min_dates)) continue;
    Place p;
    p.place_id = static_cast<PlaceId>(places.size());
    for (const auto* r : members) p.images.push_back(*r);
    places.push_back(std::move(p));
  }
  return PlacesDB(std::move(places), std::move(payloads), cell_size_deg);
}

FeatureMap circular_shift(const FeatureMap& f, std::ptrdiff_t di, std::ptrdiff_t dj) {
  FeatureMap out(f.height, f.width, f.channels);
  const auto h = static_cast<std::ptrdiff_t>(f.height);
  const auto w = static_cast<std::ptrdiff_t>(f.width);
  for (std::ptrdiff_t i = 0; i < h; ++i) {
    const auto si = static_cast<std::size_t>(((i - di) % h + h) % h);
    for (std::ptrdiff_t j = 0; j < w; ++j) {
      const auto sj = static_cast<std::size_t>(((j - dj) % w + w) % w);
      auto src = f.cell(si, sj);
      std::copy(src.begin(), src.end(), out.cell(static_cast<std::size_t>(i), static_cast<std::size_t>(j)).begin());
    }
  }
  return out;
}

PlacesDB synth_places(const SynthConfig& cfg) {
  require(cfg.num_places >= 1 && cfg.images_per_place >= 1 && cfg.height >= 1 && cfg.width >= 1 &&
              cfg.channels >= 1,
          Errc::kInvalidArgument, "synthetic sizes must be at least 1");
  require(cfg.gain >= 0.0 && cfg.gain < 1.0, Errc::kInvalidArgument, "gain must lie in [0, 1)");
  require(cfg.noise_sigma >= 0.0, Errc::kInvalidArgument, "noise sigma must be nonnegative");
  Rng rng(cfg.seed);
  const std::size_t h = cfg.height, w = cfg.width, c = cfg.channels;

  // Orthonormal channel basis split into three blocks: place codes, the
  // shared layout, and texture.
  const std::size_t rank = std::min(cfg.code_rank, c);
  const std::size_t layout_end = std::min(rank + cfg.layout_rank, c);
  Eigen::MatrixXd gauss(c, c);
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t k = 0; k < c; ++k) gauss(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rng.normal();
  }
  const Eigen::MatrixXd basis = Eigen::HouseholderQR<Eigen::MatrixXd>(gauss).householderQ();
  const auto axis = [&](std::size_t r, std::size_t k) {
    return basis(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(r));
  };
  const auto project = [&](std::size_t first, std::size_t last, double scale, double* out) {
    for (std::size_t r = first; r < last; ++r) {
      const double coef = scale * rng.normal();
      for (std::size_t k = 0; k < c; ++k) out[k] += coef * axis(r, k);
    }
  };

  // Scene layout shared by every place: one smooth spatial profile per axis.
  FeatureMap layout(h, w, c);
  for (std::size_t r = rank; r < layout_end; ++r) {
    const double fi = rng.uniform(0.5, 1.5), fj = rng.uniform(0.5, 1.5);
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi), phj = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        const double a = std::sin(2.0 * std::numbers::pi * fi * static_cast<double>(i) / static_cast<double>(h) + phi) +
                         std::cos(2.0 * std::numbers::pi * fj * static_cast<double>(j) / static_cast<double>(w) + phj);
        for (std::size_t k = 0; k < c; ++k) layout.at(i, j, k) += cfg.layout_scale * a * axis(r, k);
      }
    }
  }

  std::vector<Place> places;
  std::vector<FeatureMap> payloads;
  places.reserve(cfg.num_places);
  payloads.reserve(cfg.num_places * cfg.images_per_place);
  const double cell = 0.001;
  const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(cfg.num_places))));
  for (std::size_t p = 0; p < cfg.num_places; ++p) {
    std::vector<double> code(c, 0.0);
    project(0, rank, cfg.code_scale, code.data());
    FeatureMap latent = layout;
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        auto cell_values = latent.cell(i, j);
        for (std::size_t k = 0; k < c; ++k) cell_values[k] += code[k];
        project(layout_end, c, cfg.texture_scale, cell_values.data());
      }
    }

    // Place p occupies the center of grid cell (row, col), spaced two cells apart.
    const double base_lat = 48.8 + (2.0 * static_cast<double>(p / side) + 0.5) * cell;
    const double base_lon = 2.3 + (2.0 * static_cast<double>(p % side) + 0.5) * cell;
    Place place;
    place.place_id = static_cast<PlaceId>(p);
    for (std::size_t k = 0; k < cfg.images_per_place; ++k) {
      const auto span = static_cast<std::int64_t>(2 * cfg.max_shift + 1);
      const auto di = static_cast<std::ptrdiff_t>(static_cast<std::int64_t>(rng.below(span)) - static_cast<std::int64_t>(cfg.max_shift));
      const auto dj = static_cast<std::ptrdiff_t>(static_cast<std::int64_t>(rng.below(span)) - static_cast<std::int64_t>(cfg.max_shift));
      const double g = rng.uniform(1.0 - cfg.gain, 1.0 + cfg.gain);
      FeatureMap img = circular_shift(latent, di, dj);
      for (auto& v : img.values) v = g * v + cfg.noise_sigma * rng.normal();

      ImageRecord r;
      r.image_ref = "synth/" + std::to_string(p) + "/" + std::to_string(k);
      // Jitter of at most ~11 m keeps the image inside its cell.
      r.lat = base_lat + rng.uniform(-0.0001, 0.0001);
      r.lon = base_lon + rng.uniform(-0.0001, 0.0001);
      r.bearing = rng.uniform(0.0, 360.0);
      r.year = 2007 + static_cast<int>(k % 15);
      r.month = 1 + static_cast<int>((k * 5) % 12);
      r.payload = payloads.size();
      payloads.push_back(std::move(img));
      place.images.push_back(std::move(r));
    }
    places.push_back(std::move(place));
  }
  return PlacesDB(std::move(places), std::move(payloads), cell);
}

double haversine_m(GeoPoint a, GeoPoint b) {
  const double phi1 = deg2rad(a.lat), phi2 = deg2rad(b.lat);
  const double dphi = deg2rad(b.lat - a.lat);
  const double dlambda = deg2rad(b.lon - a.lon);
  const double s1 = std::sin(dphi / 2.0), s2 = std::sin(dlambda / 2.0);
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

BatchSampler::BatchSampler(const PlacesDB& db, BatchSpec spec) : db_(&db), spec_(spec), rng_(spec.seed) {
  require(spec_.num_places >= 2, Errc::kInvalidArgument, "batch needs P >= 2 places");
  require(spec_.images_per_place >= 2, Errc::kInvalidArgument, "batch needs K >= 2 images per place");
  for (std::size_t i = 0; i < db.places().size(); ++i) {
    if (db.places()[i].images.size() >= spec_.images_per_place) eligible_.push_back(i);
  }
  if (eligible_.size() < spec_.num_places) {
    fail(Errc::kInvalidArgument, "not enough places: " + std::to_string(eligible_.size()) +
                                     " have at least K=" + std::to_string(spec_.images_per_place) +
                                     " images, batch needs P=" + std::to_string(spec_.num_places));
  }
  reshuffle();
}

std::size_t BatchSampler::batches_per_epoch() const {
  return (eligible_.size() + spec_.num_places - 1) / spec_.num_places;
}

void BatchSampler::reshuffle() {
  order_ = eligible_;
  rng_.shuffle(std::span<std::size_t>(order_));
  cursor_ = 0;
}

Batch BatchSampler::next() {
  const std::size_t P = spec_.num_places, K = spec_.images_per_place;
  std::vector<std::size_t> chosen(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                  order_.begin() + static_cast<std::ptrdiff_t>(std::min(cursor_ + P, order_.size())));
  if (chosen.size() < P) {
    // Top up from the earlier part of this epoch's order.
    std::vector<std::size_t> pool(order_.begin(), order_.begin() + static_cast<std::ptrdiff_t>(cursor_));
    rng_.shuffle(std::span<std::size_t>(pool));
    chosen.insert(chosen.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(P - chosen.size()));
  }
  cursor_ += P;

  Batch batch;
  batch.items.reserve(P * K);
  batch.labels.reserve(P * K);
  for (std::size_t place_index : chosen) {
    const auto& place = db_->places()[place_index];
    std::vector<std::size_t> idx(place.images.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    // Partial Fisher-Yates: first K entries are a uniform draw without replacement.
    for (std::size_t i = 0; i < K; ++i) {
      const auto j = i + static_cast<std::size_t>(rng_.below(idx.size() - i));
      std::swap(idx[i], idx[j]);
    }
    for (std::size_t i = 0; i < K; ++i) {
      batch.items.push_back({place.place_id, place_index, idx[i]});
      batch.labels.push_back(place.place_id);
    }
  }
  if (cursor_ >= order_.size()) {
    ++epoch_;
    reshuffle();
  }
  return batch;
}

HoldoutSplit split_holdout(const PlacesDB& db, std::size_t train_per_place) {
  HoldoutSplit split;
  std::vector<Place> train;
  for (std::size_t p = 0; p < db.places().size(); ++p) {
    const auto& place = db.places()[p];
    const std::size_t n = place.images.size();
    const std::size_t t = std::min(train_per_place, n);
    if (t > 0) {
      Place tp{place.place_id, {place.images.begin(), place.images.begin() + static_cast<std::ptrdiff_t>(t)}};
      train.push_back(std::move(tp));
    }
    const std::size_t held = n - t;
    if (held < 2) continue;
    const std::size_t nq = (held + 1) / 2;
    for (std::size_t i = t; i < t + nq; ++i) split.queries.emplace_back(p, i);
    for (std::size_t i = t + nq; i < n; ++i) split.references.emplace_back(p, i);
  }
  split.train = PlacesDB(std::move(train), db.payloads(), db.cell_size_deg());
  return split;
}

void save_db(const PlacesDB& db, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(Errc::kIo, "cannot create " + dir.string() + ": " + ec.message());
  std::ostringstream csv;
  csv << kManifestHeader << '\n';
  csv.precision(17);
  std::vector<const FeatureMap*> maps;
  bool all_payloads = db.has_payloads();
  for (const auto& p : db.places()) {
    for (const auto& r : p.images) {
      if (!r.payload) all_payloads = false;
    }
  }
  for (const auto& p : db.places()) {
    for (const auto& r : p.images) {
      csv << p.place_id << ',' << csv::quote(r.image_ref) << ',' << r.lat << ',' << r.lon << ',';
      if (r.bearing) csv << *r.bearing;
      csv << ',' << r.year << ',' << r.month << '\n';
      if (all_payloads) maps.push_back(&db.payload(r));
    }
  }
  {
    std::ofstream out(dir / "manifest.csv", std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::kIo, "cannot write " + (dir / "manifest.csv").string());
    out << csv.str();
  }
  const auto payload_path = dir / "payloads.vprk";
  if (all_payloads && !maps.empty()) {
    const auto& first = *maps.front();
    Tensor t;
    t.dims = {static_cast<std::uint32_t>(maps.size()), static_cast<std::uint32_t>(first.height),
              static_cast<std::uint32_t>(first.width), static_cast<std::uint32_t>(first.channels)};
    t.values.reserve(maps.size() * first.size());
    for (const auto* m : maps) {
      require(m->same_shape(first), Errc::kShapeMismatch, "payload shapes differ; cannot pack");
      t.values.insert(t.values.end(), m->values.begin(), m->values.end());
    }
    write_tensor_file(payload_path, t);
  } else {
    std::filesystem::remove(payload_path, ec);
  }
}

PlacesDB load_db(const std::filesystem::path& dir, const IngestOptions& options) {
  const auto manifest_path = dir / "manifest.csv";
  const std::string text = read_text(manifest_path);
  std::vector<Place> places;
  try {
    places = parse_manifest_rows(text, options);
  } catch (const Error& e) {
    throw Error(e.code(), manifest_path.string() + ": " + e.what());
  }
  const auto payload_path = dir / "payloads.vprk";
  if (!std::filesystem::exists(payload_path)) {
    for (auto& p : places) {
      for (auto& r : p.images) r.payload.reset();
    }
    return PlacesDB(std::move(places));
  }
  std::size_t rows = 0;
  for (const auto& p : places) rows += p.images.size();
  const Tensor t = read_tensor_file(payload_path);
  require(t.dims.size() == 4, Errc::kParse, payload_path.string() + ": expected a rank-4 tensor");
  const std::size_t n = t.dims[0], h = t.dims[1], w = t.dims[2], c = t.dims[3];
  require(n == rows, Errc::kValidation, payload_path.string() + ": payload count does not match manifest rows");
  std::vector<FeatureMap> maps;
  maps.reserve(n);
  const std::size_t per = h * w * c;
  for (std::size_t i = 0; i < n; ++i) {
    FeatureMap m(h, w, c);
    std::copy_n(t.values.begin() + static_cast<std::ptrdiff_t>(i * per), per, m.values.begin());
    maps.push_back(std::move(m));
  }
  return PlacesDB(std::move(places), std::move(maps));
}

}  // namespace vpr
