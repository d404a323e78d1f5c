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

#include "vpr/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "vpr/error.hpp"

namespace vpr {

namespace {

using Type = Config::Type;
using json = nlohmann::json;

const Config::Key* find_key(const std::string& name) {
  const auto& s = Config::schema();
  auto it = std::find_if(s.begin(), s.end(), [&](const Config::Key& k) { return k.name == name; });
  return it == s.end() ? nullptr : &*it;
}

bool is_uint(const json& v) {
  if (v.is_number_unsigned()) return true;
  if (v.is_number_integer()) return v.get<std::int64_t>() >= 0;
  if (v.is_number_float()) {
    const double d = v.get<double>();
    return d >= 0.0 && std::floor(d) == d && d < 1.8e19;
  }
  return false;
}

std::uint64_t to_uint(const json& v) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  return static_cast<std::uint64_t>(v.get<double>());
}

json coerce(const Config::Key& key, const json& v) {
  auto bad = [&]() -> json {
    fail(Errc::kValidation, "config key '" + key.name + "' has the wrong type (got " + v.dump() + ")");
  };
  switch (key.type) {
    case Type::kBool: return v.is_boolean() ? v : bad();
    case Type::kUInt: return is_uint(v) ? json(to_uint(v)) : bad();
    case Type::kNumber: return v.is_number() ? json(v.get<double>()) : bad();
    case Type::kString: return v.is_string() ? v : bad();
    case Type::kUIntList: {
      if (!v.is_array()) return bad();
      json out = json::array();
      for (const auto& e : v) {
        if (!is_uint(e)) return bad();
        out.push_back(to_uint(e));
      }
      return out;
    }
    case Type::kStringList: {
      if (!v.is_array()) return bad();
      for (const auto& e : v) {
        if (!e.is_string()) return bad();
      }
      return v;
    }
  }
  return bad();
}

void flatten(const json& doc, const std::string& prefix, json& out) {
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) {
      flatten(*it, key, out);
    } else {
      out[key] = *it;
    }
  }
}

}  // namespace

const std::vector<Config::Key>& Config::schema() {
  static const std::vector<Key> keys = {
      {"seed", Type::kUInt, 7, "seed for synthesis, initialization and sampling"},
      {"synth.num_places", Type::kUInt, 64, "synthetic places"},
      {"synth.images_per_place", Type::kUInt, 8, "synthetic images per place"},
      {"synth.height", Type::kUInt, 7, "feature map height"},
      {"synth.width", Type::kUInt, 7, "feature map width"},
      {"synth.channels", Type::kUInt, 32, "feature map channels"},
      {"synth.max_shift", Type::kUInt, 2, "largest circular shift in cells"},
      {"synth.gain", Type::kNumber, 0.3, "gain drawn from [1-g, 1+g]"},
      {"synth.noise_sigma", Type::kNumber, 0.1, "additive noise std"},
      {"synth.code_scale", Type::kNumber, 1.0, "std of the place code coefficients"},
      {"synth.code_rank", Type::kUInt, 8, "channel directions spanned by place codes"},
      {"synth.layout_scale", Type::kNumber, 3.0, "amplitude of the shared layout"},
      {"synth.layout_rank", Type::kUInt, 4, "channel directions of the shared layout"},
      {"synth.texture_scale", Type::kNumber, 1.0, "std of the per-cell texture"},
      {"db.path", Type::kString, "", "database directory"},
      {"build.manifest", Type::kString, "", "manifest CSV for build-db"},
      {"build.permissive", Type::kBool, false, "keep places with too few images"},
      {"build.min_images", Type::kUInt, 4, "minimum images per place"},
      {"build.regroup_grid", Type::kBool, false, "ignore place_id and group by grid cell"},
      {"build.cell_size_deg", Type::kNumber, 0.001, "grid cell size in degrees"},
      {"build.min_dates", Type::kUInt, 4, "distinct (year, month) stamps per grid place"},
      {"split.train_images_per_place", Type::kUInt, 4, "leading images per place used for training"},
      {"model.aggregator", Type::kString, "convap", "convap, gem or avg"},
      {"model.dim", Type::kUInt, 64, "Conv-AP channel dimension d"},
      {"model.s1", Type::kUInt, 2, "Conv-AP pooling rows"},
      {"model.s2", Type::kUInt, 2, "Conv-AP pooling columns"},
      {"model.bias", Type::kBool, true, "Conv-AP 1x1 convolution bias"},
      {"model.gem_p", Type::kNumber, 3.0, "initial GeM exponent"},
      {"train.loss", Type::kString, "ms", "contrastive, triplet, ms or weak_triplet"},
      {"train.miner", Type::kString, "ms", "none, ohm or ms"},
      {"train.miner_epsilon", Type::kNumber, 0.1, "MS miner epsilon"},
      {"train.contrastive_margin", Type::kNumber, 0.5, "contrastive margin"},
      {"train.triplet_margin", Type::kNumber, 0.1, "triplet and weak-triplet margin"},
      {"train.ms_margin", Type::kNumber, 0.5, "multi-similarity margin"},
      {"train.ms_alpha", Type::kNumber, 2.0, "multi-similarity alpha"},
      {"train.ms_beta", Type::kNumber, 50.0, "multi-similarity beta"},
      {"train.places_per_batch", Type::kUInt, 16, "P"},
      {"train.images_per_place", Type::kUInt, 4, "K"},
      {"train.lr", Type::kNumber, 0.03, "initial learning rate"},
      {"train.lr_decay_factor", Type::kNumber, 0.3, "learning-rate decay factor"},
      {"train.lr_decay_every", Type::kUInt, 5, "epochs between decays"},
      {"train.epochs", Type::kUInt, 30, "training epochs"},
      {"train.momentum", Type::kNumber, 0.9, "SGD momentum"},
      {"train.weight_decay", Type::kNumber, 0.001, "SGD weight decay"},
      {"train.decay_bias", Type::kBool, true, "apply weight decay to the bias"},
      {"eval.model", Type::kString, "", "checkpoint; empty evaluates the untrained head"},
      {"eval.queries", Type::kString, "", "query descriptor file"},
      {"eval.references", Type::kString, "", "reference descriptor file"},
      {"eval.ground_truth", Type::kString, "geo", "geo or label"},
      {"eval.radius_m", Type::kNumber, 25.0, "geo ground-truth radius in meters"},
      {"eval.ks", Type::kUIntList, json::array({1, 5, 10}), "recall cutoffs"},
      {"eval.label", Type::kString, "", "run label in reports"},
      {"eval.set", Type::kString, "synthetic", "evaluation set name in reports"},
      {"reduce.fit", Type::kString, "", "descriptor file to fit PCA on"},
      {"reduce.apply", Type::kStringList, json::array(), "descriptor files to transform"},
      {"reduce.out_dim", Type::kUInt, 64, "PCA output dimension"},
      {"reduce.epsilon", Type::kNumber, 1e-9, "whitening regularizer"},
      {"report.inputs", Type::kStringList, json::array(), "report key-value files"},
      {"report.labels", Type::kStringList, json::array(), "optional label overrides, aligned with inputs"},
  };
  return keys;
}

Config::Config() : values_(json::object()) {
  for (const auto& k : schema()) values_[k.name] = k.default_value;
}

void Config::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::kIo, "cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    fail(Errc::kParse, path.string() + ": " + e.what());
  }
  try {
    merge_json(doc);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void Config::merge_json(const json& doc) {
  require(doc.is_object(), Errc::kValidation, "config document must be an object");
  json flat = json::object();
  flatten(doc, "", flat);
  // Validate everything before applying anything.
  json staged = values_;
  for (auto it = flat.begin(); it != flat.end(); ++it) {
    const Key* key = find_key(it.key());
    if (!key) fail(Errc::kValidation, "unknown config key '" + it.key() + "'");
    staged[it.key()] = coerce(*key, *it);
  }
  values_ = std::move(staged);
}

void Config::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  require(eq != std::string::npos && eq > 0, Errc::kValidation, "expected key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  const Key* k = find_key(key);
  if (!k) fail(Errc::kValidation, "unknown config key '" + key + "'");
  json value;
  if (k->type == Type::kString) {
    value = text;
  } else {
    try {
      value = json::parse(text);
    } catch (const json::parse_error&) {
      value = text;
    }
  }
  set_value(key, value);
}

void Config::set_value(const std::string& key, const json& value) {
  const Key* k = find_key(key);
  if (!k) fail(Errc::kValidation, "unknown config key '" + key + "'");
  values_[key] = coerce(*k, value);
}

const json& Config::raw(const std::string& key, std::initializer_list<Type> types) const {
  const Key* k = find_key(key);
  if (!k) fail(Errc::kInvalidArgument, "unknown config key '" + key + "'");
  if (std::find(types.begin(), types.end(), k->type) == types.end()) {
    fail(Errc::kInvalidArgument, "config key '" + key + "' is not of the requested type");
  }
  return values_.at(key);
}

bool Config::get_bool(const std::string& key) const { return raw(key, {Type::kBool}).get<bool>(); }
std::uint64_t Config::get_uint(const std::string& key) const {
  return raw(key, {Type::kUInt}).get<std::uint64_t>();
}
double Config::get_number(const std::string& key) const {
  return raw(key, {Type::kNumber, Type::kUInt}).get<double>();
}
std::string Config::get_string(const std::string& key) const {
  return raw(key, {Type::kString}).get<std::string>();
}
std::vector<std::uint64_t> Config::get_uint_list(const std::string& key) const {
  return raw(key, {Type::kUIntList}).get<std::vector<std::uint64_t>>();
}
std::vector<std::string> Config::get_string_list(const std::string& key) const {
  return raw(key, {Type::kStringList}).get<std::vector<std::string>>();
}

json Config::resolved() const {
  json out = json::object();
  for (const auto& k : schema()) {
    json* node = &out;
    std::string rest = k.name;
    for (auto dot = rest.find('.'); dot != std::string::npos; dot = rest.find('.')) {
      node = &(*node)[rest.substr(0, dot)];
      rest = rest.substr(dot + 1);
    }
    (*node)[rest] = values_.at(k.name);
  }
  return out;
}

}  // namespace vpr
