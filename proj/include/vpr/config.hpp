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

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

namespace vpr {

// Declarative experiment configuration. Keys are dotted paths
// ("train.epochs"); every key has a schema entry with a type and a default,
// and unknown keys are rejected. Files are JSON, either nested objects or
// flat dotted keys.
class Config {
 public:
  enum class Type { kBool, kUInt, kNumber, kString, kUIntList, kStringList };

  struct Key {
    std::string name;
    Type type;
    nlohmann::json default_value;
    std::string help;
  };

  static const std::vector<Key>& schema();

  Config();

  // Merges a JSON file. Throws kIo, kParse or kValidation.
  void merge_file(const std::filesystem::path& path);
  void merge_json(const nlohmann::json& doc);
  // "key=value"; the value is read as JSON when it parses, else as a string.
  void set(const std::string& assignment);
  void set_value(const std::string& key, const nlohmann::json& value);

  bool get_bool(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  double get_number(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::vector<std::uint64_t> get_uint_list(const std::string& key) const;
  std::vector<std::string> get_string_list(const std::string& key) const;

  // Every key with its resolved value, as a nested document.
  nlohmann::json resolved() const;

 private:
  // Throws kInvalidArgument for unknown keys or a type outside `types`.
  const nlohmann::json& raw(const std::string& key, std::initializer_list<Type> types) const;

  nlohmann::json values_;  // flat: dotted key -> value
};

}  // namespace vpr
