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
#include <span>
#include <vector>

#include "vpr/error.hpp"

namespace vpr {

// Dense h x w x c tensor, row-major spatial order with channels fastest.
// This is the backbone output consumed by the aggregation heads.
struct FeatureMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<double> values;

  FeatureMap() = default;
  FeatureMap(std::size_t h, std::size_t w, std::size_t c, double fill = 0.0)
      : height(h), width(w), channels(c), values(h * w * c, fill) {}

  std::size_t size() const { return values.size(); }
  std::size_t cells() const { return height * width; }

  double& at(std::size_t i, std::size_t j, std::size_t k) {
    return values[(i * width + j) * channels + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return values[(i * width + j) * channels + k];
  }

  std::span<double> cell(std::size_t i, std::size_t j) {
    return {values.data() + (i * width + j) * channels, channels};
  }
  std::span<const double> cell(std::size_t i, std::size_t j) const {
    return {values.data() + (i * width + j) * channels, channels};
  }

  bool same_shape(const FeatureMap& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

// Row-major real matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }

  std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
};

using Descriptor = std::vector<double>;

}  // namespace vpr
