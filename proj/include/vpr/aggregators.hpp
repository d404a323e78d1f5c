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
#include <string>
#include <utility>
#include <vector>

#include "vpr/tensor.hpp"

namespace vpr {

// 1x1 convolution kernel plus adaptive pooling grid of the Conv-AP head.
// `weight` is out_dim x in_dim, row-major.
struct ConvAPParams {
  std::size_t out_dim = 0;  // d
  std::size_t in_dim = 0;   // c
  std::vector<double> weight;
  std::vector<double> bias;  // out_dim entries; ignored when !use_bias
  bool use_bias = true;
  std::size_t s1 = 2;
  std::size_t s2 = 2;

  double w(std::size_t r, std::size_t k) const { return weight[r * in_dim + k]; }
  std::size_t descriptor_dim() const { return s1 * s2 * out_dim; }
};

// Identity kernel (d = c), zero bias.
ConvAPParams identity_conv_ap(std::size_t channels, std::size_t s1, std::size_t s2);

// Weights uniform in [-1/sqrt(c), 1/sqrt(c)], zero bias.
ConvAPParams init_conv_ap(std::size_t in_dim, std::size_t out_dim, std::size_t s1, std::size_t s2,
                          bool use_bias, std::uint64_t seed);

struct GemParams {
  double p = 3.0;
  double p_min = 1e-3;
};

// Half-open [begin, end) of bin `i` when splitting `n` cells into `s` bins.
// Bins partition the range without overlap and are nonempty for s <= n.
std::pair<std::size_t, std::size_t> pool_bin(std::size_t i, std::size_t n, std::size_t s);

// Output cell (i,j) = W f_ij + bias.
FeatureMap conv1x1_forward(const FeatureMap& f, const ConvAPParams& params);

FeatureMap adaptive_avg_pool(const FeatureMap& f, std::size_t s1, std::size_t s2);

// flatten(AAP(Conv1x1(F))) before normalization; spatial row-major, channel
// fastest. Pools first and projects after, which is the same map by linearity.
std::vector<double> conv_ap_raw(const FeatureMap& f, const ConvAPParams& params);

// l2_normalize(conv_ap_raw(f)).
Descriptor conv_ap_forward(const FeatureMap& f, const ConvAPParams& params);

struct ConvAPGrads {
  std::vector<double> weight;
  std::vector<double> bias;
  FeatureMap input;
};

// Gradients given dL/d(descriptor), i.e. w.r.t. the normalized output.
ConvAPGrads conv_ap_backward(const FeatureMap& f, const ConvAPParams& params, std::span<const double> upstream);

// Same, given dL/d(raw output). Accumulates into `grads` (sized on first use).
// Skips the input gradient when `with_input` is false.
void conv_ap_backward_raw(const FeatureMap& f, const ConvAPParams& params, std::span<const double> upstream_raw,
                          ConvAPGrads& grads, bool with_input = true);

// Per-channel spatial mean, normalized.
Descriptor avg_pool(const FeatureMap& f);

// Per-channel (mean x^p)^(1/p) over inputs clamped at zero.
std::vector<double> gem_raw(const FeatureMap& f, const GemParams& params);
Descriptor gem_pool(const FeatureMap& f, const GemParams& params);

struct GemGrads {
  double p = 0.0;
  FeatureMap input;
};

GemGrads gem_backward(const FeatureMap& f, const GemParams& params, std::span<const double> upstream);
void gem_backward_raw(const FeatureMap& f, const GemParams& params, std::span<const double> upstream_raw,
                      GemGrads& grads, bool with_input = true);

// Normalization Jacobian: maps dL/dz to dL/dv for z = v / ||v||.
std::vector<double> normalize_backward(std::span<const double> raw, std::span<const double> upstream);

enum class AggregatorKind { kConvAP, kGeM, kAvg };

std::string to_string(AggregatorKind kind);
AggregatorKind parse_aggregator(const std::string& name);

// Trainable aggregation head applied on top of frozen feature maps.
struct Head {
  AggregatorKind kind = AggregatorKind::kConvAP;
  ConvAPParams conv_ap;
  GemParams gem;

  std::vector<double> forward_raw(const FeatureMap& f) const;
  Descriptor forward(const FeatureMap& f) const;
};

}  // namespace vpr
