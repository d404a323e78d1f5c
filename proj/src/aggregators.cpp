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

#include "vpr/aggregators.hpp"

#include <algorithm>
#include <cmath>

#include "vpr/embedding.hpp"
#include "vpr/error.hpp"
#include "vpr/rng.hpp"

namespace vpr {

namespace {

void check_grid(const FeatureMap& f, std::size_t s1, std::size_t s2) {
  require(s1 >= 1 && s2 >= 1 && s1 <= f.height && s2 <= f.width, Errc::kInvalidArgument,
          "pooling grid " + std::to_string(s1) + "x" + std::to_string(s2) + " does not fit a " +
              std::to_string(f.height) + "x" + std::to_string(f.width) + " map");
}

void check_params(const FeatureMap& f, const ConvAPParams& params) {
  require(f.height >= 1 && f.width >= 1 && f.channels >= 1, Errc::kInvalidArgument, "empty feature map");
  require(params.out_dim >= 1, Errc::kInvalidArgument, "Conv-AP needs d >= 1");
  require(f.channels == params.in_dim, Errc::kShapeMismatch,
          "feature depth " + std::to_string(f.channels) + " != kernel depth " + std::to_string(params.in_dim));
  require(params.weight.size() == params.out_dim * params.in_dim, Errc::kShapeMismatch, "weight size mismatch");
  require(!params.use_bias || params.bias.size() == params.out_dim, Errc::kShapeMismatch, "bias size mismatch");
}

void project(std::span<const double> in, const ConvAPParams& params, std::span<double> out) {
  for (std::size_t r = 0; r < params.out_dim; ++r) {
    double acc = 0.0;
    for (std::size_t k = 0; k < params.in_dim; ++k) acc += params.w(r, k) * in[k];
    if (params.use_bias) acc += params.bias[r];
    out[r] = acc;
  }
}

void check_gem(const GemParams& params) {
  require(std::isfinite(params.p) && params.p >= params.p_min, Errc::kInvalidArgument,
          "GeM exponent must be finite and >= p_min");
}

}  // namespace

ConvAPParams identity_conv_ap(std::size_t channels, std::size_t s1, std::size_t s2) {
  ConvAPParams p;
  p.out_dim = p.in_dim = channels;
  p.weight.assign(channels * channels, 0.0);
  for (std::size_t i = 0; i < channels; ++i) p.weight[i * channels + i] = 1.0;
  p.bias.assign(channels, 0.0);
  p.s1 = s1;
  p.s2 = s2;
  return p;
}

ConvAPParams init_conv_ap(std::size_t in_dim, std::size_t out_dim, std::size_t s1, std::size_t s2,
                          bool use_bias, std::uint64_t seed) {
  require(in_dim >= 1 && out_dim >= 1, Errc::kInvalidArgument, "Conv-AP dims must be >= 1");
  ConvAPParams p;
  p.in_dim = in_dim;
  p.out_dim = out_dim;
  p.s1 = s1;
  p.s2 = s2;
  p.use_bias = use_bias;
  p.weight.resize(in_dim * out_dim);
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (auto& v : p.weight) v = rng.uniform(-bound, bound);
  p.bias.assign(out_dim, 0.0);
  return p;
}

std::pair<std::size_t, std::size_t> pool_bin(std::size_t i, std::size_t n, std::size_t s) {
  return {i * n / s, (i + 1) * n / s};
}

FeatureMap conv1x1_forward(const FeatureMap& f, const ConvAPParams& params) {
  check_params(f, params);
  FeatureMap out(f.height, f.width, params.out_dim);
  for (std::size_t i = 0; i < f.height; ++i) {
    for (std::size_t j = 0; j < f.width; ++j) project(f.cell(i, j), params, out.cell(i, j));
  }
  return out;
}

FeatureMap adaptive_avg_pool(const FeatureMap& f, std::size_t s1, std::size_t s2) {
  check_grid(f, s1, s2);
  FeatureMap out(s1, s2, f.channels);
  for (std::size_t a = 0; a < s1; ++a) {
    const auto [r0, r1] = pool_bin(a, f.height, s1);
    for (std::size_t b = 0; b < s2; ++b) {
      const auto [c0, c1] = pool_bin(b, f.width, s2);
      auto dst = out.cell(a, b);
      for (std::size_t i = r0; i < r1; ++i) {
        for (std::size_t j = c0; j < c1; ++j) {
          const auto src = f.cell(i, j);
          for (std::size_t k = 0; k < f.channels; ++k) dst[k] += src[k];
        }
      }
      const auto count = static_cast<double>((r1 - r0) * (c1 - c0));
      for (auto& v : dst) v /= count;
    }
  }
  return out;
}

std::vector<double> conv_ap_raw(const FeatureMap& f, const ConvAPParams& params) {
  check_params(f, params);
  const FeatureMap pooled = adaptive_avg_pool(f, params.s1, params.s2);
  std::vector<double> out(params.descriptor_dim());
  for (std::size_t a = 0; a < params.s1; ++a) {
    for (std::size_t b = 0; b < params.s2; ++b) {
      project(pooled.cell(a, b), params,
              std::span<double>(out).subspan((a * params.s2 + b) * params.out_dim, params.out_dim));
    }
  }
  return out;
}

Descriptor conv_ap_forward(const FeatureMap& f, const ConvAPParams& params) {
  return l2_normalize(conv_ap_raw(f, params));
}

std::vector<double> normalize_backward(std::span<const double> raw, std::span<const double> upstream) {
  require(raw.size() == upstream.size(), Errc::kShapeMismatch, "upstream gradient size mismatch");
  const double n = l2_norm(raw);
  if (!(n > kNormEpsilon)) fail(Errc::kNumeric, "normalization of a zero vector");
  double zu = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) zu += raw[i] / n * upstream[i];
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (upstream[i] - raw[i] / n * zu) / n;
  return out;
}

void conv_ap_backward_raw(const FeatureMap& f, const ConvAPParams& params, std::span<const double> upstream_raw,
                          ConvAPGrads& grads, bool with_input) {
  check_params(f, params);
  require(upstream_raw.size() == params.descriptor_dim(), Errc::kShapeMismatch, "upstream gradient size mismatch");
  if (grads.weight.size() != params.weight.size()) grads.weight.assign(params.weight.size(), 0.0);
  if (grads.bias.size() != params.out_dim) grads.bias.assign(params.out_dim, 0.0);
  if (with_input && !grads.input.same_shape(f)) grads.input = FeatureMap(f.height, f.width, f.channels);

  const FeatureMap pooled = adaptive_avg_pool(f, params.s1, params.s2);
  std::vector<double> dpooled(f.channels);
  for (std::size_t a = 0; a < params.s1; ++a) {
    for (std::size_t b = 0; b < params.s2; ++b) {
      const auto up = upstream_raw.subspan((a * params.s2 + b) * params.out_dim, params.out_dim);
      const auto g = pooled.cell(a, b);
      std::fill(dpooled.begin(), dpooled.end(), 0.0);
      for (std::size_t r = 0; r < params.out_dim; ++r) {
        const double u = up[r];
        if (u == 0.0) continue;
        double* wrow = grads.weight.data() + r * params.in_dim;
        for (std::size_t k = 0; k < params.in_dim; ++k) {
          wrow[k] += u * g[k];
          dpooled[k] += params.w(r, k) * u;
        }
        if (params.use_bias) grads.bias[r] += u;
      }
      if (!with_input) continue;
      const auto [r0, r1] = pool_bin(a, f.height, params.s1);
      const auto [c0, c1] = pool_bin(b, f.width, params.s2);
      const auto count = static_cast<double>((r1 - r0) * (c1 - c0));
      for (std::size_t i = r0; i < r1; ++i) {
        for (std::size_t j = c0; j < c1; ++j) {
          auto dst = grads.input.cell(i, j);
          for (std::size_t k = 0; k < f.channels; ++k) dst[k] += dpooled[k] / count;
        }
      }
    }
  }
}

ConvAPGrads conv_ap_backward(const FeatureMap& f, const ConvAPParams& params, std::span<const double> upstream) {
  const auto raw = conv_ap_raw(f, params);
  const auto draw = normalize_backward(raw, upstream);
  ConvAPGrads grads;
  conv_ap_backward_raw(f, params, draw, grads, true);
  return grads;
}

Descriptor avg_pool(const FeatureMap& f) {
  require(f.height >= 1 && f.width >= 1 && f.channels >= 1, Errc::kInvalidArgument, "empty feature map");
  return l2_normalize(adaptive_avg_pool(f, 1, 1).values);
}

std::vector<double> gem_raw(const FeatureMap& f, const GemParams& params) {
  check_gem(params);
  require(f.size() > 0, Errc::kInvalidArgument, "empty feature map");
  std::vector<double> sums(f.channels, 0.0);
  for (std::size_t cell = 0; cell < f.cells(); ++cell) {
    for (std::size_t k = 0; k < f.channels; ++k) {
      const double x = std::max(f.values[cell * f.channels + k], 0.0);
      sums[k] += std::pow(x, params.p);
    }
  }
  const auto n = static_cast<double>(f.cells());
  for (auto& s : sums) s = std::pow(s / n, 1.0 / params.p);
  return sums;
}

Descriptor gem_pool(const FeatureMap& f, const GemParams& params) { return l2_normalize(gem_raw(f, params)); }

void gem_backward_raw(const FeatureMap& f, const GemParams& params, std::span<const double> upstream_raw,
                      GemGrads& grads, bool with_input) {
  check_gem(params);
  require(upstream_raw.size() == f.channels, Errc::kShapeMismatch, "upstream gradient size mismatch");
  if (with_input && !grads.input.same_shape(f)) grads.input = FeatureMap(f.height, f.width, f.channels);
  const double p = params.p;
  const auto n = static_cast<double>(f.cells());
  std::vector<double> mean_pow(f.channels, 0.0), mean_pow_log(f.channels, 0.0);
  for (std::size_t cell = 0; cell < f.cells(); ++cell) {
    for (std::size_t k = 0; k < f.channels; ++k) {
      const double x = std::max(f.values[cell * f.channels + k], 0.0);
      if (x > 0.0) {
        const double xp = std::pow(x, p);
        mean_pow[k] += xp / n;
        mean_pow_log[k] += xp * std::log(x) / n;
      }
    }
  }
  for (std::size_t k = 0; k < f.channels; ++k) {
    const double m = mean_pow[k];
    if (!(m > 0.0)) continue;  // all-zero channel: output pinned at 0
    const double y = std::pow(m, 1.0 / p);
    grads.p += upstream_raw[k] * y * (-std::log(m) / (p * p) + mean_pow_log[k] / (p * m));
    if (!with_input) continue;
    const double scale = upstream_raw[k] * std::pow(m, 1.0 / p - 1.0) / n;
    for (std::size_t cell = 0; cell < f.cells(); ++cell) {
      const double x = f.values[cell * f.channels + k];
      if (x > 0.0) grads.input.values[cell * f.channels + k] += scale * std::pow(x, p - 1.0);
    }
  }
}

GemGrads gem_backward(const FeatureMap& f, const GemParams& params, std::span<const double> upstream) {
  const auto raw = gem_raw(f, params);
  const auto draw = normalize_backward(raw, upstream);
  GemGrads grads;
  gem_backward_raw(f, params, draw, grads, true);
  return grads;
}

std::string to_string(AggregatorKind kind) {
  switch (kind) {
    case AggregatorKind::kConvAP: return "convap";
    case AggregatorKind::kGeM: return "gem";
    case AggregatorKind::kAvg: return "avg";
  }
  return "?";
}

AggregatorKind parse_aggregator(const std::string& name) {
  if (name == "convap") return AggregatorKind::kConvAP;
  if (name == "gem") return AggregatorKind::kGeM;
  if (name == "avg") return AggregatorKind::kAvg;
  fail(Errc::kInvalidArgument, "unknown aggregator '" + name + "' (expected convap, gem or avg)");
}

std::vector<double> Head::forward_raw(const FeatureMap& f) const {
  switch (kind) {
    case AggregatorKind::kConvAP: return conv_ap_raw(f, conv_ap);
    case AggregatorKind::kGeM: return gem_raw(f, gem);
    case AggregatorKind::kAvg: return adaptive_avg_pool(f, 1, 1).values;
  }
  return {};
}

Descriptor Head::forward(const FeatureMap& f) const { return l2_normalize(forward_raw(f)); }

}  // namespace vpr
