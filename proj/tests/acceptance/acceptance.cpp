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

// One PASS/FAIL line per acceptance criterion. Exits nonzero when any
// criterion fails, unless the failing set equals the --expect-fail list
// exactly. A listed criterion that passes is also an error.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "properties.hpp"
#include "vpr/aggregators.hpp"
#include "vpr/config.hpp"
#include "vpr/evaluator.hpp"
#include "vpr/experiment.hpp"
#include "vpr/mining.hpp"
#include "vpr/places_db.hpp"
#include "vpr/trainer.hpp"

namespace {

using namespace vpr;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------- criterion 1

Verdict gradients() {
  const auto t0 = Clock::now();
  Rng rng(101);
  constexpr int kInstances = 120;
  double conv_w = 0, conv_b = 0, conv_f = 0, gem_p = 0;
  for (int i = 0; i < kInstances; ++i) {
    const auto e = gradcheck::conv_ap(rng);
    conv_w = std::max(conv_w, e.weight);
    conv_b = std::max(conv_b, e.bias);
    conv_f = std::max(conv_f, e.input);
    gem_p = std::max(gem_p, gradcheck::gem(rng).p);
  }
  std::vector<std::pair<std::string, double>> worst = {
      {"conv_ap.W", conv_w}, {"conv_ap.bias", conv_b}, {"conv_ap.F", conv_f}, {"gem.p", gem_p}};
  for (LossKind kind : {LossKind::kContrastive, LossKind::kTriplet, LossKind::kMultiSimilarity,
                        LossKind::kWeakTriplet}) {
    double w = 0.0;
    for (int i = 0; i < kInstances; ++i) {
      w = std::max(w, gradcheck::loss(rng, kind, static_cast<MinerKind>(i % 3)));
    }
    worst.emplace_back(to_string(kind), w);
  }
  Verdict v;
  std::string parts;
  for (const auto& [name, err] : worst) {
    v.pass = v.pass && err < gradcheck::kTolerance;
    parts += fmt(" %s=%.1e", name.c_str(), err);
  }
  const double secs = seconds_since(t0);
  v.pass = v.pass && secs < 60.0;
  v.detail = fmt("%d instances each, max rel err:", kInstances) + parts + fmt(", %.2fs", secs);
  return v;
}

// ---------------------------------------------------------------- criterion 2

Verdict identity_special_case() {
  Rng rng(202);
  int equal = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto f = oracle::random_map(rng, 1 + rng.below(10), 1 + rng.below(10), 1 + rng.below(40));
    if (conv_ap_forward(f, vpr::identity_conv_ap(f.channels, 1, 1)) == avg_pool(f)) ++equal;
  }
  return {equal == 1000, fmt("%d/1000 maps bit-identical", equal)};
}

// ---------------------------------------------------------------- criterion 3

bool same(const MinedSet& a, const MinedSet& b) {
  return a.positive_pairs == b.positive_pairs && a.negative_pairs == b.negative_pairs && a.triplets == b.triplets;
}

Verdict mining_oracles() {
  Rng rng(303);
  int ohm = 0, ms = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto labels = oracle::pk_labels(rng, 1 + rng.below(8), 1 + rng.below(4));
    const auto s = oracle::tied_similarity(rng, labels.size(), 2 + static_cast<int>(rng.below(12)));
    const double eps = rng.below(4) == 0 ? 0.0 : rng.uniform(0.0, 0.5);
    ohm += same(hardest_mining(s, labels), oracle::hardest(s, labels));
    ms += same(ms_mining(s, labels, eps), oracle::multi_similarity(s, labels, eps));
  }
  return {ohm == 1000 && ms == 1000, fmt("hardest %d/1000, multi-similarity %d/1000 exact", ohm, ms)};
}

// ---------------------------------------------------------------- criterion 4

Verdict retrieval_oracle() {
  Rng rng(404);
  int topk = 0, recall = 0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t dim = 4 + rng.below(12), places = 20 + rng.below(60);
    DescriptorSet q, r;
    q.rows = oracle::random_unit_rows(rng, 50, dim);
    r.rows = oracle::random_unit_rows(rng, 200, dim);
    // Duplicated references force similarity ties.
    for (std::size_t j = 1; j < 200; j += 7) {
      std::copy(r.rows.row(j - 1).begin(), r.rows.row(j - 1).end(), r.rows.row(j).begin());
    }
    for (std::size_t j = 0; j < 50; ++j) q.meta.push_back({"q", 0, 0, static_cast<PlaceId>(rng.below(places))});
    for (std::size_t j = 0; j < 200; ++j) r.meta.push_back({"r", 0, 0, static_cast<PlaceId>(rng.below(places))});
    bool ok = true;
    for (std::size_t j = 0; j < 50; ++j) {
      const std::size_t k = 1 + rng.below(200);
      auto want = oracle::full_ranking(q.rows.row(j), r.rows);
      want.resize(k);
      ok = ok && retrieve_topk(q.rows.row(j), r.rows, k) == want;
    }
    topk += ok;
    const auto report = recall_at_k(q, r, {GroundTruthMode::kLabel, 25.0}, {1, 5, 10, 20});
    bool exact = true;
    for (std::size_t k : {1, 5, 10, 20}) exact = exact && report.recall_at.at(k) == oracle::label_recall(q, r, k);
    recall += exact;
  }
  return {topk == 100 && recall == 100, fmt("top-k %d/100, recall %d/100 exact", topk, recall)};
}

// ------------------------------------------------------------ criteria 5 to 7

Config base_config(std::uint64_t seed) {
  Config cfg;
  cfg.set("seed=" + std::to_string(seed));
  cfg.set("train.epochs=15");
  return cfg;
}

struct Run {
  Head head;
  double recall1 = 0.0;
  double seconds = 0.0;
};

double holdout_recall(const Head& head, const PlacesDB& db, const Config& cfg) {
  const auto sets = describe_holdout(head, db, cfg.get_uint("split.train_images_per_place"));
  return recall_at_k(sets.queries, sets.references, {GroundTruthMode::kLabel, 25.0}, {1}).recall_at.at(1);
}

Run train_and_eval(const Config& cfg, const PlacesDB& db) {
  const auto t0 = Clock::now();
  const auto result = train(db, train_config(cfg));
  Run run{result.head, holdout_recall(result.head, db, cfg), 0.0};
  run.seconds = seconds_since(t0);
  return run;
}

Verdict end_to_end(Run& trained, PlacesDB& db_out) {
  const Config cfg = base_config(7);
  db_out = synth_places(synth_config(cfg));
  trained = train_and_eval(cfg, db_out);
  const double untrained = holdout_recall(init_head(train_config(cfg), synth_config(cfg).channels), db_out, cfg);
  const Run again = train_and_eval(cfg, db_out);
  const bool deterministic = again.head.conv_ap.weight == trained.head.conv_ap.weight &&
                             again.head.conv_ap.bias == trained.head.conv_ap.bias && again.recall1 == trained.recall1;
  const bool pass = trained.recall1 >= 0.90 && trained.recall1 >= untrained + 0.15 && deterministic &&
                    trained.seconds < 300.0;
  return {pass, fmt("recall@1 trained %.4f, untrained %.4f, deterministic %s, %.2fs", trained.recall1, untrained,
                    deterministic ? "yes" : "no", trained.seconds)};
}

Verdict loss_ordering() {
  Verdict v;
  for (std::uint64_t seed : {1, 2, 3}) {
    Config ms = base_config(seed);
    Config tri = base_config(seed);
    tri.set("train.loss=triplet");
    tri.set("train.miner=ohm");
    const PlacesDB db = synth_places(synth_config(ms));
    const double a = train_and_eval(ms, db).recall1, b = train_and_eval(tri, db).recall1;
    v.pass = v.pass && a >= b - 0.02;
    v.detail += fmt("%sseed %llu: ms %.4f vs triplet+ohm %.4f", seed == 1 ? "" : "; ",
                    static_cast<unsigned long long>(seed), a, b);
  }
  return v;
}

Verdict whitening(const Run& trained, const PlacesDB& db) {
  const Config cfg = base_config(7);
  const std::size_t t = cfg.get_uint("split.train_images_per_place");
  // PCA is learned on training-split images only, never on evaluation images.
  const auto split = split_holdout(db, t);
  std::vector<std::pair<std::size_t, std::size_t>> items;
  for (std::size_t p = 0; p < split.train.num_places(); ++p) {
    for (std::size_t i = 0; i < split.train.places()[p].images.size(); ++i) items.emplace_back(p, i);
  }
  const DescriptorSet fit = describe(trained.head, split.train, items);
  const PCAModel model = pca_whiten_fit(fit.rows, 64);
  Matrix whitened(fit.size(), 64);
  for (std::size_t i = 0; i < fit.size(); ++i) {
    const auto y = pca_project(model, fit.rows.row(i));
    std::copy(y.begin(), y.end(), whitened.row(i).begin());
  }
  const double dev = oracle::identity_deviation(oracle::covariance(whitened));
  const auto sets = describe_holdout(trained.head, db, t);
  const GroundTruthMatcher gt{GroundTruthMode::kLabel, 25.0};
  const double full = recall_at_k(sets.queries, sets.references, gt, {1}).recall_at.at(1);
  const double reduced = recall_at_k(pca_transform(model, sets.queries), pca_transform(model, sets.references), gt, {1})
                             .recall_at.at(1);
  const bool pass = dev <= 1e-6 && std::abs(full - reduced) <= 0.05 && fit.dim() == 256;
  return {pass, fmt("fit on %zu train descriptors, cov deviation %.1e, recall@1 %zu-D %.4f vs 64-D %.4f", fit.size(),
                    dev, fit.dim(), full, reduced)};
}

// ---------------------------------------------------------------- criterion 8

Verdict schedule() {
  TrainConfig cfg;
  const double l0 = lr_at_epoch(cfg, 0), l5 = lr_at_epoch(cfg, 5), l10 = lr_at_epoch(cfg, 10);
  const bool lr_ok = std::abs(l0 - 0.03) < 1e-15 && std::abs(l5 - 0.009) < 1e-15 && std::abs(l10 - 0.0027) < 1e-15;
  // Hand trace: p=1, v=0, grads 1, -0.5, 2, lr 0.03, momentum 0.9, wd 0.001.
  const double expect_p[] = {0.96997, 0.9579139009, 0.887034674292973};
  const double expect_v[] = {1.001, 0.40186997, 2.3626408869009};
  const double grads[] = {1.0, -0.5, 2.0};
  double p = 1.0, vel = 0.0, err = 0.0;
  for (int i = 0; i < 3; ++i) {
    sgd_step({&p, 1}, {&grads[i], 1}, {&vel, 1}, 0.03, 0.9, 0.001);
    err = std::max({err, std::abs(p - expect_p[i]), std::abs(vel - expect_v[i])});
  }
  return {lr_ok && err < 1e-12, fmt("lr %.6g/%.6g/%.6g, hand-trace max err %.1e", l0, l5, l10, err)};
}

// ---------------------------------------------------------------- criterion 9

Verdict geodesics() {
  const double d = haversine_m({0.0, 0.0}, {0.001, 0.0});
  Rng rng(909);
  const GroundTruthMatcher gt{GroundTruthMode::kGeo, 25.0};
  int correct = 0, total = 0;
  constexpr double kMetersPerRad = kEarthRadiusM;
  for (int i = 0; i < 1000; ++i) {
    const DescriptorMeta q{"q", rng.uniform(-70.0, 70.0), rng.uniform(-179.0, 179.0), 0};
    // Offsets along the meridian are exact arcs: R * dlat.
    const double near_m = rng.uniform(0.0, 24.9), far_m = rng.uniform(25.1, 500.0);
    const double sign = rng.below(2) == 0 ? 1.0 : -1.0;
    DescriptorMeta near = q, far = q;
    near.lat += sign * near_m / kMetersPerRad * 180.0 / M_PI;
    far.lat += sign * far_m / kMetersPerRad * 180.0 / M_PI;
    // Mixed bearings with generous margins around the radius.
    DescriptorMeta diag_near = q, diag_far = q;
    const double cos_lat = std::cos(q.lat * M_PI / 180.0);
    diag_near.lat += 10.0 / kMetersPerRad * 180.0 / M_PI;
    diag_near.lon += 10.0 / (kMetersPerRad * cos_lat) * 180.0 / M_PI;
    diag_far.lat -= 30.0 / kMetersPerRad * 180.0 / M_PI;
    diag_far.lon -= 30.0 / (kMetersPerRad * cos_lat) * 180.0 / M_PI;
    correct += gt.matches(q, near) + !gt.matches(q, far) + gt.matches(q, diag_near) + !gt.matches(q, diag_far);
    total += 4;
  }
  const bool pass = std::abs(d - 111.195) <= 0.01 && correct == total;
  return {pass, fmt("haversine %.4f m, matcher %d/%d planted pairs correct", d, correct, total)};
}

// --------------------------------------------------------------- criterion 10

Verdict invariants() {
  std::size_t ok = 0, min_cases = SIZE_MAX;
  std::string failed;
  for (const auto& p : props::all()) {
    const auto out = props::run(p);
    min_cases = std::min(min_cases, out.run);
    if (out.ok() && p.cases >= 200) {
      ++ok;
    } else {
      failed += " " + p.module + "/" + p.name;
    }
  }
  std::string detail = fmt("%zu/%zu properties green, fewest cases %zu", ok, props::all().size(), min_cases);
  if (!failed.empty()) detail += ", failed:" + failed;
  return {ok == props::all().size() && min_cases >= 200, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> expected;
  app.add_option("--expect-fail", expected, "criteria known to fail");
  CLI11_PARSE(app, argc, argv);
  const std::set<int> expect(expected.begin(), expected.end());
  std::set<int> failed;
  const auto report = [&](int n, const Verdict& v) {
    const char* note = expect.contains(n) ? " [expected failure]" : "";
    std::printf("%s criterion %d: %s%s\n", v.pass ? "PASS" : "FAIL", n, v.detail.c_str(), note);
    std::fflush(stdout);
    if (!v.pass) failed.insert(n);
  };
  try {
    report(1, gradients());
    report(2, identity_special_case());
    report(3, mining_oracles());
    report(4, retrieval_oracle());
    Run trained;
    PlacesDB db;
    report(5, end_to_end(trained, db));
    report(6, loss_ordering());
    report(7, whitening(trained, db));
    report(8, schedule());
    report(9, geodesics());
    report(10, invariants());
  } catch (const std::exception& e) {
    std::printf("FAIL aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%zu/10 criteria pass\n", 10 - failed.size());
  return failed == expect ? 0 : 1;
}
