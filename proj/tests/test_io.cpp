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

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "oracles.hpp"
#include "vpr/error.hpp"
#include "vpr/io.hpp"

namespace vpr {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "vpr_test_io";
  fs::create_directories(dir);
  return dir / name;
}

TEST(Tensor, RoundTripsThroughF32) {
  Tensor t{{2, 3}, {1.0, -2.5, 0.1, 4.0, 5.0, 6.0}};
  std::stringstream buf;
  write_tensor(buf, t);
  const Tensor back = read_tensor(buf);
  EXPECT_EQ(back.dims, t.dims);
  for (std::size_t i = 0; i < t.values.size(); ++i) EXPECT_EQ(back.values[i], static_cast<float>(t.values[i]));
}

TEST(Tensor, LayoutIsLittleEndianWithMagic) {
  std::stringstream buf;
  write_tensor(buf, Tensor{{1}, {1.0}});
  const std::string bytes = buf.str();
  ASSERT_GE(bytes.size(), 4u);
  EXPECT_EQ(bytes.substr(0, 4), "VPRK");
  // 1.0f = 0x3f800000, stored low byte first.
  EXPECT_EQ(bytes.substr(bytes.size() - 4), std::string("\x00\x00\x80\x3f", 4));
}

TEST(Tensor, CorruptInputIsRejected) {
  std::stringstream bad("NOPE....");
  try {
    read_tensor(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kParse);
  }
  std::stringstream buf;
  write_tensor(buf, Tensor{{4}, {1, 2, 3, 4}});
  std::stringstream truncated(buf.str().substr(0, buf.str().size() - 3));
  EXPECT_THROW(read_tensor(truncated), Error);
}

TEST(Checkpoint, RoundTrip) {
  Head head;
  head.conv_ap = init_conv_ap(5, 3, 2, 1, true, 11);
  head.conv_ap.bias = {0.25, -0.5, 1.0};
  const auto path = scratch("model.ckpt");
  save_checkpoint(path, head, nlohmann::json{{"seed", 7}});
  nlohmann::json echo;
  const Head back = load_checkpoint(path, &echo);
  EXPECT_EQ(back.kind, head.kind);
  EXPECT_EQ(back.conv_ap.s1, 2u);
  EXPECT_EQ(back.conv_ap.s2, 1u);
  EXPECT_EQ(back.conv_ap.bias, head.conv_ap.bias);
  ASSERT_EQ(back.conv_ap.weight.size(), head.conv_ap.weight.size());
  for (std::size_t i = 0; i < head.conv_ap.weight.size(); ++i) {
    EXPECT_EQ(back.conv_ap.weight[i], static_cast<float>(head.conv_ap.weight[i]));
  }
  EXPECT_EQ(echo.at("seed"), 7);
}

TEST(Pca, RoundTrip) {
  Rng rng(3);
  const PCAModel m = pca_whiten_fit(oracle::random_matrix(rng, 20, 6), 3);
  const auto path = scratch("pca.vprc");
  save_pca(path, m);
  const PCAModel back = load_pca(path);
  EXPECT_EQ(back.out_dim(), 3u);
  EXPECT_EQ(back.in_dim(), 6u);
  EXPECT_EQ(back.epsilon, m.epsilon);
  for (std::size_t i = 0; i < m.projection.values.size(); ++i) {
    EXPECT_EQ(back.projection.values[i], static_cast<float>(m.projection.values[i]));
  }
}

TEST(Descriptors, RoundTripWithSidecar) {
  Rng rng(4);
  DescriptorSet d;
  d.rows = oracle::random_unit_rows(rng, 3, 4);
  d.meta = {{"a,1", 1.5, 2.5, 7}, {"b", -3.0, 4.0, 8}, {"c", 0.0, 0.0, 9}};
  const auto path = scratch("set.vprk");
  save_descriptors(path, d);
  EXPECT_TRUE(fs::exists(sidecar_path(path)));
  const DescriptorSet back = load_descriptors(path);
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back.meta[0].id, "a,1");
  EXPECT_EQ(back.meta[1].lat, -3.0);
  EXPECT_EQ(back.meta[2].place_id, 9);
}

TEST(Report, KeyValueRoundTrip) {
  RecallReport r;
  r.ks = {1, 5};
  r.recall_at = {{1, 0.75}, {5, 0.875}};
  r.num_queries = 8;
  r.num_excluded = 1;
  const auto s = parse_report_kv(report_to_kv(r, "Conv-AP 2x2", "synthetic"));
  EXPECT_EQ(s.label, "Conv-AP 2x2");
  EXPECT_EQ(s.set_name, "synthetic");
  EXPECT_EQ(s.num_queries, 8u);
  EXPECT_EQ(s.num_excluded, 1u);
  EXPECT_EQ(s.recall_at, r.recall_at);
}

ReportSummary summary(const std::string& label, double r1) {
  ReportSummary s;
  s.label = label;
  s.set_name = "synthetic";
  s.ks = {1, 5, 10};
  s.recall_at = {{1, r1}, {5, 0.9}, {10, 1.0}};
  return s;
}

TEST(Table, SingleRunHasThreeNumericColumns) {
  const auto t = report_table({summary("a", 0.5)});
  std::istringstream lines(t.machine);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), 3);
  EXPECT_EQ(row.substr(0, 2), "a,");
  EXPECT_NE(t.text.find("R@10"), std::string::npos);
}

TEST(Table, RowsSortedByLabel) {
  const auto t = report_table({summary("zeta", 0.1), summary("alpha", 0.2)});
  const auto back = parse_report_table(t.machine);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].label, "alpha");
  EXPECT_EQ(back[1].label, "zeta");
  EXPECT_EQ(back[1].recall_at.at(1), 0.1);
}

TEST(Table, QuotesLabelsAndSetNamesWithCommas) {
  auto a = summary("Conv-AP, 2x2", 0.25);
  a.set_name = "held, out";
  const auto back = parse_report_table(report_table({a}).machine);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].label, "Conv-AP, 2x2");
  EXPECT_EQ(back[0].set_name, "held, out");
  EXPECT_EQ(back[0].recall_at.at(1), 0.25);
}

TEST(Table, MismatchedCutoffsAreAnError) {
  auto b = summary("b", 0.2);
  b.ks = {1};
  EXPECT_THROW(report_table({summary("a", 0.1), b}), Error);
  EXPECT_THROW(report_table({}), Error);
}

}  // namespace
}  // namespace vpr
