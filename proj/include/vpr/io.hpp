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
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vpr/aggregators.hpp"
#include "vpr/evaluator.hpp"

namespace vpr {

// In-memory tensor; values are widened from the on-disk float32.
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<double> values;

  std::size_t count() const;
};

inline constexpr char kTensorMagic[4] = {'V', 'P', 'R', 'K'};
inline constexpr std::uint16_t kTensorVersion = 1;
inline constexpr std::uint8_t kDtypeF32 = 1;

// Layout: "VPRK", u16 version, u8 dtype, u8 rank, rank x u32 dims, then the
// row-major float32 payload. All integers and floats little-endian.
void write_tensor(std::ostream& out, const Tensor& t);
Tensor read_tensor(std::istream& in);
void write_tensor_file(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor_file(const std::filesystem::path& path);

// Named tensors plus a JSON header, used for checkpoints and PCA models.
// Layout: "VPRC", u16 version, u32 header length, header bytes, u32 count,
// then per entry u16 name length, name bytes, one VPRK tensor.
struct Container {
  nlohmann::json header;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor& at(const std::string& name) const;
};

void write_container_file(const std::filesystem::path& path, const Container& c);
Container read_container_file(const std::filesystem::path& path);

// Checkpoint: head parameters plus an echo of the resolved run config.
void save_checkpoint(const std::filesystem::path& path, const Head& head, const nlohmann::json& config_echo);
Head load_checkpoint(const std::filesystem::path& path, nlohmann::json* config_echo = nullptr);

void save_pca(const std::filesystem::path& path, const PCAModel& model);
PCAModel load_pca(const std::filesystem::path& path);

// `<stem>.vprk` (rank-2 tensor) and the `<stem>.csv` sidecar with header
// `id,lat,lon,place_id`, aligned by row.
std::filesystem::path sidecar_path(const std::filesystem::path& tensor_path);
void save_descriptors(const std::filesystem::path& tensor_path, const DescriptorSet& set);
DescriptorSet load_descriptors(const std::filesystem::path& tensor_path);

// Plain-text recall table.
std::string format_report(const RecallReport& report, const std::string& label = {});

// Machine-readable key=value form.
std::string report_to_kv(const RecallReport& report, const std::string& label, const std::string& set_name);

struct ReportSummary {
  std::string label;
  std::string set_name;
  std::size_t num_queries = 0;
  std::size_t num_excluded = 0;
  std::vector<std::size_t> ks;
  std::map<std::size_t, double> recall_at;
};

ReportSummary parse_report_kv(const std::string& text);
ReportSummary summarize(const RecallReport& report, const std::string& label, const std::string& set_name);

struct ReportTable {
  std::string text;     // aligned columns, percentages
  std::string machine;  // CSV, full precision
};

// Rows are run labels (sorted), columns are R@k per evaluation set. Throws
// kInvalidArgument when the runs do not share the same ks.
ReportTable report_table(const std::vector<ReportSummary>& results);

// Parses the machine-readable table back into summaries.
std::vector<ReportSummary> parse_report_table(const std::string& csv);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace vpr
