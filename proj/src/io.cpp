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

#include "vpr/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "vpr/error.hpp"

namespace vpr {

namespace {

void put_u16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  out.write(b, 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void get_bytes(std::istream& in, char* dst, std::size_t n, const char* what) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) fail(Errc::kParse, std::string("truncated ") + what);
}

std::uint16_t get_u16(std::istream& in) {
  unsigned char b[2];
  get_bytes(in, reinterpret_cast<char*>(b), 2, "header");
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  get_bytes(in, reinterpret_cast<char*>(b), 4, "header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::string fmt_double(double v) {
  std::ostringstream s;
  s << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return s.str();
}

template <typename T>
T parse_value(const std::string& s, const std::string& what) {
  T v{};
  std::istringstream in(s);
  in >> v;
  if (s.empty() || in.fail() || !in.eof()) fail(Errc::kParse, "bad " + what + " '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

Tensor vector_tensor(std::span<const double> v) {
  return Tensor{{static_cast<std::uint32_t>(v.size())}, {v.begin(), v.end()}};
}

}  // namespace

std::size_t Tensor::count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void write_tensor(std::ostream& out, const Tensor& t) {
  require(t.dims.size() <= 255, Errc::kInvalidArgument, "tensor rank too large");
  require(t.count() == t.values.size(), Errc::kShapeMismatch, "tensor dims do not match value count");
  out.write(kTensorMagic, 4);
  put_u16(out, kTensorVersion);
  out.put(static_cast<char>(kDtypeF32));
  out.put(static_cast<char>(t.dims.size()));
  for (auto d : t.dims) put_u32(out, d);
  std::vector<char> buf(t.values.size() * 4);
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(t.values[i]));
    for (int b = 0; b < 4; ++b) buf[i * 4 + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) fail(Errc::kIo, "tensor write failed");
}

Tensor read_tensor(std::istream& in) {
  char magic[4];
  get_bytes(in, magic, 4, "tensor magic");
  if (std::memcmp(magic, kTensorMagic, 4) != 0) fail(Errc::kParse, "not a VPRK tensor (bad magic)");
  const auto version = get_u16(in);
  if (version != kTensorVersion) fail(Errc::kParse, "unsupported tensor version " + std::to_string(version));
  char tag_rank[2];
  get_bytes(in, tag_rank, 2, "tensor header");
  if (static_cast<std::uint8_t>(tag_rank[0]) != kDtypeF32) fail(Errc::kParse, "unsupported tensor dtype");
  const auto rank = static_cast<std::uint8_t>(tag_rank[1]);
  Tensor t;
  for (std::uint8_t i = 0; i < rank; ++i) t.dims.push_back(get_u32(in));
  const std::size_t n = t.count();
  std::vector<unsigned char> buf(n * 4);
  get_bytes(in, reinterpret_cast<char*>(buf.data()), buf.size(), "tensor payload");
  t.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t bits = static_cast<std::uint32_t>(buf[i * 4]) | (static_cast<std::uint32_t>(buf[i * 4 + 1]) << 8) |
                               (static_cast<std::uint32_t>(buf[i * 4 + 2]) << 16) |
                               (static_cast<std::uint32_t>(buf[i * 4 + 3]) << 24);
    t.values[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  return t;
}

void write_tensor_file(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::kIo, "cannot write " + path.string());
  write_tensor(out, t);
}

Tensor read_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::kIo, "cannot open " + path.string());
  try {
    return read_tensor(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

const Tensor& Container::at(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  fail(Errc::kParse, "container has no tensor '" + name + "'");
}

void write_container_file(const std::filesystem::path& path, const Container& c) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::kIo, "cannot write " + path.string());
  out.write("VPRC", 4);
  put_u16(out, 1);
  const std::string header = c.header.dump();
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  put_u32(out, static_cast<std::uint32_t>(c.tensors.size()));
  for (const auto& [name, t] : c.tensors) {
    put_u16(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_tensor(out, t);
  }
  if (!out) fail(Errc::kIo, "write failed: " + path.string());
}

Container read_container_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::kIo, "cannot open " + path.string());
  try {
    char magic[4];
    get_bytes(in, magic, 4, "container magic");
    if (std::memcmp(magic, "VPRC", 4) != 0) fail(Errc::kParse, "not a VPRC container (bad magic)");
    const auto version = get_u16(in);
    if (version != 1) fail(Errc::kParse, "unsupported container version " + std::to_string(version));
    std::string header(get_u32(in), '\0');
    get_bytes(in, header.data(), header.size(), "container header");
    Container c;
    try {
      c.header = nlohmann::json::parse(header);
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::kParse, std::string("bad container header: ") + e.what());
    }
    const auto count = get_u32(in);
    for (std::uint32_t i = 0; i < count; ++i) {
      std::string name(get_u16(in), '\0');
      get_bytes(in, name.data(), name.size(), "tensor name");
      c.tensors.emplace_back(std::move(name), read_tensor(in));
    }
    return c;
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Head& head, const nlohmann::json& config_echo) {
  Container c;
  c.header = {{"kind", "checkpoint"}, {"aggregator", to_string(head.kind)}, {"config", config_echo}};
  switch (head.kind) {
    case AggregatorKind::kConvAP: {
      const auto& p = head.conv_ap;
      c.header["use_bias"] = p.use_bias;
      c.header["s1"] = p.s1;
      c.header["s2"] = p.s2;
      c.tensors.emplace_back("conv_ap.weight", Tensor{{static_cast<std::uint32_t>(p.out_dim), static_cast<std::uint32_t>(p.in_dim)}, p.weight});
      c.tensors.emplace_back("conv_ap.bias", vector_tensor(p.bias));
      break;
    }
    case AggregatorKind::kGeM:
      c.header["p_min"] = head.gem.p_min;
      c.tensors.emplace_back("gem.p", Tensor{{1}, {head.gem.p}});
      break;
    case AggregatorKind::kAvg: break;
  }
  write_container_file(path, c);
}

Head load_checkpoint(const std::filesystem::path& path, nlohmann::json* config_echo) {
  const Container c = read_container_file(path);
  Head head;
  try {
    if (c.header.at("kind") != "checkpoint") fail(Errc::kParse, path.string() + ": not a checkpoint");
    head.kind = parse_aggregator(c.header.at("aggregator").get<std::string>());
    switch (head.kind) {
      case AggregatorKind::kConvAP: {
        const auto& w = c.at("conv_ap.weight");
        require(w.dims.size() == 2, Errc::kParse, "conv_ap.weight must be rank 2");
        auto& p = head.conv_ap;
        p.out_dim = w.dims[0];
        p.in_dim = w.dims[1];
        p.weight = w.values;
        p.bias = c.at("conv_ap.bias").values;
        p.use_bias = c.header.at("use_bias").get<bool>();
        p.s1 = c.header.at("s1").get<std::size_t>();
        p.s2 = c.header.at("s2").get<std::size_t>();
        require(p.bias.size() == p.out_dim, Errc::kParse, "conv_ap.bias size mismatch");
        break;
      }
      case AggregatorKind::kGeM:
        head.gem.p = c.at("gem.p").values.at(0);
        head.gem.p_min = c.header.at("p_min").get<double>();
        break;
      case AggregatorKind::kAvg: break;
    }
    if (config_echo) *config_echo = c.header.value("config", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::kParse, path.string() + ": malformed checkpoint header: " + e.what());
  }
  return head;
}

void save_pca(const std::filesystem::path& path, const PCAModel& model) {
  Container c;
  c.header = {{"kind", "pca"}, {"epsilon", model.epsilon}};
  c.tensors.emplace_back("mean", vector_tensor(model.mean));
  c.tensors.emplace_back("projection", Tensor{{static_cast<std::uint32_t>(model.projection.rows), static_cast<std::uint32_t>(model.projection.cols)}, model.projection.values});
  c.tensors.emplace_back("eigenvalues", vector_tensor(model.eigenvalues));
  write_container_file(path, c);
}

PCAModel load_pca(const std::filesystem::path& path) {
  const Container c = read_container_file(path);
  if (c.header.value("kind", "") != "pca") fail(Errc::kParse, path.string() + ": not a PCA model");
  PCAModel m;
  m.epsilon = c.header.value("epsilon", 1e-9);
  m.mean = c.at("mean").values;
  const auto& proj = c.at("projection");
  require(proj.dims.size() == 2 && proj.dims[1] == m.mean.size(), Errc::kParse, path.string() + ": projection shape mismatch");
  m.projection = Matrix(proj.dims[0], proj.dims[1]);
  m.projection.values = proj.values;
  m.eigenvalues = c.at("eigenvalues").values;
  return m;
}

std::filesystem::path sidecar_path(const std::filesystem::path& tensor_path) {
  auto p = tensor_path;
  p.replace_extension(".csv");
  return p;
}

void save_descriptors(const std::filesystem::path& tensor_path, const DescriptorSet& set) {
  require(set.meta.size() == set.size(), Errc::kShapeMismatch, "descriptor metadata does not match row count");
  write_tensor_file(tensor_path, Tensor{{static_cast<std::uint32_t>(set.size()), static_cast<std::uint32_t>(set.dim())}, set.rows.values});
  std::ostringstream csv;
  csv << "id,lat,lon,place_id\n";
  for (const auto& m : set.meta) {
    csv << csv::quote(m.id) << ',' << fmt_double(m.lat) << ',' << fmt_double(m.lon) << ',' << m.place_id << '\n';
  }
  write_text_file(sidecar_path(tensor_path), csv.str());
}

DescriptorSet load_descriptors(const std::filesystem::path& tensor_path) {
  const Tensor t = read_tensor_file(tensor_path);
  require(t.dims.size() == 2, Errc::kParse, tensor_path.string() + ": descriptor tensor must be rank 2");
  DescriptorSet set{Matrix(t.dims[0], t.dims[1]), {}};
  set.rows.values = t.values;
  const auto side = sidecar_path(tensor_path);
  const auto lines = split(read_text_file(side), '\n');
  if (lines.empty() || lines[0] != "id,lat,lon,place_id") fail(Errc::kParse, side.string() + ": bad sidecar header");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = csv::split_line(lines[i], i + 1);
    if (f.size() != 4) fail(Errc::kParse, side.string() + ": line " + std::to_string(i + 1) + ": expected 4 fields");
    set.meta.push_back({f[0], parse_value<double>(f[1], "lat"), parse_value<double>(f[2], "lon"),
                        parse_value<PlaceId>(f[3], "place_id")});
  }
  require(set.meta.size() == set.size(), Errc::kValidation, side.string() + ": row count does not match tensor");
  return set;
}

std::string format_report(const RecallReport& report, const std::string& label) {
  std::ostringstream out;
  if (!label.empty()) out << label << '\n';
  out << "queries " << report.num_queries << " (excluded " << report.num_excluded << ")\n";
  out << std::left << std::setw(8) << "k" << "recall\n";
  for (std::size_t k : report.ks) {
    out << std::left << std::setw(8) << ("R@" + std::to_string(k)) << std::fixed << std::setprecision(4)
        << report.recall_at.at(k) << '\n';
  }
  return out.str();
}

ReportSummary summarize(const RecallReport& report, const std::string& label, const std::string& set_name) {
  return {label, set_name, report.num_queries, report.num_excluded, report.ks, report.recall_at};
}

std::string report_to_kv(const RecallReport& report, const std::string& label, const std::string& set_name) {
  std::ostringstream out;
  out << "format=vpr-recall-v1\n";
  out << "label=" << label << '\n';
  out << "set=" << set_name << '\n';
  out << "num_queries=" << report.num_queries << '\n';
  out << "num_excluded=" << report.num_excluded << '\n';
  out << "ks=";
  for (std::size_t i = 0; i < report.ks.size(); ++i) out << (i ? "," : "") << report.ks[i];
  out << '\n';
  for (std::size_t k : report.ks) out << "recall@" << k << '=' << fmt_double(report.recall_at.at(k)) << '\n';
  return out.str();
}

ReportSummary parse_report_kv(const std::string& text) {
  ReportSummary s;
  bool saw_format = false;
  for (const auto& line : split(text, '\n')) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(Errc::kParse, "report line without '=': " + line);
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "format") {
      if (value != "vpr-recall-v1") fail(Errc::kParse, "unknown report format '" + value + "'");
      saw_format = true;
    } else if (key == "label") {
      s.label = value;
    } else if (key == "set") {
      s.set_name = value;
    } else if (key == "num_queries") {
      s.num_queries = parse_value<std::size_t>(value, key);
    } else if (key == "num_excluded") {
      s.num_excluded = parse_value<std::size_t>(value, key);
    } else if (key == "ks") {
      for (const auto& k : split(value, ',')) s.ks.push_back(parse_value<std::size_t>(k, "k"));
    } else if (key.starts_with("recall@")) {
      s.recall_at[parse_value<std::size_t>(key.substr(7), "k")] = parse_value<double>(value, key);
    } else {
      fail(Errc::kParse, "unknown report key '" + key + "'");
    }
  }
  if (!saw_format) fail(Errc::kParse, "report is missing its format line");
  for (std::size_t k : s.ks) {
    if (!s.recall_at.contains(k)) fail(Errc::kParse, "report lacks recall@" + std::to_string(k));
  }
  return s;
}

ReportTable report_table(const std::vector<ReportSummary>& results) {
  require(!results.empty(), Errc::kInvalidArgument, "no results to tabulate");
  const auto& ks = results.front().ks;
  std::set<std::string> sets_seen;
  std::vector<std::string> sets;
  std::set<std::string> labels_seen;
  std::vector<std::string> labels;
  for (const auto& r : results) {
    if (r.ks != ks) fail(Errc::kInvalidArgument, "runs report different k values");
    if (sets_seen.insert(r.set_name).second) sets.push_back(r.set_name);
    if (labels_seen.insert(r.label).second) labels.push_back(r.label);
  }
  std::sort(sets.begin(), sets.end());
  std::sort(labels.begin(), labels.end());
  auto find = [&](const std::string& label, const std::string& set) -> const ReportSummary* {
    for (const auto& r : results) {
      if (r.label == label && r.set_name == set) return &r;
    }
    return nullptr;
  };

  std::size_t label_w = 6;
  for (const auto& l : labels) label_w = std::max(label_w, l.size() + 2);
  std::ostringstream text, csv;
  text << std::left << std::setw(static_cast<int>(label_w)) << "method";
  csv << "label";
  for (const auto& set : sets) {
    for (std::size_t k : ks) {
      const std::string col = (set.empty() ? "" : set + " ") + "R@" + std::to_string(k);
      text << std::right << std::setw(static_cast<int>(std::max<std::size_t>(col.size(), 6) + 2)) << col;
      csv << ',' << csv::quote(set + ":R@" + std::to_string(k));
    }
  }
  text << '\n';
  csv << '\n';
  for (const auto& label : labels) {
    text << std::left << std::setw(static_cast<int>(label_w)) << label;
    csv << csv::quote(label);
    for (const auto& set : sets) {
      const auto* r = find(label, set);
      for (std::size_t k : ks) {
        const std::string col = (set.empty() ? "" : set + " ") + "R@" + std::to_string(k);
        const int w = static_cast<int>(std::max<std::size_t>(col.size(), 6) + 2);
        if (r) {
          std::ostringstream cell;
          cell << std::fixed << std::setprecision(1) << 100.0 * r->recall_at.at(k);
          text << std::right << std::setw(w) << cell.str();
          csv << ',' << fmt_double(r->recall_at.at(k));
        } else {
          text << std::right << std::setw(w) << "-";
          csv << ',';
        }
      }
    }
    text << '\n';
    csv << '\n';
  }
  return {text.str(), csv.str()};
}

std::vector<ReportSummary> parse_report_table(const std::string& csv) {
  const auto lines = split(csv, '\n');
  if (lines.empty()) fail(Errc::kParse, "empty table");
  const auto header = csv::split_line(lines[0], 1);
  if (header.empty() || header[0] != "label") fail(Errc::kParse, "table header must start with 'label'");
  struct Column {
    std::string set;
    std::size_t k;
  };
  std::vector<Column> cols;
  for (std::size_t i = 1; i < header.size(); ++i) {
    const auto pos = header[i].rfind(":R@");
    if (pos == std::string::npos) fail(Errc::kParse, "bad table column '" + header[i] + "'");
    cols.push_back({header[i].substr(0, pos), parse_value<std::size_t>(header[i].substr(pos + 3), "k")});
  }
  std::vector<ReportSummary> out;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;
    const auto f = csv::split_line(lines[li], li + 1);
    if (f.size() != header.size()) fail(Errc::kParse, "table row " + std::to_string(li) + " has the wrong width");
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (f[c + 1].empty()) continue;
      auto it = std::find_if(out.begin(), out.end(), [&](const ReportSummary& s) {
        return s.label == f[0] && s.set_name == cols[c].set;
      });
      if (it == out.end()) {
        out.push_back({f[0], cols[c].set, 0, 0, {}, {}});
        it = out.end() - 1;
      }
      it->ks.push_back(cols[c].k);
      it->recall_at[cols[c].k] = parse_value<double>(f[c + 1], "recall");
    }
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::kIo, "cannot write " + path.string());
  out << text;
  if (!out) fail(Errc::kIo, "write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace vpr
