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

#include "vpr/vpr.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "vpr/config.hpp"
#include "vpr/error.hpp"
#include "vpr/evaluator.hpp"
#include "vpr/experiment.hpp"
#include "vpr/io.hpp"
#include "vpr/places_db.hpp"
#include "vpr/trainer.hpp"

struct vpr_config {
  vpr::Config cfg;
};
struct vpr_db {
  vpr::PlacesDB db;
};
struct vpr_model {
  vpr::Head head;
};
struct vpr_descriptors {
  vpr::DescriptorSet set;
};
struct vpr_pca {
  vpr::PCAModel model;
};
struct vpr_report {
  vpr::RecallReport report;
};

namespace {

thread_local std::string g_last_error;

vpr_status to_status(vpr::Errc code) {
  switch (code) {
    case vpr::Errc::kInvalidArgument: return VPR_ERR_INVALID_ARGUMENT;
    case vpr::Errc::kIo: return VPR_ERR_IO;
    case vpr::Errc::kParse: return VPR_ERR_PARSE;
    case vpr::Errc::kValidation: return VPR_ERR_VALIDATION;
    case vpr::Errc::kNumeric: return VPR_ERR_NUMERIC;
    case vpr::Errc::kShapeMismatch: return VPR_ERR_SHAPE;
  }
  return VPR_ERR_INTERNAL;
}

template <typename Fn>
vpr_status guard(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return VPR_OK;
  } catch (const vpr::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return VPR_ERR_INTERNAL;
}

void need(const void* p, const char* what) {
  if (!p) vpr::fail(vpr::Errc::kInvalidArgument, std::string(what) + " is NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* vpr_version(void) { return "0.1.0"; }

const char* vpr_status_string(vpr_status status) {
  switch (status) {
    case VPR_OK: return "ok";
    case VPR_ERR_INVALID_ARGUMENT: return "invalid argument";
    case VPR_ERR_IO: return "i/o error";
    case VPR_ERR_PARSE: return "parse error";
    case VPR_ERR_VALIDATION: return "validation error";
    case VPR_ERR_NUMERIC: return "numeric error";
    case VPR_ERR_SHAPE: return "shape mismatch";
    case VPR_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* vpr_last_error(void) { return g_last_error.c_str(); }

void vpr_string_free(char* s) { std::free(s); }

vpr_status vpr_config_create(vpr_config** out) {
  return guard([&] {
    need(out, "out");
    *out = new vpr_config{};
  });
}

void vpr_config_destroy(vpr_config* cfg) { delete cfg; }

vpr_status vpr_config_merge_file(vpr_config* cfg, const char* path) {
  return guard([&] {
    need(cfg, "cfg");
    need(path, "path");
    cfg->cfg.merge_file(path);
  });
}

vpr_status vpr_config_set(vpr_config* cfg, const char* assignment) {
  return guard([&] {
    need(cfg, "cfg");
    need(assignment, "assignment");
    cfg->cfg.set(assignment);
  });
}

vpr_status vpr_config_to_json(const vpr_config* cfg, char** out_json) {
  return guard([&] {
    need(cfg, "cfg");
    need(out_json, "out_json");
    *out_json = dup_string(cfg->cfg.resolved().dump(2) + "\n");
  });
}

vpr_status vpr_config_get_string(const vpr_config* cfg, const char* key, char** out) {
  return guard([&] {
    need(cfg, "cfg");
    need(key, "key");
    need(out, "out");
    *out = dup_string(cfg->cfg.get_string(key));
  });
}

vpr_status vpr_config_get_uint(const vpr_config* cfg, const char* key, uint64_t* out) {
  return guard([&] {
    need(cfg, "cfg");
    need(key, "key");
    need(out, "out");
    *out = cfg->cfg.get_uint(key);
  });
}

vpr_status vpr_config_get_number(const vpr_config* cfg, const char* key, double* out) {
  return guard([&] {
    need(cfg, "cfg");
    need(key, "key");
    need(out, "out");
    *out = cfg->cfg.get_number(key);
  });
}

vpr_status vpr_config_list_size(const vpr_config* cfg, const char* key, size_t* out) {
  return guard([&] {
    need(cfg, "cfg");
    need(key, "key");
    need(out, "out");
    *out = cfg->cfg.get_string_list(key).size();
  });
}

vpr_status vpr_config_list_item(const vpr_config* cfg, const char* key, size_t index, char** out) {
  return guard([&] {
    need(cfg, "cfg");
    need(key, "key");
    need(out, "out");
    const auto items = cfg->cfg.get_string_list(key);
    vpr::require(index < items.size(), vpr::Errc::kInvalidArgument, "list index out of range");
    *out = dup_string(items[index]);
  });
}

vpr_status vpr_db_synth(const vpr_config* cfg, vpr_db** out) {
  return guard([&] {
    need(cfg, "cfg");
    need(out, "out");
    auto db = std::make_unique<vpr_db>(vpr_db{vpr::synth_places(vpr::synth_config(cfg->cfg))});
    *out = db.release();
  });
}

vpr_status vpr_db_build(const vpr_config* cfg, vpr_db** out) {
  return guard([&] {
    need(cfg, "cfg");
    need(out, "out");
    auto db = std::make_unique<vpr_db>(vpr_db{vpr::build_db(cfg->cfg)});
    *out = db.release();
  });
}

vpr_status vpr_db_load(const char* dir, vpr_db** out) {
  return guard([&] {
    need(dir, "dir");
    need(out, "out");
    vpr::IngestOptions opts;
    opts.permissive = true;
    auto db = std::make_unique<vpr_db>(vpr_db{vpr::load_db(dir, opts)});
    *out = db.release();
  });
}

vpr_status vpr_db_save(const vpr_db* db, const char* dir) {
  return guard([&] {
    need(db, "db");
    need(dir, "dir");
    vpr::save_db(db->db, dir);
  });
}

vpr_status vpr_db_num_places(const vpr_db* db, size_t* out) {
  return guard([&] {
    need(db, "db");
    need(out, "out");
    *out = db->db.num_places();
  });
}

vpr_status vpr_db_num_images(const vpr_db* db, size_t* out) {
  return guard([&] {
    need(db, "db");
    need(out, "out");
    *out = db->db.num_images();
  });
}

void vpr_db_destroy(vpr_db* db) { delete db; }

vpr_status vpr_model_init(const vpr_config* cfg, const vpr_db* db, vpr_model** out) {
  return guard([&] {
    need(cfg, "cfg");
    need(db, "db");
    need(out, "out");
    *out = new vpr_model{vpr::resolve_head(cfg->cfg, db->db, "")};
  });
}

vpr_status vpr_train(const vpr_db* db, const vpr_config* cfg, const char* log_path, vpr_model** out) {
  return guard([&] {
    need(db, "db");
    need(cfg, "cfg");
    need(out, "out");
    const auto split = vpr::split_holdout(db->db, cfg->cfg.get_uint("split.train_images_per_place"));
    const vpr::PlacesDB& training = cfg->cfg.get_uint("split.train_images_per_place") == 0 ? db->db : split.train;
    auto result = vpr::train(training, vpr::train_config(cfg->cfg));
    if (log_path) vpr::write_text_file(log_path, vpr::format_train_log(result.log));
    *out = new vpr_model{std::move(result.head)};
  });
}

vpr_status vpr_model_save(const vpr_model* model, const vpr_config* cfg, const char* path) {
  return guard([&] {
    need(model, "model");
    need(path, "path");
    vpr::save_checkpoint(path, model->head, cfg ? cfg->cfg.resolved() : nlohmann::json::object());
  });
}

vpr_status vpr_model_load(const char* path, vpr_model** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new vpr_model{vpr::load_checkpoint(path)};
  });
}

vpr_status vpr_model_descriptor_dim(const vpr_model* model, const vpr_db* db, size_t* out) {
  return guard([&] {
    need(model, "model");
    need(db, "db");
    need(out, "out");
    vpr::require(db->db.has_payloads(), vpr::Errc::kInvalidArgument, "database has no payloads");
    *out = model->head.forward_raw(db->db.payloads().front()).size();
  });
}

void vpr_model_destroy(vpr_model* model) { delete model; }

vpr_status vpr_describe_holdout(const vpr_model* model, const vpr_db* db, const vpr_config* cfg,
                                vpr_descriptors** out_queries, vpr_descriptors** out_references) {
  return guard([&] {
    need(model, "model");
    need(db, "db");
    need(cfg, "cfg");
    need(out_queries, "out_queries");
    need(out_references, "out_references");
    auto sets = vpr::describe_holdout(model->head, db->db, cfg->cfg.get_uint("split.train_images_per_place"));
    auto q = std::make_unique<vpr_descriptors>(vpr_descriptors{std::move(sets.queries)});
    auto r = std::make_unique<vpr_descriptors>(vpr_descriptors{std::move(sets.references)});
    *out_queries = q.release();
    *out_references = r.release();
  });
}

vpr_status vpr_descriptors_create(const float* rows, size_t count, size_t dim, const int64_t* place_ids,
                                  const double* lat, const double* lon, vpr_descriptors** out) {
  return guard([&] {
    need(out, "out");
    vpr::require(count == 0 || (rows && place_ids), vpr::Errc::kInvalidArgument, "rows and place_ids are required");
    vpr::require(dim > 0, vpr::Errc::kInvalidArgument, "dim must be positive");
    vpr::DescriptorSet set{vpr::Matrix(count, dim), {}};
    for (size_t i = 0; i < count * dim; ++i) set.rows.values[i] = rows[i];
    for (size_t i = 0; i < count; ++i) {
      set.meta.push_back({std::to_string(i), lat ? lat[i] : 0.0, lon ? lon[i] : 0.0, place_ids[i]});
    }
    *out = new vpr_descriptors{std::move(set)};
  });
}

vpr_status vpr_descriptors_load(const char* path, vpr_descriptors** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new vpr_descriptors{vpr::load_descriptors(path)};
  });
}

vpr_status vpr_descriptors_save(const vpr_descriptors* set, const char* path) {
  return guard([&] {
    need(set, "set");
    need(path, "path");
    vpr::save_descriptors(path, set->set);
  });
}

vpr_status vpr_descriptors_count(const vpr_descriptors* set, size_t* out) {
  return guard([&] {
    need(set, "set");
    need(out, "out");
    *out = set->set.size();
  });
}

vpr_status vpr_descriptors_dim(const vpr_descriptors* set, size_t* out) {
  return guard([&] {
    need(set, "set");
    need(out, "out");
    *out = set->set.dim();
  });
}

vpr_status vpr_descriptors_row(const vpr_descriptors* set, size_t row, float* dst, size_t dst_len) {
  return guard([&] {
    need(set, "set");
    need(dst, "dst");
    vpr::require(row < set->set.size(), vpr::Errc::kInvalidArgument, "row out of range");
    vpr::require(dst_len >= set->set.dim(), vpr::Errc::kInvalidArgument, "destination too small");
    const auto r = set->set.rows.row(row);
    for (size_t i = 0; i < r.size(); ++i) dst[i] = static_cast<float>(r[i]);
  });
}

void vpr_descriptors_destroy(vpr_descriptors* set) { delete set; }

vpr_status vpr_pca_fit(const vpr_descriptors* training, size_t out_dim, double epsilon, vpr_pca** out) {
  return guard([&] {
    need(training, "training");
    need(out, "out");
    *out = new vpr_pca{vpr::pca_whiten_fit(training->set.rows, out_dim, epsilon)};
  });
}

vpr_status vpr_pca_apply(const vpr_pca* pca, const vpr_descriptors* in, vpr_descriptors** out) {
  return guard([&] {
    need(pca, "pca");
    need(in, "in");
    need(out, "out");
    *out = new vpr_descriptors{vpr::pca_transform(pca->model, in->set)};
  });
}

vpr_status vpr_pca_save(const vpr_pca* pca, const char* path) {
  return guard([&] {
    need(pca, "pca");
    need(path, "path");
    vpr::save_pca(path, pca->model);
  });
}

vpr_status vpr_pca_load(const char* path, vpr_pca** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new vpr_pca{vpr::load_pca(path)};
  });
}

void vpr_pca_destroy(vpr_pca* pca) { delete pca; }

vpr_status vpr_evaluate(const vpr_descriptors* queries, const vpr_descriptors* references, const vpr_config* cfg,
                        vpr_report** out) {
  return guard([&] {
    need(queries, "queries");
    need(references, "references");
    need(cfg, "cfg");
    need(out, "out");
    const auto ks64 = cfg->cfg.get_uint_list("eval.ks");
    std::vector<std::size_t> ks(ks64.begin(), ks64.end());
    *out = new vpr_report{vpr::recall_at_k(queries->set, references->set, vpr::ground_truth(cfg->cfg), ks)};
  });
}

vpr_status vpr_report_recall(const vpr_report* report, size_t k, double* out) {
  return guard([&] {
    need(report, "report");
    need(out, "out");
    const auto it = report->report.recall_at.find(k);
    vpr::require(it != report->report.recall_at.end(), vpr::Errc::kInvalidArgument,
                 "report has no recall@" + std::to_string(k));
    *out = it->second;
  });
}

vpr_status vpr_report_num_queries(const vpr_report* report, size_t* out) {
  return guard([&] {
    need(report, "report");
    need(out, "out");
    *out = report->report.num_queries;
  });
}

vpr_status vpr_report_save(const vpr_report* report, const char* label, const char* set_name, const char* text_path,
                           const char* kv_path) {
  return guard([&] {
    need(report, "report");
    const std::string l = label ? label : "", s = set_name ? set_name : "";
    if (text_path) vpr::write_text_file(text_path, vpr::format_report(report->report, l));
    if (kv_path) vpr::write_text_file(kv_path, vpr::report_to_kv(report->report, l, s));
  });
}

vpr_status vpr_report_text(const vpr_report* report, char** out) {
  return guard([&] {
    need(report, "report");
    need(out, "out");
    *out = dup_string(vpr::format_report(report->report));
  });
}

void vpr_report_destroy(vpr_report* report) { delete report; }

vpr_status vpr_report_table(const char* const* kv_paths, const char* const* labels, size_t count,
                            const char* text_path, const char* csv_path, char** out_text) {
  return guard([&] {
    vpr::require(count > 0 && kv_paths, vpr::Errc::kInvalidArgument, "no report files given");
    std::vector<vpr::ReportSummary> results;
    for (size_t i = 0; i < count; ++i) {
      need(kv_paths[i], "kv_paths[i]");
      auto s = vpr::parse_report_kv(vpr::read_text_file(kv_paths[i]));
      if (labels && labels[i]) s.label = labels[i];
      results.push_back(std::move(s));
    }
    const auto table = vpr::report_table(results);
    if (text_path) vpr::write_text_file(text_path, table.text);
    if (csv_path) vpr::write_text_file(csv_path, table.machine);
    if (out_text) *out_text = dup_string(table.text);
  });
}

}  // extern "C"
