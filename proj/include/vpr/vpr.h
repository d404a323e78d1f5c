/*
 * Copyright 2026 The vpr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface to libvpr: place databases, Conv-AP/GeM/AVG heads trained
 * with metric-learning losses, recall@k evaluation and PCA whitening.
 *
 * Every object is an opaque handle released with its *_destroy function.
 * Functions return VPR_OK or an error status; vpr_last_error() then holds a
 * message for the calling thread. Output handles are only written on
 * success. Strings returned through char** are freed with vpr_string_free.
 */

#ifndef VPR_VPR_H_
#define VPR_VPR_H_

#include <stddef.h>
#include <stdint.h>

#if defined(VPR_BUILDING_LIBRARY)
#define VPR_API __attribute__((visibility("default")))
#else
#define VPR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vpr_status {
  VPR_OK = 0,
  VPR_ERR_INVALID_ARGUMENT = 1,
  VPR_ERR_IO = 2,
  VPR_ERR_PARSE = 3,
  VPR_ERR_VALIDATION = 4,
  VPR_ERR_NUMERIC = 5,
  VPR_ERR_SHAPE = 6,
  VPR_ERR_INTERNAL = 100
} vpr_status;

typedef struct vpr_config vpr_config;
typedef struct vpr_db vpr_db;
typedef struct vpr_model vpr_model;
typedef struct vpr_descriptors vpr_descriptors;
typedef struct vpr_pca vpr_pca;
typedef struct vpr_report vpr_report;

VPR_API const char* vpr_version(void);
VPR_API const char* vpr_status_string(vpr_status status);
/* Message of the last failed call on this thread ("" if none). */
VPR_API const char* vpr_last_error(void);
VPR_API void vpr_string_free(char* s);

/* Configuration: schema-checked keys with defaults. */
VPR_API vpr_status vpr_config_create(vpr_config** out);
VPR_API void vpr_config_destroy(vpr_config* cfg);
VPR_API vpr_status vpr_config_merge_file(vpr_config* cfg, const char* path);
/* "key=value", e.g. "train.epochs=15". */
VPR_API vpr_status vpr_config_set(vpr_config* cfg, const char* assignment);
/* Resolved configuration as a JSON document. */
VPR_API vpr_status vpr_config_to_json(const vpr_config* cfg, char** out_json);
VPR_API vpr_status vpr_config_get_string(const vpr_config* cfg, const char* key, char** out);
VPR_API vpr_status vpr_config_get_uint(const vpr_config* cfg, const char* key, uint64_t* out);
VPR_API vpr_status vpr_config_get_number(const vpr_config* cfg, const char* key, double* out);
/* Entries of a string-list key. */
VPR_API vpr_status vpr_config_list_size(const vpr_config* cfg, const char* key, size_t* out);
VPR_API vpr_status vpr_config_list_item(const vpr_config* cfg, const char* key, size_t index, char** out);

/* Place databases. */
VPR_API vpr_status vpr_db_synth(const vpr_config* cfg, vpr_db** out);
/* Uses the build.* keys. */
VPR_API vpr_status vpr_db_build(const vpr_config* cfg, vpr_db** out);
VPR_API vpr_status vpr_db_load(const char* dir, vpr_db** out);
VPR_API vpr_status vpr_db_save(const vpr_db* db, const char* dir);
VPR_API vpr_status vpr_db_num_places(const vpr_db* db, size_t* out);
VPR_API vpr_status vpr_db_num_images(const vpr_db* db, size_t* out);
VPR_API void vpr_db_destroy(vpr_db* db);

/* Aggregation heads. vpr_model_init builds the untrained head for the db's
 * feature depth. vpr_train writes one CSV row per step to log_path when it
 * is not NULL. */
VPR_API vpr_status vpr_model_init(const vpr_config* cfg, const vpr_db* db, vpr_model** out);
VPR_API vpr_status vpr_train(const vpr_db* db, const vpr_config* cfg, const char* log_path, vpr_model** out);
VPR_API vpr_status vpr_model_save(const vpr_model* model, const vpr_config* cfg, const char* path);
VPR_API vpr_status vpr_model_load(const char* path, vpr_model** out);
VPR_API vpr_status vpr_model_descriptor_dim(const vpr_model* model, const vpr_db* db, size_t* out);
VPR_API void vpr_model_destroy(vpr_model* model);

/* Held-out query/reference descriptors of db (split.* keys). */
VPR_API vpr_status vpr_describe_holdout(const vpr_model* model, const vpr_db* db, const vpr_config* cfg,
                                        vpr_descriptors** out_queries, vpr_descriptors** out_references);

/* Descriptor sets: rows of unit-norm float descriptors plus id/lat/lon/place_id. */
VPR_API vpr_status vpr_descriptors_create(const float* rows, size_t count, size_t dim, const int64_t* place_ids,
                                          const double* lat, const double* lon, vpr_descriptors** out);
VPR_API vpr_status vpr_descriptors_load(const char* path, vpr_descriptors** out);
VPR_API vpr_status vpr_descriptors_save(const vpr_descriptors* set, const char* path);
VPR_API vpr_status vpr_descriptors_count(const vpr_descriptors* set, size_t* out);
VPR_API vpr_status vpr_descriptors_dim(const vpr_descriptors* set, size_t* out);
VPR_API vpr_status vpr_descriptors_row(const vpr_descriptors* set, size_t row, float* dst, size_t dst_len);
VPR_API void vpr_descriptors_destroy(vpr_descriptors* set);

/* PCA + whitening. */
VPR_API vpr_status vpr_pca_fit(const vpr_descriptors* training, size_t out_dim, double epsilon, vpr_pca** out);
VPR_API vpr_status vpr_pca_apply(const vpr_pca* pca, const vpr_descriptors* in, vpr_descriptors** out);
VPR_API vpr_status vpr_pca_save(const vpr_pca* pca, const char* path);
VPR_API vpr_status vpr_pca_load(const char* path, vpr_pca** out);
VPR_API void vpr_pca_destroy(vpr_pca* pca);

/* Recall@k (eval.* keys choose ground truth and ks). */
VPR_API vpr_status vpr_evaluate(const vpr_descriptors* queries, const vpr_descriptors* references,
                                const vpr_config* cfg, vpr_report** out);
VPR_API vpr_status vpr_report_recall(const vpr_report* report, size_t k, double* out);
VPR_API vpr_status vpr_report_num_queries(const vpr_report* report, size_t* out);
/* Writes the text table and the key=value file (either path may be NULL). */
VPR_API vpr_status vpr_report_save(const vpr_report* report, const char* label, const char* set_name,
                                   const char* text_path, const char* kv_path);
VPR_API vpr_status vpr_report_text(const vpr_report* report, char** out);
VPR_API void vpr_report_destroy(vpr_report* report);

/* Combines key=value report files into one table. labels may be NULL to
 * keep the labels stored in each file. */
VPR_API vpr_status vpr_report_table(const char* const* kv_paths, const char* const* labels, size_t count,
                                    const char* text_path, const char* csv_path, char** out_text);

#ifdef __cplusplus
}
#endif

#endif /* VPR_VPR_H_ */
