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

/* Drives the C interface end to end: synthesize, train briefly, evaluate,
 * whiten, and check that errors come back as status codes. */

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "vpr/vpr.h"

static int failures = 0;

#define CHECK(cond)                                                   \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: check failed: %s (last error: %s)\n", \
              __FILE__, __LINE__, #cond, vpr_last_error());           \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

#define OK(call) CHECK((call) == VPR_OK)

int main(void) {
  vpr_config* cfg = NULL;
  vpr_db* db = NULL;
  vpr_model* model = NULL;
  vpr_descriptors* queries = NULL;
  vpr_descriptors* refs = NULL;
  vpr_report* report = NULL;
  size_t n = 0;
  double r1 = -1.0;
  char* text = NULL;

  CHECK(strlen(vpr_version()) > 0);
  OK(vpr_config_create(&cfg));
  OK(vpr_config_set(cfg, "synth.num_places=16"));
  OK(vpr_config_set(cfg, "train.epochs=2"));
  OK(vpr_config_set(cfg, "train.places_per_batch=8"));
  OK(vpr_config_set(cfg, "model.dim=16"));
  OK(vpr_config_set(cfg, "eval.ground_truth=label"));
  {
    double lr = 0.0;
    OK(vpr_config_get_number(cfg, "train.lr", &lr));
    CHECK(lr == 0.03);
    CHECK(vpr_config_get_number(cfg, "train.loss", &lr) == VPR_ERR_INVALID_ARGUMENT);
  }

  /* Errors surface as codes with a message, and leave outputs untouched. */
  CHECK(vpr_config_set(cfg, "train.bogus=1") == VPR_ERR_VALIDATION);
  CHECK(strstr(vpr_last_error(), "bogus") != NULL);
  CHECK(vpr_db_load("/nonexistent/vpr/db", &db) == VPR_ERR_IO);
  CHECK(db == NULL);
  CHECK(vpr_db_synth(NULL, &db) == VPR_ERR_INVALID_ARGUMENT);
  {
    int code;
    for (code = VPR_ERR_INVALID_ARGUMENT; code <= VPR_ERR_SHAPE; ++code) {
      CHECK(strlen(vpr_status_string((vpr_status)code)) > 0);
    }
  }

  OK(vpr_db_synth(cfg, &db));
  OK(vpr_db_num_places(db, &n));
  CHECK(n == 16);
  OK(vpr_db_num_images(db, &n));
  CHECK(n == 128);

  OK(vpr_train(db, cfg, NULL, &model));
  OK(vpr_model_descriptor_dim(model, db, &n));
  CHECK(n == 64);
  OK(vpr_describe_holdout(model, db, cfg, &queries, &refs));
  OK(vpr_descriptors_count(queries, &n));
  CHECK(n == 32);

  /* Self-retrieval is perfect under label ground truth. */
  OK(vpr_evaluate(refs, refs, cfg, &report));
  OK(vpr_report_recall(report, 1, &r1));
  CHECK(r1 == 1.0);
  CHECK(vpr_report_recall(report, 2, &r1) == VPR_ERR_INVALID_ARGUMENT);
  OK(vpr_report_text(report, &text));
  CHECK(text != NULL && strstr(text, "R@1") != NULL);
  vpr_string_free(text);
  vpr_report_destroy(report);

  {
    float row[64];
    float sq = 0.0f;
    size_t i;
    OK(vpr_descriptors_row(queries, 0, row, 64));
    for (i = 0; i < 64; ++i) sq += row[i] * row[i];
    CHECK(fabsf(sq - 1.0f) < 1e-5f);
    CHECK(vpr_descriptors_row(queries, 0, row, 8) == VPR_ERR_INVALID_ARGUMENT);
  }

  {
    vpr_pca* pca = NULL;
    vpr_descriptors* reduced = NULL;
    OK(vpr_pca_fit(refs, 8, 1e-9, &pca));
    OK(vpr_pca_apply(pca, queries, &reduced));
    OK(vpr_descriptors_dim(reduced, &n));
    CHECK(n == 8);
    CHECK(vpr_pca_apply(pca, reduced, &reduced) == VPR_ERR_SHAPE);
    vpr_descriptors_destroy(reduced);
    vpr_pca_destroy(pca);
  }

  vpr_descriptors_destroy(queries);
  vpr_descriptors_destroy(refs);
  vpr_model_destroy(model);
  vpr_db_destroy(db);
  vpr_config_destroy(cfg);
  /* Destroying NULL is a no-op. */
  vpr_db_destroy(NULL);

  if (failures == 0) printf("capi smoke: ok\n");
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
