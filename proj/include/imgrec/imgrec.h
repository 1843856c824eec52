/*
 * Copyright 2026 The imgrec Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef IMGREC_IMGREC_H_
#define IMGREC_IMGREC_H_

/* C interface to the imgrec recommender engine.
 *
 * Objects are opaque handles created by *_create / *_load functions and
 * released with the matching *_destroy. Every fallible call returns an
 * imgrec_status; on failure imgrec_last_error() describes what went wrong
 * (the message is thread-local and valid until the next failing call on the
 * same thread). Status values double as the CLI exit codes. */

#include <stddef.h>
#include <stdint.h>

#if defined(IMGREC_BUILDING_LIBRARY)
#define IMGREC_API __attribute__((visibility("default")))
#else
#define IMGREC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum imgrec_status {
  IMGREC_OK = 0,
  IMGREC_ERR_INTERNAL = 1,
  IMGREC_ERR_INPUT = 2,        /* unreadable, malformed or inconsistent input */
  IMGREC_ERR_DIVERGENCE = 3,   /* training produced non-finite values */
  IMGREC_ERR_CHECKPOINT = 4,   /* checkpoint does not match config/data */
  IMGREC_ERR_PRECONDITION = 5  /* protocol precondition failed */
} imgrec_status;

typedef enum imgrec_log_level { IMGREC_LOG_INFO = 0, IMGREC_LOG_WARNING = 1 } imgrec_log_level;

typedef void (*imgrec_log_fn)(imgrec_log_level level, const char* message, void* user_data);

typedef struct imgrec_config imgrec_config;
typedef struct imgrec_data imgrec_data;
typedef struct imgrec_features imgrec_features;
typedef struct imgrec_model imgrec_model;

IMGREC_API const char* imgrec_version(void);
IMGREC_API const char* imgrec_last_error(void);

/* Receives progress and warning lines from the command functions. Pass NULL
 * to silence. Process-wide. */
IMGREC_API void imgrec_set_log_callback(imgrec_log_fn fn, void* user_data);

/* ---- configuration (flat key=value settings) ---- */

IMGREC_API imgrec_status imgrec_config_create(imgrec_config** out);
IMGREC_API void imgrec_config_destroy(imgrec_config* config);
IMGREC_API int imgrec_config_is_known_key(const char* key);
/* Unknown keys are rejected with IMGREC_ERR_INPUT. */
IMGREC_API imgrec_status imgrec_config_set(imgrec_config* config, const char* key,
                                           const char* value);
IMGREC_API imgrec_status imgrec_config_load_file(imgrec_config* config, const char* path);
/* Returned pointer stays valid until the key is set again or the config is
 * destroyed. NULL for unknown keys. */
IMGREC_API const char* imgrec_config_get(const imgrec_config* config, const char* key);
IMGREC_API size_t imgrec_config_key_count(void);
IMGREC_API const char* imgrec_config_key_name(size_t index);
IMGREC_API const char* imgrec_config_key_default(size_t index);
IMGREC_API const char* imgrec_config_key_help(size_t index);

/* ---- commands ---- */

typedef struct imgrec_prepare_stats {
  size_t records;
  size_t malformed_lines;
  size_t users;
  size_t items;
  size_t interactions;
  size_t evaluable_users;
  size_t excluded_users;
} imgrec_prepare_stats;

typedef struct imgrec_eval_summary {
  double mean_auc;
  size_t trials;
  size_t negatives;
  size_t users;
} imgrec_eval_summary;

/* stats / summary may be NULL. */
IMGREC_API imgrec_status imgrec_prepare(const imgrec_config* config, imgrec_prepare_stats* stats);
IMGREC_API imgrec_status imgrec_train(const imgrec_config* config);
IMGREC_API imgrec_status imgrec_evaluate(const imgrec_config* config,
                                         imgrec_eval_summary* summary);
IMGREC_API imgrec_status imgrec_ablate(const imgrec_config* config);

/* ---- prepared data ---- */

IMGREC_API imgrec_status imgrec_data_load(const char* dir, imgrec_data** out);
IMGREC_API void imgrec_data_destroy(imgrec_data* data);
IMGREC_API size_t imgrec_data_num_users(const imgrec_data* data);
IMGREC_API size_t imgrec_data_num_items(const imgrec_data* data);
IMGREC_API size_t imgrec_data_num_interactions(const imgrec_data* data);
/* IMGREC_ERR_INPUT if the key is unknown. */
IMGREC_API imgrec_status imgrec_data_user_id(const imgrec_data* data, const char* key,
                                             uint32_t* id);
IMGREC_API imgrec_status imgrec_data_item_id(const imgrec_data* data, const char* key,
                                             uint32_t* id);

/* ---- item feature files (IFV1) ---- */

/* keys: count strings; values: count * dim floats, row-major. Records are
 * written sorted by key. */
IMGREC_API imgrec_status imgrec_features_write(const char* path, size_t count, size_t dim,
                                               const char* const* keys, const float* values);
/* Fails with IMGREC_ERR_INPUT on format errors or when an item of `data` has
 * no vector. */
IMGREC_API imgrec_status imgrec_features_load(const char* path, const imgrec_data* data,
                                              imgrec_features** out);
IMGREC_API void imgrec_features_destroy(imgrec_features* features);
IMGREC_API size_t imgrec_features_dim(const imgrec_features* features);

/* ---- models (IMR1 checkpoints) ---- */

IMGREC_API imgrec_status imgrec_model_load(const char* path, imgrec_model** out);
IMGREC_API imgrec_status imgrec_model_save(const imgrec_model* model, const char* path);
IMGREC_API void imgrec_model_destroy(imgrec_model* model);
/* 0 = dir, 1 = ft, 2 = ete */
IMGREC_API int imgrec_model_mode(const imgrec_model* model);
IMGREC_API size_t imgrec_model_embedding_dim(const imgrec_model* model);
/* Writes n probabilities sigma(z_u . z_i) into scores. */
IMGREC_API imgrec_status imgrec_model_score(const imgrec_model* model,
                                            const imgrec_features* features, uint32_t user,
                                            const uint32_t* items, size_t n, double* scores);

#ifdef __cplusplus
}
#endif

#endif /* IMGREC_IMGREC_H_ */
