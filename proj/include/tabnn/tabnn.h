/*
 * Copyright 2026 The tabnn Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface of libtabnn. Objects are opaque handles released with their
 * _free function. Every call returns a tabnn_status; on failure the message
 * is available from tabnn_last_error() on the calling thread until the next
 * failing call. Strings returned through char** are released with
 * tabnn_string_free.
 */

#ifndef TABNN_TABNN_H
#define TABNN_TABNN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TABNN_API __declspec(dllexport)
#else
#define TABNN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tabnn_status {
  TABNN_OK = 0,
  TABNN_ERR_CONFIG = 1,   /* invalid config, data or usage */
  TABNN_ERR_MISMATCH = 2, /* verification failed or stale netlist */
  TABNN_ERR_IO = 3,
  TABNN_ERR_INTERNAL = 4
} tabnn_status;

typedef struct tabnn_config tabnn_config;
typedef struct tabnn_data tabnn_data;
typedef struct tabnn_model tabnn_model;
typedef struct tabnn_netlist tabnn_netlist;

TABNN_API const char* tabnn_version(void);
TABNN_API const char* tabnn_last_error(void);
TABNN_API void tabnn_string_free(char* s);

/* Config. `overrides` holds n "section.key=value" strings. */
TABNN_API tabnn_status tabnn_config_load(const char* path, const char* const* overrides,
                                         size_t n, tabnn_config** out);
TABNN_API tabnn_status tabnn_config_parse(const char* text, const char* const* overrides,
                                          size_t n, tabnn_config** out);
TABNN_API tabnn_status tabnn_config_serialize(const tabnn_config* config, char** out);
TABNN_API void tabnn_config_free(tabnn_config* config);

/* Loads or generates the dataset, splits it and fits the input quantizer. */
TABNN_API tabnn_status tabnn_data_prepare(const tabnn_config* config, tabnn_data** out);
TABNN_API size_t tabnn_data_test_rows(const tabnn_data* data);
TABNN_API size_t tabnn_data_warning_count(const tabnn_data* data);
TABNN_API const char* tabnn_data_warning(const tabnn_data* data, size_t i);
TABNN_API void tabnn_data_free(tabnn_data* data);

typedef struct tabnn_train_summary {
  double test_accuracy; /* over output codes, as the netlist computes it */
  double train_loss;
  int has_dense;
} tabnn_train_summary;

/*
 * Runs dense training, pruning and retraining. Writes <stem>_dense.json
 * (structured pruning only), <stem>_pruned.json, <stem>_sparse.json,
 * <stem>_masks.json, <stem>_metrics.jsonl and the resolved <stem>_config.json
 * into the config's output dir.
 */
TABNN_API tabnn_status tabnn_train(const tabnn_config* config, const tabnn_data* data,
                                   tabnn_train_summary* summary);

TABNN_API tabnn_status tabnn_model_load(const char* path, tabnn_model** out);
TABNN_API int tabnn_model_is_sparse(const tabnn_model* model);
TABNN_API size_t tabnn_model_layers(const tabnn_model* model);
TABNN_API tabnn_status tabnn_model_hash(const tabnn_model* model, char** out);
TABNN_API void tabnn_model_free(tabnn_model* model);

/* Accuracy on the test split from output codes and from real scores. */
TABNN_API tabnn_status tabnn_eval(const tabnn_model* model, const tabnn_data* data,
                                  double* code_accuracy, double* score_accuracy);

/* Fails with TABNN_ERR_CONFIG for a dense checkpoint. threads = 0 uses all cores. */
TABNN_API tabnn_status tabnn_compile(const tabnn_model* model, unsigned threads,
                                     tabnn_netlist** out);
TABNN_API tabnn_status tabnn_netlist_load(const char* path, tabnn_netlist** out);
TABNN_API tabnn_status tabnn_netlist_save(const tabnn_netlist* netlist, const char* path);
TABNN_API tabnn_status tabnn_netlist_emit_verilog(const tabnn_netlist* netlist,
                                                  const char* dir);
TABNN_API size_t tabnn_netlist_nodes(const tabnn_netlist* netlist);
TABNN_API void tabnn_netlist_free(tabnn_netlist* netlist);

typedef struct tabnn_cost {
  uint64_t plut_count;
  uint64_t llut_count;
  int latency_cycles;
  int k;
} tabnn_cost;

TABNN_API tabnn_status tabnn_netlist_cost(const tabnn_netlist* netlist, int k,
                                          tabnn_cost* out);

typedef struct tabnn_verify_summary {
  size_t samples_checked;
  size_t mismatch_count;
  size_t mismatched_samples;
  uint64_t table_entries_checked;
  uint64_t table_mismatches;
  int latency_cycles;
  int pass;
} tabnn_verify_summary;

/*
 * Checks every table entry and every layer's codes over the test split.
 * Returns TABNN_ERR_MISMATCH when anything differs or when the netlist was
 * compiled from another checkpoint. `report` (optional) receives the
 * structured report.
 */
TABNN_API tabnn_status tabnn_verify(const tabnn_model* model, const tabnn_netlist* netlist,
                                    const tabnn_data* data, size_t cap,
                                    tabnn_verify_summary* summary, char** report);

TABNN_API tabnn_status tabnn_netlist_accuracy(const tabnn_netlist* netlist,
                                              const tabnn_data* data, double* accuracy);

typedef struct tabnn_sweep_summary {
  double mean;
  double std;
  size_t failed;
} tabnn_sweep_summary;

/* Full pipeline per seed; `report` receives the sweep report text. */
TABNN_API tabnn_status tabnn_sweep(const tabnn_config* config, const tabnn_data* data,
                                   const uint64_t* seeds, size_t n, unsigned threads,
                                   tabnn_sweep_summary* summary, char** report);

#ifdef __cplusplus
}
#endif

#endif /* TABNN_TABNN_H */
